use lod_core::bench::{
    linear_test_problem, run_convergence, run_decay_study, DecayCoefficient, ExperimentConfig, Hierarchy, LayerRule,
};
use lod_core::linalg::norm_inf;
use lod_core::lod::{BasisVariant, LodSetup, PatchRule};
use lod_core::newton::{damped_newton, FineOperator, GalerkinSystem, NewtonConfig};
use lod_core::QuadratureRule;

fn setup(coarse: u32, fine: u32, variant: BasisVariant) -> (Hierarchy, LodSetup) {
    let hier = Hierarchy::new(&[coarse], fine).unwrap();
    let problem = linear_test_problem(0.05);
    let setup = LodSetup::new(
        &hier.coarse[0],
        &hier.fine,
        problem.diffusion.as_ref(),
        &QuadratureRule::composite(2),
    )
    .unwrap()
    .with_variant(variant);
    (hier, setup)
}

fn ms_solution(hier: &Hierarchy, setup: &LodSetup, rule: PatchRule) -> Vec<f64> {
    let op = FineOperator::with_stiffness(
        hier.fine.clone(),
        linear_test_problem(0.05),
        QuadratureRule::composite(2),
        setup.stiffness().clone(),
    );
    let basis = setup.build_ms_basis(rule).unwrap();
    let system = GalerkinSystem::new(&op, basis.matrix()).unwrap();
    system.to_fine(&damped_newton(&system, &NewtonConfig::default()).unwrap().alpha)
}

#[test]
fn both_basis_variants_span_the_global_multiscale_space() {
    let (hier, a) = setup(2, 5, BasisVariant::Corrector);
    let (_, b) = setup(2, 5, BasisVariant::UnitVector);
    let ua = ms_solution(&hier, &a, PatchRule::Global);
    let ub = ms_solution(&hier, &b, PatchRule::Global);
    let diff: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| x - y).collect();
    assert!(norm_inf(&diff) < 1e-9 * norm_inf(&ua), "{}", norm_inf(&diff));
}

#[test]
fn localized_correctors_lie_in_the_kernel_and_the_patch() {
    let (_, s) = setup(3, 5, BasisVariant::Corrector);
    let rule = PatchRule::CoarseLayers(1.5);
    for c in s.correctors(rule).unwrap() {
        let v = c.to_fine(s.fine().dim());
        assert!(norm_inf(&s.clement().apply(&v).unwrap()) < 1e-10);
        let patch = s.patch(c.node, rule).unwrap();
        let inside: Vec<usize> = patch
            .interior_fine_vertices
            .iter()
            .map(|&v| s.fine().dof_of_vertex(v).unwrap())
            .collect();
        for (d, x) in v.iter().enumerate() {
            assert!(*x == 0.0 || inside.binary_search(&d).is_ok());
        }
    }
}

#[test]
fn unit_vector_basis_interpolates_to_unit_vectors() {
    let (_, s) = setup(3, 5, BasisVariant::UnitVector);
    let basis = s.build_ms_basis(PatchRule::CoarseLayers(2.0)).unwrap();
    let mut e = vec![0.0; basis.dim()];
    for j in [0, 10, 24] {
        e[j] = 1.0;
        let iv = s.clement().apply(&basis.matrix().mul_vec(&e)).unwrap();
        let defect: Vec<f64> = iv.iter().zip(&e).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&defect) < 1e-10);
        e[j] = 0.0;
    }
}

#[test]
fn truncation_error_shrinks_with_layers() {
    let (_, s) = setup(3, 5, BasisVariant::Corrector);
    let global = s.correctors(PatchRule::Global).unwrap();
    let j = 24;
    let errs: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&k| {
            let rule = PatchRule::CoarseLayers(k);
            let c = s.solve_corrector(j, &s.patch(j, rule).unwrap(), rule).unwrap();
            s.truncation_error(&global[j], &c)
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn high_contrast_channels_decay_slower_than_identity() {
    let mut cfg = ExperimentConfig::default();
    let mean_theta = |cfg: &ExperimentConfig| {
        let profiles = run_decay_study(cfg).unwrap();
        for p in &profiles {
            assert_eq!(p.tails.last().unwrap().1, 0.0, "saturated row missing");
        }
        profiles.iter().map(|p| p.fit.unwrap().theta).sum::<f64>() / profiles.len() as f64
    };
    cfg.decay_coefficient = DecayCoefficient::Identity;
    let identity = mean_theta(&cfg);
    cfg.decay_coefficient = DecayCoefficient::Contrast(100.0);
    let contrast = mean_theta(&cfg);
    assert!(identity < 1.0 && contrast > identity, "{identity} {contrast}");
}

#[test]
fn single_level_study_has_no_eoc() {
    let cfg = ExperimentConfig {
        fine_level: 4,
        coarse_levels: vec![2],
        layers: LayerRule::List {
            coarse: vec![1.0],
            fine: None,
        },
        linear: true,
        ..ExperimentConfig::default()
    };
    let report = run_convergence(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!(report.rows[0].eoc_l2.is_none() && report.average_eoc_h1.is_none());
    assert!(report.rows[0].l2_error.unwrap() >= 0.0);
}
