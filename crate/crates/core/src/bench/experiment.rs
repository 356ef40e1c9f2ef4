use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::bench::config::{DecayCoefficient, ExperimentConfig};
use crate::bench::problem::{diffusion, linear_test_problem, test_problem};
use crate::clement::build_clement;
use crate::error::Result;
use crate::fem::{
    element_stiffness, h1_seminorm, identity_diffusion, l2_norm, DiffusionField, FeSpace, Mat2, QuadratureRule,
};
use crate::lod::{decay_profile, DecayProfile, LodSetup, PatchRule};
use crate::mesh::{build_unit_square_mesh, refine_uniform, Point};
use crate::newton::{damped_newton, FineOperator, GalerkinSystem, NewtonConfig, NewtonResult, SemilinearProblem};

/// Nested spaces: one fine space and one space per coarse level.
pub struct Hierarchy {
    pub fine: FeSpace,
    pub coarse: Vec<FeSpace>,
}

impl Hierarchy {
    pub fn new(coarse_levels: &[u32], fine_level: u32) -> Result<Self> {
        let lowest = *coarse_levels.iter().min().unwrap_or(&fine_level);
        let root = build_unit_square_mesh(1 << lowest)?;
        let fine = refine_uniform(&root, fine_level - lowest)?;
        let coarse = coarse_levels
            .iter()
            .map(|&l| {
                let mesh = if l == lowest {
                    root.clone()
                } else {
                    refine_uniform(&root, l - lowest)?
                };
                Ok(FeSpace::new(Arc::new(mesh)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            fine: FeSpace::new(Arc::new(fine)),
            coarse,
        })
    }
}

fn newton_config(config: &ExperimentConfig) -> NewtonConfig {
    NewtonConfig {
        abstol: config.abstol,
        reltol: config.reltol,
        max_iters: config.max_iters,
        ..NewtonConfig::default()
    }
}

fn problem_for(config: &ExperimentConfig) -> SemilinearProblem {
    if config.linear {
        linear_test_problem(config.epsilon)
    } else {
        test_problem(config.epsilon)
    }
}

fn patch_rule(coarse_layers: f64, fine_layers: Option<usize>) -> PatchRule {
    match fine_layers {
        Some(l) => PatchRule::FineLayers(l),
        None => PatchRule::CoarseLayers(coarse_layers),
    }
}

/// One coarse level of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "H")]
    pub h: f64,
    pub coarse_layers: f64,
    pub fine_layers: Option<usize>,
    pub l2_error: Option<f64>,
    /// `sqrt(||e||_{L^2}^2 + |e|_{H^1}^2)`.
    pub h1_error: Option<f64>,
    pub h1_seminorm_error: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub eoc_h1: Option<f64>,
    pub newton_iterations: Option<usize>,
    /// Seconds; excluded from reproducibility comparisons.
    pub wall_time: f64,
    /// Failure reason, `None` on success.
    pub error: Option<String>,
}

/// Summary of the fine reference solve.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceInfo {
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub min_value: f64,
    pub max_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Mean of the consecutive EOCs.
    pub average_eoc_l2: Option<f64>,
    pub average_eoc_h1: Option<f64>,
    pub reference: ReferenceInfo,
}

impl ConvergenceReport {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }
}

/// `log(e_prev / e_next) / log(H_prev / H_next)`.
pub fn eoc(e_prev: f64, e_next: f64, h_prev: f64, h_next: f64) -> f64 {
    (e_prev / e_next).ln() / (h_prev / h_next).ln()
}

/// Multiscale solution, fine reference and their difference for each coarse level.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate_levels()?;
    let hier = Hierarchy::new(&config.coarse_levels, config.fine_level)?;
    let quad = QuadratureRule::composite(config.quad_subdivision);
    let problem = problem_for(config);
    let locals = element_stiffness(hier.fine.mesh(), problem.diffusion.as_ref(), &quad)?;
    let stiffness = crate::fem::assemble_elements(&hier.fine, &locals).symmetrized();
    let fine_op = FineOperator::with_stiffness(hier.fine.clone(), problem, quad.clone(), stiffness);
    let newton = newton_config(config);

    let reference = damped_newton(&GalerkinSystem::identity(&fine_op), &newton)?;
    let u_h = reference.alpha.clone();
    let info = ReferenceInfo {
        newton_iterations: reference.iterations,
        final_residual: *reference.residual_norms.last().unwrap_or(&f64::NAN),
        min_value: u_h.iter().copied().fold(0.0, f64::min),
        max_value: u_h.iter().copied().fold(0.0, f64::max),
    };

    let mut rows = Vec::new();
    for (i, coarse) in hier.coarse.iter().enumerate() {
        let start = Instant::now();
        let (k, fine_layers) = config.layers_for(i);
        let rule = patch_rule(k, fine_layers);
        let h = coarse.mesh().spacing();
        let outcome = (|| -> Result<(f64, f64, usize, usize)> {
            let setup = LodSetup::from_parts(build_clement(coarse, &hier.fine, &quad)?, locals.clone())
                .with_variant(config.basis);
            let basis = setup.build_ms_basis(rule)?;
            let system = GalerkinSystem::new(&fine_op, basis.matrix())?;
            let sol = damped_newton(&system, &newton)?;
            let e: Vec<f64> = system
                .to_fine(&sol.alpha)
                .iter()
                .zip(&u_h)
                .map(|(a, b)| a - b)
                .collect();
            let layers = match rule {
                PatchRule::FineLayers(l) => l,
                _ => setup.patch(0, rule)?.fine_layers,
            };
            Ok((
                l2_norm(&hier.fine, &e),
                h1_seminorm(&hier.fine, &e),
                sol.iterations,
                layers,
            ))
        })();
        let wall_time = start.elapsed().as_secs_f64();
        rows.push(match outcome {
            Ok((l2, semi, iters, layers)) => ConvergenceRow {
                h,
                coarse_layers: k,
                fine_layers: Some(layers),
                l2_error: Some(l2),
                h1_error: Some((l2 * l2 + semi * semi).sqrt()),
                h1_seminorm_error: Some(semi),
                eoc_l2: None,
                eoc_h1: None,
                newton_iterations: Some(iters),
                wall_time,
                error: None,
            },
            Err(e) => ConvergenceRow {
                h,
                coarse_layers: k,
                fine_layers,
                l2_error: None,
                h1_error: None,
                h1_seminorm_error: None,
                eoc_l2: None,
                eoc_h1: None,
                newton_iterations: None,
                wall_time,
                error: Some(e.to_string()),
            },
        });
    }
    fill_eocs(&mut rows);
    let average = |f: fn(&ConvergenceRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(ConvergenceReport {
        average_eoc_l2: average(|r| r.eoc_l2),
        average_eoc_h1: average(|r| r.eoc_h1),
        rows,
        reference: info,
    })
}

fn fill_eocs(rows: &mut [ConvergenceRow]) {
    for i in 1..rows.len() {
        let (prev, next) = (&rows[i - 1], &rows[i]);
        let rate = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(eoc(a, b, prev.h, next.h)),
            _ => None,
        };
        let l2 = rate(prev.l2_error, next.l2_error);
        let h1 = rate(prev.h1_error, next.h1_error);
        rows[i].eoc_l2 = l2;
        rows[i].eoc_h1 = h1;
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.5e}")).unwrap_or_default()
}

/// CSV in row order. `wall_time` is the only nondeterministic column.
pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, mut out: W) -> Result<()> {
    writeln!(
        out,
        "H,coarse_layers,fine_layers,l2_error,h1_error,h1_seminorm_error,eoc_l2,eoc_h1,newton_iterations,wall_time,error"
    )?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3},{}",
            fmt(Some(r.h)),
            r.coarse_layers,
            r.fine_layers.map(|l| l.to_string()).unwrap_or_default(),
            fmt(r.l2_error),
            fmt(r.h1_error),
            fmt(r.h1_seminorm_error),
            fmt(r.eoc_l2),
            fmt(r.eoc_h1),
            r.newton_iterations.map(|l| l.to_string()).unwrap_or_default(),
            r.wall_time,
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )?;
    }
    Ok(())
}

/// Isotropic coefficient equal to `contrast` on horizontal channels of
/// width `1/64` repeating every `1/8`, and `1` elsewhere.
pub fn channels(contrast: f64) -> impl Fn(Point) -> Mat2 + Send + Sync {
    move |x: Point| {
        let a = if (x[1] * 64.0).floor() as i64 % 8 == 3 {
            contrast
        } else {
            1.0
        };
        [[a, 0.0], [0.0, a]]
    }
}

/// Evenly spread sample of `count` coarse DOFs.
pub fn sample_nodes(dim: usize, count: usize) -> Vec<usize> {
    if count == 0 || dim == 0 {
        return Vec::new();
    }
    if count >= dim {
        return (0..dim).collect();
    }
    let mut v: Vec<usize> = (0..count)
        .map(|i| ((i as f64 + 0.5) * dim as f64 / count as f64) as usize)
        .collect();
    v.dedup();
    v
}

/// Global correctors and their decay profiles on the decay level.
pub fn run_decay_study(config: &ExperimentConfig) -> Result<Vec<DecayProfile>> {
    config.validate_decay()?;
    let hier = Hierarchy::new(&[config.decay_level], config.fine_level)?;
    let quad = QuadratureRule::composite(config.quad_subdivision);
    let coeff: Box<dyn DiffusionField> = match config.decay_coefficient {
        DecayCoefficient::Benchmark => Box::new(diffusion(config.epsilon)),
        DecayCoefficient::Identity => Box::new(identity_diffusion),
        DecayCoefficient::Contrast(c) => Box::new(channels(c)),
    };
    let setup = LodSetup::new(&hier.coarse[0], &hier.fine, coeff.as_ref(), &quad)?;
    let correctors = setup.correctors(PatchRule::Global)?;
    sample_nodes(setup.coarse().dim(), config.decay_nodes)
        .into_iter()
        .map(|j| decay_profile(&setup, &correctors[j], None))
        .collect()
}

/// Multiscale solution on the first coarse level.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(rename = "H")]
    pub h: f64,
    pub coarse_layers: f64,
    pub fine_layers: Option<usize>,
    pub newton: NewtonResult,
    /// Fine vertex coordinates and solution values (zero on the boundary).
    pub vertices: Vec<Point>,
    pub values: Vec<f64>,
}

pub fn run_solve(config: &ExperimentConfig) -> Result<SolveReport> {
    config.validate_levels()?;
    let hier = Hierarchy::new(&config.coarse_levels[..1], config.fine_level)?;
    let quad = QuadratureRule::composite(config.quad_subdivision);
    let problem = problem_for(config);
    let (k, fine_layers) = config.layers_for(0);
    let setup =
        LodSetup::new(&hier.coarse[0], &hier.fine, problem.diffusion.as_ref(), &quad)?.with_variant(config.basis);
    let fine_op = FineOperator::with_stiffness(hier.fine.clone(), problem, quad, setup.stiffness().clone());
    let basis = setup.build_ms_basis(patch_rule(k, fine_layers))?;
    let system = GalerkinSystem::new(&fine_op, basis.matrix())?;
    let newton = damped_newton(&system, &newton_config(config))?;
    let values = hier.fine.to_vertex_values(&system.to_fine(&newton.alpha));
    Ok(SolveReport {
        h: hier.coarse[0].mesh().spacing(),
        coarse_layers: k,
        fine_layers,
        newton,
        vertices: hier.fine.mesh().vertices().to_vec(),
        values,
    })
}

/// CSV `x,y,u` over all fine vertices.
pub fn write_solution_csv<W: Write>(report: &SolveReport, mut out: W) -> Result<()> {
    writeln!(out, "x,y,u")?;
    for (p, u) in report.vertices.iter().zip(&report.values) {
        writeln!(out, "{},{},{u:.5e}", p[0], p[1])?;
    }
    Ok(())
}
