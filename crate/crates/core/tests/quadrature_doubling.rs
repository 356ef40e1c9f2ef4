//! Sensitivity of the benchmark integrals to the quadrature subdivision.

use std::f64::consts::PI;

use lod_core::bench::{test_problem, Hierarchy};
use lod_core::linalg::norm2;
use lod_core::newton::{damped_newton, FineOperator, GalerkinSystem, NewtonConfig};
use lod_core::QuadratureRule;

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

#[test]
fn doubling_the_default_subdivision_changes_little() {
    let hier = Hierarchy::new(&[2], 6).unwrap();
    let op = |s| FineOperator::new(hier.fine.clone(), test_problem(0.05), QuadratureRule::composite(s)).unwrap();
    let (coarse, fine) = (op(4), op(8));

    let u = hier.fine.interpolate(|x| -2.0 * (PI * x[0]).sin() * (PI * x[1]).sin());
    let stiff = rel(&coarse.stiffness().mul_vec(&u), &fine.stiffness().mul_vec(&u));
    let nonlinear = rel(&coarse.nonlinear_vector(&u), &fine.nonlinear_vector(&u));
    let load = rel(coarse.load(), fine.load());
    let solve = |o: &FineOperator| {
        damped_newton(&GalerkinSystem::identity(o), &NewtonConfig::default())
            .unwrap()
            .alpha
    };
    let solution = rel(&solve(&coarse), &solve(&fine));
    println!("s=4 vs s=8: stiffness {stiff:.2e}, nonlinear {nonlinear:.2e}, load {load:.2e}, u_h {solution:.2e}");
    for r in [stiff, nonlinear, load, solution] {
        assert!(r < 1e-3, "{r}");
    }
}
