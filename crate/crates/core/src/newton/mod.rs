//! Nonlinear Galerkin problems and the damped Newton solver.

mod discretization;
mod problem;
mod solver;

pub use discretization::{FineOperator, GalerkinSystem};
pub use problem::{LipschitzProbe, NoNonlinearity, Nonlinearity, ProblemConstants, SemilinearProblem};
pub use solver::{
    damped_newton, finite_difference_defect, monotonicity_probe, NewtonConfig, NewtonResult, MIN_DAMPING,
};
