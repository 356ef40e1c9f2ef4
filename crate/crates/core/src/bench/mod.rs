//! The semilinear advection-diffusion benchmark and its experiment drivers.

mod config;
mod experiment;
mod problem;

pub use config::{
    multiplier_layers, DecayCoefficient, ExperimentConfig, LayerRule, OutputFormat, TABLE_FINE_LAYERS, TABLE_LAYERS,
};
pub use experiment::{
    channels, eoc, run_convergence, run_decay_study, run_solve, sample_nodes, write_convergence_csv,
    write_solution_csv, ConvergenceReport, ConvergenceRow, Hierarchy, ReferenceInfo, SolveReport,
};
pub use problem::{diffusion, hermite_coefficients, linear_test_problem, prefactor, test_problem, Advection, Profile};
