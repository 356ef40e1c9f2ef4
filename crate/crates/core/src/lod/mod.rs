//! Kernel-constrained correctors, the multiscale basis and decay diagnostics.

mod corrector;
mod decay;

pub use corrector::{BasisVariant, Corrector, LodSetup, MultiscaleBasis, PatchRule};
pub use decay::{decay_profile, fit_decay, write_decay_csv, DecayFit, DecayProfile, FIT_FLOOR};
