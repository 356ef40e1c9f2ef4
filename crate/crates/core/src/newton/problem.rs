use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fem::{DiffusionField, ScalarField};
use crate::mesh::Point;

/// Lower-order term `F(x, xi, zeta)` with its partial derivatives in the
/// state `xi` and the gradient slot `zeta`.
pub trait Nonlinearity: Send + Sync {
    fn value(&self, x: Point, xi: f64, zeta: [f64; 2]) -> f64;
    fn d_xi(&self, x: Point, xi: f64, zeta: [f64; 2]) -> f64;
    fn d_zeta(&self, x: Point, xi: f64, zeta: [f64; 2]) -> [f64; 2];
}

/// `F = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoNonlinearity;

impl Nonlinearity for NoNonlinearity {
    fn value(&self, _: Point, _: f64, _: [f64; 2]) -> f64 {
        0.0
    }
    fn d_xi(&self, _: Point, _: f64, _: [f64; 2]) -> f64 {
        0.0
    }
    fn d_zeta(&self, _: Point, _: f64, _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
}

/// Structural constants of the problem class. `None` marks a constant that
/// does not exist or is unknown for the instance.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ProblemConstants {
    /// Lower eigenvalue bound of `A`.
    pub alpha: f64,
    /// Upper eigenvalue bound of `A`.
    pub beta: f64,
    /// Lipschitz constant of `F` in `xi`.
    pub l1: Option<f64>,
    /// Lipschitz constant of `F` in `zeta`.
    pub l2: Option<f64>,
    /// Strong monotonicity constant.
    pub c0: Option<f64>,
    pub poincare: Option<f64>,
}

/// `-div(A grad u) + F(x, u, grad u) = g` with homogeneous Dirichlet data.
#[derive(Clone)]
pub struct SemilinearProblem {
    pub diffusion: Arc<dyn DiffusionField>,
    pub nonlinearity: Arc<dyn Nonlinearity>,
    pub source: Arc<dyn ScalarField>,
    pub constants: ProblemConstants,
}

/// Empirical Lipschitz quotients of `F`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LipschitzProbe {
    pub l1_estimate: f64,
    pub l2_estimate: f64,
    /// `max |F(x, 0, 0)|`.
    pub origin_defect: f64,
}

impl SemilinearProblem {
    /// Linear problem `-div(A grad u) = g`.
    pub fn linear(diffusion: Arc<dyn DiffusionField>, source: Arc<dyn ScalarField>, alpha: f64, beta: f64) -> Self {
        Self {
            diffusion,
            nonlinearity: Arc::new(NoNonlinearity),
            source,
            constants: ProblemConstants {
                alpha,
                beta,
                l1: Some(0.0),
                l2: Some(0.0),
                c0: Some(alpha),
                poincare: None,
            },
        }
    }

    pub fn with_nonlinearity(mut self, f: Arc<dyn Nonlinearity>) -> Self {
        self.nonlinearity = f;
        self
    }

    pub fn with_source(mut self, g: Arc<dyn ScalarField>) -> Self {
        self.source = g;
        self
    }

    pub fn is_linear(&self) -> bool {
        self.constants.l1 == Some(0.0) && self.constants.l2 == Some(0.0)
    }

    /// Samples difference quotients of `F` at random points of the unit
    /// square with `xi` in `xi_range` and gradients in `[-g, g]^2`.
    pub fn lipschitz_probe(&self, samples: usize, seed: u64, xi_range: (f64, f64), g: f64) -> LipschitzProbe {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = &self.nonlinearity;
        let mut probe = LipschitzProbe {
            l1_estimate: 0.0,
            l2_estimate: 0.0,
            origin_defect: 0.0,
        };
        for _ in 0..samples {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let xi1 = rng.random_range(xi_range.0..xi_range.1);
            let xi2 = rng.random_range(xi_range.0..xi_range.1);
            let z1 = [rng.random_range(-g..g), rng.random_range(-g..g)];
            let z2 = [rng.random_range(-g..g), rng.random_range(-g..g)];
            probe.origin_defect = probe.origin_defect.max(f.value(x, 0.0, [0.0; 2]).abs());
            if xi1 != xi2 {
                let q = (f.value(x, xi1, z1) - f.value(x, xi2, z1)).abs() / (xi1 - xi2).abs();
                probe.l1_estimate = probe.l1_estimate.max(q);
            }
            let dz = ((z1[0] - z2[0]).powi(2) + (z1[1] - z2[1]).powi(2)).sqrt();
            if dz > 0.0 {
                let q = (f.value(x, xi1, z1) - f.value(x, xi1, z2)).abs() / dz;
                probe.l2_estimate = probe.l2_estimate.max(q);
            }
        }
        probe
    }
}
