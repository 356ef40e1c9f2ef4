use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LodError, Result};
use crate::fem::{assemble_stiffness, identity_diffusion};
use crate::linalg::{norm2, norm_inf, LuSolver};
use crate::newton::discretization::{FineOperator, GalerkinSystem};

/// Smallest damping factor tried before the iteration is aborted.
pub const MIN_DAMPING: f64 = 1.0 / (1u64 << 30) as f64;

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    pub abstol: f64,
    pub reltol: f64,
    pub max_iters: usize,
    /// When off every step is taken with `zeta = 1`.
    pub damping: bool,
    /// Starting coefficients; zero when `None`.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-10,
            reltol: 0.0,
            max_iters: 50,
            damping: true,
            initial_guess: None,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abstol > 0.0) || !(self.reltol >= 0.0) || self.max_iters == 0 {
            return Err(LodError::InvalidConfig(format!(
                "Newton tolerances abstol={} reltol={} max_iters={}",
                self.abstol, self.reltol, self.max_iters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonResult {
    pub alpha: Vec<f64>,
    /// `|G(alpha^(n))|_2` for `n = 0..=iterations`.
    pub residual_norms: Vec<f64>,
    /// Accepted damping factor of each step.
    pub zetas: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Final tolerance `|G| reltol + abstol`.
    pub tolerance: f64,
}

impl NewtonResult {
    /// Whether every step satisfied `|G_{n+1}| < (1 - zeta_n / 2) |G_n|`.
    pub fn armijo_satisfied(&self) -> bool {
        self.zetas
            .iter()
            .enumerate()
            .all(|(n, z)| self.residual_norms[n + 1] < (1.0 - 0.5 * z) * self.residual_norms[n])
    }

    /// `|G_{n+1}| / |G_n|^2` for each step starting below `threshold`.
    pub fn quadratic_tail(&self, threshold: f64) -> Vec<f64> {
        self.residual_norms
            .windows(2)
            .filter(|w| w[0] < threshold && w[0] > 0.0)
            .map(|w| w[1] / (w[0] * w[0]))
            .collect()
    }

    /// CSV history `iter,residual_norm,zeta`; the zeta column holds the
    /// damping of the step that produced the iterate.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,residual_norm,zeta")?;
        for (n, r) in self.residual_norms.iter().enumerate() {
            match n.checked_sub(1).map(|i| self.zetas[i]) {
                Some(z) => writeln!(out, "{n},{r:.5e},{z}")?,
                None => writeln!(out, "{n},{r:.5e},")?,
            }
        }
        Ok(())
    }
}

/// Damped Newton iteration with Armijo step halving.
///
/// Each step solves `D_alpha G(alpha) d = -G(alpha)`, starts from `zeta = 1`
/// and halves `zeta` until `|G(alpha + zeta d)| < (1 - zeta/2) |G(alpha)|`.
/// The tolerance `|G(alpha^(n))| reltol + abstol` is refreshed after every
/// accepted step. Returns [`LodError::NewtonNotConverged`] with the full
/// history when `max_iters` is exhausted.
pub fn damped_newton(system: &GalerkinSystem<'_>, config: &NewtonConfig) -> Result<NewtonResult> {
    config.validate()?;
    let mut alpha = match &config.initial_guess {
        Some(a) if a.len() != system.dim() => {
            return Err(LodError::DimensionMismatch {
                expected: system.dim(),
                got: a.len(),
            })
        }
        Some(a) => a.clone(),
        None => vec![0.0; system.dim()],
    };
    let mut g = system.residual(&alpha)?;
    let mut norm = norm2(&g);
    let mut tol = norm * config.reltol + config.abstol;
    let mut result = NewtonResult {
        alpha: Vec::new(),
        residual_norms: vec![norm],
        zetas: Vec::new(),
        converged: false,
        iterations: 0,
        tolerance: tol,
    };
    while norm > tol {
        if result.iterations == config.max_iters {
            result.alpha = alpha;
            return Err(LodError::NewtonNotConverged(Box::new(result)));
        }
        let jac = system.jacobian(&alpha)?;
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let step = LuSolver::new(&jac)?.solve(&rhs);
        let mut zeta = 1.0;
        let (next, next_g, next_norm) = loop {
            let trial: Vec<f64> = alpha.iter().zip(&step).map(|(a, d)| a + zeta * d).collect();
            let trial_g = system.residual(&trial)?;
            let trial_norm = norm2(&trial_g);
            if !config.damping || trial_norm < (1.0 - 0.5 * zeta) * norm {
                break (trial, trial_g, trial_norm);
            }
            zeta *= 0.5;
            if zeta < MIN_DAMPING {
                return Err(LodError::DampingUnderflow {
                    iteration: result.iterations,
                    residual: norm,
                });
            }
        };
        alpha = next;
        g = next_g;
        norm = next_norm;
        tol = norm * config.reltol + config.abstol;
        result.iterations += 1;
        result.residual_norms.push(norm);
        result.zetas.push(zeta);
        result.tolerance = tol;
    }
    result.converged = true;
    result.alpha = alpha;
    Ok(result)
}

/// Minimum over random pairs `(u, v)` of
/// `<B(u) - B(v), u - v> / |u - v|_{H^1}^2`.
///
/// Samples are smooth sine sums with nodal values roughly in `range`.
pub fn monotonicity_probe(fine: &FineOperator, trials: usize, seed: u64, range: (f64, f64)) -> Result<f64> {
    let space = fine.space();
    let laplace = assemble_stiffness(space, &identity_diffusion, fine.quadrature())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mid = 0.5 * (range.0 + range.1);
    let amp = 0.5 * (range.1 - range.0);
    let sample = |rng: &mut ChaCha8Rng| {
        let terms: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(1..=6) as f64,
                    rng.random_range(1..=6) as f64,
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let offset = rng.random_range(-1.0..1.0);
        space.interpolate(|x| {
            let s: f64 = terms
                .iter()
                .map(|(a, b, c)| c * (a * std::f64::consts::PI * x[0]).sin() * (b * std::f64::consts::PI * x[1]).sin())
                .sum();
            mid + amp * (0.5 * offset + 0.5 * s.clamp(-1.0, 1.0))
        })
    };
    let mut min = f64::INFINITY;
    let mut used = 0;
    while used < trials {
        let u = sample(&mut rng);
        let v = sample(&mut rng);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let denom = laplace.quad_form(&diff);
        if !(denom > 0.0) {
            continue;
        }
        let bu = fine.operator_apply(&u);
        let bv = fine.operator_apply(&v);
        let num: f64 = bu.iter().zip(&bv).zip(&diff).map(|((a, b), d)| (a - b) * d).sum();
        min = min.min(num / denom);
        used += 1;
    }
    Ok(min)
}

/// `max_i ||(G(alpha + delta e_i) - G(alpha)) / delta - D_alpha G e_i||_inf`
/// over the given coordinate indices.
pub fn finite_difference_defect(
    system: &GalerkinSystem<'_>,
    alpha: &[f64],
    delta: f64,
    indices: &[usize],
) -> Result<f64> {
    let jac = system.jacobian(alpha)?;
    let mut worst: f64 = 0.0;
    let mut e = vec![0.0; system.dim()];
    for &i in indices {
        e[i] = 1.0;
        let inc = system.residual_increment(alpha, &e, delta)?;
        let col = jac.mul_vec(&e);
        let diff: Vec<f64> = inc.iter().zip(&col).map(|(g, m)| g / delta - m).collect();
        worst = worst.max(norm_inf(&diff));
        e[i] = 0.0;
    }
    Ok(worst)
}
