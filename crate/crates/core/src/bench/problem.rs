use std::f64::consts::PI;
use std::sync::Arc;

use crate::fem::Mat2;
use crate::mesh::Point;
use crate::newton::{Nonlinearity, ProblemConstants, SemilinearProblem};

/// Common prefactor `1 / (8 pi^2)`.
pub fn prefactor() -> f64 {
    1.0 / (8.0 * PI * PI)
}

/// `A^eps(x) = c diag(2 / (2 + cos(2 pi x_1 / eps)), 1 + cos(2 pi x_1 / eps) / 2)`.
pub fn diffusion(epsilon: f64) -> impl Fn(Point) -> Mat2 + Send + Sync + Clone {
    move |x: Point| {
        let c = (2.0 * PI * x[0] / epsilon).cos();
        let s = prefactor();
        [[s * 2.0 / (2.0 + c), 0.0], [0.0, s * (1.0 + 0.5 * c)]]
    }
}

/// Coefficients `[a, b, c, d]` of the cubic `p(u) = a u^3 + b u^2 + c u + d`
/// with `p(-5/4) = sqrt(7/8)`, `p'(-5/4) = 1 / (4 sqrt(7/8))`,
/// `p(-1) = 0` and `p'(-1) = 0`.
pub fn hermite_coefficients() -> [f64; 4] {
    let r = (7.0f64 / 8.0).sqrt();
    let (u0, u1) = (-1.25f64, -1.0f64);
    let mut m = [
        [u0.powi(3), u0 * u0, u0, 1.0, r],
        [3.0 * u0 * u0, 2.0 * u0, 1.0, 0.0, 0.25 / r],
        [u1.powi(3), u1 * u1, u1, 1.0, 0.0],
        [3.0 * u1 * u1, 2.0 * u1, 1.0, 0.0, 0.0],
    ];
    // Gaussian elimination with partial pivoting.
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        m.swap(col, piv);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..5 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][4] - s) / m[row][row];
    }
    x
}

/// Saturation profile: `sqrt(u/2 + 3/2)` on `[-3, -5/4]`, the Hermite cubic
/// on `[-5/4, -1]`, zero above `-1`. Below `-3` it is continued by zero.
#[derive(Debug, Clone, Copy)]
pub struct Profile {
    cubic: [f64; 4],
}

impl Default for Profile {
    fn default() -> Self {
        Self {
            cubic: hermite_coefficients(),
        }
    }
}

impl Profile {
    pub fn value(&self, u: f64) -> f64 {
        let [a, b, c, d] = self.cubic;
        if !(-3.0..-1.0).contains(&u) {
            0.0
        } else if u >= -1.25 {
            ((a * u + b) * u + c) * u + d
        } else {
            (0.5 * u + 1.5).sqrt()
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let [a, b, c, _] = self.cubic;
        if u >= -1.0 || u <= -3.0 {
            0.0
        } else if u >= -1.25 {
            (3.0 * a * u + 2.0 * b) * u + c
        } else {
            0.25 / (0.5 * u + 1.5).sqrt()
        }
    }
}

/// `F(x, xi, zeta) = F^eps(x, xi) zeta_2 / 2` with
/// `F^eps(x, u) = c (2 + cos(2 pi x_1 / eps^{3/2})) s(u)`.
#[derive(Debug, Clone, Copy)]
pub struct Advection {
    epsilon: f64,
    profile: Profile,
}

impl Advection {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            profile: Profile::default(),
        }
    }

    fn weight(&self, x: Point) -> f64 {
        prefactor() * (2.0 + (2.0 * PI * x[0] / self.epsilon.powf(1.5)).cos())
    }

    /// `F^eps(x, u)`.
    pub fn f_eps(&self, x: Point, u: f64) -> f64 {
        self.weight(x) * self.profile.value(u)
    }
}

impl Nonlinearity for Advection {
    fn value(&self, x: Point, xi: f64, zeta: [f64; 2]) -> f64 {
        let s = self.profile.value(xi);
        if s == 0.0 {
            return 0.0;
        }
        0.5 * self.weight(x) * s * zeta[1]
    }

    fn d_xi(&self, x: Point, xi: f64, zeta: [f64; 2]) -> f64 {
        let ds = self.profile.derivative(xi);
        if ds == 0.0 {
            return 0.0;
        }
        0.5 * self.weight(x) * ds * zeta[1]
    }

    fn d_zeta(&self, x: Point, xi: f64, _: [f64; 2]) -> [f64; 2] {
        let s = self.profile.value(xi);
        if s == 0.0 {
            return [0.0; 2];
        }
        [0.0, 0.5 * self.weight(x) * s]
    }
}

/// The semilinear advection-diffusion benchmark with source `-3/10`.
pub fn test_problem(epsilon: f64) -> SemilinearProblem {
    let c = prefactor();
    let s_max = (7.0f64 / 8.0).sqrt();
    SemilinearProblem {
        diffusion: Arc::new(diffusion(epsilon)),
        nonlinearity: Arc::new(Advection::new(epsilon)),
        source: Arc::new(|_: Point| -0.3),
        constants: ProblemConstants {
            alpha: 0.5 * c,
            beta: 2.0 * c,
            // F grows linearly in the gradient slot, so no global L1 exists.
            l1: None,
            l2: Some(0.5 * 3.0 * c * s_max),
            c0: None,
            poincare: None,
        },
    }
}

/// Same coefficient and source without the nonlinear term.
pub fn linear_test_problem(epsilon: f64) -> SemilinearProblem {
    let c = prefactor();
    SemilinearProblem::linear(
        Arc::new(diffusion(epsilon)),
        Arc::new(|_: Point| -0.3),
        0.5 * c,
        2.0 * c,
    )
}

#[cfg(test)]
mod tests {
    use faer::Mat;

    use super::*;

    #[test]
    fn cubic_matches_dense_solver_and_joins_c1() {
        let r = (7.0f64 / 8.0).sqrt();
        let rows = [(-1.25f64, r, 0.25 / r), (-1.0, 0.0, 0.0)];
        let mut m = Mat::<f64>::zeros(4, 4);
        let mut b = Mat::<f64>::zeros(4, 1);
        for (i, (u, v, dv)) in rows.iter().enumerate() {
            for k in 0..4 {
                m[(2 * i, k)] = u.powi(3 - k as i32);
            }
            m[(2 * i + 1, 0)] = 3.0 * u * u;
            m[(2 * i + 1, 1)] = 2.0 * u;
            m[(2 * i + 1, 2)] = 1.0;
            b[(2 * i, 0)] = *v;
            b[(2 * i + 1, 0)] = *dv;
        }
        use faer::linalg::solvers::Solve;
        let x = m.partial_piv_lu().solve(&b);
        let coeffs = hermite_coefficients();
        for k in 0..4 {
            assert!((x[(k, 0)] - coeffs[k]).abs() < 1e-10, "{k}");
        }
        let p = Profile::default();
        // C^1 at both junctions, comparing one-sided branch values.
        let [a, bb, c, d] = coeffs;
        let cubic = |u: f64| ((a * u + bb) * u + c) * u + d;
        let dcubic = |u: f64| (3.0 * a * u + 2.0 * bb) * u + c;
        assert!((cubic(-1.25) - (0.5f64 * -1.25 + 1.5).sqrt()).abs() < 1e-12);
        assert!((dcubic(-1.25) - 0.25 / (0.5f64 * -1.25 + 1.5).sqrt()).abs() < 1e-12);
        assert!(cubic(-1.0).abs() < 1e-12 && dcubic(-1.0).abs() < 1e-12);
        assert!((p.value(-1.25) - r).abs() < 1e-12);
    }

    #[test]
    fn profile_derivative_matches_differences() {
        let p = Profile::default();
        for u in [-2.9, -2.0, -1.3, -1.2, -1.1, -1.01, -0.5, 0.3] {
            let d = 1e-7;
            let fd = (p.value(u + d) - p.value(u - d)) / (2.0 * d);
            assert!((fd - p.derivative(u)).abs() < 1e-6, "u={u}");
        }
    }

    #[test]
    fn vanishes_for_nonnegative_state() {
        let f = Advection::new(0.05);
        for x in [[0.1, 0.2], [0.77, 0.5]] {
            assert_eq!(f.value(x, 0.0, [3.0, -2.0]), 0.0);
            assert_eq!(f.value(x, -0.5, [3.0, -2.0]), 0.0);
        }
    }

    #[test]
    fn coefficient_eigenvalues_at_origin_line() {
        let a = diffusion(0.05)([0.0, 0.4]);
        let c = prefactor();
        assert!((a[0][0] - c * 2.0 / 3.0).abs() < 1e-15);
        assert!((a[1][1] - c * 1.5).abs() < 1e-15);
        assert_eq!(a[0][1], 0.0);
    }

    #[test]
    fn lipschitz_probe_respects_l2() {
        let prob = test_problem(0.05);
        let probe = prob.lipschitz_probe(2000, 5, (-2.5, 0.5), 5.0);
        assert_eq!(probe.origin_defect, 0.0);
        assert!(probe.l2_estimate <= prob.constants.l2.unwrap() * (1.0 + 1e-12));
    }
}
