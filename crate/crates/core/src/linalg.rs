//! Thin wrappers around faer's sparse and dense factorizations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, MatRef, Side};

use crate::error::{LodError, Result};
use crate::fem::SparseMatrix;

/// Sparse Cholesky factorization of an SPD matrix.
pub struct CholeskySolver {
    llt: Llt<usize, f64>,
    n: usize,
}

impl CholeskySolver {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        let llt = matrix
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| LodError::Factorization(format!("Cholesky: {e:?}")))?;
        Ok(Self { llt, n: matrix.nrows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let b = MatRef::from_column_major_slice(rhs, rhs.len(), 1);
        let x = self.llt.solve(b);
        x.col(0).iter().copied().collect()
    }

    pub fn solve_mat(&self, rhs: &Mat<f64>) -> Mat<f64> {
        self.llt.solve(rhs)
    }
}

/// Sparse LU factorization with partial pivoting.
pub struct LuSolver {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LuSolver {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| LodError::Factorization(format!("LU: {e:?}")))?;
        Ok(Self { lu, n: matrix.nrows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let b = MatRef::from_column_major_slice(rhs, rhs.len(), 1);
        let x = self.lu.solve(b);
        x.col(0).iter().copied().collect()
    }
}

/// Dense Cholesky; fails on a non-positive pivot.
pub fn dense_cholesky(m: &Mat<f64>) -> Result<faer::linalg::solvers::Llt<f64>> {
    m.llt(Side::Lower)
        .map_err(|e| LodError::Factorization(format!("dense Cholesky: {e:?}")))
}

pub fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    m.col(j).iter().copied().collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a + s * b`.
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}


/// Direct solver for `[A C^T; C 0] [x; mu] = [r; 0]` with `A` SPD and `C`
/// of full row rank, via the Schur complement `C A^{-1} C^T`.
pub struct SaddlePointSystem {
    a: SparseMatrix,
    c: SparseMatrix,
    a_solver: CholeskySolver,
    /// `A^{-1} C^T`, dense `p x m`.
    a_inv_ct: Mat<f64>,
    schur: Option<faer::linalg::solvers::Llt<f64>>,
}

/// Solution of a saddle-point system with its defect norms.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub primal: Vec<f64>,
    pub multiplier: Vec<f64>,
    /// `||A x + C^T mu - r||_2`.
    pub residual: f64,
    /// `max |C x|`.
    pub constraint_violation: f64,
}

impl SaddlePointSystem {
    /// Fails with [`LodError::PatchRankDeficient`] labelled `node` when the
    /// Schur complement is (numerically) singular.
    pub fn new(a: SparseMatrix, c: SparseMatrix, node: usize) -> Result<Self> {
        assert_eq!(a.nrows(), c.ncols());
        let a_solver = CholeskySolver::new(&a)?;
        let m = c.nrows();
        let ct = c.transpose().to_dense();
        let a_inv_ct = if m > 0 {
            a_solver.solve_mat(&ct)
        } else {
            Mat::zeros(a.nrows(), 0)
        };
        let schur = if m > 0 {
            let mut s = Mat::<f64>::zeros(m, m);
            for i in 0..m {
                let (cols, vals) = c.row(i);
                for k in 0..m {
                    s[(i, k)] = cols.iter().zip(vals).map(|(&p, &v)| v * a_inv_ct[(p, k)]).sum();
                }
            }
            // Exact symmetry for the dense Cholesky.
            for i in 0..m {
                for k in 0..i {
                    let avg = 0.5 * (s[(i, k)] + s[(k, i)]);
                    s[(i, k)] = avg;
                    s[(k, i)] = avg;
                }
            }
            let max_diag = (0..m).map(|i| s[(i, i)]).fold(0.0, f64::max);
            let llt = s.llt(Side::Lower).map_err(|_| LodError::PatchRankDeficient { node })?;
            let l = llt.L();
            let min_pivot = (0..m).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if !(min_pivot > 1e-13 * max_diag) {
                return Err(LodError::PatchRankDeficient { node });
            }
            Some(llt)
        } else {
            None
        };
        Ok(Self {
            a,
            c,
            a_solver,
            a_inv_ct,
            schur,
        })
    }

    pub fn primal_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn constraint_count(&self) -> usize {
        self.c.nrows()
    }

    pub fn solve(&self, rhs: &[f64]) -> SaddleSolution {
        self.solve_with_constraint(rhs, None)
    }

    /// Solves `[A C^T; C 0] [x; mu] = [r; b]`; `b = 0` when `None`.
    pub fn solve_with_constraint(&self, rhs: &[f64], constraint_rhs: Option<&[f64]>) -> SaddleSolution {
        let z = self.a_solver.solve(rhs);
        let m = self.c.nrows();
        let (primal, multiplier) = match &self.schur {
            Some(schur) => {
                let mut cz = self.c.mul_vec(&z);
                if let Some(b) = constraint_rhs {
                    for (v, bi) in cz.iter_mut().zip(b) {
                        *v -= bi;
                    }
                }
                let mu_mat = schur.solve(MatRef::from_column_major_slice(&cz, m, 1));
                let mu: Vec<f64> = mu_mat.col(0).iter().copied().collect();
                let x = (0..z.len())
                    .map(|p| z[p] - (0..m).map(|k| self.a_inv_ct[(p, k)] * mu[k]).sum::<f64>())
                    .collect();
                (x, mu)
            }
            None => (z, Vec::new()),
        };
        let ax = self.a.mul_vec(&primal);
        let ctmu = self.c.tr_mul_vec(&multiplier);
        let res: Vec<f64> = (0..rhs.len())
            .map(|i| ax[i] + if m > 0 { ctmu[i] } else { 0.0 } - rhs[i])
            .collect();
        let mut cx = self.c.mul_vec(&primal);
        if let Some(b) = constraint_rhs {
            for (v, bi) in cx.iter_mut().zip(b) {
                *v -= bi;
            }
        }
        let constraint_violation = norm_inf(&cx);
        SaddleSolution {
            primal,
            multiplier,
            residual: norm2(&res),
            constraint_violation,
        }
    }
}

#[cfg(test)]
mod saddle_tests {
    use super::*;

    #[test]
    fn matches_dense_kkt_solve() {
        // A = tridiag(-1, 2.5, -1), C = two rows.
        let n = 6;
        let a = SparseMatrix::from_triplets(
            n,
            n,
            (0..n).flat_map(|i| {
                let mut v = vec![(i, i, 2.5)];
                if i > 0 {
                    v.push((i, i - 1, -1.0));
                    v.push((i - 1, i, -1.0));
                }
                v
            }),
        );
        let c = SparseMatrix::from_triplets(2, n, [(0, 0, 1.0), (0, 1, 1.0), (1, 3, 2.0), (1, 5, -1.0)]);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let sys = SaddlePointSystem::new(a.clone(), c.clone(), 0).unwrap();
        let sol = sys.solve(&rhs);
        // Oracle: dense LU of the full KKT matrix.
        let mut kkt = Mat::<f64>::zeros(n + 2, n + 2);
        for (i, j, v) in a.triplets() {
            kkt[(i, j)] = v;
        }
        for (i, j, v) in c.triplets() {
            kkt[(n + i, j)] = v;
            kkt[(j, n + i)] = v;
        }
        let mut b = Mat::<f64>::zeros(n + 2, 1);
        for i in 0..n {
            b[(i, 0)] = rhs[i];
        }
        let x = kkt.partial_piv_lu().solve(&b);
        for i in 0..n {
            assert!((x[(i, 0)] - sol.primal[i]).abs() < 1e-13);
        }
        assert!(sol.residual < 1e-13);
        assert!(sol.constraint_violation < 1e-14);
    }

    #[test]
    fn dependent_constraints_are_rejected() {
        let a = SparseMatrix::identity(3);
        let c = SparseMatrix::from_triplets(2, 3, [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0)]);
        assert!(matches!(
            SaddlePointSystem::new(a, c, 7),
            Err(LodError::PatchRankDeficient { node: 7 })
        ));
    }
}
