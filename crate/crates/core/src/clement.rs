//! Weighted Clément quasi-interpolation `I_H : V_h -> V_H`.

use std::collections::BTreeSet;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LodError, Result};
use crate::fem::{
    assemble_weighted_mass_and_volumes, element_h1_sq, element_l2_sq, h1_seminorm, prolongation, FeSpace,
    QuadratureRule, SparseMatrix,
};
use crate::linalg::{LuSolver, SaddlePointSystem};
use crate::mesh::{nodal_patch, Patch};

/// Matrix realization of `I_H`: row `j` holds the `lambda_j`-weighted mean
/// `(int v lambda_j) / (int lambda_j)` as a functional on fine coefficients.
pub struct ClementOperator {
    coarse: FeSpace,
    fine: FeSpace,
    matrix: SparseMatrix,
    volumes: Vec<f64>,
    prolongation: SparseMatrix,
    coarse_gram: SparseMatrix,
    gram_solver: LuSolver,
}

pub fn build_clement(coarse: &FeSpace, fine: &FeSpace, quad: &QuadratureRule) -> Result<ClementOperator> {
    let (w, volumes) = assemble_weighted_mass_and_volumes(coarse, fine, quad)?;
    if let Some(j) = volumes.iter().position(|d| !(*d > 0.0)) {
        return Err(LodError::NonPositiveVolume(j));
    }
    let inv: Vec<f64> = volumes.iter().map(|d| 1.0 / d).collect();
    let matrix = w.scale_rows(&inv);
    let prolongation = prolongation(coarse, fine)?;
    let coarse_gram = matrix.matmul(&prolongation);
    let gram_solver = LuSolver::new(&coarse_gram)?;
    Ok(ClementOperator {
        coarse: coarse.clone(),
        fine: fine.clone(),
        matrix,
        volumes,
        prolongation,
        coarse_gram,
        gram_solver,
    })
}

/// Constraint rows of a patch-local corrector problem.
#[derive(Debug, Clone)]
pub struct ConstraintRows {
    /// Rows: `coarse_dofs`, columns: `fine_dofs`.
    pub matrix: SparseMatrix,
    pub coarse_dofs: Vec<usize>,
    pub fine_dofs: Vec<usize>,
}

/// Empirical interpolation-stability constant.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityStats {
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Worst ratio of the ramp `v(x) = x_1`.
    pub ramp_ratio: f64,
    pub samples: usize,
}

/// Diagnostics of a right inverse of `I_H` on a coarse hat.
#[derive(Debug, Clone, Serialize)]
pub struct PreimageStats {
    /// `max_j |v_j|_{H^1} / |lambda_j|_{H^1}`.
    pub max_ratio: f64,
    /// `max_j ||I_H v_j - e_j||_inf`.
    pub max_defect: f64,
}

impl ClementOperator {
    pub fn coarse(&self) -> &FeSpace {
        &self.coarse
    }

    pub fn fine(&self) -> &FeSpace {
        &self.fine
    }

    /// `J x N` matrix.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Hat integrals `d_j`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn prolongation(&self) -> &SparseMatrix {
        &self.prolongation
    }

    /// `I P`, the restriction of `I_H` to `V_H` in coordinates.
    pub fn coarse_gram(&self) -> &SparseMatrix {
        &self.coarse_gram
    }

    pub fn coarse_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn fine_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.fine_dim() {
            return Err(LodError::DimensionMismatch {
                expected: self.fine_dim(),
                got: v.len(),
            });
        }
        Ok(self.matrix.mul_vec(v))
    }

    /// Solves `(I P) x = rhs`.
    pub fn solve_gram(&self, rhs: &[f64]) -> Vec<f64> {
        self.gram_solver.solve(rhs)
    }

    /// `P (I P)^{-1} I v`: the `V_H` component of `v` in the splitting
    /// `V_h = V_H + ker I_H`.
    pub fn coarse_part(&self, v: &[f64]) -> Vec<f64> {
        self.prolongation.mul_vec(&self.solve_gram(&self.matrix.mul_vec(v)))
    }

    /// `max |(I P)(I P)^{-1} - Id|` over all unit vectors.
    pub fn gram_inverse_defect(&self) -> f64 {
        let j = self.coarse_dim();
        let mut worst: f64 = 0.0;
        let mut e = vec![0.0; j];
        for col in 0..j {
            e[col] = 1.0;
            let x = self.solve_gram(&e);
            let y = self.coarse_gram.mul_vec(&x);
            for (i, yi) in y.iter().enumerate() {
                let target = if i == col { 1.0 } else { 0.0 };
                worst = worst.max((yi - target).abs());
            }
            e[col] = 0.0;
        }
        worst
    }

    /// 2-norm condition number of `I P`.
    pub fn gram_condition_number(&self) -> Result<f64> {
        let sv = singular_values(&self.coarse_gram.to_dense())?;
        let (max, min) = extremes(&sv);
        Ok(if min > 0.0 { max / min } else { f64::INFINITY })
    }

    /// Numerical rank of `I` from its singular values.
    pub fn rank(&self) -> Result<usize> {
        let sv = singular_values(&self.matrix.to_dense())?;
        let (max, _) = extremes(&sv);
        let tol = max * (self.fine_dim().max(self.coarse_dim()) as f64) * f64::EPSILON * 10.0;
        Ok(sv.iter().filter(|s| **s > tol).count())
    }

    /// `dim ker I = N - rank I`.
    pub fn kernel_dimension(&self) -> Result<usize> {
        Ok(self.fine_dim() - self.rank()?)
    }

    /// Orthogonal projector onto `ker I` in the Euclidean coefficient inner product.
    pub fn kernel_projector(&self) -> Result<KernelProjector<'_>> {
        let iit = self.matrix.matmul(&self.matrix.transpose()).symmetrized();
        Ok(KernelProjector {
            op: self,
            solver: crate::linalg::CholeskySolver::new(&iit)?,
        })
    }

    /// Constraint rows for a patch: columns are the patch's interior fine
    /// DOFs, rows the touching coarse DOFs with at least one nonzero entry.
    ///
    /// Full row rank is verified when the saddle-point system is factored.
    pub fn kernel_constraint_rows(&self, patch: &Patch) -> Result<ConstraintRows> {
        let fine_dofs: Vec<usize> = patch
            .interior_fine_vertices
            .iter()
            .map(|&v| self.fine.dof_of_vertex(v).ok_or(LodError::NotInteriorVertex(v)))
            .collect::<Result<_>>()?;
        let candidates: Vec<usize> = patch
            .coarse_nodes_touching
            .iter()
            .filter_map(|&v| self.coarse.dof_of_vertex(v))
            .collect();
        let sub = self.matrix.submatrix(&candidates, &fine_dofs);
        let keep: Vec<usize> = (0..sub.nrows()).filter(|&r| !sub.row(r).0.is_empty()).collect();
        if keep.len() > fine_dofs.len() {
            return Err(LodError::PatchRankDeficient {
                node: self.coarse.dof_of_vertex(patch.center_vertex).unwrap_or(usize::MAX),
            });
        }
        let all: Vec<usize> = (0..fine_dofs.len()).collect();
        Ok(ConstraintRows {
            matrix: sub.submatrix(&keep, &all),
            coarse_dofs: keep.iter().map(|&r| candidates[r]).collect(),
            fine_dofs,
        })
    }

    /// Global preimage `P (I P)^{-1} e_j` of each coarse unit vector.
    pub fn gram_preimage_stats(&self) -> PreimageStats {
        let hat_norm = self.hat_seminorms();
        let mut stats = PreimageStats {
            max_ratio: 0.0,
            max_defect: 0.0,
        };
        let mut e = vec![0.0; self.coarse_dim()];
        for j in 0..self.coarse_dim() {
            e[j] = 1.0;
            let v = self.prolongation.mul_vec(&self.solve_gram(&e));
            self.record_preimage(&mut stats, &v, j, hat_norm[j]);
            e[j] = 0.0;
        }
        stats
    }

    /// Minimal-energy preimage of each `e_j` supported in `supp lambda_j`.
    pub fn local_preimage_stats(&self, stiffness: &SparseMatrix) -> Result<PreimageStats> {
        let hat_norm = self.hat_seminorms();
        let mut stats = PreimageStats {
            max_ratio: 0.0,
            max_defect: 0.0,
        };
        for j in 0..self.coarse_dim() {
            let v = self.local_preimage(j, stiffness)?;
            self.record_preimage(&mut stats, &v, j, hat_norm[j]);
        }
        Ok(stats)
    }

    /// Fine function with `I_H v = e_j`, supported in `supp lambda_j` and of
    /// minimal energy with respect to `stiffness` among such functions.
    pub fn local_preimage(&self, j: usize, stiffness: &SparseMatrix) -> Result<Vec<f64>> {
        let center = self.coarse.interior_vertices()[j];
        let patch = nodal_patch(self.coarse.mesh(), self.fine.mesh(), center, 1.0)?;
        let rows = self.kernel_constraint_rows(&patch)?;
        let a = stiffness.submatrix(&rows.fine_dofs, &rows.fine_dofs);
        let sys = SaddlePointSystem::new(a, rows.matrix.clone(), j)?;
        let b: Vec<f64> = rows
            .coarse_dofs
            .iter()
            .map(|&c| if c == j { 1.0 } else { 0.0 })
            .collect();
        let sol = sys.solve_with_constraint(&vec![0.0; rows.fine_dofs.len()], Some(&b));
        let mut v = vec![0.0; self.fine_dim()];
        for (&d, x) in rows.fine_dofs.iter().zip(&sol.primal) {
            v[d] = *x;
        }
        Ok(v)
    }

    fn hat_seminorms(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.coarse_dim()];
        (0..self.coarse_dim())
            .map(|j| {
                e[j] = 1.0;
                let n = h1_seminorm(&self.coarse, &e);
                e[j] = 0.0;
                n
            })
            .collect()
    }

    fn record_preimage(&self, stats: &mut PreimageStats, v: &[f64], j: usize, hat_norm: f64) {
        let iv = self.matrix.mul_vec(v);
        for (i, x) in iv.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            stats.max_defect = stats.max_defect.max((x - target).abs());
        }
        stats.max_ratio = stats.max_ratio.max(h1_seminorm(&self.fine, v) / hat_norm);
    }

    /// Empirical constant of the local stability estimate
    ///
    /// `H_T^{-1} ||v - Q v||_{L^2(T)} + ||grad(v - Q v)||_{L^2(T)} <= C ||grad v||_{L^2(omega_T)}`
    ///
    /// with `Q = P I` and `omega_T` the coarse elements touching `T`. Test
    /// functions are the ramp `x_1` plus `trials` random smooth sine sums,
    /// all sampled at the fine interior nodes.
    pub fn measure_interpolation_stability(&self, trials: usize, seed: u64) -> Result<StabilityStats> {
        let coarse_mesh = self.coarse.mesh();
        let fine_mesh = self.fine.mesh();
        let ancestors = fine_mesh.ancestor_map(coarse_mesh)?;
        let nc = coarse_mesh.num_triangles();
        let neighborhoods: Vec<Vec<usize>> = (0..nc)
            .map(|t| coarse_mesh.grow_layer(&BTreeSet::from([t])).into_iter().collect())
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut functions: Vec<Vec<f64>> = vec![self.fine.interpolate(|x| x[0])];
        for _ in 0..trials {
            let terms: Vec<(f64, f64, f64)> = (0..6)
                .map(|_| {
                    let a = rng.random_range(1..=5) as f64;
                    let b = rng.random_range(1..=5) as f64;
                    (a, b, rng.random_range(-1.0..1.0))
                })
                .collect();
            functions.push(self.fine.interpolate(|x| {
                terms
                    .iter()
                    .map(|(a, b, c)| {
                        c * (a * std::f64::consts::PI * x[0]).sin() * (b * std::f64::consts::PI * x[1]).sin()
                    })
                    .sum()
            }));
        }

        let h_t = coarse_mesh.diameter();
        let mut max_ratio: f64 = 0.0;
        let mut ramp_ratio: f64 = 0.0;
        let mut sum = 0.0;
        let mut samples = 0;
        for (f, v) in functions.iter().enumerate() {
            let qv = self.prolongation.mul_vec(&self.matrix.mul_vec(v));
            let err: Vec<f64> = v.iter().zip(&qv).map(|(a, b)| a - b).collect();
            let mut grad_v = vec![0.0; nc];
            let mut l2_e = vec![0.0; nc];
            let mut h1_e = vec![0.0; nc];
            for t in 0..fine_mesh.num_triangles() {
                let c = ancestors[t];
                grad_v[c] += element_h1_sq(&self.fine, v, t);
                l2_e[c] += element_l2_sq(&self.fine, &err, t);
                h1_e[c] += element_h1_sq(&self.fine, &err, t);
            }
            let scale = grad_v.iter().sum::<f64>().sqrt();
            for t in 0..nc {
                let denom: f64 = neighborhoods[t].iter().map(|&s| grad_v[s]).sum::<f64>().sqrt();
                if denom <= 1e-12 * scale {
                    continue;
                }
                let ratio = (l2_e[t].max(0.0).sqrt() / h_t + h1_e[t].sqrt()) / denom;
                max_ratio = max_ratio.max(ratio);
                if f == 0 {
                    ramp_ratio = ramp_ratio.max(ratio);
                }
                sum += ratio;
                samples += 1;
            }
        }
        Ok(StabilityStats {
            max_ratio,
            mean_ratio: if samples > 0 { sum / samples as f64 } else { 0.0 },
            ramp_ratio,
            samples,
        })
    }
}

/// Euclidean projector `v - I^T (I I^T)^{-1} I v` onto `ker I`.
pub struct KernelProjector<'a> {
    op: &'a ClementOperator,
    solver: crate::linalg::CholeskySolver,
}

impl KernelProjector<'_> {
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let y = self.solver.solve(&self.op.matrix.mul_vec(v));
        let correction = self.op.matrix.tr_mul_vec(&y);
        v.iter().zip(&correction).map(|(a, b)| a - b).collect()
    }
}

fn singular_values(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.singular_values()
        .map_err(|e| LodError::Factorization(format!("SVD: {e:?}")))
}

fn extremes(sv: &[f64]) -> (f64, f64) {
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem::{assemble_stiffness, identity_diffusion};
    use crate::mesh::{build_unit_square_mesh, refine_uniform};

    fn spaces(n: usize, levels: u32) -> (FeSpace, FeSpace) {
        let coarse = build_unit_square_mesh(n).unwrap();
        let fine = refine_uniform(&coarse, levels).unwrap();
        (FeSpace::new(Arc::new(coarse)), FeSpace::new(Arc::new(fine)))
    }

    #[test]
    fn half_on_prolonged_hat() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        // Center node of the 3x3 interior grid.
        let j = 4;
        let mut e = vec![0.0; c.dim()];
        e[j] = 1.0;
        let v = op.prolongation().mul_vec(&e);
        let iv = op.apply(&v).unwrap();
        assert!((iv[j] - 0.5).abs() < 1e-13, "{}", iv[j]);
        assert!((op.coarse_gram().get(j, j) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn zero_maps_to_zero_and_dimension_checked() {
        let (c, f) = spaces(2, 1);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        assert!(op.apply(&vec![0.0; f.dim()]).unwrap().iter().all(|x| *x == 0.0));
        assert!(op.apply(&[1.0]).is_err());
    }

    #[test]
    fn rows_are_local() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        let hmesh = c.mesh().spacing();
        for (j, i, _) in op.matrix().triplets() {
            let z = c.mesh().vertices()[c.interior_vertices()[j]];
            let x = f.mesh().vertices()[f.interior_vertices()[i]];
            let (dx, dy) = ((x[0] - z[0]) / hmesh, (x[1] - z[1]) / hmesh);
            // Hexagonal support of a Friedrichs-Keller hat.
            assert!(dx.abs() <= 1.0 + 1e-12 && dy.abs() <= 1.0 + 1e-12 && (dx - dy).abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gram_invertible_and_kernel_dimension() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        assert!(op.gram_inverse_defect() < 1e-10);
        let cond = op.gram_condition_number().unwrap();
        assert!(cond.is_finite() && cond >= 1.0);
        assert_eq!(op.kernel_dimension().unwrap(), f.dim() - c.dim());
    }

    #[test]
    fn kernel_projection_and_splitting() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..f.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = op.kernel_projector().unwrap().project(&v);
        assert!(op.apply(&w).unwrap().iter().all(|x| x.abs() < 1e-12));
        let coarse = op.coarse_part(&v);
        let rest: Vec<f64> = v.iter().zip(&coarse).map(|(a, b)| a - b).collect();
        assert!(op.apply(&rest).unwrap().iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn constraint_rows_full_domain_equals_operator() {
        let (c, f) = spaces(4, 1);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        let center = c.interior_vertices()[4];
        let patch = nodal_patch(c.mesh(), f.mesh(), center, 10.0).unwrap();
        let rows = op.kernel_constraint_rows(&patch).unwrap();
        assert_eq!(rows.coarse_dofs, (0..c.dim()).collect::<Vec<_>>());
        assert_eq!(rows.fine_dofs, (0..f.dim()).collect::<Vec<_>>());
        assert_eq!(
            rows.matrix.triplets().collect::<Vec<_>>(),
            op.matrix().triplets().collect::<Vec<_>>()
        );
    }

    #[test]
    fn constraint_row_count_matches_support_enumeration() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        let cm = c.mesh();
        for &center in c.interior_vertices() {
            let patch = nodal_patch(cm, f.mesh(), center, 1.0).unwrap();
            let rows = op.kernel_constraint_rows(&patch).unwrap();
            // Oracle: coarse interior vertices sharing a coarse triangle with the center.
            let mut expected: Vec<usize> = cm
                .triangles_of_vertex(center)
                .iter()
                .flat_map(|&t| cm.triangles()[t])
                .filter_map(|v| c.dof_of_vertex(v))
                .collect();
            expected.sort_unstable();
            expected.dedup();
            assert_eq!(rows.coarse_dofs, expected);
            assert!(rows
                .matrix
                .mul_vec(&vec![0.0; rows.fine_dofs.len()])
                .iter()
                .all(|x| *x == 0.0));
        }
    }

    #[test]
    fn preimages_hit_unit_vectors() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        let s = assemble_stiffness(&f, &identity_diffusion, &QuadratureRule::gauss3()).unwrap();
        let g = op.gram_preimage_stats();
        let l = op.local_preimage_stats(&s).unwrap();
        assert!(g.max_defect < 1e-10 && l.max_defect < 1e-10);
        assert!(g.max_ratio.is_finite() && l.max_ratio.is_finite());
        // Local preimage is supported in the hat's support.
        let v = op.local_preimage(4, &s).unwrap();
        let patch = nodal_patch(c.mesh(), f.mesh(), c.interior_vertices()[4], 1.0).unwrap();
        for (d, x) in v.iter().enumerate() {
            if *x != 0.0 {
                assert!(patch.interior_fine_vertices.contains(&f.interior_vertices()[d]));
            }
        }
    }

    #[test]
    fn stability_ratio_is_finite() {
        let (c, f) = spaces(4, 2);
        let op = build_clement(&c, &f, &QuadratureRule::gauss3()).unwrap();
        let s = op.measure_interpolation_stability(5, 1).unwrap();
        assert!(s.max_ratio.is_finite() && s.max_ratio > 0.0);
        assert!(s.ramp_ratio <= s.max_ratio);
    }
}
