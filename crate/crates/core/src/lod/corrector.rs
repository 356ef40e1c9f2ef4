use std::collections::BTreeSet;

use serde::Serialize;

use crate::clement::{build_clement, ClementOperator};
use crate::error::{LodError, Result};
use crate::fem::{
    assemble_elements, element_stiffness, DiffusionField, ElementMatrix, FeSpace, QuadratureRule, SparseMatrix,
};
use crate::linalg::SaddlePointSystem;
use crate::mesh::{fine_layer_patch, nodal_patch, Patch};
use crate::par_map;

/// Shared inputs of all corrector problems for one pair of spaces and one
/// diffusion coefficient.
pub struct LodSetup {
    clement: ClementOperator,
    element_stiffness: Vec<ElementMatrix>,
    stiffness: SparseMatrix,
    variant: BasisVariant,
}

/// How the localized basis functions are computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum BasisVariant {
    /// `lambda_j - phi_j` with `phi_j` driven by `<A grad lambda_j, grad w>`.
    #[default]
    Corrector,
    /// Minimal-energy patch function `b_j` with `I_H b_j = lambda_j`, i.e. the
    /// constraint right-hand side is the unit vector `e_j`. Reported as the
    /// corrector `lambda_j - b_j`.
    UnitVector,
}

/// Extent of the corrector problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PatchRule {
    /// Whole domain.
    Global,
    /// `omega_{j,k}` with `k` coarse layers, `k >= 1` in steps of one half.
    CoarseLayers(f64),
    /// Fixed number of fine element layers around the node.
    FineLayers(usize),
}

/// Corrector `phi_j` of one coarse node.
#[derive(Debug, Clone)]
pub struct Corrector {
    /// Coarse DOF index.
    pub node: usize,
    pub rule: PatchRule,
    /// Fine DOFs of the patch; `values` are zero elsewhere.
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
    /// `|A^{1/2} grad phi|^2`.
    pub energy: f64,
    /// Residual of the saddle-point system.
    pub residual: f64,
    /// `max |C phi|` over the patch constraint rows.
    pub constraint_violation: f64,
}

impl Corrector {
    /// Coefficients over all fine DOFs.
    pub fn to_fine(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (&d, x) in self.dofs.iter().zip(&self.values) {
            v[d] = *x;
        }
        v
    }
}

impl LodSetup {
    pub fn new(
        coarse: &FeSpace,
        fine: &FeSpace,
        diffusion: &dyn DiffusionField,
        quad: &QuadratureRule,
    ) -> Result<Self> {
        let clement = build_clement(coarse, fine, quad)?;
        let element_stiffness = element_stiffness(fine.mesh(), diffusion, quad)?;
        Ok(Self::from_parts(clement, element_stiffness))
    }

    /// Builds the setup from an operator and precomputed element matrices of `A`.
    pub fn from_parts(clement: ClementOperator, element_stiffness: Vec<ElementMatrix>) -> Self {
        let stiffness = assemble_elements(clement.fine(), &element_stiffness).symmetrized();
        Self {
            clement,
            element_stiffness,
            stiffness,
            variant: BasisVariant::Corrector,
        }
    }

    pub fn with_variant(mut self, variant: BasisVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn variant(&self) -> BasisVariant {
        self.variant
    }

    pub fn clement(&self) -> &ClementOperator {
        &self.clement
    }

    pub fn coarse(&self) -> &FeSpace {
        self.clement.coarse()
    }

    pub fn fine(&self) -> &FeSpace {
        self.clement.fine()
    }

    /// Fine `A` stiffness.
    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn element_stiffness(&self) -> &[ElementMatrix] {
        &self.element_stiffness
    }

    /// `v^T S_A v`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        self.stiffness.quad_form(v)
    }

    /// `A`-energy of `v` on each fine triangle.
    pub fn element_energies(&self, v: &[f64]) -> Vec<f64> {
        let fine = self.fine();
        self.element_stiffness
            .iter()
            .enumerate()
            .map(|(t, k)| {
                let x = fine.element_values(v, t);
                (0..3).map(|i| (0..3).map(|j| x[i] * k[i][j] * x[j]).sum::<f64>()).sum()
            })
            .collect()
    }

    /// Patch of coarse DOF `j` under `rule`.
    pub fn patch(&self, j: usize, rule: PatchRule) -> Result<Patch> {
        let (coarse, fine) = (self.coarse().mesh(), self.fine().mesh());
        let center = *self
            .coarse()
            .interior_vertices()
            .get(j)
            .ok_or(LodError::NotInteriorVertex(j))?;
        match rule {
            // Layers grow in hexagonal distance, so reaching every corner takes 2n.
            PatchRule::Global => nodal_patch(coarse, fine, center, 2.0 * coarse.subdivisions() as f64),
            PatchRule::CoarseLayers(k) => nodal_patch(coarse, fine, center, k),
            PatchRule::FineLayers(l) => fine_layer_patch(coarse, fine, center, l),
        }
    }

    /// Fine coefficients of the coarse hat `lambda_j`.
    pub fn coarse_hat(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.coarse().dim()];
        e[j] = 1.0;
        self.clement.prolongation().mul_vec(&e)
    }

    /// `<A grad lambda_j, grad phi_i>` for all fine DOFs `i`.
    fn corrector_rhs(&self, j: usize) -> Vec<f64> {
        self.stiffness.mul_vec(&self.coarse_hat(j))
    }

    /// Solves `<A grad phi, grad w> = <A grad lambda_j, grad w>` for all `w`
    /// in the kernel of `I_H` supported in `patch`.
    pub fn solve_corrector(&self, j: usize, patch: &Patch, rule: PatchRule) -> Result<Corrector> {
        let wrap = |e: LodError| LodError::Corrector {
            node: j,
            source: Box::new(e),
        };
        let rows = self.clement.kernel_constraint_rows(patch).map_err(wrap)?;
        let a = self.stiffness.submatrix(&rows.fine_dofs, &rows.fine_dofs);
        let sys = SaddlePointSystem::new(a, rows.matrix, j).map_err(wrap)?;
        let (values, residual, violation) = self.solve_in(&sys, j, &rows.fine_dofs, &rows.coarse_dofs);
        self.finish(j, rule, rows.fine_dofs, values, residual, violation)
    }

    /// Corrector values on `dofs` from a factored patch system whose
    /// constraint rows belong to `coarse_dofs`.
    fn solve_in(
        &self,
        sys: &SaddlePointSystem,
        j: usize,
        dofs: &[usize],
        coarse_dofs: &[usize],
    ) -> (Vec<f64>, f64, f64) {
        match self.variant {
            BasisVariant::Corrector => {
                let full = self.corrector_rhs(j);
                let rhs: Vec<f64> = dofs.iter().map(|&d| full[d]).collect();
                let sol = sys.solve(&rhs);
                (sol.primal, sol.residual, sol.constraint_violation)
            }
            BasisVariant::UnitVector => {
                let b: Vec<f64> = coarse_dofs.iter().map(|&c| if c == j { 1.0 } else { 0.0 }).collect();
                let sol = sys.solve_with_constraint(&vec![0.0; dofs.len()], Some(&b));
                let hat = self.coarse_hat(j);
                let values = dofs.iter().zip(&sol.primal).map(|(&d, x)| hat[d] - x).collect();
                (values, sol.residual, sol.constraint_violation)
            }
        }
    }

    fn finish(
        &self,
        j: usize,
        rule: PatchRule,
        dofs: Vec<usize>,
        values: Vec<f64>,
        residual: f64,
        constraint_violation: f64,
    ) -> Result<Corrector> {
        let scale = crate::linalg::norm2(&self.corrector_rhs(j)).max(f64::MIN_POSITIVE);
        if !(residual <= 1e-8 * scale) {
            return Err(LodError::Corrector {
                node: j,
                source: Box::new(LodError::LinearSolve { residual }),
            });
        }
        let mut c = Corrector {
            node: j,
            rule,
            dofs,
            values,
            energy: 0.0,
            residual,
            constraint_violation,
        };
        c.energy = self.energy(&c.to_fine(self.fine().dim()));
        Ok(c)
    }

    /// Correctors of every coarse node under `rule`, in node order.
    ///
    /// The global rule factors the full constrained system once and reuses it
    /// for all nodes.
    pub fn correctors(&self, rule: PatchRule) -> Result<Vec<Corrector>> {
        let nodes = self.coarse().dim();
        if rule == PatchRule::Global {
            let sys = SaddlePointSystem::new(self.stiffness.clone(), self.clement.matrix().clone(), usize::MAX)?;
            let dofs: Vec<usize> = (0..self.fine().dim()).collect();
            let coarse_dofs: Vec<usize> = (0..nodes).collect();
            return par_map(nodes, |j| {
                let (values, residual, violation) = self.solve_in(&sys, j, &dofs, &coarse_dofs);
                self.finish(j, rule, dofs.clone(), values, residual, violation)
            })
            .into_iter()
            .collect();
        }
        par_map(nodes, |j| {
            let patch = self.patch(j, rule).map_err(|e| LodError::Corrector {
                node: j,
                source: Box::new(e),
            })?;
            self.solve_corrector(j, &patch, rule)
        })
        .into_iter()
        .collect()
    }

    pub fn build_ms_basis(&self, rule: PatchRule) -> Result<MultiscaleBasis> {
        let correctors = self.correctors(rule)?;
        Ok(MultiscaleBasis::from_correctors(self, rule, &correctors))
    }

    /// `|A^{1/2} grad(phi_global - phi_local)|`.
    pub fn truncation_error(&self, global: &Corrector, local: &Corrector) -> f64 {
        let n = self.fine().dim();
        let g = global.to_fine(n);
        let l = local.to_fine(n);
        let d: Vec<f64> = g.iter().zip(&l).map(|(a, b)| a - b).collect();
        self.energy(&d).max(0.0).sqrt()
    }

    /// Relative `A`-energy norm of `phi` outside `patch`.
    pub fn tail_ratio(&self, corrector: &Corrector, patch: &Patch) -> f64 {
        let energies = self.element_energies(&corrector.to_fine(self.fine().dim()));
        let total: f64 = energies.iter().sum();
        if !(total > 0.0) {
            return 0.0;
        }
        let inside: BTreeSet<usize> = patch.fine_triangles.iter().copied().collect();
        let tail: f64 = energies
            .iter()
            .enumerate()
            .filter(|(t, _)| !inside.contains(t))
            .map(|(_, e)| e)
            .sum();
        (tail.max(0.0) / total).sqrt()
    }
}

/// Columns `lambda_j - phi_j` over the fine DOFs.
#[derive(Debug, Clone)]
pub struct MultiscaleBasis {
    matrix: SparseMatrix,
    rule: PatchRule,
    corrector_energies: Vec<f64>,
}

impl MultiscaleBasis {
    pub fn from_correctors(setup: &LodSetup, rule: PatchRule, correctors: &[Corrector]) -> Self {
        let p = setup.clement().prolongation();
        let mut triplets: Vec<(usize, usize, f64)> = p.triplets().collect();
        for c in correctors {
            triplets.extend(c.dofs.iter().zip(&c.values).map(|(&d, v)| (d, c.node, -v)));
        }
        Self {
            matrix: SparseMatrix::from_triplets(p.nrows(), p.ncols(), triplets),
            rule,
            corrector_energies: correctors.iter().map(|c| c.energy).collect(),
        }
    }

    /// Fine rows, coarse columns.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn rule(&self) -> PatchRule {
        self.rule
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn corrector_energies(&self) -> &[f64] {
        &self.corrector_energies
    }

    /// Fine DOFs in the support of column `j`.
    pub fn column_support(&self, j: usize) -> BTreeSet<usize> {
        self.matrix
            .triplets()
            .filter(|&(_, c, _)| c == j)
            .map(|(r, _, _)| r)
            .collect()
    }
}
