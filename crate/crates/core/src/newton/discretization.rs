use crate::error::{LodError, Result};
use crate::fem::{assemble_load, assemble_stiffness, Element, ElementMatrix, FeSpace, QuadratureRule, SparseMatrix};
use crate::mesh::Point;
use crate::newton::problem::SemilinearProblem;
use crate::par_map;

/// A semilinear problem discretized on the fine space: the `A` stiffness
/// and `g` load are assembled once; the `F` terms are evaluated on demand.
pub struct FineOperator {
    space: FeSpace,
    problem: SemilinearProblem,
    quad: QuadratureRule,
    stiffness: SparseMatrix,
    load: Vec<f64>,
    elements: Vec<Element>,
    /// Physical quadrature points, `quad.len()` per element.
    points: Vec<Point>,
}

impl FineOperator {
    pub fn new(space: FeSpace, problem: SemilinearProblem, quad: QuadratureRule) -> Result<Self> {
        let stiffness = assemble_stiffness(&space, problem.diffusion.as_ref(), &quad)?;
        Ok(Self::with_stiffness(space, problem, quad, stiffness))
    }

    /// Reuses an already assembled `A` stiffness.
    pub fn with_stiffness(
        space: FeSpace,
        problem: SemilinearProblem,
        quad: QuadratureRule,
        stiffness: SparseMatrix,
    ) -> Self {
        let load = assemble_load(&space, problem.source.as_ref(), &quad);
        let mesh = space.mesh();
        let elements: Vec<Element> = (0..mesh.num_triangles()).map(|t| Element::new(mesh, t)).collect();
        let points = elements
            .iter()
            .flat_map(|el| quad.points().iter().map(|b| el.map(b)))
            .collect();
        Self {
            space,
            problem,
            quad,
            stiffness,
            load,
            elements,
            points,
        }
    }

    /// Same discretization with a different source; `A` is not reassembled.
    pub fn with_problem(&self, problem: SemilinearProblem) -> Self {
        Self::with_stiffness(self.space.clone(), problem, self.quad.clone(), self.stiffness.clone())
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn problem(&self) -> &SemilinearProblem {
        &self.problem
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn element_points(&self, t: usize) -> impl Iterator<Item = (Point, f64, &[f64; 3])> + '_ {
        let nq = self.quad.len();
        let scale = 2.0 * self.elements[t].area;
        self.points[t * nq..(t + 1) * nq]
            .iter()
            .zip(self.quad.weights())
            .zip(self.quad.points())
            .map(move |((x, w), b)| (*x, w * scale, b))
    }

    /// `<F(., u, grad u), phi_i>` for every fine DOF.
    pub fn nonlinear_vector(&self, u: &[f64]) -> Vec<f64> {
        let f = self.problem.nonlinearity.as_ref();
        let locals = par_map(self.elements.len(), |t| {
            let vals = self.space.element_values(u, t);
            let grad = self.elements[t].gradient(&vals);
            let mut local = [0.0; 3];
            for (x, w, b) in self.element_points(t) {
                let uq = vals[0] * b[0] + vals[1] * b[1] + vals[2] * b[2];
                let fx = w * f.value(x, uq, grad);
                for i in 0..3 {
                    local[i] += fx * b[i];
                }
            }
            local
        });
        let mut out = vec![0.0; self.dim()];
        for (t, local) in locals.iter().enumerate() {
            for (i, d) in self.space.element_dofs(t).iter().enumerate() {
                if let Some(d) = d {
                    out[*d] += local[i];
                }
            }
        }
        out
    }

    /// Fine Jacobian of the `F` term:
    /// `<d_xi F phi_k + d_zeta F . grad phi_k, phi_i>` at `u`.
    pub fn nonlinear_jacobian(&self, u: &[f64]) -> SparseMatrix {
        let f = self.problem.nonlinearity.as_ref();
        let locals: Vec<ElementMatrix> = par_map(self.elements.len(), |t| {
            let el = &self.elements[t];
            let vals = self.space.element_values(u, t);
            let grad = el.gradient(&vals);
            let mut local = [[0.0; 3]; 3];
            for (x, w, b) in self.element_points(t) {
                let uq = vals[0] * b[0] + vals[1] * b[1] + vals[2] * b[2];
                let d1 = f.d_xi(x, uq, grad);
                let d2 = f.d_zeta(x, uq, grad);
                for k in 0..3 {
                    let col = d1 * b[k] + d2[0] * el.grads[k][0] + d2[1] * el.grads[k][1];
                    for i in 0..3 {
                        local[i][k] += w * col * b[i];
                    }
                }
            }
            local
        });
        crate::fem::assemble_elements(&self.space, &locals)
    }

    /// `<B(u), v>` for the semilinear operator `B(u) = -div(A grad u) + F(u, grad u)`,
    /// returned as the coefficient vector of the functional.
    pub fn operator_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.stiffness.mul_vec(u);
        for (o, f) in out.iter_mut().zip(self.nonlinear_vector(u)) {
            *o += f;
        }
        out
    }
}

/// Galerkin projection of a [`FineOperator`] onto the span of the columns of
/// a basis matrix `B` (fine rows). The identity basis gives the fine
/// reference problem.
pub struct GalerkinSystem<'a> {
    fine: &'a FineOperator,
    /// `None` is the identity.
    basis: Option<SparseMatrix>,
    basis_t: Option<SparseMatrix>,
    reduced_stiffness: SparseMatrix,
    reduced_load: Vec<f64>,
}

impl<'a> GalerkinSystem<'a> {
    pub fn identity(fine: &'a FineOperator) -> Self {
        Self {
            fine,
            basis: None,
            basis_t: None,
            reduced_stiffness: fine.stiffness.clone(),
            reduced_load: fine.load.clone(),
        }
    }

    pub fn new(fine: &'a FineOperator, basis: &SparseMatrix) -> Result<Self> {
        if basis.nrows() != fine.dim() {
            return Err(LodError::DimensionMismatch {
                expected: fine.dim(),
                got: basis.nrows(),
            });
        }
        let bt = basis.transpose();
        let reduced_stiffness = bt.matmul(&fine.stiffness.matmul(basis)).symmetrized();
        let reduced_load = bt.mul_vec(&fine.load);
        Ok(Self {
            fine,
            basis: Some(basis.clone()),
            basis_t: Some(bt),
            reduced_stiffness,
            reduced_load,
        })
    }

    pub fn fine(&self) -> &FineOperator {
        self.fine
    }

    pub fn dim(&self) -> usize {
        self.reduced_load.len()
    }

    /// `B^T S_A B`.
    pub fn reduced_stiffness(&self) -> &SparseMatrix {
        &self.reduced_stiffness
    }

    pub fn basis(&self) -> Option<&SparseMatrix> {
        self.basis.as_ref()
    }

    fn check(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.dim() {
            return Err(LodError::DimensionMismatch {
                expected: self.dim(),
                got: alpha.len(),
            });
        }
        Ok(())
    }

    /// Fine coefficients `B alpha`.
    pub fn to_fine(&self, alpha: &[f64]) -> Vec<f64> {
        match &self.basis {
            Some(b) => b.mul_vec(alpha),
            None => alpha.to_vec(),
        }
    }

    fn restrict(&self, v: &[f64]) -> Vec<f64> {
        match &self.basis_t {
            Some(bt) => bt.mul_vec(v),
            None => v.to_vec(),
        }
    }

    /// `G(alpha) = B^T S_A B alpha + B^T f(B alpha) - B^T b`.
    pub fn residual(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        self.check(alpha)?;
        let u = self.to_fine(alpha);
        let f = self.restrict(&self.fine.nonlinear_vector(&u));
        let k = self.reduced_stiffness.mul_vec(alpha);
        Ok(k.iter()
            .zip(&f)
            .zip(&self.reduced_load)
            .map(|((k, f), b)| k + f - b)
            .collect())
    }

    /// `G(alpha + delta d) - G(alpha)`, with the linear part applied exactly
    /// so that the difference carries no cancellation error from the
    /// stiffness and load terms.
    pub fn residual_increment(&self, alpha: &[f64], direction: &[f64], delta: f64) -> Result<Vec<f64>> {
        self.check(alpha)?;
        self.check(direction)?;
        let u = self.to_fine(alpha);
        let shifted: Vec<f64> = alpha.iter().zip(direction).map(|(a, d)| a + delta * d).collect();
        let u2 = self.to_fine(&shifted);
        let f1 = self.fine.nonlinear_vector(&u);
        let f2 = self.fine.nonlinear_vector(&u2);
        let df: Vec<f64> = f2.iter().zip(&f1).map(|(a, b)| a - b).collect();
        let lin = self.reduced_stiffness.mul_vec(direction);
        Ok(self
            .restrict(&df)
            .iter()
            .zip(&lin)
            .map(|(f, k)| f + delta * k)
            .collect())
    }

    /// `D_alpha G = B^T (S_A + J_F(B alpha)) B`.
    pub fn jacobian(&self, alpha: &[f64]) -> Result<SparseMatrix> {
        self.check(alpha)?;
        let u = self.to_fine(alpha);
        let jf = self.fine.nonlinear_jacobian(&u);
        let reduced = match (&self.basis, &self.basis_t) {
            (Some(b), Some(bt)) => bt.matmul(&jf.matmul(b)),
            _ => jf,
        };
        Ok(self.reduced_stiffness.add_scaled(&reduced, 1.0))
    }
}
