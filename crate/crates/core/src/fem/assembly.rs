use crate::error::{LodError, Result};
use crate::fem::quadrature::QuadratureRule;
use crate::fem::space::FeSpace;
use crate::fem::sparse::SparseMatrix;
use crate::mesh::{Point, TriMesh};

pub type Mat2 = [[f64; 2]; 2];
pub type ElementMatrix = [[f64; 3]; 3];

/// Diffusion coefficient `x -> A(x)`.
pub trait DiffusionField: Send + Sync {
    fn eval(&self, x: Point) -> Mat2;
}

impl<F: Fn(Point) -> Mat2 + Send + Sync> DiffusionField for F {
    fn eval(&self, x: Point) -> Mat2 {
        self(x)
    }
}

pub trait ScalarField: Send + Sync {
    fn eval(&self, x: Point) -> f64;
}

impl<F: Fn(Point) -> f64 + Send + Sync> ScalarField for F {
    fn eval(&self, x: Point) -> f64 {
        self(x)
    }
}

pub fn identity_diffusion(_: Point) -> Mat2 {
    [[1.0, 0.0], [0.0, 1.0]]
}

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the three barycentric coordinates.
    pub grads: [[f64; 2]; 3],
}

impl Element {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        let [a, b, c] = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
        let area = mesh.signed_area(t);
        let s = 0.5 / area;
        let grads = [
            [(b[1] - c[1]) * s, (c[0] - b[0]) * s],
            [(c[1] - a[1]) * s, (a[0] - c[0]) * s],
            [(a[1] - b[1]) * s, (b[0] - a[0]) * s],
        ];
        Self {
            vertices: [a, b, c],
            area,
            grads,
        }
    }

    pub fn map(&self, bary: &[f64; 3]) -> Point {
        let [a, b, c] = self.vertices;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Gradient of the linear function with the given nodal values.
    pub fn gradient(&self, values: &[f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (v, grad) in values.iter().zip(&self.grads) {
            g[0] += v * grad[0];
            g[1] += v * grad[1];
        }
        g
    }

    /// Quadrature points as `(x, physical weight, barycentric coordinates)`.
    pub fn quadrature<'a>(&'a self, quad: &'a QuadratureRule) -> impl Iterator<Item = (Point, f64, &'a [f64; 3])> + 'a {
        let scale = 2.0 * self.area;
        quad.points()
            .iter()
            .zip(quad.weights())
            .map(move |(b, w)| (self.map(b), w * scale, b))
    }

    /// Exact P1 mass matrix `|T|/12 (1 + delta_ij)`.
    pub fn mass(&self) -> ElementMatrix {
        let d = self.area / 6.0;
        let o = self.area / 12.0;
        [[d, o, o], [o, d, o], [o, o, d]]
    }

    /// `int_T A grad(phi_j) . grad(phi_i)` from the integrated coefficient.
    pub fn stiffness_from(&self, a_int: &Mat2) -> ElementMatrix {
        let mut k = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let gj = self.grads[j];
                let agj = [
                    a_int[0][0] * gj[0] + a_int[0][1] * gj[1],
                    a_int[1][0] * gj[0] + a_int[1][1] * gj[1],
                ];
                k[i][j] = agj[0] * self.grads[i][0] + agj[1] * self.grads[i][1];
            }
        }
        k
    }
}

fn check_spd(a: &Mat2, x: Point) -> Result<()> {
    let scale = a[0][0].abs().max(a[1][1].abs()).max(f64::MIN_POSITIVE);
    let sym = (a[0][1] - a[1][0]).abs() <= 1e-12 * scale;
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !sym || !(a[0][0] > 0.0) || !(det > 0.0) {
        return Err(LodError::Indefinite { x: x[0], y: x[1] });
    }
    Ok(())
}

/// Element stiffness matrices of `int_T A grad(phi_j) . grad(phi_i)` for every triangle.
pub fn element_stiffness(
    mesh: &TriMesh,
    diffusion: &dyn DiffusionField,
    quad: &QuadratureRule,
) -> Result<Vec<ElementMatrix>> {
    (0..mesh.num_triangles())
        .map(|t| {
            let el = Element::new(mesh, t);
            let mut a_int = [[0.0; 2]; 2];
            for (x, w, _) in el.quadrature(quad) {
                let a = diffusion.eval(x);
                check_spd(&a, x)?;
                for r in 0..2 {
                    for c in 0..2 {
                        a_int[r][c] += w * a[r][c];
                    }
                }
            }
            Ok(el.stiffness_from(&a_int))
        })
        .collect()
}

/// Scatters element matrices into the interior-DOF system.
pub fn assemble_elements(space: &FeSpace, locals: &[ElementMatrix]) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(9 * locals.len());
    for (t, k) in locals.iter().enumerate() {
        let dofs = space.element_dofs(t);
        for (i, di) in dofs.iter().enumerate() {
            let Some(di) = di else { continue };
            for (j, dj) in dofs.iter().enumerate() {
                if let Some(dj) = dj {
                    triplets.push((*di, *dj, k[i][j]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(space.dim(), space.dim(), triplets)
}

/// Stiffness matrix over interior DOFs; fails if `A` is not SPD at a quadrature point.
pub fn assemble_stiffness(
    space: &FeSpace,
    diffusion: &dyn DiffusionField,
    quad: &QuadratureRule,
) -> Result<SparseMatrix> {
    let locals = element_stiffness(space.mesh(), diffusion, quad)?;
    Ok(assemble_elements(space, &locals).symmetrized())
}

pub fn assemble_mass(space: &FeSpace) -> SparseMatrix {
    let mesh = space.mesh();
    let locals: Vec<_> = (0..mesh.num_triangles())
        .map(|t| Element::new(mesh, t).mass())
        .collect();
    assemble_elements(space, &locals).symmetrized()
}

/// `int g phi_i` for every interior DOF.
pub fn assemble_load(space: &FeSpace, g: &dyn ScalarField, quad: &QuadratureRule) -> Vec<f64> {
    let mesh = space.mesh();
    let mut load = vec![0.0; space.dim()];
    for t in 0..mesh.num_triangles() {
        let el = Element::new(mesh, t);
        let dofs = space.element_dofs(t);
        for (x, w, b) in el.quadrature(quad) {
            let gx = g.eval(x) * w;
            for (i, d) in dofs.iter().enumerate() {
                if let Some(d) = d {
                    load[*d] += gx * b[i];
                }
            }
        }
    }
    load
}

/// Values of the coarse hats at each fine vertex, as `(coarse vertex, value)` lists.
///
/// Boundary coarse vertices are included; zero values are omitted.
pub fn coarse_hat_values(coarse: &TriMesh, fine: &TriMesh) -> Result<Vec<Vec<(usize, f64)>>> {
    let ancestors = fine.ancestor_map(coarse)?;
    Ok((0..fine.num_vertices())
        .map(|v| {
            let t = fine.triangles_of_vertex(v)[0];
            let el = Element::new(coarse, ancestors[t]);
            let x = fine.vertices()[v];
            let a = el.vertices[0];
            let offset = [x[0] - a[0], x[1] - a[1]];
            let b1 = el.grads[1][0] * offset[0] + el.grads[1][1] * offset[1];
            let b2 = el.grads[2][0] * offset[0] + el.grads[2][1] * offset[1];
            let bary = [1.0 - b1 - b2, b1, b2];
            coarse.triangles()[ancestors[t]]
                .iter()
                .zip(bary)
                .filter(|(_, b)| b.abs() > 1e-13)
                .map(|(&cv, b)| (cv, b))
                .collect()
        })
        .collect())
}

/// Prolongation `V_H -> V_h`: fine-dimension rows, coarse-dimension columns.
pub fn prolongation(coarse: &FeSpace, fine: &FeSpace) -> Result<SparseMatrix> {
    let values = coarse_hat_values(coarse.mesh(), fine.mesh())?;
    let triplets = fine.interior_vertices().iter().enumerate().flat_map(|(row, &v)| {
        values[v]
            .iter()
            .filter_map(|&(cv, w)| coarse.dof_of_vertex(cv).map(|c| (row, c, w)))
            .collect::<Vec<_>>()
    });
    Ok(SparseMatrix::from_triplets(
        fine.dim(),
        coarse.dim(),
        triplets.collect::<Vec<_>>(),
    ))
}

/// Returns `W[j, i] = int lambda_j^H lambda_i^h` (coarse rows, fine columns)
/// and `d[j] = int lambda_j^H`.
pub fn assemble_weighted_mass_and_volumes(
    coarse: &FeSpace,
    fine: &FeSpace,
    quad: &QuadratureRule,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let hats = coarse_hat_values(coarse.mesh(), fine.mesh())?;
    let mesh = fine.mesh();
    let mut triplets = Vec::new();
    let mut volumes = vec![0.0; coarse.dim()];
    for t in 0..mesh.num_triangles() {
        let el = Element::new(mesh, t);
        let tri = mesh.triangles()[t];
        let fine_dofs = fine.element_dofs(t);
        let mut coarse_dofs: Vec<usize> = tri
            .iter()
            .flat_map(|&v| hats[v].iter().filter_map(|&(cv, _)| coarse.dof_of_vertex(cv)))
            .collect();
        coarse_dofs.sort_unstable();
        coarse_dofs.dedup();
        for &cj in &coarse_dofs {
            let cv = coarse.interior_vertices()[cj];
            let nodal = tri.map(|v| hats[v].iter().find(|(c, _)| *c == cv).map_or(0.0, |(_, w)| *w));
            let mut row = [0.0; 3];
            for (_, w, b) in el.quadrature(quad) {
                let lam = nodal[0] * b[0] + nodal[1] * b[1] + nodal[2] * b[2];
                volumes[cj] += w * lam;
                for i in 0..3 {
                    row[i] += w * lam * b[i];
                }
            }
            for (i, d) in fine_dofs.iter().enumerate() {
                if let Some(d) = d {
                    triplets.push((cj, *d, row[i]));
                }
            }
        }
    }
    Ok((SparseMatrix::from_triplets(coarse.dim(), fine.dim(), triplets), volumes))
}

/// `|v|_{H^1}^2` restricted to triangle `t`.
pub fn element_h1_sq(space: &FeSpace, coeffs: &[f64], t: usize) -> f64 {
    let el = Element::new(space.mesh(), t);
    let g = el.gradient(&space.element_values(coeffs, t));
    el.area * (g[0] * g[0] + g[1] * g[1])
}

/// `||v||_{L^2}^2` restricted to triangle `t` (exact for P1).
pub fn element_l2_sq(space: &FeSpace, coeffs: &[f64], t: usize) -> f64 {
    let el = Element::new(space.mesh(), t);
    let v = space.element_values(coeffs, t);
    let m = el.mass();
    (0..3).map(|i| (0..3).map(|j| v[i] * m[i][j] * v[j]).sum::<f64>()).sum()
}

pub fn h1_seminorm(space: &FeSpace, coeffs: &[f64]) -> f64 {
    assert_eq!(coeffs.len(), space.dim());
    (0..space.mesh().num_triangles())
        .map(|t| element_h1_sq(space, coeffs, t))
        .sum::<f64>()
        .sqrt()
}

pub fn l2_norm(space: &FeSpace, coeffs: &[f64]) -> f64 {
    assert_eq!(coeffs.len(), space.dim());
    (0..space.mesh().num_triangles())
        .map(|t| element_l2_sq(space, coeffs, t))
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

impl SparseMatrix {
    /// Marks a matrix assembled from symmetric element matrices as symmetric,
    /// averaging away floating-point asymmetry from summation order.
    pub(crate) fn symmetrized(self) -> SparseMatrix {
        let t = self.transpose();
        let avg = self.add_scaled(&t, 1.0).scaled(0.5);
        avg.mark_symmetric()
    }
}
