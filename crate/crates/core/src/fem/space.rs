use std::sync::Arc;

use crate::mesh::{Point, TriMesh};

/// P1 conforming space with homogeneous Dirichlet conditions: one degree of
/// freedom per interior vertex, numbered in vertex order.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<TriMesh>,
    interior: Vec<usize>,
    dof_of_vertex: Vec<Option<usize>>,
}

impl FeSpace {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let interior: Vec<usize> = mesh.interior_vertices().collect();
        let mut dof_of_vertex = vec![None; mesh.num_vertices()];
        for (d, &v) in interior.iter().enumerate() {
            dof_of_vertex[v] = Some(d);
        }
        Self {
            mesh,
            interior,
            dof_of_vertex,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.interior.len()
    }

    /// Vertex index of each degree of freedom.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    /// Degrees of freedom of the three vertices of triangle `t`.
    pub fn element_dofs(&self, t: usize) -> [Option<usize>; 3] {
        self.mesh.triangles()[t].map(|v| self.dof_of_vertex[v])
    }

    /// Nodal values of triangle `t` (zero at boundary vertices).
    pub fn element_values(&self, coeffs: &[f64], t: usize) -> [f64; 3] {
        self.element_dofs(t).map(|d| d.map_or(0.0, |d| coeffs[d]))
    }

    /// Expands interior coefficients to all vertices.
    pub fn to_vertex_values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.dof_of_vertex
            .iter()
            .map(|d| d.map_or(0.0, |d| coeffs[d]))
            .collect()
    }

    /// Interior nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.interior.iter().map(|&v| f(self.mesh.vertices()[v])).collect()
    }
}
