//! Nested Friedrichs–Keller triangulations of the unit square and nodal patches.
//!
//! Every mesh with `n` subdivisions numbers its vertices row by row
//! (`iy * (n + 1) + ix`) and splits each grid cell along the diagonal from
//! its lower-left to its upper-right corner. Cell `(ix, iy)` owns triangles
//! `2 * (iy * n + ix)` (below the diagonal) and `2 * (iy * n + ix) + 1`
//! (above it). Uniform red refinement of such a mesh is again a
//! Friedrichs–Keller mesh, so refinement only has to record the genealogy.

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{LodError, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone)]
pub struct TriMesh {
    n: usize,
    level: u32,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    /// `genealogy[0]` maps triangles to their parents one level up,
    /// `genealogy[1]` maps those parents to theirs, and so on.
    genealogy: Vec<Vec<usize>>,
    vertex_to_triangles: Vec<Vec<usize>>,
}

/// Structured uniform triangulation of `(0,1)^2` with `n` cells per side.
pub fn build_unit_square_mesh(n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(LodError::InvalidMeshSize);
    }
    Ok(TriMesh::structured(n, 0, Vec::new()))
}

/// Refines `mesh` uniformly `levels` times, halving the grid spacing each time.
pub fn refine_uniform(mesh: &TriMesh, levels: u32) -> Result<TriMesh> {
    if levels == 0 {
        return Err(LodError::InvalidRefinement);
    }
    let mut current = mesh.clone();
    for _ in 0..levels {
        let n = current.n * 2;
        let parents = (0..2 * n * n)
            .map(|t| {
                let cell = t / 2;
                let (ix, iy) = (cell % n, cell / n);
                // Centroid of the child in coarse grid units.
                let (a, b) = if t % 2 == 0 {
                    ((3 * ix + 2) as f64 / 3.0, (3 * iy + 1) as f64 / 3.0)
                } else {
                    ((3 * ix + 1) as f64 / 3.0, (3 * iy + 2) as f64 / 3.0)
                };
                let (a, b) = (a / 2.0, b / 2.0);
                let (cx, cy) = (a.floor() as usize, b.floor() as usize);
                let upper = b - cy as f64 > a - cx as f64;
                2 * (cy * current.n + cx) + usize::from(upper)
            })
            .collect::<Vec<_>>();
        let mut genealogy = Vec::with_capacity(current.genealogy.len() + 1);
        genealogy.push(parents);
        genealogy.extend(current.genealogy.iter().cloned());
        current = TriMesh::structured(n, current.level + 1, genealogy);
    }
    Ok(current)
}

impl TriMesh {
    fn structured(n: usize, level: u32, genealogy: Vec<Vec<usize>>) -> Self {
        let np = n + 1;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(np * np);
        let mut boundary = Vec::with_capacity(np * np);
        for iy in 0..np {
            for ix in 0..np {
                // Exact for dyadic n; endpoints are exactly 0 and 1 for every n.
                let x = if ix == n { 1.0 } else { ix as f64 * h };
                let y = if iy == n { 1.0 } else { iy as f64 * h };
                vertices.push([x, y]);
                boundary.push(x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for iy in 0..n {
            for ix in 0..n {
                let v00 = iy * np + ix;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let mut vertex_to_triangles = vec![Vec::new(); np * np];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_to_triangles[v].push(t);
            }
        }
        Self {
            n,
            level,
            vertices,
            triangles,
            boundary,
            genealogy,
            vertex_to_triangles,
        }
    }

    /// Number of grid cells per side.
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Grid spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Element diameter `sqrt(2)/n`.
    pub fn diameter(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.n as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| !self.boundary[v])
    }

    pub fn triangles_of_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_to_triangles[v]
    }

    /// Parent triangle indices one level up, if this mesh came from refinement.
    pub fn parent_map(&self) -> Option<&[usize]> {
        self.genealogy.first().map(Vec::as_slice)
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Number of refinement steps separating `coarse` from `self`.
    pub fn refinement_depth(&self, coarse: &TriMesh) -> Result<u32> {
        if coarse.n == 0 || !self.n.is_multiple_of(coarse.n) || !(self.n / coarse.n).is_power_of_two() {
            return Err(LodError::NotNested(format!(
                "{} subdivisions is not a dyadic refinement of {}",
                self.n, coarse.n
            )));
        }
        Ok((self.n / coarse.n).trailing_zeros())
    }

    /// For each triangle of `self`, the index of the `coarse` triangle containing it.
    pub fn ancestor_map(&self, coarse: &TriMesh) -> Result<Vec<usize>> {
        let depth = self.refinement_depth(coarse)? as usize;
        if depth > self.genealogy.len() {
            return Err(LodError::NotNested(format!(
                "mesh records {} refinement levels, {depth} required",
                self.genealogy.len()
            )));
        }
        let mut map: Vec<usize> = (0..self.triangles.len()).collect();
        for step in &self.genealogy[..depth] {
            for t in map.iter_mut() {
                *t = step[*t];
            }
        }
        Ok(map)
    }

    /// Index of the vertex of `self` located at vertex `v` of `coarse`.
    pub fn vertex_of_coarse(&self, coarse: &TriMesh, v: usize) -> usize {
        let r = self.n / coarse.n;
        let np = coarse.n + 1;
        let (ix, iy) = (v % np, v / np);
        iy * r * (self.n + 1) + ix * r
    }

    /// Triangles sharing at least one vertex with `tris`, including `tris` itself.
    pub fn grow_layer(&self, tris: &BTreeSet<usize>) -> BTreeSet<usize> {
        let verts: BTreeSet<usize> = tris.iter().flat_map(|&t| self.triangles[t]).collect();
        verts
            .iter()
            .flat_map(|&v| self.vertex_to_triangles[v].iter().copied())
            .collect()
    }

    /// Plain-text dump: a header line, vertices as `x y`, then triangles as `i j k`.
    pub fn write_node_element<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.vertices.len(), self.triangles.len())?;
        for [x, y] in &self.vertices {
            writeln!(out, "{x} {y}")?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(out, "{a} {b} {c}")?;
        }
        Ok(())
    }
}

/// Fine-mesh realization of a nodal patch around a coarse vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Coarse vertex index `z_j`.
    pub center_vertex: usize,
    pub coarse_layers: f64,
    /// Patch extent measured in fine element layers around the center.
    pub fine_layers: usize,
    /// Sorted fine triangle indices.
    pub fine_triangles: Vec<usize>,
    /// Sorted fine vertices strictly inside the patch and off the domain boundary.
    pub interior_fine_vertices: Vec<usize>,
    /// Sorted interior coarse vertices whose hat support overlaps the patch.
    pub coarse_nodes_touching: Vec<usize>,
}

impl Patch {
    pub fn contains_triangle(&self, t: usize) -> bool {
        self.fine_triangles.binary_search(&t).is_ok()
    }

    pub fn covers(&self, fine: &TriMesh) -> bool {
        self.fine_triangles.len() == fine.num_triangles()
    }
}

fn check_center(coarse: &TriMesh, j: usize) -> Result<()> {
    if j >= coarse.num_vertices() || coarse.is_boundary(j) {
        return Err(LodError::NotInteriorVertex(j));
    }
    Ok(())
}

/// Nodal patch `omega_{j,k}` with `k >= 1` in steps of one half.
///
/// Integer `k` uses the recursive coarse-layer definition. For `k = m + 1/2`
/// the coarse patch `omega_{j,m}` is extended by `round(H / (2h))` layers of
/// fine triangles.
pub fn nodal_patch(coarse: &TriMesh, fine: &TriMesh, j: usize, k: f64) -> Result<Patch> {
    check_center(coarse, j)?;
    let doubled = 2.0 * k;
    if !(k >= 1.0) || doubled.fract() != 0.0 {
        return Err(LodError::InvalidLayers(k));
    }
    let ratio = fine.subdivisions() / coarse.subdivisions();
    let ancestors = fine.ancestor_map(coarse)?;
    let whole = k.floor() as usize;

    let mut coarse_set: BTreeSet<usize> = coarse.triangles_of_vertex(j).iter().copied().collect();
    for _ in 1..whole {
        coarse_set = coarse.grow_layer(&coarse_set);
    }
    let mut fine_set: BTreeSet<usize> = (0..fine.num_triangles())
        .filter(|t| coarse_set.contains(&ancestors[*t]))
        .collect();
    let mut fine_layers = whole * ratio;
    if doubled as usize % 2 == 1 {
        let extra = (0.5 * ratio as f64).round() as usize;
        for _ in 0..extra {
            fine_set = fine.grow_layer(&fine_set);
        }
        fine_layers += extra;
    }
    Ok(finish_patch(coarse, fine, &ancestors, j, k, fine_layers, fine_set))
}

/// Patch made of `fine_layers` fine element layers around coarse vertex `j`.
///
/// `coarse_layers` is recorded as `fine_layers * h / H`.
pub fn fine_layer_patch(coarse: &TriMesh, fine: &TriMesh, j: usize, fine_layers: usize) -> Result<Patch> {
    check_center(coarse, j)?;
    if fine_layers == 0 {
        return Err(LodError::InvalidLayers(0.0));
    }
    let ancestors = fine.ancestor_map(coarse)?;
    let center = fine.vertex_of_coarse(coarse, j);
    let mut fine_set: BTreeSet<usize> = fine.triangles_of_vertex(center).iter().copied().collect();
    for _ in 1..fine_layers {
        fine_set = fine.grow_layer(&fine_set);
    }
    let ratio = (fine.subdivisions() / coarse.subdivisions()) as f64;
    Ok(finish_patch(
        coarse,
        fine,
        &ancestors,
        j,
        fine_layers as f64 / ratio,
        fine_layers,
        fine_set,
    ))
}

fn finish_patch(
    coarse: &TriMesh,
    fine: &TriMesh,
    ancestors: &[usize],
    j: usize,
    coarse_layers: f64,
    fine_layers: usize,
    fine_set: BTreeSet<usize>,
) -> Patch {
    let patch_vertices: BTreeSet<usize> = fine_set.iter().flat_map(|&t| fine.triangles()[t]).collect();
    let interior_fine_vertices = patch_vertices
        .into_iter()
        .filter(|&v| !fine.is_boundary(v) && fine.triangles_of_vertex(v).iter().all(|t| fine_set.contains(t)))
        .collect();
    let coarse_nodes_touching = fine_set
        .iter()
        .flat_map(|&t| coarse.triangles()[ancestors[t]])
        .filter(|&v| !coarse.is_boundary(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Patch {
        center_vertex: j,
        coarse_layers,
        fine_layers,
        fine_triangles: fine_set.into_iter().collect(),
        interior_fine_vertices,
        coarse_nodes_touching,
    }
}
