//! Localized orthogonal decomposition for semilinear elliptic multiscale problems.
//!
//! The crate builds nested structured triangulations of the unit square,
//! assembles P1 finite-element operators, constructs the weighted Clément
//! interpolation and the patch-localized multiscale basis, and solves the
//! resulting nonlinear Galerkin problems with a damped Newton method.

// NaN-rejecting `!(x > 0.0)` checks and indexed numeric loops are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod clement;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod lod;
pub mod mesh;
pub mod newton;

pub use clement::{build_clement, ClementOperator};
pub use error::{LodError, Result};
pub use fem::{FeSpace, QuadratureRule, SparseMatrix};
pub use mesh::{build_unit_square_mesh, nodal_patch, refine_uniform, Patch, TriMesh};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order is always `0..n`.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
