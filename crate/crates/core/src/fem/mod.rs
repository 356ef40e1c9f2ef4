//! P1 finite elements: quadrature, sparse storage, assembly and norms.

mod assembly;
mod quadrature;
mod space;
mod sparse;

pub use assembly::{
    assemble_elements, assemble_load, assemble_mass, assemble_stiffness, assemble_weighted_mass_and_volumes,
    coarse_hat_values, element_h1_sq, element_l2_sq, element_stiffness, h1_seminorm, identity_diffusion, l2_norm,
    prolongation, DiffusionField, Element, ElementMatrix, Mat2, ScalarField,
};
pub use quadrature::QuadratureRule;
pub use space::FeSpace;
pub use sparse::SparseMatrix;
