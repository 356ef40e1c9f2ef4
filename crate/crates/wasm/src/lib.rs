//! Browser bindings: one multiscale basis function, the decay of a global
//! corrector, and a full multiscale solve of the benchmark problem.
//!
//! Every entry point takes the coarse and fine levels (`H = 2^-coarse`,
//! `h = 2^-fine`) and returns values at all fine vertices in row-major order,
//! `(n + 1)^2` of them for `n = 2^fine`.

use lod_core::bench::{diffusion, linear_test_problem, test_problem, Hierarchy};
use lod_core::fem::DiffusionField;
use lod_core::lod::{decay_profile, LodSetup, PatchRule};
use lod_core::newton::{damped_newton, FineOperator, GalerkinSystem, NewtonConfig};
use lod_core::{LodError, QuadratureRule, Result};
use wasm_bindgen::prelude::*;

/// Finest level the demo accepts; level 6 already takes seconds per solve.
pub const MAX_FINE_LEVEL: u32 = 6;

fn quadrature() -> QuadratureRule {
    QuadratureRule::composite(2)
}

fn hierarchy(coarse_level: u32, fine_level: u32) -> Result<Hierarchy> {
    if coarse_level == 0 || coarse_level >= fine_level || fine_level > MAX_FINE_LEVEL {
        return Err(LodError::InvalidConfig(format!(
            "need 1 <= coarse level < fine level <= {MAX_FINE_LEVEL}, got {coarse_level} and {fine_level}"
        )));
    }
    Hierarchy::new(&[coarse_level], fine_level)
}

fn setup(hier: &Hierarchy, coefficient: &dyn DiffusionField) -> Result<LodSetup> {
    LodSetup::new(&hier.coarse[0], &hier.fine, coefficient, &quadrature())
}

/// Coarse DOF whose vertex is closest to `(x, y)`.
fn nearest_node(setup: &LodSetup, x: f64, y: f64) -> usize {
    let coarse = setup.coarse();
    let verts = coarse.mesh().vertices();
    (0..coarse.dim())
        .min_by(|&a, &b| {
            let d = |j: usize| {
                let p = verts[coarse.interior_vertices()[j]];
                (p[0] - x).powi(2) + (p[1] - y).powi(2)
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap_or(0)
}

/// Vertex values on the fine grid plus a short description.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Field {
    subdivisions: usize,
    values: Vec<f64>,
    node: usize,
    summary: String,
}

#[wasm_bindgen]
impl Field {
    /// Fine cells per side.
    #[wasm_bindgen(getter)]
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Coarse DOF the field belongs to.
    #[wasm_bindgen(getter)]
    pub fn node(&self) -> usize {
        self.node
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// `lambda_j - phi_j` for the coarse node nearest to `(x, y)` on `layers` coarse layers.
pub fn basis_field(coarse_level: u32, fine_level: u32, layers: f64, epsilon: f64, x: f64, y: f64) -> Result<Field> {
    let hier = hierarchy(coarse_level, fine_level)?;
    let setup = setup(&hier, &diffusion(epsilon))?;
    let j = nearest_node(&setup, x, y);
    let rule = PatchRule::CoarseLayers(layers);
    let patch = setup.patch(j, rule)?;
    let corrector = setup.solve_corrector(j, &patch, rule)?;
    let phi = corrector.to_fine(setup.fine().dim());
    let column: Vec<f64> = setup.coarse_hat(j).iter().zip(&phi).map(|(l, p)| l - p).collect();
    Ok(Field {
        subdivisions: hier.fine.mesh().subdivisions(),
        values: hier.fine.to_vertex_values(&column),
        node: j,
        summary: format!(
            "node {j}: {} fine triangles in the patch, corrector energy {:.3e}",
            patch.fine_triangles.len(),
            corrector.energy
        ),
    })
}

/// Global corrector of the node nearest to `(x, y)` and its relative tail
/// outside `omega_{j,k}` for `k = 1, 2, ...`.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Decay {
    field: Field,
    tails: Vec<f64>,
    theta: f64,
}

#[wasm_bindgen]
impl Decay {
    #[wasm_bindgen(getter)]
    pub fn field(&self) -> Field {
        self.field.clone()
    }

    /// Tail ratio for `k = 1..=tails.len()`.
    #[wasm_bindgen(getter)]
    pub fn tails(&self) -> Vec<f64> {
        self.tails.clone()
    }

    /// Fitted reduction per layer; `NaN` when fewer than two tails are nonzero.
    #[wasm_bindgen(getter)]
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

pub fn corrector_decay(coarse_level: u32, fine_level: u32, epsilon: f64, x: f64, y: f64) -> Result<Decay> {
    let hier = hierarchy(coarse_level, fine_level)?;
    let setup = setup(&hier, &diffusion(epsilon))?;
    let j = nearest_node(&setup, x, y);
    let patch = setup.patch(j, PatchRule::Global)?;
    let global = setup.solve_corrector(j, &patch, PatchRule::Global)?;
    let profile = decay_profile(&setup, &global, None)?;
    let theta = profile.fit.map_or(f64::NAN, |f| f.theta);
    Ok(Decay {
        field: Field {
            subdivisions: hier.fine.mesh().subdivisions(),
            values: hier.fine.to_vertex_values(&global.to_fine(setup.fine().dim())),
            node: j,
            summary: format!("node {j}: fitted theta {theta:.3}"),
        },
        tails: profile.tails.iter().map(|t| t.1).collect(),
        theta,
    })
}

/// Multiscale solution of the benchmark problem; `summary` reports the
/// Newton history.
pub fn multiscale_solve(coarse_level: u32, fine_level: u32, layers: f64, epsilon: f64, linear: bool) -> Result<Field> {
    let hier = hierarchy(coarse_level, fine_level)?;
    let problem = if linear {
        linear_test_problem(epsilon)
    } else {
        test_problem(epsilon)
    };
    let setup = setup(&hier, problem.diffusion.as_ref())?;
    let fine = FineOperator::with_stiffness(hier.fine.clone(), problem, quadrature(), setup.stiffness().clone());
    let basis = setup.build_ms_basis(PatchRule::CoarseLayers(layers))?;
    let system = GalerkinSystem::new(&fine, basis.matrix())?;
    let newton = damped_newton(&system, &NewtonConfig::default())?;
    let residuals: Vec<String> = newton.residual_norms.iter().map(|r| format!("{r:.2e}")).collect();
    Ok(Field {
        subdivisions: hier.fine.mesh().subdivisions(),
        values: hier.fine.to_vertex_values(&system.to_fine(&newton.alpha)),
        node: usize::MAX,
        summary: format!(
            "{} coarse DOFs, {} Newton iterations, |G|: {}",
            system.dim(),
            newton.iterations,
            residuals.join(", ")
        ),
    })
}

fn js(e: LodError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = basisFunction)]
pub fn basis_function_js(
    coarse_level: u32,
    fine_level: u32,
    layers: f64,
    epsilon: f64,
    x: f64,
    y: f64,
) -> std::result::Result<Field, JsError> {
    basis_field(coarse_level, fine_level, layers, epsilon, x, y).map_err(js)
}

#[wasm_bindgen(js_name = correctorDecay)]
pub fn corrector_decay_js(
    coarse_level: u32,
    fine_level: u32,
    epsilon: f64,
    x: f64,
    y: f64,
) -> std::result::Result<Decay, JsError> {
    corrector_decay(coarse_level, fine_level, epsilon, x, y).map_err(js)
}

#[wasm_bindgen(js_name = solve)]
pub fn solve_js(
    coarse_level: u32,
    fine_level: u32,
    layers: f64,
    epsilon: f64,
    linear: bool,
) -> std::result::Result<Field, JsError> {
    multiscale_solve(coarse_level, fine_level, layers, epsilon, linear).map_err(js)
}
