/// Composite triangle quadrature in barycentric coordinates.
///
/// The reference triangle is split into `s^2` congruent subtriangles and the
/// three-point degree-2 Gauss rule is applied on each. Weights sum to the
/// reference area `1/2`; multiply by `2 |T|` to integrate over a physical
/// triangle `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    subdivision: usize,
}

const GAUSS3: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

impl QuadratureRule {
    pub fn gauss3() -> Self {
        Self::composite(1)
    }

    pub fn composite(subdivision: usize) -> Self {
        let s = subdivision.max(1);
        let sf = s as f64;
        let w = 0.5 / (3.0 * (s * s) as f64);
        let mut points = Vec::with_capacity(3 * s * s);
        // Subtriangle vertices given in reference coordinates (xi, eta).
        let mut push = |corners: [[f64; 2]; 3]| {
            for g in GAUSS3 {
                let xi = g.iter().zip(&corners).map(|(b, c)| b * c[0]).sum::<f64>();
                let eta = g.iter().zip(&corners).map(|(b, c)| b * c[1]).sum::<f64>();
                points.push([1.0 - xi - eta, xi, eta]);
            }
        };
        for i in 0..s {
            for j in 0..s - i {
                let (x0, y0) = (i as f64 / sf, j as f64 / sf);
                let d = 1.0 / sf;
                push([[x0, y0], [x0 + d, y0], [x0, y0 + d]]);
                if i + j + 1 < s {
                    push([[x0 + d, y0], [x0 + d, y0 + d], [x0, y0 + d]]);
                }
            }
        }
        let weights = vec![w; points.len()];
        Self {
            points,
            weights,
            subdivision: s,
        }
    }

    /// Barycentric coordinates of the points.
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn subdivision(&self) -> usize {
        self.subdivision
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for QuadratureRule {
    /// Subdivision factor 4, the default for oscillating coefficients.
    fn default() -> Self {
        Self::composite(4)
    }
}
