use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::lod::corrector::{Corrector, LodSetup, PatchRule};

/// Tails below this relative size are treated as roundoff and left out of the fit.
pub const FIT_FLOOR: f64 = 1e-12;

/// Tail of a global corrector outside growing patches.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    /// Coarse DOF index.
    pub node: usize,
    /// `(k, ||A^{1/2} grad phi||_{Omega \ omega_k} / ||A^{1/2} grad phi||_Omega)`.
    pub tails: Vec<(usize, f64)>,
    pub fit: Option<DecayFit>,
}

/// Least-squares line through `(k, ln tail)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// `exp(slope)`: tail reduction per coarse layer.
    pub theta: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Tail ratios for `k = 1, 2, ...` up to `k_max`, or until the patch covers
/// the domain when `k_max` is `None`.
pub fn decay_profile(setup: &LodSetup, global: &Corrector, k_max: Option<usize>) -> Result<DecayProfile> {
    let mut tails = Vec::new();
    let limit = k_max.unwrap_or(usize::MAX);
    let mut k = 1;
    while k <= limit {
        let patch = setup.patch(global.node, PatchRule::CoarseLayers(k as f64))?;
        let covered = patch.covers(setup.fine().mesh());
        tails.push((k, if covered { 0.0 } else { setup.tail_ratio(global, &patch) }));
        if covered && k_max.is_none() {
            break;
        }
        k += 1;
    }
    let fit = fit_decay(&tails);
    Ok(DecayProfile {
        node: global.node,
        tails,
        fit,
    })
}

/// Fits `ln tail = slope k + intercept` over tails above [`FIT_FLOOR`].
/// Needs at least two points.
pub fn fit_decay(tails: &[(usize, f64)]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = tails
        .iter()
        .filter(|(_, t)| *t > FIT_FLOOR)
        .map(|&(k, t)| (k as f64, t.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(DecayFit {
        slope,
        intercept,
        theta: slope.exp(),
        r_squared,
        points: pts.len(),
    })
}

/// CSV with columns `node,k,tail_energy,fitted_theta`.
pub fn write_decay_csv<W: Write>(profiles: &[DecayProfile], mut out: W) -> Result<()> {
    writeln!(out, "node,k,tail_energy,fitted_theta")?;
    for p in profiles {
        let theta = p.fit.map(|f| format!("{:.5e}", f.theta)).unwrap_or_default();
        for (k, t) in &p.tails {
            writeln!(out, "{},{k},{t:.5e},{theta}", p.node)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fits_perfectly() {
        let tails: Vec<(usize, f64)> = (1..6).map(|k| (k, 0.3f64.powi(k as i32))).collect();
        let fit = fit_decay(&tails).unwrap();
        assert!((fit.theta - 0.3).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_excluded() {
        let fit = fit_decay(&[(1, 0.5), (2, 0.25), (3, 0.0)]).unwrap();
        assert_eq!(fit.points, 2);
        assert!(fit_decay(&[(1, 0.5), (2, 0.0)]).is_none());
    }

    #[test]
    fn csv_layout() {
        let p = DecayProfile {
            node: 3,
            tails: vec![(1, 0.5), (2, 0.0)],
            fit: None,
        };
        let mut buf = Vec::new();
        write_decay_csv(&[p], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "node,k,tail_energy,fitted_theta\n3,1,5.00000e-1,\n3,2,0.00000e0,\n");
    }
}
