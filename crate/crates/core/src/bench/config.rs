use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LodError, Result};
use crate::lod::BasisVariant;

/// Coarse layers for the coarse levels `2..=5`, and the fine-layer counts
/// realizing them on the level-6 fine grid.
pub const TABLE_LAYERS: [f64; 4] = [1.5, 2.0, 2.5, 3.0];
pub const TABLE_FINE_LAYERS: [usize; 4] = [24, 16, 12, 8];
const TABLE_FIRST_LEVEL: u32 = 2;
const TABLE_FINE_LEVEL: u32 = 6;

/// How the patch size is chosen for each coarse level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LayerRule {
    /// Looked up per coarse level from [`TABLE_LAYERS`], realized with
    /// [`TABLE_FINE_LAYERS`] when the fine level is 6.
    Table,
    /// One coarse-layer count per coarse level. When `fine` is given the
    /// patches are built from that many fine element layers instead.
    List { coarse: Vec<f64>, fine: Option<Vec<usize>> },
    /// `m ln(1/H)` rounded to the nearest half, at least 1.
    Multiplier(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = LodError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(LodError::InvalidConfig(format!("unknown format {s:?}"))),
        }
    }
}

/// Coefficient used by the decay study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayCoefficient {
    /// The oscillating benchmark coefficient.
    Benchmark,
    Identity,
    /// High-conductivity channels with the given contrast.
    Contrast(f64),
}

impl std::str::FromStr for DecayCoefficient {
    type Err = LodError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benchmark" => Ok(Self::Benchmark),
            "identity" => Ok(Self::Identity),
            _ => s
                .strip_prefix("contrast:")
                .and_then(|c| c.parse().ok())
                .map(Self::Contrast)
                .ok_or_else(|| LodError::InvalidConfig(format!("unknown coefficient {s:?}"))),
        }
    }
}

impl std::str::FromStr for BasisVariant {
    type Err = LodError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrector" => Ok(Self::Corrector),
            "unit-vector" | "unit_vector" => Ok(Self::UnitVector),
            _ => Err(LodError::InvalidConfig(format!("unknown basis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    /// Fine grid spacing `2^-fine_level`.
    pub fine_level: u32,
    /// Coarse grid spacings `2^-l`.
    pub coarse_levels: Vec<u32>,
    pub layers: LayerRule,
    pub quad_subdivision: usize,
    pub basis: BasisVariant,
    pub abstol: f64,
    pub reltol: f64,
    pub max_iters: usize,
    /// Drops the nonlinear term.
    pub linear: bool,
    pub decay_coefficient: DecayCoefficient,
    /// Coarse level `2^-l` of the decay study.
    pub decay_level: u32,
    /// Number of coarse nodes sampled by the decay study.
    pub decay_nodes: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            fine_level: 6,
            coarse_levels: vec![2, 3, 4, 5],
            layers: LayerRule::Table,
            quad_subdivision: 4,
            basis: BasisVariant::Corrector,
            abstol: 1e-10,
            reltol: 0.0,
            max_iters: 50,
            linear: false,
            decay_coefficient: DecayCoefficient::Benchmark,
            decay_level: 3,
            decay_nodes: 8,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| LodError::InvalidConfig(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| LodError::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentConfig {
    /// Sets one `key = value` entry. Keys use underscores; dashes are accepted.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "epsilon" => self.epsilon = parse_one(&key, value)?,
            "fine_level" => self.fine_level = parse_one(&key, value)?,
            "coarse_levels" => self.coarse_levels = parse_list(&key, value)?,
            "layers" => {
                self.layers = LayerRule::List {
                    coarse: parse_list(&key, value)?,
                    fine: None,
                }
            }
            "fine_layers" => {
                let fine = parse_list(&key, value)?;
                match &mut self.layers {
                    LayerRule::List { fine: f, .. } => *f = Some(fine),
                    _ => {
                        return Err(LodError::InvalidConfig(
                            "fine_layers needs an explicit layer list".into(),
                        ))
                    }
                }
            }
            "layer_multiplier" => self.layers = LayerRule::Multiplier(parse_one(&key, value)?),
            "quad_subdiv" | "quad_subdivision" => self.quad_subdivision = parse_one(&key, value)?,
            "basis" => self.basis = value.parse()?,
            "abstol" => self.abstol = parse_one(&key, value)?,
            "reltol" => self.reltol = parse_one(&key, value)?,
            "max_iters" => self.max_iters = parse_one(&key, value)?,
            "linear" => self.linear = parse_one(&key, value)?,
            "decay_coefficient" => self.decay_coefficient = value.parse()?,
            "decay_level" => self.decay_level = parse_one(&key, value)?,
            "decay_nodes" => self.decay_nodes = parse_one(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            _ => return Err(LodError::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LodError::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Checks shared by every study.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LodError::InvalidConfig(m));
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.fine_level > 10 {
            return bad(format!("fine level {} is too large", self.fine_level));
        }
        if self.quad_subdivision == 0 {
            return bad("quadrature subdivision must be positive".into());
        }
        if !(self.abstol > 0.0) || !(self.reltol >= 0.0) || self.max_iters == 0 {
            return bad(format!(
                "Newton tolerances abstol={} reltol={} max_iters={}",
                self.abstol, self.reltol, self.max_iters
            ));
        }
        Ok(())
    }

    /// Checks of the decay study on top of [`Self::validate`].
    pub fn validate_decay(&self) -> Result<()> {
        self.validate()?;
        if self.decay_level == 0 || self.decay_level >= self.fine_level {
            return Err(LodError::InvalidConfig(format!(
                "decay level {} must be between 1 and the fine level {}",
                self.decay_level, self.fine_level
            )));
        }
        Ok(())
    }

    /// Checks of the coarse levels and layer rule on top of [`Self::validate`].
    pub fn validate_levels(&self) -> Result<()> {
        self.validate()?;
        let bad = |m: String| Err(LodError::InvalidConfig(m));
        if self.coarse_levels.is_empty() {
            return bad("no coarse levels".into());
        }
        if let Some(l) = self.coarse_levels.iter().find(|&&l| l == 0 || l >= self.fine_level) {
            return bad(format!(
                "coarse level {l} must be between 1 and the fine level {}",
                self.fine_level
            ));
        }
        match &self.layers {
            LayerRule::Table => {
                if let Some(l) = self.coarse_levels.iter().find(|&&l| table_index(l).is_none()) {
                    return bad(format!("no tabulated layer count for coarse level {l}; pass layers"));
                }
            }
            LayerRule::List { coarse, fine } => {
                if coarse.len() != self.coarse_levels.len() {
                    return bad(format!(
                        "{} layer counts for {} coarse levels",
                        coarse.len(),
                        self.coarse_levels.len()
                    ));
                }
                if let Some(k) = coarse.iter().find(|k| !(**k >= 1.0) || (2.0 * **k).fract() != 0.0) {
                    return bad(format!("layer count {k} must be >= 1 in steps of 0.5"));
                }
                if let Some(f) = fine {
                    if f.len() != coarse.len() || f.contains(&0) {
                        return bad("fine layer counts must be positive, one per coarse level".into());
                    }
                }
            }
            LayerRule::Multiplier(m) => {
                if !(*m > 0.0) {
                    return bad(format!("layer multiplier must be positive, got {m}"));
                }
            }
        }
        Ok(())
    }

    /// Coarse and optional fine layer counts for the `i`-th coarse level.
    pub fn layers_for(&self, i: usize) -> (f64, Option<usize>) {
        match &self.layers {
            LayerRule::Table => {
                let t = table_index(self.coarse_levels[i]).expect("validated coarse level");
                let fine = (self.fine_level == TABLE_FINE_LEVEL).then_some(TABLE_FINE_LAYERS[t]);
                (TABLE_LAYERS[t], fine)
            }
            LayerRule::List { coarse, fine } => (coarse[i], fine.as_ref().map(|f| f[i])),
            LayerRule::Multiplier(m) => {
                let h = 0.5f64.powi(self.coarse_levels[i] as i32);
                (multiplier_layers(*m, h), None)
            }
        }
    }
}

fn table_index(level: u32) -> Option<usize> {
    let i = level.checked_sub(TABLE_FIRST_LEVEL)? as usize;
    (i < TABLE_LAYERS.len()).then_some(i)
}

/// `m ln(1/H)` rounded to the nearest half, at least 1.
pub fn multiplier_layers(m: f64, h: f64) -> f64 {
    ((2.0 * m * (1.0 / h).ln()).round() / 2.0).max(1.0)
}
