//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//!
//! [grid]
//! half_length = 10.0
//! step = 0.1
//! weights = [0.0, 0.5, 1.0]
//!
//! [glue]
//! profile = "exponential"
//! r = 0.5
//!
//! [tolerances]
//! roundtrip = 1e-10
//! ```
//!
//! Every key is optional. Unknown keys are rejected with their location.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scspace::{DomainSpec, SpaceSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed TOML or an unknown key; the message carries line and column.
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_length: f64,
    pub step: f64,
    pub weights: Vec<f64>,
    pub base_order: usize,
    pub target_dim: usize,
    pub cylinder: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_length: 10.0, step: 0.1, weights: vec![0.0, 0.5, 1.0], base_order: 0, target_dim: 1, cylinder: false }
    }
}

impl GridConfig {
    pub fn space_spec(&self) -> SpaceSpec {
        let (half_length, step) = (self.half_length, self.step);
        SpaceSpec {
            domain: if self.cylinder {
                DomainSpec::Cylinder { half_length, step }
            } else {
                DomainSpec::Line { half_length, step }
            },
            base_order: self.base_order,
            weights: self.weights.clone(),
            target_dim: self.target_dim,
            weight_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlueConfig {
    pub profile: String,
    pub r: f64,
    /// Round the gluing length to the grid instead of interpolating.
    pub round_to_grid: bool,
}

impl Default for GlueConfig {
    fn default() -> Self {
        Self { profile: "exponential".into(), r: 0.5, round_to_grid: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub roundtrip: f64,
    pub idempotence: f64,
    pub newton: f64,
    pub germ: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { roundtrip: 1e-10, idempotence: 1e-9, newton: 1e-12, germ: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GermConfig {
    pub name: String,
    pub dim: usize,
    pub levels: usize,
    pub parameter: Vec<f64>,
    pub max_iter: usize,
}

impl Default for GermConfig {
    fn default() -> Self {
        Self { name: "sine".into(), dim: 2, levels: 3, parameter: vec![0.2, -0.1], max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorseConfig {
    pub problem: String,
    /// Gluing parameters for the pregluing sweep (chain problem only).
    pub sweep: Vec<f64>,
}

impl Default for MorseConfig {
    fn default() -> Self {
        Self { problem: "double-well".into(), sweep: vec![0.3, 0.2, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub grid: GridConfig,
    pub glue: GlueConfig,
    pub tolerances: Tolerances,
    pub germ: GermConfig,
    pub morse: MorseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: "out".into(),
            grid: GridConfig::default(),
            glue: GlueConfig::default(),
            tolerances: Tolerances::default(),
            germ: GermConfig::default(),
            morse: MorseConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML text; equal configs give equal text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: &str| Err(ConfigError::Invalid { key: key.into(), reason: reason.into() });
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.roundtrip", t.roundtrip),
            ("tolerances.idempotence", t.idempotence),
            ("tolerances.newton", t.newton),
        ] {
            if !(v > 0.0) {
                return bad(key, "must be > 0");
            }
        }
        // 0 means "run to the floating-point fixed point"
        if !(t.germ >= 0.0) {
            return bad("tolerances.germ", "must be ≥ 0");
        }
        if !(self.grid.half_length > 0.0) {
            return bad("grid.half_length", "must be > 0");
        }
        if !(self.grid.step > 0.0) {
            return bad("grid.step", "must be > 0");
        }
        if self.grid.weights.is_empty() {
            return bad("grid.weights", "at least one weight is required");
        }
        if !(self.glue.r > 0.0 && self.glue.r <= 1.0) {
            return bad("glue.r", "must lie in (0, 1]");
        }
        if crate::splicing::GluingProfile::from_name(&self.glue.profile).is_none() {
            return bad("glue.profile", "expected `exponential` or `logarithmic`");
        }
        if self.germ.levels == 0 || self.germ.dim == 0 {
            return bad("germ", "dim and levels must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = RunConfig::from_toml("seed = 7\n[glue]\nr = 0.25\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.glue.r, 0.25);
        assert_eq!(RunConfig::from_toml(&cfg.canonical()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_reports_location() {
        let err = RunConfig::from_toml("seed = 1\n[grid]\nstep = 0.1\nbogus = 3\n").unwrap_err();
        let ConfigError::Parse(msg) = err else { panic!("{err:?}") };
        assert!(msg.contains("bogus") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn tolerances_must_be_positive() {
        let err = RunConfig::from_toml("[tolerances]\nroundtrip = 0.0\n").unwrap_err();
        assert_eq!(err, ConfigError::Invalid { key: "tolerances.roundtrip".into(), reason: "must be > 0".into() });
    }
}
