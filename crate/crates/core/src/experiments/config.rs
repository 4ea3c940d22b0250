//! Experiment configuration: TOML schema, validation and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ld::ClosureParams;
use crate::engine::{required_half_width, RadiusFunction, DEFAULT_CAP};
use crate::environment::ClearingMode;
use crate::error::{Error, Result};
use crate::geometry::MAX_DIM;
use crate::theory::MAX_THEORY_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Free,
    Confined,
    Obstacle,
    ClearingScan,
    ClearingHit,
    Theory,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Free => "free",
            Mode::Confined => "confined",
            Mode::Obstacle => "obstacle",
            Mode::ClearingScan => "clearing_scan",
            Mode::ClearingHit => "clearing_hit",
            Mode::Theory => "theory",
        }
    }
}

/// How confined-mode replicas decide `n_t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Simulate every horizon to the end.
    #[default]
    Exact,
    /// Stop at a decisive conditional mean (LD experiments, `dim = 1`).
    Closure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClearingConfig {
    /// Half-width of the scanned cube `(-ell, ell)^d`.
    pub ell: f64,
    /// Clearing radius whose existence is tallied.
    pub rho: f64,
    pub resolution: f64,
    pub mode: ClearingMode,
    /// Scan every cube `x_j + (-ell, ell)^d` of the lattice family instead of
    /// the single centred cube, reporting the smallest of their clearings.
    pub lattice: bool,
    /// The family has `ceil(ell^lattice_power)` cubes.
    pub lattice_power: u32,
}

impl Default for ClearingConfig {
    fn default() -> Self {
        ClearingConfig {
            ell: 50.0,
            rho: 2.0,
            resolution: 0.05,
            mode: ClearingMode::Inscribed,
            lattice: false,
            lattice_power: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HitConfig {
    /// Fixed clearing radius; defaults to the logarithmic scale `r(t)` of
    /// the largest horizon.
    pub clearing_radius: Option<f64>,
}

fn default_dim() -> usize {
    1
}
fn default_beta() -> f64 {
    1.0
}
fn default_trap_radius() -> f64 {
    0.5
}
fn default_replicas() -> u64 {
    1
}
fn default_step() -> f64 {
    1e-3
}
fn default_cap() -> usize {
    DEFAULT_CAP
}

/// One experiment. Every field except `mode` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub beta_bar: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "default_trap_radius")]
    pub trap_radius: f64,
    #[serde(default)]
    pub kappa: Vec<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub halving: bool,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub env_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_half_width: Option<f64>,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<RadiusFunction>,
    /// Obstacle mode only: follow at most this many weighted particles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub ld: ClosureParams,
    #[serde(default)]
    pub clearing: ClearingConfig,
    #[serde(default)]
    pub hit: HitConfig,
}

fn finite_positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::schema(path, format!("must be a positive number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            Error::schema(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Largest requested horizon.
    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Default box half-width for modes that realize an environment.
    pub fn effective_half_width(&self) -> f64 {
        if let Some(h) = self.box_half_width {
            return h;
        }
        match self.mode {
            Mode::ClearingHit => {
                let t = self.t_end();
                6.0 * t.sqrt() + self.trap_radius
            }
            Mode::ClearingScan => self.clearing.ell,
            _ => required_half_width(self.beta, self.t_end()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let max_dim = if self.mode == Mode::Theory {
            MAX_THEORY_DIM
        } else {
            MAX_DIM
        };
        if !(1..=max_dim).contains(&self.dim) {
            return Err(Error::schema("dim", format!("must lie in 1..={max_dim}")));
        }
        finite_positive("beta", self.beta)?;
        if !(self.beta_bar >= 0.0 && self.beta_bar <= self.beta) {
            return Err(Error::schema("beta_bar", "must lie in [0, beta]"));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::schema("nu", "must be non-negative"));
        }
        finite_positive("trap_radius", self.trap_radius)?;
        for (i, k) in self.kappa.iter().enumerate() {
            finite_positive(&format!("kappa[{i}]"), *k)?;
        }
        let mut last = 0.0;
        for (i, t) in self.times.iter().enumerate() {
            if !(*t > last) || !t.is_finite() {
                return Err(Error::schema(
                    format!("times[{i}]"),
                    "times must be positive and strictly increasing",
                ));
            }
            last = *t;
        }
        if self.replicas == 0 {
            return Err(Error::schema("replicas", "must be at least 1"));
        }
        finite_positive("step", self.step)?;
        if self.cap == 0 {
            return Err(Error::schema("cap", "must be at least 1"));
        }
        if let Some(h) = self.box_half_width {
            finite_positive("box_half_width", h)?;
        }
        let needs_times = !matches!(self.mode, Mode::ClearingScan | Mode::Theory);
        if needs_times && self.times.is_empty() {
            return Err(Error::schema("times", "at least one horizon is required"));
        }
        if let Some(keep) = self.subsample {
            if self.mode != Mode::Obstacle {
                return Err(Error::schema("subsample", "only obstacle mode supports subsampling"));
            }
            if keep < 2 {
                return Err(Error::schema("subsample", "must be at least 2"));
            }
        }
        match self.mode {
            Mode::Confined => {
                let radius = self
                    .radius
                    .ok_or_else(|| Error::schema("radius", "confined mode needs a radius table"))?;
                radius
                    .validate()
                    .map_err(|e| Error::schema("radius", e.to_string()))?;
                for t in &self.times {
                    radius.eval(*t).map_err(|e| Error::schema("radius", e.to_string()))?;
                }
                if self.estimator == Estimator::Closure {
                    if self.dim != 1 {
                        return Err(Error::schema("estimator", "closure estimator needs dim = 1"));
                    }
                    if self.kappa.is_empty() {
                        return Err(Error::schema("kappa", "closure estimator needs at least one kappa"));
                    }
                    self.ld.validate()?;
                }
            }
            Mode::Obstacle => {
                let need = required_half_width(self.beta, self.t_end());
                let have = self.effective_half_width();
                if have < need {
                    return Err(Error::schema(
                        "box_half_width",
                        format!("must be at least sqrt(2 beta) t + 6 sqrt(t) = {need}, got {have}"),
                    ));
                }
            }
            Mode::ClearingScan => {
                let c = &self.clearing;
                finite_positive("clearing.ell", c.ell)?;
                finite_positive("clearing.rho", c.rho)?;
                finite_positive("clearing.resolution", c.resolution)?;
                if c.resolution > self.trap_radius / 2.0 {
                    return Err(Error::schema("clearing.resolution", "must not exceed trap_radius / 2"));
                }
                if c.lattice {
                    if c.lattice_power < 2 {
                        return Err(Error::schema("clearing.lattice_power", "must be at least 2"));
                    }
                    if c.ell < 1.0 || c.ell.powi(c.lattice_power as i32) > 1e6 {
                        return Err(Error::schema(
                            "clearing.lattice_power",
                            "need ell >= 1 and at most 1e6 lattice cubes",
                        ));
                    }
                }
            }
            Mode::ClearingHit => {
                if let Some(r) = self.hit.clearing_radius {
                    if !(r >= 0.0) {
                        return Err(Error::schema("hit.clearing_radius", "must be non-negative"));
                    }
                } else if self.nu <= 0.0 || self.t_end() <= 1.0 {
                    return Err(Error::schema(
                        "hit.clearing_radius",
                        "set it explicitly unless nu > 0 and the last horizon exceeds 1",
                    ));
                }
            }
            Mode::Free | Mode::Theory => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LD: &str = r#"
mode = "confined"
dim = 1
beta = 2.0
kappa = [0.5]
times = [5.0, 10.0, 20.0]
replicas = 100
step = 0.02
estimator = "closure"

[radius]
form = "power"
c = 1.0
alpha = 0.4
"#;

    #[test]
    fn parses_and_hashes() {
        let cfg = ExperimentConfig::from_toml_str(LD).unwrap();
        assert_eq!(cfg.mode, Mode::Confined);
        assert_eq!(cfg.ld, ClosureParams::default());
        let h = cfg.hash();
        assert_eq!(h.len(), 64);
        let mut moved = cfg.clone();
        moved.output = Some("elsewhere".into());
        assert_eq!(moved.hash(), h);
        let mut altered = cfg.clone();
        altered.beta = 2.5;
        assert_ne!(altered.hash(), h);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = LD.replace("alpha = 0.4", "alpha = 0.6");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "radius"),
            other => panic!("{other:?}"),
        }
        let bad = LD.replace("beta = 2.0", "beta = 2.0\nbeta_bar = 3.0");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(Error::Schema { path, .. }) if path == "beta_bar"
        ));
        let bad = LD.replace("times = [5.0, 10.0, 20.0]", "times = [5.0, 4.0]");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(Error::Schema { path, .. }) if path == "times[1]"
        ));
        assert!(ExperimentConfig::from_toml_str("mode = \"free\"\ntimes = [1.0]\nbogus = 1\n").is_err());
        let obstacle = "mode = \"obstacle\"\nbeta = 1.0\ntimes = [4.0]\nbox_half_width = 3.0\n";
        assert!(matches!(
            ExperimentConfig::from_toml_str(obstacle),
            Err(Error::Schema { path, .. }) if path == "box_half_width"
        ));
    }
}
