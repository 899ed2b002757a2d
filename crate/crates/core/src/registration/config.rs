use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration budget and step control for one optimization stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub max_iterations: usize,
    /// Initial step of each backtracking line search.
    pub step: f64,
    /// Relative loss improvement below which the stage counts as converged.
    pub tolerance: f64,
    /// Number of iterations the improvement is measured over.
    pub window: usize,
}

/// Which pipeline stages run. Turning off `init`, `boundary` or `probe`
/// reproduces the three ablations; `shape` exists so the earlier stages can
/// be inspected on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageFlags {
    pub init: bool,
    pub boundary: bool,
    pub probe: bool,
    pub shape: bool,
}

impl Default for StageFlags {
    fn default() -> Self {
        Self {
            init: true,
            boundary: true,
            probe: true,
            shape: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub eta_reg: f64,
    /// Weight of the prior pulling body shape factors toward 1.
    pub eta_beta: f64,
    pub eta_shape: f64,
    pub eta_ea: f64,
    pub eta_ed: f64,
    pub eta_pen: f64,
    pub eta_b: f64,
    pub eta_lap: f64,
    /// Boundary cylinder radius.
    pub eps_b: f64,
    /// Occupancy level treated as the target surface.
    pub iso: f64,
    /// Samples per probe direction.
    pub probe_count: usize,
    /// Probe reach along each normal direction.
    pub probe_extent: f64,
    pub tsdf_truncation: f64,
    /// Body and coarse-mesh vertices used by the initialization Chamfer term.
    pub init_samples: usize,
    pub init: StageConfig,
    pub boundary: StageConfig,
    pub shape: StageConfig,
    pub stages: StageFlags,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            eta_reg: 1e-3,
            eta_beta: 1e-2,
            eta_shape: 1.0,
            eta_ea: 0.025,
            eta_ed: 2.5,
            eta_pen: 0.1,
            eta_b: 0.1,
            eta_lap: 100.0,
            eps_b: 1e-3,
            iso: 0.5,
            probe_count: 16,
            probe_extent: 0.15,
            tsdf_truncation: 0.05,
            init_samples: 800,
            init: StageConfig {
                max_iterations: 500,
                step: 1.0,
                tolerance: 1e-7,
                window: 10,
            },
            boundary: StageConfig {
                max_iterations: 300,
                step: 0.01,
                tolerance: 1e-7,
                window: 10,
            },
            shape: StageConfig {
                max_iterations: 400,
                step: 1.0,
                tolerance: 1e-3,
                window: 20,
            },
            stages: StageFlags::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [
            ("eta_reg", self.eta_reg),
            ("eta_beta", self.eta_beta),
            ("eta_shape", self.eta_shape),
            ("eta_ea", self.eta_ea),
            ("eta_ed", self.eta_ed),
            ("eta_pen", self.eta_pen),
            ("eta_b", self.eta_b),
            ("eta_lap", self.eta_lap),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.eps_b > 0.0) {
            return bad(format!("eps_b must be > 0, got {}", self.eps_b));
        }
        if !self.iso.is_finite() {
            return bad("iso must be finite".into());
        }
        if self.probe_count < 1 {
            return bad("probe_count must be >= 1".into());
        }
        if !(self.probe_extent > 0.0) {
            return bad(format!("probe_extent must be > 0, got {}", self.probe_extent));
        }
        if !(self.tsdf_truncation > 0.0) {
            return bad("tsdf_truncation must be > 0".into());
        }
        if self.init_samples < 10 {
            return bad("init_samples must be >= 10".into());
        }
        for (name, s) in [("init", &self.init), ("boundary", &self.boundary), ("shape", &self.shape)] {
            if !(s.step > 0.0 && s.step.is_finite()) {
                return bad(format!("{name}.step must be > 0"));
            }
            if !(s.tolerance >= 0.0) {
                return bad(format!("{name}.tolerance must be >= 0"));
            }
            if s.window < 1 {
                return bad(format!("{name}.window must be >= 1"));
            }
        }
        Ok(())
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn from_str_auto(text: &str) -> Result<Self> {
        let cfg: FitConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_auto(&text).map_err(|e| Error::parse(path, e))
    }

    /// Applies a `dotted.key=value` override. The key must already exist;
    /// the value is read as JSON when possible, otherwise as a string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let value: serde_json::Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        let mut slot = &mut tree;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| Error::InvalidConfig(format!("unknown config key `{key}`")))?;
        }
        if slot.is_object() {
            return Err(Error::InvalidConfig(format!("`{key}` is a table; set one of its fields")));
        }
        *slot = value;
        let cfg: FitConfig =
            serde_json::from_value(tree).map_err(|e| Error::InvalidConfig(format!("override `{key}`: {e}")))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }
}
