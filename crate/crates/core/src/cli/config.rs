//! Run configuration: a JSON document layered over built-in defaults, then
//! patched by `--set a.b.c=value` overrides. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::oracles::CollisionConfig;
use crate::quadrature::QuadConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub mu_min: f64,
    pub mu_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            mu_min: -3.0,
            mu_max: 3.0,
            n_points: 121,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 || !(self.mu_min < self.mu_max) || !self.mu_min.is_finite() || !self.mu_max.is_finite() {
            return Err(Error::Config(format!(
                "grid needs n_points >= 2 and mu_min < mu_max, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.mu_max - self.mu_min) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                // snap the symmetric midpoint to an exact zero
                let x = self.mu_min + h * i as f64;
                if x.abs() < 1e-12 * h {
                    0.0
                } else {
                    x
                }
            })
            .collect()
    }
}

/// Monte Carlo settings shared by the oracles and the baseline simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub seed: u64,
    pub n_samples: usize,
    /// Frequency spacing of the bath synthesis.
    pub dnu: f64,
    /// Evaluation time of the thermal Weyl moment, in units of `1/γ_m`.
    pub t_gamma: f64,
    /// Simulated duration of the baseline count record.
    pub horizon: f64,
    pub windows: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            seed: 1,
            n_samples: 10_000,
            dnu: 0.01,
            t_gamma: 10.0,
            horizon: 1000.0,
            windows: 1000,
        }
    }
}

impl McSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 || !(self.dnu > 0.0) || !(self.t_gamma > 0.0) || !(self.horizon > 0.0) || self.windows < 2 {
            return Err(Error::Config(format!("invalid Monte Carlo settings: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub format: Format,
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub quad: QuadConfig,
    pub grid: GridSpec,
    pub mc: McSpec,
    pub collision: CollisionConfig,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            model: ModelConfig::reference(),
            quad: QuadConfig::default(),
            grid: GridSpec::default(),
            mc: McSpec::default(),
            collision: CollisionConfig::default(),
            output: OutputSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.model.validate()?;
        self.quad.validate()?;
        self.grid.validate()?;
        self.mc.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn from_value(v: Value) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the file (if any), then each override in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut v = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            if !file.is_object() {
                return Err(Error::Config(format!("{}: top level must be an object", p.display())));
            }
            if file.get("schema_version").is_none() {
                return Err(Error::Config(format!("{}: missing schema_version", p.display())));
            }
            merge(&mut v, file);
        }
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }
}

/// Recursive object merge. A tagged enum (an object with `kind`) whose tag
/// changes is replaced wholesale so stale variant fields do not leak in.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, pv) in p {
                match b.get_mut(&k) {
                    Some(bv) if bv.is_object() && pv.is_object() && !tag_changes(bv, &pv) => merge(bv, pv),
                    _ => {
                        b.insert(k, pv);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn tag_changes(a: &Value, b: &Value) -> bool {
    matches!((a.get("kind"), b.get("kind")), (Some(x), Some(y)) if x != y)
}

/// `a.b.c=value`; the value is parsed as JSON and falls back to a string.
pub fn apply_override(v: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override `{spec}` has an empty key")));
    }
    let mut cur = v;
    for k in &keys[..keys.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{spec}`: `{k}` is not inside an object")))?;
        cur = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let last = keys[keys.len() - 1];
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override `{spec}`: parent of `{last}` is not an object")))?;
    if last == "kind" && obj.get("kind").is_some_and(|k| *k != value) {
        obj.clear();
    }
    obj.insert(last.to_string(), value);
    Ok(())
}
