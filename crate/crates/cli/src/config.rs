use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use groundstate::ProblemSpec;
use serde::Deserialize;
use serde_json::Value;

const KNOWN_KEYS: &[&str] = &["M", "p", "N", "omega", "K", "P", "beta", "sweep", "beta_hat", "seed", "labels", "grid"];

/// Malformed or inconsistent configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    /// 0-based; setting it writes both `K[i][j]` and `K[j][i]`.
    Coupling(usize, usize),
    Omega(usize),
    Beta,
}

impl Param {
    /// Parses `K[i][j]`, `omega[i]` (1-based) or `beta`.
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        let bad = || err(format!("sweep.axes: unknown parameter '{name}' (expected K[i][j], omega[i] or beta)"));
        let name = name.trim();
        if name == "beta" {
            return Ok(Param::Beta);
        }
        let index = |s: &str| -> Result<usize, ConfigError> {
            let v: usize = s.trim().parse().map_err(|_| bad())?;
            v.checked_sub(1).ok_or_else(bad)
        };
        if let Some(rest) = name.strip_prefix("omega[").and_then(|r| r.strip_suffix(']')) {
            return Ok(Param::Omega(index(rest)?));
        }
        if let Some(rest) = name.strip_prefix("K[").and_then(|r| r.strip_suffix(']')) {
            let (i, j) = rest.split_once("][").ok_or_else(bad)?;
            return Ok(Param::Coupling(index(i)?, index(j)?));
        }
        Err(bad())
    }

    pub fn apply(&self, spec: &mut ProblemSpec, value: f64) -> Result<(), ConfigError> {
        let m = spec.m;
        match *self {
            Param::Coupling(i, j) if i < m && j < m => {
                spec.coupling[i][j] = value;
                spec.coupling[j][i] = value;
            }
            Param::Omega(i) if i < m => spec.omega[i] = value,
            Param::Beta if spec.pairs.is_some() => spec.beta = Some(value),
            Param::Beta => return Err(err("sweep.axes: parameter 'beta' needs a pair set P")),
            _ => return Err(err(format!("sweep.axes: index out of range for M = {m}"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.min + (self.max - self.min) * k as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaHatSection {
    pub range: [f64; 2],
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub spec: ProblemSpec,
    pub axes: Vec<(Param, Axis)>,
    pub beta_hat: Option<BetaHatSection>,
    pub seed: Option<u64>,
    /// Display names for support masks in sweep output.
    pub labels: BTreeMap<String, String>,
    pub grid: Option<GridSection>,
}

fn section<T: serde::de::DeserializeOwned>(
    obj: &mut serde_json::Map<String, Value>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    obj.remove(key).map(|v| serde_json::from_value(v).map_err(|e| err(format!("{key}: {e}")))).transpose()
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| err(format!("malformed JSON: {e}")))?;
        let Value::Object(mut obj) = value else {
            return Err(err("config must be a JSON object"));
        };
        if let Some(key) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(err(format!("{key}: unknown key")));
        }
        for key in ["M", "p", "N", "omega", "K"] {
            if !obj.contains_key(key) {
                return Err(err(format!("{key}: missing required key")));
            }
        }
        let sweep: Option<SweepSection> = section(&mut obj, "sweep")?;
        let beta_hat: Option<BetaHatSection> = section(&mut obj, "beta_hat")?;
        let seed: Option<u64> = section(&mut obj, "seed")?;
        let labels: Option<BTreeMap<String, String>> = section(&mut obj, "labels")?;
        let grid: Option<GridSection> = section(&mut obj, "grid")?;
        for key in ["M", "p", "N", "omega", "K", "P", "beta"] {
            if let Some(v) = obj.get(key) {
                let ok = match key {
                    "M" | "N" => v.is_u64(),
                    "p" | "beta" => v.is_number(),
                    _ => v.is_array(),
                };
                if !ok {
                    return Err(err(format!("{key}: wrong type")));
                }
            }
        }
        let mut spec: ProblemSpec = serde_json::from_value(Value::Object(obj)).map_err(|e| err(format!("{e}")))?;
        if spec.pairs.is_some() && spec.beta.is_none() {
            spec.beta = Some(1.0);
        }
        if let Some(pairs) = spec.pairs.clone() {
            let mut sym = Vec::new();
            for (i, j) in pairs {
                for pair in [(i, j), (j, i)] {
                    if !sym.contains(&pair) {
                        sym.push(pair);
                    }
                }
            }
            spec.pairs = Some(sym);
        }
        spec.check().map_err(|e| err(e.to_string()))?;
        let mut axes = Vec::new();
        if let Some(s) = sweep {
            if s.axes.is_empty() || s.axes.len() > 2 {
                return Err(err("sweep.axes: need one or two axes"));
            }
            for a in s.axes {
                if a.n < 2 {
                    return Err(err(format!("sweep.axes: '{}' needs n >= 2", a.param)));
                }
                let param = Param::parse(&a.param)?;
                param.apply(&mut spec.clone(), a.min)?;
                axes.push((param, a));
            }
        }
        if let Some(b) = &beta_hat {
            if spec.pairs.is_none() {
                return Err(err("beta_hat: needs a pair set P"));
            }
            if b.n == 0 || b.range[1] < b.range[0] {
                return Err(err("beta_hat: range must be increasing with n >= 1"));
            }
        }
        if let Some(g) = &grid {
            if g.nodes < 5 || !(g.half_width > 0.0) {
                return Err(err("grid: need half_width > 0 and nodes >= 5"));
            }
        }
        Ok(Config { spec, axes, beta_hat, seed, labels: labels.unwrap_or_default(), grid })
    }
}
