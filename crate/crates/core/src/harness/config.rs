//! Flat `key = value` configuration with `#` comments.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::spectral::TorusGrid;

/// Parses the flat format. Keys are normalised so that `t-end` and `t_end`
/// name the same entry.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected `key = value`, got `{raw}`", no + 1)))?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(HarnessError::Config(format!("line {}: empty key", no + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(HarnessError::Config(format!("line {}: duplicate key `{key}`", no + 1)));
        }
    }
    Ok(map)
}

pub fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Named experiment presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    LinearEd,
    Mixing,
    Kinetic,
    Homogeneous,
    PhaseDiagram,
    Agents,
    Compare,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::LinearEd,
        Preset::Mixing,
        Preset::Kinetic,
        Preset::Homogeneous,
        Preset::PhaseDiagram,
        Preset::Agents,
        Preset::Compare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::LinearEd => "linear-ed",
            Preset::Mixing => "mixing",
            Preset::Kinetic => "kinetic",
            Preset::Homogeneous => "homogeneous",
            Preset::PhaseDiagram => "phase-diagram",
            Preset::Agents => "agents",
            Preset::Compare => "compare",
        }
    }
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown preset `{s}`")))
    }
}

/// A resolved experiment request.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Remaining preset parameters, as written.
    pub params: BTreeMap<String, String>,
    /// `tol.<name> = value` entries.
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    /// Splits a flat map into the reserved keys (`preset`, `out`, `seed`,
    /// `tol.*`) and preset parameters.
    pub fn from_map(mut map: BTreeMap<String, String>) -> Result<Self, HarnessError> {
        let preset: Preset = map
            .remove("preset")
            .ok_or_else(|| HarnessError::Config("missing `preset`".into()))?
            .parse()?;
        let out_dir = PathBuf::from(map.remove("out").unwrap_or_else(|| "out".into()));
        let seed = match map.remove("seed") {
            Some(s) => s.parse().map_err(|_| HarnessError::Config(format!("seed: `{s}` is not an unsigned integer")))?,
            None => 0,
        };
        let mut tolerances = BTreeMap::new();
        let keys: Vec<String> = map.keys().filter(|k| k.starts_with("tol.")).cloned().collect();
        for k in keys {
            let v = map.remove(&k).expect("listed key");
            let x = v.parse::<f64>().map_err(|_| HarnessError::Config(format!("{k}: `{v}` is not a number")))?;
            tolerances.insert(k["tol.".len()..].to_string(), x);
        }
        Ok(Self { preset, out_dir, seed, params: map, tolerances })
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

/// Typed access to preset parameters; records every resolved value so the
/// manifest can list defaults too, and flags unused keys.
pub struct Params<'a> {
    raw: &'a BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl<'a> Params<'a> {
    pub fn new(raw: &'a BTreeMap<String, String>) -> Self {
        Self { raw, resolved: RefCell::new(BTreeMap::new()) }
    }

    fn get<T: FromStr + ToString>(&self, key: &str, default: T) -> Result<T, HarnessError> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .parse::<T>()
                .map_err(|_| HarnessError::Config(format!("{key}: cannot parse `{s}`")))?,
            None => default,
        };
        self.resolved.borrow_mut().insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, HarnessError> {
        let v = self.get(key, default)?;
        if !v.is_finite() {
            return Err(HarnessError::Config(format!("{key}: must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, HarnessError> {
        self.get(key, default)
    }

    pub fn i64(&self, key: &str, default: i64) -> Result<i64, HarnessError> {
        self.get(key, default)
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String, HarnessError> {
        self.get(key, default.to_string())
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, HarnessError> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| HarnessError::Config(format!("{key}: cannot parse `{p}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => default.to_vec(),
        };
        let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        self.resolved.borrow_mut().insert(key.to_string(), text.join(","));
        Ok(v)
    }

    /// `n1,n2,ntheta`.
    pub fn grid(&self, key: &str, default: [usize; 3]) -> Result<TorusGrid, HarnessError> {
        let dims = match self.raw.get(key) {
            Some(s) => {
                let parts: Vec<usize> = s
                    .split(',')
                    .map(|p| p.trim().parse::<usize>().map_err(|_| HarnessError::Config(format!("{key}: cannot parse `{p}`"))))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 3 {
                    return Err(HarnessError::Config(format!("{key}: expected three counts, got `{s}`")));
                }
                [parts[0], parts[1], parts[2]]
            }
            None => default,
        };
        let g = TorusGrid::new(dims[0], dims[1], dims[2]).map_err(|e| HarnessError::Config(format!("{key}: {e}")))?;
        self.resolved.borrow_mut().insert(key.to_string(), format!("{},{},{}", dims[0], dims[1], dims[2]));
        Ok(g)
    }

    /// Fails on keys that no getter asked for.
    pub fn finish(self) -> Result<BTreeMap<String, String>, HarnessError> {
        let resolved = self.resolved.into_inner();
        if let Some(k) = self.raw.keys().find(|k| !resolved.contains_key(*k)) {
            return Err(HarnessError::Config(format!("unknown parameter `{k}`")));
        }
        Ok(resolved)
    }
}
