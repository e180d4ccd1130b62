//! Experiment configs: JSON objects whose input references are either inline
//! values or paths relative to the config file.

use std::path::{Path, PathBuf};

use finvariant::action::DEFAULT_EXACT_CAP;
use finvariant::microstates::{Caps, DEFAULT_LABEL_CAP};
use finvariant::{Error, Result};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Keys that may name another JSON file.
const REFERENCE_KEYS: &[&str] = &["weight", "marginal", "sft", "sigma", "x", "automorphism", "support"];

/// Command-line overrides applied on top of a config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cap_exact: Option<u128>,
    pub cap_labels: Option<u128>,
}

#[derive(Clone, Debug)]
pub struct Config {
    /// Effective config with every reference inlined.
    value: Map<String, Value>,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::from_value(read_json(path)?, &base)
    }

    /// Resolves string references against `base`.
    pub fn from_value(v: Value, base: &Path) -> Result<Config> {
        let Value::Object(mut map) = v else {
            return Err(Error::Input("config must be a JSON object".into()));
        };
        for key in REFERENCE_KEYS {
            if let Some(Value::String(s)) = map.get(*key) {
                if s == "sampler" {
                    continue;
                }
                let path: PathBuf = base.join(s);
                let resolved = read_json(&path)?;
                map.insert(key.to_string(), resolved);
            }
        }
        Ok(Config { value: map })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Config {
        if let Some(seed) = o.seed {
            self.value.insert("seed".into(), seed.into());
        }
        let mut caps = self
            .value
            .get("caps")
            .and_then(Value::as_object)
            .cloned()
            .unwrap_or_default();
        if let Some(c) = o.cap_exact {
            caps.insert("exact".into(), Value::from(c as f64));
        }
        if let Some(c) = o.cap_labels {
            caps.insert("labels".into(), Value::from(c as f64));
        }
        if !caps.is_empty() {
            self.value.insert("caps".into(), Value::Object(caps));
        }
        self
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.value.insert(key.into(), v);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.value.get(key)
    }

    pub fn require(&self, key: &str) -> Result<&Value> {
        self.get(key)
            .ok_or_else(|| Error::Input(format!("config needs {key:?}")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Input(format!("{key:?} must be a natural number"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.require(key)?;
        self.usize_or(key, 0)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.require(key)?
            .as_f64()
            .ok_or_else(|| Error::Input(format!("{key:?} must be a number")))
    }

    /// Randomized commands refuse to run without a seed.
    pub fn seed(&self) -> Result<u64> {
        self.get("seed")
            .ok_or_else(|| Error::Input("randomized commands need a seed".into()))?
            .as_u64()
            .ok_or_else(|| Error::Input("seed must be a natural number".into()))
    }

    pub fn caps(&self) -> Result<Caps> {
        let mut caps = Caps {
            exact_actions: DEFAULT_EXACT_CAP,
            labels: DEFAULT_LABEL_CAP,
        };
        if let Some(c) = self.get("caps") {
            let read = |k: &str| -> Result<Option<u128>> {
                match c.get(k) {
                    None => Ok(None),
                    Some(v) => v
                        .as_f64()
                        .filter(|x| *x >= 1.0)
                        .map(|x| Some(x as u128))
                        .ok_or_else(|| Error::Input(format!("cap {k:?} must be a positive number"))),
                }
            };
            if let Some(x) = read("exact")? {
                caps.exact_actions = x;
            }
            if let Some(x) = read("labels")? {
                caps.labels = x;
            }
        }
        Ok(caps)
    }

    /// SHA-256 of the canonical (key-sorted, references inlined) config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&Value::Object(self.value.clone())).expect("values serialize");
        hex::encode(Sha256::digest(bytes))
    }
}
