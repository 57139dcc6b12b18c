//! Flat `key = value` configuration for simulations. `#` starts a comment;
//! unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use hawkes_core::{HawkesParams, History, KernelSpec, SimulationConfig};
use serde::Serialize;

use crate::error::{CliError, Result};

const KEYS: &[&str] = &[
    "kernel.family",
    "kernel.n",
    "kernel.epsilon",
    "kernel.tau0",
    "kernel.m",
    "kernel.M",
    "kernel.alpha",
    "kernel.beta",
    "mu",
    "horizon",
    "seed",
    "history.rate",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected key = value, got '{line}'",
                    i + 1
                )));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key '{key}'", i + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.text(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("{key}: not a number: '{v}'")))
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    fn seed(&self) -> Result<Option<u64>> {
        self.text("seed")
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| CliError::Config(format!("seed: not an unsigned integer: '{v}'")))
            })
            .transpose()
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// Fully resolved simulation settings, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub family: String,
    pub mu: f64,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub history_rate: Option<f64>,
    pub kernel: BTreeMap<String, f64>,
    #[serde(skip)]
    pub params: HawkesParams,
}

impl SimulationSpec {
    pub fn from_config(cfg: &KeyValues) -> Result<Self> {
        let family = cfg.text("kernel.family").unwrap_or("approx-power-law").to_string();
        let mut kernel = BTreeMap::new();
        let spec = match family.as_str() {
            "approx-power-law" => {
                let n = cfg.required("kernel.n")?;
                let epsilon = cfg.required("kernel.epsilon")?;
                let tau0 = cfg.required("kernel.tau0")?;
                let m = cfg.number("kernel.m")?.unwrap_or(5.0);
                let terms = cfg.number("kernel.M")?.unwrap_or(15.0);
                if terms.fract() != 0.0 || terms < 1.0 {
                    return Err(CliError::Config(format!(
                        "kernel.M must be a positive integer, got {terms}"
                    )));
                }
                kernel.extend(
                    [("n", n), ("epsilon", epsilon), ("tau0", tau0), ("m", m), ("M", terms)]
                        .map(|(k, v)| (k.to_string(), v)),
                );
                KernelSpec::approx_power_law(n, epsilon, tau0, m, terms as usize)?
            }
            "exponential" => {
                let beta = cfg.required("kernel.beta")?;
                let alpha = match (cfg.number("kernel.alpha")?, cfg.number("kernel.n")?) {
                    (Some(a), None) => a,
                    (None, Some(n)) => n * beta,
                    _ => {
                        return Err(CliError::Config(
                            "exponential kernel needs exactly one of kernel.alpha, kernel.n".into(),
                        ))
                    }
                };
                kernel.extend([("alpha", alpha), ("beta", beta)].map(|(k, v)| (k.to_string(), v)));
                KernelSpec::exponential(alpha, beta)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "kernel.family '{other}' cannot be simulated (expected approx-power-law or exponential)"
                )))
            }
        };
        let mu = cfg.required("mu")?;
        let horizon = cfg.required("horizon")?;
        if !(horizon > 0.0) {
            return Err(CliError::Config(format!("horizon must be > 0, got {horizon}")));
        }
        let history_rate = cfg.number("history.rate")?;
        if let Some(r) = history_rate {
            if !(r >= 0.0) {
                return Err(CliError::Config(format!("history.rate must be >= 0, got {r}")));
            }
        }
        Ok(Self {
            family,
            mu,
            horizon,
            seed: cfg.seed()?,
            history_rate,
            kernel,
            params: HawkesParams::new(mu, spec)?,
        })
    }

    pub fn simulation(&self, seed: u64) -> SimulationConfig {
        let config = SimulationConfig::new(self.params.clone(), self.horizon, seed);
        match self.history_rate {
            Some(rate) if rate > 0.0 => config.with_history(History::Poisson { rate, length: None }),
            _ => config,
        }
    }
}
