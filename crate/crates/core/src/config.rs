//! Flat `key = value` configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::PriceGrid;

pub const KEYS: [&str; 8] = ["q", "Q", "step", "T", "H", "kappa_bar", "confidence_z", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub q: f64,
    pub upper: f64,
    pub step: f64,
    pub periods: usize,
    pub windows: usize,
    pub kappa_bar: f64,
    pub confidence_z: f64,
    pub seed: u64,
}

impl Default for Config {
    /// Experiment defaults: `T = 50`, `#H = 1`, `kappa_bar = 1`, integer tolls on `[0, 200]`.
    fn default() -> Self {
        Self {
            q: 0.0,
            upper: 200.0,
            step: 1.0,
            periods: 50,
            windows: 1,
            kappa_bar: 1.0,
            confidence_z: 1.96,
            seed: 0,
        }
    }
}

impl Config {
    pub fn grid(&self) -> Result<PriceGrid> {
        PriceGrid::new(self.q, self.upper, self.step)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// unknown or repeated keys are rejected. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if seen.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        let mut cfg = Self::default();
        for (k, v) in &seen {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        }
        match key {
            "q" => self.q = num(key, value)?,
            "Q" => self.upper = num(key, value)?,
            "step" => self.step = num(key, value)?,
            "T" => self.periods = num(key, value)?,
            "H" => self.windows = num(key, value)?,
            "kappa_bar" => self.kappa_bar = num(key, value)?,
            "confidence_z" => self.confidence_z = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.periods == 0 || self.windows == 0 {
            return Err(Error::Config("T and H must be positive".into()));
        }
        if !(self.kappa_bar >= 0.0) {
            return Err(Error::Config("kappa_bar must be nonnegative".into()));
        }
        if !(self.confidence_z >= 0.0) {
            return Err(Error::Config("confidence_z must be nonnegative".into()));
        }
        Ok(())
    }

    /// Resolved values in key order, for run manifests.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("q", self.q.to_string()),
            ("Q", self.upper.to_string()),
            ("step", self.step.to_string()),
            ("T", self.periods.to_string()),
            ("H", self.windows.to_string()),
            ("kappa_bar", self.kappa_bar.to_string()),
            ("confidence_z", self.confidence_z.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}
