//! Run configuration: defaults, `key=value` files and named tolerances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::ModularData;
use crate::error::{Error, Result};

/// Named thresholds and their defaults.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("bethe_residual", 1e-10),
    ("commutation", 1e-8),
    ("curve_validation", 1e-6),
    ("eigen", 1e-8),
    ("eigen_family", 1e-8),
    ("ellipticity", 1e-8),
    ("identity", 1e-10),
    ("involution", 1e-10),
    ("kernel", 1e-10),
    ("odd_part", 1e-8),
    ("operator_relation", 1e-6),
    ("operator_relation_deep", 1e-5),
    ("partner_curve", 1e-6),
    ("recurrence", 1e-8),
    ("transformed", 1e-8),
    ("window_agreement", 1e-5),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULT_TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        *self
            .0
            .get(name)
            .unwrap_or_else(|| panic!("unknown tolerance {name}"))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.0.contains_key(name) {
            let known: Vec<&str> = self.0.keys().map(String::as_str).collect();
            return Err(Error::Config(format!(
                "unknown tolerance '{name}' (known: {})",
                known.join(", ")
            )));
        }
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Config(format!("tolerance '{name}' must be positive, got {value}")));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gamma: Complex64,
    pub tau: Complex64,
    pub m_list: Vec<u32>,
    pub tolerances: Tolerances,
    /// Points per operator-equality sample set.
    pub sample_count: usize,
    /// Multipliers per curve window.
    pub curve_samples: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let md = ModularData::default_params();
        RunConfig {
            gamma: md.gamma,
            tau: md.tau,
            m_list: vec![1],
            tolerances: Tolerances::default(),
            sample_count: 50,
            curve_samples: 40,
            seed: 20_240_601,
            output_path: None,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as a number")))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as a non-negative integer")))
}

pub fn parse_m_list(v: &str) -> Result<Vec<u32>> {
    let out: Vec<u32> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_int("m", s))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config("m list is empty".into()));
    }
    Ok(out)
}

impl RunConfig {
    /// Apply one `key=value` setting. Tolerances use `tol.<name>` or
    /// `tol-<name>`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "gamma_re" | "gamma-re" => self.gamma.re = parse_f64(key, value)?,
            "gamma_im" | "gamma-im" => self.gamma.im = parse_f64(key, value)?,
            "tau_re" | "tau-re" => self.tau.re = parse_f64(key, value)?,
            "tau_im" | "tau-im" => self.tau.im = parse_f64(key, value)?,
            "m" | "m_list" => self.m_list = parse_m_list(value)?,
            "seed" => self.seed = parse_int(key, value)?,
            "samples" | "sample_count" => self.sample_count = parse_int(key, value)?,
            "curve_samples" | "curve-samples" => self.curve_samples = parse_int(key, value)?,
            "out" | "output_path" => self.output_path = Some(PathBuf::from(value.trim())),
            _ => {
                let name = key
                    .strip_prefix("tol.")
                    .or_else(|| key.strip_prefix("tol-"))
                    .or_else(|| key.strip_prefix("tol_"))
                    .ok_or_else(|| Error::Config(format!("unknown configuration key '{key}'")))?;
                self.tolerances.set(&name.replace('-', "_"), parse_f64(key, value)?)?;
            }
        }
        Ok(())
    }

    /// Apply a `key=value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Apply `key=value` lines; `origin` labels error messages.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.im > 0.0) {
            return Err(Error::Config(format!("Im(tau) must be positive, got {}", self.tau.im)));
        }
        if !self.gamma.is_finite() || !self.tau.is_finite() {
            return Err(Error::Config("gamma and tau must be finite".into()));
        }
        if self.sample_count < 10 {
            return Err(Error::Config(format!("sample count must be at least 10, got {}", self.sample_count)));
        }
        if self.m_list.is_empty() {
            return Err(Error::Config("m list is empty".into()));
        }
        Ok(())
    }

    pub fn modular(&self) -> Result<ModularData> {
        self.validate()?;
        ModularData::new(self.gamma, self.tau).map_err(|e| match e {
            Error::Domain(s) | Error::DegenerateParameter(s) => Error::Config(s),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.tolerances.get("commutation"), 1e-8);
        assert!((cfg.gamma.re - 2f64.sqrt() / 10.0).abs() < 1e-16);
    }

    #[test]
    fn set_keys() {
        let mut cfg = RunConfig::default();
        cfg.set("tau_im", "2").unwrap();
        cfg.set("m", "0, 2").unwrap();
        cfg.set("tol-eigen", "1e-6").unwrap();
        cfg.set("tol.operator_relation", "1e-7").unwrap();
        assert_eq!(cfg.tau.im, 2.0);
        assert_eq!(cfg.m_list, vec![0, 2]);
        assert_eq!(cfg.tolerances.get("eigen"), 1e-6);
        assert_eq!(cfg.tolerances.get("operator_relation"), 1e-7);
        assert!(cfg.set("tol-nope", "1").is_err());
        assert!(cfg.set("tol-eigen", "-1").is_err());
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.set("m", "x").is_err());
    }

    #[test]
    fn validation_rejects_bad_tau_and_samples() {
        let cfg = RunConfig { tau: Complex64::new(0.0, -1.0), ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = RunConfig { sample_count: 5, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# comment\nseed = 9\nsamples=20 # trailing\n\ntol.kernel=1e-9\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(&p).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sample_count, 20);
        assert_eq!(cfg.tolerances.get("kernel"), 1e-9);
        std::fs::write(&p, "novalue\n").unwrap();
        assert!(cfg.apply_file(&p).is_err());
    }
}
