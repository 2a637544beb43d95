//! Run configuration: `key = value` files, flag overrides and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;
use crate::linearization::a_crit;

/// Environment variable naming the root directory for relative output paths.
pub const OUT_ROOT_ENV: &str = "FPU_SOLITARY_OUT";

/// Default sweep.
pub const DEFAULT_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// How the exponential weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum WeightPolicy {
    Absolute(f64),
    /// Fraction of the critical weight `a_c(√σ)`.
    Fraction(f64),
}

impl WeightPolicy {
    pub fn resolve(self, speed: f64) -> Result<f64> {
        match self {
            WeightPolicy::Absolute(a) => Ok(a),
            WeightPolicy::Fraction(f) => Ok(f * a_crit(speed)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: f64,
    pub deltas: Vec<f64>,
    #[serde(rename = "X")]
    pub half_width: f64,
    pub h: f64,
    pub weight: WeightPolicy,
    pub tol: f64,
    pub max_iter: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 2.0,
            deltas: DEFAULT_DELTAS.to_vec(),
            half_width: 6.0,
            h: 1.0 / 512.0,
            weight: WeightPolicy::Fraction(0.5),
            tol: 1e-10,
            max_iter: 1000,
            out_dir: PathBuf::from("."),
            seed: 0,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("{key}: cannot parse {value:?} as a number")))
}

/// Parses a comma-separated list of reals.
pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let items: Vec<f64> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::InvalidInput(format!("{key}: empty list")));
    }
    Ok(items)
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "m" => self.m = parse_f64(key, value)?,
            "deltas" => self.deltas = parse_list(key, value)?,
            "X" => self.half_width = parse_f64(key, value)?,
            "h" => self.h = parse_f64(key, value)?,
            "a" => self.weight = WeightPolicy::Absolute(parse_f64(key, value)?),
            "a_frac" => self.weight = WeightPolicy::Fraction(parse_f64(key, value)?),
            "tol" => self.tol = parse_f64(key, value)?,
            "max_iter" => {
                self.max_iter = value
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("max_iter: cannot parse {value:?}")))?
            }
            "out" => self.out_dir = PathBuf::from(value),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("seed: cannot parse {value:?}")))?
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown configuration key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: expected key = value, got {raw:?}", n + 1))
            })?;
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        crate::potential::PotentialParams::new(self.m)?;
        self.grid()?;
        if self.deltas.is_empty() {
            return Err(Error::InvalidInput("deltas: empty list".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 0.5)) {
            return Err(Error::InvalidInput(format!("delta {d} outside (0, 1/2)")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        match self.weight {
            WeightPolicy::Fraction(f) if !(f > 0.0 && f < 1.0) => Err(Error::InvalidInput(
                format!("a_frac must lie in (0, 1), got {f}"),
            )),
            WeightPolicy::Absolute(a) if !(a > 0.0) => {
                Err(Error::InvalidInput(format!("a must be positive, got {a}")))
            }
            _ => Ok(()),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::from_spacing(self.half_width, self.h)
    }

    /// Output directory, joined onto `$FPU_SOLITARY_OUT` when relative.
    pub fn resolved_out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ROOT_ENV) {
            Some(root) if self.out_dir.is_relative() => PathBuf::from(root).join(&self.out_dir),
            _ => self.out_dir.clone(),
        }
    }

    /// Manifest of a run: the resolved configuration plus the crate version.
    pub fn manifest(&self, command: &str) -> serde_json::Value {
        serde_json::json!({
            "artifact": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": self,
        })
    }

    /// SHA-256 of the compact manifest JSON, lowercase hex.
    pub fn manifest_hash(&self, command: &str) -> String {
        let text = self.manifest(command).to_string();
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    /// Writes `manifest_<command>.json` into `dir`.
    pub fn write_manifest(&self, dir: &Path, command: &str) -> Result<PathBuf> {
        let path = dir.join(format!("manifest_{command}.json"));
        let mut value = self.manifest(command);
        value["manifest_sha256"] = serde_json::Value::String(self.manifest_hash(command));
        io::write_json(&path, &value)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let cfg = RunConfig::parse(
            "# sweep\nm = 3\ndeltas = 0.2, 0.1 \nX=8\nh = 0.00390625\na_frac = 0.25\nseed=4\n",
        )
        .unwrap();
        assert_eq!(cfg.m, 3.0);
        assert_eq!(cfg.deltas, vec![0.2, 0.1]);
        assert_eq!(cfg.grid().unwrap().k(), 128);
        assert_eq!(cfg.weight, WeightPolicy::Fraction(0.25));
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.tol, 1e-10);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("m 2").is_err());
        assert!(RunConfig::parse("deltas =").is_err());
        assert!(RunConfig::parse("deltas = 0.9").is_err());
        assert!(RunConfig::parse("m = 0.5").is_err());
        assert!(RunConfig::parse("h = 0.3").is_err());
        assert!(RunConfig::parse("a_frac = 1.5").is_err());
    }

    #[test]
    fn hash_tracks_configuration() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.manifest_hash("solve"), b.manifest_hash("solve"));
        assert_ne!(a.manifest_hash("solve"), a.manifest_hash("sweep"));
        b.seed = 1;
        assert_ne!(a.manifest_hash("solve"), b.manifest_hash("solve"));
        assert_eq!(a.manifest_hash("solve").len(), 64);
    }

    #[test]
    fn weight_policy_resolution() {
        let c = 1.0_f64.sinh();
        assert!((WeightPolicy::Fraction(0.5).resolve(c).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(WeightPolicy::Absolute(0.3).resolve(c).unwrap(), 0.3);
    }
}
