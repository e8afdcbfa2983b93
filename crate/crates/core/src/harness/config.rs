//! Experiment settings: `[section]` headers with `key = value` lines, every
//! key addressable as `section.key`. Command-line flags are applied on top of
//! a loaded file, so flags always win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use super::HarnessError;
use crate::capacity::{CapacityMode, Solver, SolverConfig, WosConfig};

/// Keys accepted in files and by `Settings::set`.
pub const KNOWN_KEYS: &[&str] = &[
    "run.seed",
    "run.threads",
    "run.out_dir",
    "run.no_timestamp",
    "solver.mode",
    "solver.r",
    "solver.lmax",
    "solver.method",
    "solver.walks",
    "family.kind",
    "family.count",
    "family.eps_min",
    "family.eps_max",
    "family.degree",
    "family.order",
    "family.amplitude",
    "family.max_degree",
    "family.normalize",
    "fuglede.degree",
    "fuglede.order",
    "fuglede.ladder",
    "spectrum.n",
    "spectrum.r_list",
    "spectrum.lmax",
    "profile.eta",
    "truncation.s",
    "truncation.s_prime",
    "truncation.far_volume",
    "truncation.far_distance",
    "truncation.main_eps",
    "domain.ball",
    "domain.ellipsoid",
    "domain.file",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let ini = Ini::load_from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        let mut out = Self::new();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let Some(section) = section else {
                    return Err(HarnessError::Config(format!("config: key `{key}` appears before any [section]")));
                };
                out.set(&format!("{section}.{key}"), value)?;
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `section.key`; names are case-insensitive.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let key = key.trim().to_ascii_lowercase();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(HarnessError::Config(format!("unknown setting `{key}`")));
        }
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Overlays every value of `other`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError> {
        self.get_str(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| HarnessError::Config(format!("invalid value `{s}` for `{key}`")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, HarnessError> {
        match self.get_str(key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(s) => Err(HarnessError::Config(format!("invalid boolean `{s}` for `{key}`"))),
        }
    }

    /// Comma-separated reals.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        self.get_str(key)
            .map(|s| {
                s.split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| HarnessError::Config(format!("invalid list entry `{p}` for `{key}`")))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Settings shared by every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub mode: CapacityMode,
    pub solver: Solver,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub timestamp: bool,
}

impl RunSettings {
    pub fn from_settings(s: &Settings) -> Result<Self, HarnessError> {
        let mode = mode_from(s)?;
        let lmax: usize = s.get_or("solver.lmax", 16)?;
        if lmax < 2 {
            return Err(HarnessError::Config("solver.lmax must be at least 2".into()));
        }
        let seed: u64 = s.get_or("run.seed", 1)?;
        let harmonic = SolverConfig::with_lmax(lmax);
        let solver = match s.get_str("solver.method").unwrap_or("auto") {
            "auto" => Solver::Auto(harmonic),
            "harmonic" => Solver::Harmonic(harmonic),
            "closed_form" => Solver::ClosedForm,
            "wos" => Solver::Wos(WosConfig {
                num_walks: s.get_or("solver.walks", 100_000)?,
                seed,
                ..WosConfig::default()
            }),
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown solver `{other}` (expected auto, harmonic, closed_form or wos)"
                )))
            }
        };
        Ok(Self {
            mode,
            solver,
            seed,
            out_dir: PathBuf::from(s.get_str("run.out_dir").unwrap_or("out")),
            timestamp: !s.get_bool("run.no_timestamp", false)?,
        })
    }
}

fn mode_from(s: &Settings) -> Result<CapacityMode, HarnessError> {
    match s.get_str("solver.mode").unwrap_or("abs") {
        "abs" => Ok(CapacityMode::Absolute),
        "rel" => {
            let outer_radius: f64 = s.get_or("solver.r", 2.0)?;
            if !(outer_radius > 1.0) {
                return Err(HarnessError::Config(format!("outer radius R = {outer_radius} must exceed 1")));
            }
            Ok(CapacityMode::Relative { outer_radius })
        }
        other => Err(HarnessError::Config(format!("unknown mode `{other}` (expected abs or rel)"))),
    }
}
