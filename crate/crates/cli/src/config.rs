//! Scenario configuration read from TOML.

use std::path::{Path, PathBuf};

use psnads::tdse::MIN_SAMPLES_PER_CYCLE;
use psnads::{Complex64, FieldPulse, Frame, LevelSystem, StateVector};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    FastCorrelation {
        i: usize,
    },
    SlowCorrelation {
        i: usize,
        j: usize,
    },
    Visibility,
    Noise {
        sigma: f64,
        n: usize,
        seed: u64,
        /// Also write one row per realization.
        #[serde(default)]
        dump: bool,
    },
    OracleCheck {
        #[serde(default = "default_window_fraction")]
        window_fraction: f64,
    },
}

fn default_window_fraction() -> f64 {
    psnads::oracle::DEFAULT_WINDOW_FRACTION
}

impl Analysis {
    /// Stable name, also used as the output file stem.
    pub fn name(&self) -> String {
        match self {
            Analysis::FastCorrelation { i } => format!("fast_correlation_{i}"),
            Analysis::SlowCorrelation { i, j } => format!("slow_correlation_{i}_{j}"),
            Analysis::Visibility => "visibility".into(),
            Analysis::Noise { .. } => "noise".into(),
            Analysis::OracleCheck { .. } => "oracle".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the config, e.g. `pulse.envelope.fwhm` or
    /// `system.levels.1.damping`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: LevelSystem,
    pub pulse: FieldPulse,
    /// `[re, im]` per level. Defaults to the ground state.
    #[serde(default)]
    pub initial_state: Option<Vec<[f64; 2]>>,
    pub t_start: f64,
    pub t_end: f64,
    pub samples_per_cycle: usize,
    /// One per excited level; all zero when omitted.
    #[serde(default)]
    pub offsets: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxis>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("psnads-out")
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> RunError {
    RunError::Config(format!("{field}: {reason}"))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        let value: toml::Table = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        Self::from_table(value)
    }

    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, RunError> {
        let config: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return Err(config_err("t_end", "t_start and t_end must be finite"));
        }
        if self.t_end <= self.t_start {
            return Err(config_err(
                "t_end",
                format!("must exceed t_start ({} <= {})", self.t_end, self.t_start),
            ));
        }
        if self.samples_per_cycle < MIN_SAMPLES_PER_CYCLE {
            return Err(config_err(
                "samples_per_cycle",
                format!("{} is below the minimum of {MIN_SAMPLES_PER_CYCLE}", self.samples_per_cycle),
            ));
        }
        let Tolerances { rel_tol, abs_tol } = self.tolerances;
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(config_err("tolerances.rel_tol", format!("{rel_tol} must be > 0")));
        }
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(config_err("tolerances.abs_tol", format!("{abs_tol} must be > 0")));
        }
        if let Some(state) = &self.initial_state {
            if state.len() != self.system.len() {
                return Err(config_err(
                    "initial_state",
                    format!("{} amplitudes for {} levels", state.len(), self.system.len()),
                ));
            }
            if state.iter().flatten().any(|x| !x.is_finite()) {
                return Err(config_err("initial_state", "non-finite amplitude"));
            }
            let norm: f64 = state.iter().map(|[re, im]| re * re + im * im).sum();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(config_err("initial_state", format!("norm {norm} differs from 1 by more than 1e-9")));
            }
        }
        let n = self.system.excited_count();
        if let Some(offsets) = &self.offsets {
            if offsets.len() != n {
                return Err(config_err("offsets", format!("{} values for {n} excited levels", offsets.len())));
            }
            if offsets.iter().any(|o| !o.is_finite()) {
                return Err(config_err("offsets", "non-finite offset"));
            }
            if self.system.len() == 2 && offsets[0] != 0.0 {
                return Err(config_err("offsets", "a two-level ledger has a single virtual with zero offset"));
            }
        }
        let virtuals = if self.system.len() == 2 { 1 } else { n };
        for a in &self.analyses {
            match *a {
                Analysis::FastCorrelation { i } if i >= virtuals => {
                    return Err(config_err("analyses.i", format!("virtual {i} out of range ({virtuals} virtuals)")));
                }
                Analysis::SlowCorrelation { i, j } if i >= virtuals || j >= virtuals => {
                    return Err(config_err(
                        "analyses.j",
                        format!("pair ({i}, {j}) out of range ({virtuals} virtuals)"),
                    ));
                }
                Analysis::Noise { sigma, n, .. } => {
                    if !(sigma.is_finite() && sigma >= 0.0) {
                        return Err(config_err("analyses.sigma", format!("{sigma} must be finite and >= 0")));
                    }
                    if n == 0 {
                        return Err(config_err("analyses.n", "need at least one realization"));
                    }
                    if self.system.len() != 2 {
                        return Err(config_err("analyses.kind", "noise needs a two-level system"));
                    }
                }
                Analysis::OracleCheck { window_fraction } if !(window_fraction > 0.0 && window_fraction <= 1.0) => {
                    return Err(config_err("analyses.window_fraction", format!("{window_fraction} must lie in (0, 1]")));
                }
                _ => {}
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(config_err("sweep.values", "empty"));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(config_err("sweep.values", "non-finite value"));
            }
        }
        Ok(())
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.offsets
            .clone()
            .unwrap_or_else(|| vec![0.0; self.system.excited_count()])
    }

    /// Amplitudes are taken relative to the bare levels' initial phases, so
    /// level `j` starts as `c_j e^{-i phi_j}`.
    pub fn initial_state(&self) -> StateVector {
        match &self.initial_state {
            None => StateVector::ground(&self.system, self.t_start),
            Some(state) => StateVector::new(
                state
                    .iter()
                    .zip(self.system.levels())
                    .map(|(&[re, im], level)| Complex64::new(re, im) * Complex64::from_polar(1.0, -level.initial_phase))
                    .collect(),
                self.t_start,
            ),
        }
    }

    pub fn starts_in_ground(&self) -> bool {
        match &self.initial_state {
            None => true,
            Some(state) => state[1..].iter().all(|[re, im]| *re == 0.0 && *im == 0.0),
        }
    }
}

fn lookup<'a>(node: &'a mut toml::Value, segments: &[&str]) -> Option<&'a mut toml::Value> {
    let Some((seg, rest)) = segments.split_first() else {
        return Some(node);
    };
    let next = match node {
        toml::Value::Table(t) => t.get_mut(*seg),
        toml::Value::Array(a) => seg.parse::<usize>().ok().and_then(|k| a.get_mut(k)),
        _ => None,
    }?;
    lookup(next, rest)
}

/// Replaces the number at a dotted path. Numeric segments index arrays.
/// Integer fields only accept integral values.
pub fn set_path(table: &mut toml::Table, path: &str, value: f64) -> Result<(), RunError> {
    let bad = |reason: String| RunError::Config(format!("sweep.path: {reason}"));
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(bad(format!("malformed path '{path}'")));
    }
    let node = table
        .get_mut(segments[0])
        .and_then(|root| lookup(root, &segments[1..]))
        .ok_or_else(|| bad(format!("'{path}' does not resolve")))?;
    match node {
        toml::Value::Float(_) => *node = toml::Value::Float(value),
        toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => {
            *node = toml::Value::Integer(value as i64)
        }
        toml::Value::Integer(_) => return Err(bad(format!("'{path}' is an integer, got {value}"))),
        other => return Err(bad(format!("'{path}' is a {}, not a number", other.type_str()))),
    }
    Ok(())
}
