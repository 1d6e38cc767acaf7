//! Scenario execution. Everything here builds outputs in memory; writing
//! them out is left to [`crate::output`].

use std::collections::BTreeMap;

use psnads::coherence::fast_contract_deviation;
use psnads::dressed::{decompose_trajectory, decomposition_table, projection_table};
use psnads::tdse::IntegratorStats;
use psnads::{
    build_psnads, decomposition_series, fast_correlation, inject_phase_noise, integrate, interference_visibility,
    ledger_multilevel, ledger_two_level, oracle_check, quasi_energy_series, slow_correlation, uniform_grid, Error,
    IntegrateOptions, NoiseModel, PhaseLedger, Table, Trajectory, DEFAULT_EPS_SLOW,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Analysis, ScenarioConfig};
use crate::error::RunError;

/// Absolute floor for analytic identities, in radians.
pub const CONTRACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Simulate,
    Decompose,
    Ledger,
    Correlate,
    OracleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOutcome {
    pub name: String,
    pub passed: bool,
    pub summary: serde_json::Value,
}

/// Scalar summary of one run, used for sweep aggregation. NaN when a
/// metric does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub slow_drift: f64,
    pub visibility: f64,
    pub oracle_max_error: f64,
    pub nonadiabatic_transfer: f64,
}

impl Default for Metrics {
    fn default() -> Self {
        Self {
            slow_drift: f64::NAN,
            visibility: f64::NAN,
            oracle_max_error: f64::NAN,
            nonadiabatic_transfer: f64::NAN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// Relative path to contents, in write order.
    pub files: BTreeMap<String, Vec<u8>>,
    pub analyses: Vec<AnalysisOutcome>,
    pub integrator: Option<IntegratorStats>,
    pub metrics: Metrics,
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

struct Sink {
    format: Format,
    files: BTreeMap<String, Vec<u8>>,
}

impl Sink {
    fn table(&mut self, stem: &str, table: &Table) {
        match self.format {
            Format::Csv => self.files.insert(format!("{stem}.csv"), table.to_csv().into_bytes()),
            Format::Json => self.files.insert(format!("{stem}.json"), json_bytes(table)),
        };
    }

    fn summary<T: Serialize>(&mut self, stem: &str, value: &T) {
        self.files.insert(format!("{stem}_summary.json"), json_bytes(value));
    }
}

/// Largest representable rounding in sums of phases of this size.
fn contract_tolerance(ledger: &PhaseLedger) -> f64 {
    let scale = ledger
        .ground_real
        .iter()
        .chain(&ledger.field_phase)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    CONTRACT_TOL.max(64.0 * f64::EPSILON * scale)
}

fn build_ledger(config: &ScenarioConfig, grid: &[f64]) -> Result<PhaseLedger, RunError> {
    let phi_g = config.system.ground().initial_phase;
    let ledger = if config.system.len() == 2 {
        let qe = quasi_energy_series(&config.system, &config.pulse, grid)?;
        ledger_two_level(&qe, &config.pulse, phi_g, grid)?
    } else {
        let offsets = config.offsets();
        let series = decomposition_series(&config.system, &config.pulse, grid, &offsets)?;
        ledger_multilevel(&series, &config.pulse, phi_g, &offsets)?
    };
    let residual = ledger.chain_residuals().max();
    let tol = contract_tolerance(&ledger);
    if residual > tol {
        return Err(RunError::Contract(format!(
            "ledger chain identity off by {residual:e} rad (tolerance {tol:e})"
        )));
    }
    Ok(ledger)
}

fn integrate_config(config: &ScenarioConfig, grid: &[f64]) -> Result<Trajectory, RunError> {
    let opts = IntegrateOptions::default()
        .with_frame(config.frame)
        .with_tolerances(config.tolerances.rel_tol, config.tolerances.abs_tol);
    Ok(integrate(&config.system, &config.pulse, &config.initial_state(), grid, &opts)?)
}

fn peak_index(config: &ScenarioConfig, grid: &[f64]) -> usize {
    let mut best = 0;
    for (k, &t) in grid.iter().enumerate() {
        if config.pulse.amplitude(t) > config.pulse.amplitude(grid[best]) {
            best = k;
        }
    }
    best
}

fn visibility_at(config: &ScenarioConfig, t: f64) -> Result<Option<f64>, RunError> {
    let d = build_psnads(&config.system, &config.pulse, t, &config.offsets())?;
    match interference_visibility(&d) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoVirtualComponents) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Excited population fraction at the end of the run, read on the dressed
/// pair for rotating-frame two-level runs and on the bare levels otherwise.
fn nonadiabatic_transfer(config: &ScenarioConfig, trajectory: &Trajectory) -> Result<f64, RunError> {
    let last = trajectory.last();
    let norm = last.norm_sqr();
    if norm <= 0.0 {
        return Ok(f64::NAN);
    }
    if config.system.len() == 2 && trajectory.frame == psnads::Frame::Rwa {
        let p = decompose_trajectory(trajectory, &config.system, &config.pulse)?;
        return Ok(p.last().unwrap().excited.norm_sqr() / norm);
    }
    Ok((1..last.amplitudes.len()).map(|j| last.population(j)).sum::<f64>() / norm)
}

fn max_pair_drift(ledger: &PhaseLedger) -> f64 {
    let n = ledger.virtual_count();
    if n < 2 {
        return f64::NAN;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&ledger.ground_virtual[i], &ledger.ground_virtual[j]);
            let r0 = a[0] - b[0];
            for k in 0..a.len() {
                worst = worst.max((a[k] - b[k] - r0).abs());
            }
        }
    }
    worst
}

fn run_analysis(
    analysis: &Analysis,
    config: &ScenarioConfig,
    grid: &[f64],
    ledger: &PhaseLedger,
    trajectory: Option<&Trajectory>,
    sink: &mut Sink,
    metrics: &mut Metrics,
) -> Result<AnalysisOutcome, RunError> {
    let name = analysis.name();
    let tol = contract_tolerance(ledger);
    let (passed, summary) = match *analysis {
        Analysis::FastCorrelation { i } => {
            let report = fast_correlation(ledger, i, DEFAULT_EPS_SLOW)?;
            let deviation = fast_contract_deviation(ledger, &report)?;
            if deviation > tol {
                return Err(RunError::Contract(format!(
                    "{name}: residual departs from offset + phi(t) + w t by {deviation:e} rad"
                )));
            }
            sink.table(&name, &report.to_table());
            (true, json!({ "report": report, "contract_deviation": deviation, "contract_tolerance": tol }))
        }
        Analysis::SlowCorrelation { i, j } => {
            let report = slow_correlation(ledger, i, j, DEFAULT_EPS_SLOW)?;
            if report.drift > tol {
                return Err(RunError::Contract(format!(
                    "{name}: virtual-virtual residual drifts by {:e} rad",
                    report.drift
                )));
            }
            sink.table(&name, &report.to_table());
            (true, json!({ "report": report, "contract_tolerance": tol }))
        }
        Analysis::Visibility => {
            let mut table = Table::new(vec!["t".into(), "visibility".into()]);
            for &t in grid {
                if let Some(v) = visibility_at(config, t)? {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(RunError::Contract(format!("{name}: V = {v} outside [0, 1] at t = {t}")));
                    }
                    table.push(vec![t, v]);
                }
            }
            if table.rows.is_empty() {
                return Err(RunError::Config(format!(
                    "{name}: the field never produces a virtual component on the grid"
                )));
            }
            let peak_t = grid[peak_index(config, grid)];
            let at_peak = visibility_at(config, peak_t)?.unwrap_or(f64::NAN);
            metrics.visibility = at_peak;
            sink.table(&name, &table);
            let vs = table.column("visibility").unwrap();
            (
                true,
                json!({
                    "peak_time": peak_t,
                    "visibility_at_peak": at_peak,
                    "min": vs.iter().copied().fold(f64::INFINITY, f64::min),
                    "max": vs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    "samples": vs.len(),
                }),
            )
        }
        Analysis::Noise { sigma, n, seed, dump } => {
            let model = NoiseModel {
                sigma,
                seed,
                realizations: n,
            };
            let ensemble = inject_phase_noise(ledger, &model)?;
            if !ensemble.report.ground_series_invariant {
                return Err(RunError::Contract(format!(
                    "{name}: a ground-state series changed under phase noise"
                )));
            }
            if dump {
                sink.table("noise_realizations", &ensemble.realizations_table());
            }
            (true, serde_json::to_value(&ensemble.report).expect("serializable"))
        }
        Analysis::OracleCheck { window_fraction } => {
            let trajectory = trajectory.expect("oracle runs with a trajectory");
            if !config.starts_in_ground() {
                return Err(RunError::Config(format!("{name}: initial_state must be the ground state")));
            }
            let report = oracle_check(trajectory, &config.system, &config.pulse, ledger, window_fraction)?;
            metrics.oracle_max_error = if ledger.virtual_count() >= 2 {
                report.max_virtual_drift
            } else {
                report.ground_max_error
            };
            (report.passed, serde_json::to_value(&report).expect("serializable"))
        }
    };
    sink.summary(&name, &summary);
    Ok(AnalysisOutcome { name, passed, summary })
}

/// Runs one scenario up to `stage` and returns its outputs.
pub fn execute(config: &ScenarioConfig, stage: Stage, format: Format) -> Result<Outcome, RunError> {
    let grid = uniform_grid(config.t_start, config.t_end, config.samples_per_cycle, config.pulse.carrier())?;
    let mut sink = Sink {
        format,
        files: BTreeMap::new(),
    };
    let mut metrics = Metrics::default();
    let mut analyses = Vec::new();

    let wants_trajectory = matches!(stage, Stage::Simulate | Stage::Decompose | Stage::OracleCheck);
    let trajectory = if wants_trajectory {
        let trajectory = integrate_config(config, &grid)?;
        if stage != Stage::Decompose {
            sink.table("trajectory", &trajectory.to_table());
        }
        Some(trajectory)
    } else {
        None
    };
    if let Some(traj) = &trajectory {
        metrics.nonadiabatic_transfer = nonadiabatic_transfer(config, traj)?;
    }

    if stage == Stage::Decompose {
        let offsets = config.offsets();
        let series = decomposition_series(&config.system, &config.pulse, &grid, &offsets)?;
        sink.table("decomposition", &decomposition_table(&series));
        if let Some(traj) = trajectory.as_ref().filter(|t| config.system.len() == 2 && t.frame == psnads::Frame::Rwa) {
            let projections = decompose_trajectory(traj, &config.system, &config.pulse)?;
            sink.table("projection", &projection_table(&projections));
        }
        return Ok(Outcome {
            files: sink.files,
            analyses,
            integrator: trajectory.map(|t| t.stats),
            metrics,
        });
    }

    let ledger = build_ledger(config, &grid)?;
    sink.table("ledger", &ledger.to_table());
    sink.summary(
        "ledger",
        &json!({
            "metadata": ledger.metadata(),
            "chain_residuals": ledger.chain_residuals(),
            "quadrature_error": ledger.quadrature_error(),
            "direct_route_deviation": ledger.direct_route_deviation(),
        }),
    );
    metrics.slow_drift = max_pair_drift(&ledger);
    if metrics.visibility.is_nan() {
        metrics.visibility = visibility_at(config, grid[peak_index(config, &grid)])
            .ok()
            .flatten()
            .unwrap_or(f64::NAN);
    }

    let selected: Vec<&Analysis> = match stage {
        Stage::Simulate => config.analyses.iter().collect(),
        Stage::Correlate => config
            .analyses
            .iter()
            .filter(|a| !matches!(a, Analysis::OracleCheck { .. }))
            .collect(),
        Stage::OracleCheck => config
            .analyses
            .iter()
            .filter(|a| matches!(a, Analysis::OracleCheck { .. }))
            .collect(),
        Stage::Ledger | Stage::Decompose => Vec::new(),
    };
    let default_oracle = Analysis::OracleCheck {
        window_fraction: psnads::oracle::DEFAULT_WINDOW_FRACTION,
    };
    let selected = if stage == Stage::OracleCheck && selected.is_empty() {
        vec![&default_oracle]
    } else {
        selected
    };
    for analysis in selected {
        analyses.push(run_analysis(
            analysis,
            config,
            &grid,
            &ledger,
            trajectory.as_ref(),
            &mut sink,
            &mut metrics,
        )?);
    }
    Ok(Outcome {
        files: sink.files,
        analyses,
        integrator: trajectory.map(|t| t.stats),
        metrics,
    })
}
