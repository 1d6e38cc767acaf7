//! Command-line runner for psnads scenarios.
//!
//! A scenario is a TOML file describing a level system, a pulse, a time
//! window and a list of analyses. Each subcommand runs the scenario up to a
//! stage and writes plot-ready CSV (or JSON) files plus a `manifest.json`
//! with checksums.
//!
//! Exit codes: 0 success, 1 an analytic invariant failed, 2 bad
//! configuration, 3 integration failure. Nothing is written on a nonzero
//! exit.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub use config::{Analysis, ScenarioConfig, SweepAxis, Tolerances};
pub use error::RunError;
pub use output::RunManifest;
pub use run::{execute, Format, Metrics, Outcome, Stage};

use output::{commit, file_entries, manifest_bytes, unix_now, Versions};

#[derive(Debug, Parser)]
#[command(name = "psnads", version, about = "Dressed-state phase ledgers for driven few-level systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate, build the ledger and run every configured analysis.
    Simulate(CommonArgs),
    /// Dressed decomposition along the grid (and projections for two levels).
    Decompose(CommonArgs),
    /// Material-phase ledger only.
    Ledger(CommonArgs),
    /// Ledger plus the correlation, visibility and noise analyses.
    Correlate(CommonArgs),
    /// One run per value of the `[sweep]` axis, plus `sweep.csv`.
    Sweep(CommonArgs),
    /// Ledger against the integrated dynamics.
    OracleCheck(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads for sweeps and noise ensembles.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides every noise seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl Command {
    fn parts(&self) -> (&'static str, Option<Stage>, &CommonArgs) {
        match self {
            Command::Simulate(a) => ("simulate", Some(Stage::Simulate), a),
            Command::Decompose(a) => ("decompose", Some(Stage::Decompose), a),
            Command::Ledger(a) => ("ledger", Some(Stage::Ledger), a),
            Command::Correlate(a) => ("correlate", Some(Stage::Correlate), a),
            Command::Sweep(a) => ("sweep", None, a),
            Command::OracleCheck(a) => ("oracle-check", Some(Stage::OracleCheck), a),
        }
    }
}

fn apply_seed(config: &mut ScenarioConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        for a in &mut config.analyses {
            if let Analysis::Noise { seed, .. } = a {
                *seed = s;
            }
        }
    }
}

fn manifest_for(command: &str, config: &ScenarioConfig, files: &BTreeMap<String, Vec<u8>>, outcome: Option<&Outcome>, started: Instant) -> RunManifest {
    let analyses = outcome.map(|o| o.analyses.clone()).unwrap_or_default();
    RunManifest {
        command: command.to_string(),
        config: config.clone(),
        files: file_entries(files),
        versions: Versions::default(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        finished_unix_seconds: unix_now(),
        integrator: outcome.and_then(|o| o.integrator),
        metrics: outcome.map(|o| o.metrics),
        passed: analyses.iter().all(|a| a.passed),
        analyses,
    }
}

/// Column layout of the aggregate sweep table.
pub const SWEEP_COLUMNS: [&str; 6] = [
    "index",
    "value",
    "slow_drift",
    "visibility",
    "oracle_max_error",
    "nonadiabatic_transfer",
];

/// Runs one point per sweep value, in parallel, and collects every output
/// under `point_NNN/` plus the aggregate table.
pub fn sweep(
    table: &toml::Table,
    base: &ScenarioConfig,
    seed: Option<u64>,
    format: Format,
) -> Result<(BTreeMap<String, Vec<u8>>, Vec<Metrics>), RunError> {
    let axis = base
        .sweep
        .clone()
        .ok_or_else(|| RunError::Config("sweep: the config has no [sweep] table".into()))?;
    let mut point_table = table.clone();
    point_table.remove("sweep");
    let results: Vec<Result<(BTreeMap<String, Vec<u8>>, Metrics), RunError>> = axis
        .values
        .par_iter()
        .enumerate()
        .map(|(k, &value)| {
            let started = Instant::now();
            let mut t = point_table.clone();
            config::set_path(&mut t, &axis.path, value)?;
            let mut config = ScenarioConfig::from_table(t)?;
            apply_seed(&mut config, seed);
            let outcome = execute(&config, Stage::Simulate, format)?;
            let prefix = format!("point_{k:03}");
            let manifest = manifest_for("simulate", &config, &outcome.files, Some(&outcome), started);
            let mut files: BTreeMap<String, Vec<u8>> = outcome
                .files
                .iter()
                .map(|(name, bytes)| (format!("{prefix}/{name}"), bytes.clone()))
                .collect();
            files.insert(format!("{prefix}/manifest.json"), manifest_bytes(&manifest));
            Ok((files, outcome.metrics))
        })
        .collect();

    let mut files = BTreeMap::new();
    let mut metrics = Vec::with_capacity(results.len());
    let mut aggregate = psnads::Table::new(SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect());
    for (k, result) in results.into_iter().enumerate() {
        let (point_files, m) = result?;
        files.extend(point_files);
        aggregate.push(vec![
            k as f64,
            axis.values[k],
            m.slow_drift,
            m.visibility,
            m.oracle_max_error,
            m.nonadiabatic_transfer,
        ]);
        metrics.push(m);
    }
    match format {
        Format::Csv => files.insert("sweep.csv".into(), aggregate.to_csv().into_bytes()),
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(&aggregate).expect("serializable");
            v.push(b'\n');
            files.insert("sweep.json".into(), v)
        }
    };
    Ok((files, metrics))
}

fn run_command(command: &Command) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let (name, stage, args) = command.parts();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(format!("config: cannot read {}: {e}", args.config.display())))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| RunError::Config(e.to_string()))?;
    let mut config = ScenarioConfig::from_table(table.clone())?;
    apply_seed(&mut config, args.seed);
    if let Some(out) = &args.output {
        config.output_dir = out.clone();
    }
    if args.jobs == Some(0) {
        return Err(RunError::Config("jobs: must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Config(format!("jobs: {e}")))?;

    let (files, outcome) = pool.install(|| -> Result<_, RunError> {
        match stage {
            Some(stage) => {
                let outcome = execute(&config, stage, args.format)?;
                Ok((outcome.files.clone(), Some(outcome)))
            }
            None => Ok((sweep(&table, &config, args.seed, args.format)?.0, None)),
        }
    })?;
    let manifest = manifest_for(name, &config, &files, outcome.as_ref(), started);
    commit(&config.output_dir, &files, &manifest_bytes(&manifest))?;
    Ok(manifest)
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_command(&cli.command) {
        Ok(manifest) => {
            for a in &manifest.analyses {
                println!("{:<24} {}", a.name, if a.passed { "pass" } else { "FAIL" });
            }
            println!(
                "wrote {} files to {}",
                manifest.files.len() + 1,
                manifest.config.output_dir.display()
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
