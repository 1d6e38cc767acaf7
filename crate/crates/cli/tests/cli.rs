use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const RESONANT: &str = r#"
t_start = 0.0
t_end = 120.0
samples_per_cycle = 20

[system]
levels = [
  { label = "g", bohr_frequency = 0.0 },
  { label = "e", bohr_frequency = 1.0 },
]
dipoles = [{ pair = [0, 1], coupling = 1.0 }]

[pulse]
carrier = 1.0
envelope = { shape = "constant", amplitude = 0.05, t_on = 0.0, t_off = 120.0 }

[[analyses]]
kind = "fast_correlation"
i = 0

[[analyses]]
kind = "noise"
sigma = 0.5
n = 200
seed = 3
"#;

const ADIABATIC: &str = r#"
t_start = 0.0
t_end = 8000.0
samples_per_cycle = 20

[system]
levels = [
  { label = "g", bohr_frequency = 0.0 },
  { label = "e", bohr_frequency = 1.1 },
]
dipoles = [{ pair = [0, 1], coupling = 1.0 }]

[pulse]
carrier = 1.0
envelope = { shape = "gaussian", peak = 0.02, center = 4000.0, fwhm = 1000.0 }

[[analyses]]
kind = "oracle_check"
"#;

fn psnads(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("scenario.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_psnads"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn out(dir: &Path) -> PathBuf {
    dir.join("out")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(out(dir).join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn resonant_scenario_writes_checksummed_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = psnads(dir.path(), &["simulate"], RESONANT);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trajectory.csv", "ledger.csv", "manifest.json", "noise_summary.json"] {
        assert!(out(dir.path()).join(f).is_file(), "{f} missing");
    }
    let m = manifest(dir.path());
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for entry in files {
        let bytes = fs::read(out(dir.path()).join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(m["passed"], true);
    assert_eq!(m["config"]["system"]["levels"][1]["label"], "e");
    let csv = fs::read_to_string(out(dir.path()).join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,re_0,im_0,re_1,im_1,norm_sqr\n"));
    assert!(csv.ends_with('\n'));
}

#[test]
fn negative_damping_names_the_field_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = RESONANT.replace(
        r#"{ label = "e", bohr_frequency = 1.0 }"#,
        r#"{ label = "e", bohr_frequency = 1.0, damping = -0.1 }"#,
    );
    let o = psnads(dir.path(), &["simulate"], &bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("damping"));
    assert!(!out(dir.path()).exists());
}

#[test]
fn unnormalized_initial_state_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("initial_state = [[1.0, 0.0], [0.1, 0.0]]\n{RESONANT}");
    let o = psnads(dir.path(), &["simulate"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("initial_state"));
}

#[test]
fn coarse_sampling_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = psnads(dir.path(), &["ledger"], &RESONANT.replace("samples_per_cycle = 20", "samples_per_cycle = 12"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("samples_per_cycle"));
}

#[test]
fn integration_failure_exits_3_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RESONANT.replacen("\n[system]", "\n[tolerances]\nrel_tol = 1e-40\nabs_tol = 1e-300\n\n[system]", 1);
    let o = psnads(dir.path(), &["simulate"], &cfg);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("t = "));
    assert!(!out(dir.path()).exists());
}

#[test]
fn json_format_replaces_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = psnads(dir.path(), &["ledger", "--format", "json"], RESONANT);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table: serde_json::Value = serde_json::from_slice(&fs::read(out(dir.path()).join("ledger.json")).unwrap()).unwrap();
    assert_eq!(table["columns"][1], "Phi_Gr");
    assert!(!out(dir.path()).join("ledger.csv").exists());
    assert!(!out(dir.path()).join("trajectory.json").exists());
}

#[test]
fn seed_flag_overrides_noise_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = psnads(dir.path(), &["correlate", "--seed", "99"], RESONANT);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let noise: serde_json::Value =
        serde_json::from_slice(&fs::read(out(dir.path()).join("noise_summary.json")).unwrap()).unwrap();
    assert_eq!(noise["seed"], 99);
    assert_eq!(noise["ground_series_invariant"], true);
}

#[test]
fn decompose_writes_decomposition_and_projection() {
    let dir = tempfile::tempdir().unwrap();
    let o = psnads(dir.path(), &["decompose"], RESONANT);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = fs::read_to_string(out(dir.path()).join("decomposition.csv")).unwrap();
    assert!(d.starts_with("t,C_r,C_v1,theta_1,omega_G,omega_Gv1\n"));
    assert!(out(dir.path()).join("projection.csv").is_file());
}

#[test]
fn oracle_check_reports_the_discrepancy_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = psnads(dir.path(), &["oracle-check"], ADIABATIC);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(dir.path());
    let oracle = &m["analyses"][0];
    assert_eq!(oracle["name"], "oracle");
    assert_eq!(oracle["passed"], true);
    let err = oracle["summary"]["ground_max_error"].as_f64().unwrap();
    assert!(err < 1e-2, "{err}");
    assert_eq!(oracle["summary"]["tolerance"].as_f64().unwrap(), 1e-2);
}

#[test]
fn sweep_writes_one_row_per_value_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{RESONANT}\n[sweep]\npath = \"pulse.envelope.amplitude\"\nvalues = [0.05, 0.01, 0.04, 0.02, 0.03]\n");
    let o = psnads(dir.path(), &["sweep", "--jobs", "3"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out(dir.path()).join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,value,slow_drift,visibility,oracle_max_error,nonadiabatic_transfer");
    assert_eq!(lines.len(), 6);
    let values: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values, vec![0.05, 0.01, 0.04, 0.02, 0.03]);
    for k in 0..5 {
        assert!(out(dir.path()).join(format!("point_{k:03}/manifest.json")).is_file());
    }
}

#[test]
fn sweep_rejects_empty_values_and_unknown_paths() {
    let dir = tempfile::tempdir().unwrap();
    let empty = format!("{RESONANT}\n[sweep]\npath = \"pulse.envelope.amplitude\"\nvalues = []\n");
    assert_eq!(psnads(dir.path(), &["sweep"], &empty).status.code(), Some(2));
    let unknown = format!("{RESONANT}\n[sweep]\npath = \"pulse.envelope.width\"\nvalues = [1.0]\n");
    let o = psnads(dir.path(), &["sweep"], &unknown);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep.path"));
    assert!(!out(dir.path()).exists());
}

#[test]
fn missing_config_is_exit_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_psnads"))
        .args(["simulate", "--config", "/nonexistent/scenario.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_example_configs_parse() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    for name in ["two_level.toml", "ladder.toml"] {
        let cfg = psnads_cli::ScenarioConfig::from_path(&docs.join(name)).unwrap();
        assert!(!cfg.analyses.is_empty());
    }
}
