//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use psnads::coherence::fast_contract_deviation;
use psnads::oracle::DEFAULT_WINDOW_FRACTION;
use psnads::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect()
}

fn two_level(w_g: f64, w_e: f64, gamma_g: f64, gamma_e: f64, phi_g: f64) -> LevelSystem {
    LevelSystem::ladder(
        Level::new("g", w_g).with_damping(gamma_g).with_initial_phase(phi_g),
        vec![(Level::new("e", w_e).with_damping(gamma_e), 1.0)],
    )
    .unwrap()
}

fn rabi_oracle() -> Check {
    let started = Instant::now();
    let carrier = 1.0;
    let rabi = 0.05 * carrier;
    let sys = two_level(0.0, carrier, 0.0, 0.0, 0.0);
    let t_end = 10.0 * TAU / rabi;
    let pulse = FieldPulse::continuous(carrier, rabi, 0.0, t_end).map_err(|e| e.to_string())?;
    let t = uniform_grid(0.0, t_end, 20, carrier).unwrap();
    let traj = integrate(&sys, &pulse, &StateVector::ground(&sys, 0.0), &t, &IntegrateOptions::default())
        .map_err(|e| e.to_string())?;
    let err = traj
        .samples
        .iter()
        .map(|s| (s.population(1) - (0.5 * rabi * s.t).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    let secs = started.elapsed().as_secs_f64();
    ensure(err < 1e-6 && secs < 5.0, format!("max |P_e - sin^2| = {err:.2e}, {secs:.2} s"))
}

fn norm_decay() -> Check {
    let gamma = 0.2;
    let sys = LevelSystem::ladder(
        Level::new("g", 0.0).with_damping(gamma),
        vec![(Level::new("e", 1.03).with_damping(gamma), 1.0)],
    )
    .unwrap();
    let pulse = FieldPulse::new(
        1.0,
        Envelope::Sech { peak: 0.3, center: 40.0, width: 8.0 },
        PhaseModulation::LinearChirp { phi0: 0.7, rate: 2e-3 },
    )
    .unwrap();
    let t = uniform_grid(0.0, 20.0 / gamma, 20, 1.0).unwrap();
    let traj = integrate(&sys, &pulse, &StateVector::ground(&sys, 0.0), &t, &IntegrateOptions::default())
        .map_err(|e| e.to_string())?;
    let err = traj
        .samples
        .iter()
        .map(|s| (s.norm_sqr() - (-gamma * s.t).exp()).abs())
        .fold(0.0, f64::max);
    ensure(err < 1e-8, format!("max |norm^2 - exp(-gamma t)| = {err:.2e} over [0, {}]", 20.0 / gamma))
}

fn chain_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w_g = rng.random_range(-0.5..0.5);
        let carrier = rng.random_range(0.5..2.0);
        let detuning = rng.random_range(-0.4..0.4);
        let sys = two_level(
            w_g,
            w_g + carrier + detuning,
            rng.random_range(0.0..0.02),
            rng.random_range(0.0..0.1),
            rng.random_range(-PI..PI),
        );
        let pulse = FieldPulse::new(
            carrier,
            Envelope::Gaussian {
                peak: rng.random_range(0.0..0.3),
                center: rng.random_range(20.0..80.0),
                fwhm: rng.random_range(5.0..40.0),
            },
            PhaseModulation::LinearChirp {
                phi0: rng.random_range(-PI..PI),
                rate: rng.random_range(-1e-3..1e-3),
            },
        )
        .unwrap();
        let t = grid(rng.random_range(-5.0..5.0), 100.0, 1000);
        let qe = quasi_energy_series(&sys, &pulse, &t).map_err(|e| e.to_string())?;
        let l = ledger_two_level(&qe, &pulse, sys.ground().initial_phase, &t).map_err(|e| e.to_string())?;
        let e = l.excited.as_ref().unwrap();
        for k in 0..t.len() {
            // field phase straight from the pulse definition
            let field = pulse.phase_modulation().value(t[k]) + carrier * t[k];
            worst = worst
                .max((l.ground_virtual[0][k] - l.ground_real[k] - field).abs())
                .max((e.real[k] - l.ground_virtual[0][k] - e.nad[k]).abs())
                .max((e.virtual_[k] - e.real[k] + field).abs());
        }
    }
    ensure(worst < 1e-10, format!("100 scenarios, worst identity residual {worst:.2e} rad"))
}

struct Ladder {
    sys: LevelSystem,
    pulse: FieldPulse,
    offsets: Vec<f64>,
    peak: f64,
    fwhm: f64,
}

fn four_level_ladder() -> Ladder {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let offsets: Vec<f64> = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
    let peak = 0.04;
    let fwhm = 1600.0;
    let sys = LevelSystem::ladder(
        Level::new("g", 0.0),
        vec![
            (Level::new("e1", 1.25), 1.0),
            (Level::new("e2", 1.4), 0.8),
            (Level::new("e3", 1.6), 0.6),
        ],
    )
    .unwrap();
    let pulse = FieldPulse::new(
        1.0,
        Envelope::Gaussian { peak, center: 0.0, fwhm },
        PhaseModulation::LinearChirp { phi0: 0.2, rate: 1e-6 },
    )
    .unwrap();
    Ladder { sys, pulse, offsets, peak, fwhm }
}

fn ladder_ledger(l: &Ladder, t: &[f64]) -> std::result::Result<PhaseLedger, String> {
    let series = decomposition_series(&l.sys, &l.pulse, t, &l.offsets).map_err(|e| e.to_string())?;
    ledger_multilevel(&series, &l.pulse, 0.0, &l.offsets).map_err(|e| e.to_string())
}

fn virtual_stationarity() -> Check {
    let l = four_level_ladder();
    // regime: every detuning >= 5 peak Rabi frequencies, fwhm >= 100 / min generalized Rabi frequency
    let mut min_generalized = f64::INFINITY;
    for i in 1..=3 {
        let d = l.sys.detuning(i, 1.0);
        let w = l.sys.coupling(0, i) * l.peak;
        if d < 5.0 * w {
            return Err(format!("level {i} outside the adiabatic regime"));
        }
        min_generalized = min_generalized.min((d * d + w * w).sqrt());
    }
    if l.fwhm < 100.0 / min_generalized {
        return Err("pulse too short for the adiabatic regime".into());
    }
    let t = uniform_grid(-4.0 * l.fwhm, 4.0 * l.fwhm, 20, 1.0).unwrap();
    let ledger = ladder_ledger(&l, &t)?;
    let mut analytic = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            analytic = analytic.max(slow_correlation(&ledger, i, j, DEFAULT_EPS_SLOW).map_err(|e| e.to_string())?.drift);
        }
    }
    let traj = integrate(&l.sys, &l.pulse, &StateVector::ground(&l.sys, t[0]), &t, &IntegrateOptions::default())
        .map_err(|e| e.to_string())?;
    let report = oracle_check(&traj, &l.sys, &l.pulse, &ledger, DEFAULT_WINDOW_FRACTION).map_err(|e| e.to_string())?;
    ensure(
        analytic <= 1e-10 && report.max_virtual_drift < 1e-2,
        format!(
            "analytic drift {analytic:.2e} rad, numeric drift {:.2e} rad (fwhm {} >= {:.0})",
            report.max_virtual_drift,
            l.fwhm,
            100.0 / min_generalized
        ),
    )
}

fn fast_residual() -> Check {
    let l = four_level_ladder();
    let t = uniform_grid(-4.0 * l.fwhm, 4.0 * l.fwhm, 20, 1.0).unwrap();
    let ledger = ladder_ledger(&l, &t)?;
    let mut worst = 0.0f64;
    let mut labels = true;
    for i in 0..3 {
        let fast = fast_correlation(&ledger, i, DEFAULT_EPS_SLOW).map_err(|e| e.to_string())?;
        for (k, &tk) in t.iter().enumerate() {
            let expected = l.offsets[i] + l.pulse.phase_modulation().value(tk) + tk;
            worst = worst.max((fast.residual[k] - expected).abs());
        }
        worst = worst.max(fast_contract_deviation(&ledger, &fast).map_err(|e| e.to_string())?);
        labels &= fast.classification == Classification::Hidden;
        for j in 0..3 {
            if i != j {
                let slow = slow_correlation(&ledger, i, j, DEFAULT_EPS_SLOW).map_err(|e| e.to_string())?;
                labels &= slow.classification == Classification::High;
            }
        }
    }
    ensure(
        worst < 1e-10 && labels,
        format!("max deviation {worst:.2e} rad, (v,r) hidden and (v,v) high: {labels}"),
    )
}

fn stark_shift() -> Check {
    let mut worst = 0.0f64;
    for rabi in [1e-3, 0.01, 0.05] {
        let detuning = 20.0 * rabi;
        let qe = quasi_energies(0.3, 0.3 + 1.0 + detuning, 1.0, rabi, 0.0, 0.0);
        let expected = -rabi * rabi / (4.0 * detuning);
        worst = worst.max(((qe.ground.re - 0.3) / expected - 1.0).abs());
    }
    ensure(worst < 0.02, format!("worst relative deviation {:.3}%", 100.0 * worst))
}

fn two_level_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let detuning: f64 = rng.random_range(1e-4..3.0);
        let rabi: f64 = rng.random_range(0.0..3.0);
        let sys = two_level(0.0, 1.0 + detuning, 0.0, 0.0, 0.0);
        let pulse = FieldPulse::continuous(1.0, rabi, -1.0, 1.0).unwrap();
        let d = build_psnads(&sys, &pulse, 0.0, &[0.0]).map_err(|e| e.to_string())?;
        // half-angle formulas from cos(theta) = detuning / generalized Rabi frequency
        let cos_theta = detuning / (detuning * detuning + rabi * rabi).sqrt();
        let c = ((1.0 + cos_theta) / 2.0).sqrt();
        let s = ((1.0 - cos_theta) / 2.0).sqrt();
        worst = worst.max((d.real_strength - c).abs()).max((d.virtuals[0].strength - s).abs());
    }
    ensure(worst < 1e-12, format!("1000 draws, worst strength error {worst:.2e}"))
}

fn zero_field() -> Check {
    let (w_g, phi_g) = (0.37, 1.3);
    let sys = LevelSystem::ladder(
        Level::new("g", w_g).with_initial_phase(phi_g),
        vec![(Level::new("e1", 1.5), 1.0), (Level::new("e2", 1.8), 0.5)],
    )
    .unwrap();
    let pulse = FieldPulse::new(1.0, Envelope::Gaussian { peak: 0.0, center: 50.0, fwhm: 10.0 }, PhaseModulation::default()).unwrap();
    let t = grid(0.0, 100.0, 1000);
    let series = decomposition_series(&sys, &pulse, &t, &[0.0, 0.0]).map_err(|e| e.to_string())?;
    let all_zero = series.iter().all(|d| d.virtuals.iter().all(|v| v.strength == 0.0) && d.real_strength == 1.0);
    let ledger = ledger_multilevel(&series, &pulse, phi_g, &[0.0, 0.0]).map_err(|e| e.to_string())?;
    let worst = t
        .iter()
        .zip(&ledger.ground_real)
        .map(|(t, p)| (p - (phi_g + w_g * t)).abs())
        .fold(0.0, f64::max);
    // rounding of 1000 trapezoid steps of a constant
    ensure(all_zero && worst < 1e-12, format!("C_vi all zero: {all_zero}, max |Phi_Gr - (phi_g + w_g t)| = {worst:.2e}"))
}

const SWEEP_CONFIG: &str = r#"
t_start = 0.0
t_end = 1280.0
samples_per_cycle = 20

[system]
levels = [
  { label = "g", bohr_frequency = 0.0 },
  { label = "e", bohr_frequency = 1.1 },
]
dipoles = [{ pair = [0, 1], coupling = 1.0 }]

[pulse]
carrier = 1.0
envelope = { shape = "gaussian", peak = 0.05, center = 640.0, fwhm = 20.0 }

[[analyses]]
kind = "noise"
sigma = 1.0
n = 500
seed = 5

[sweep]
path = "pulse.envelope.fwhm"
values = [20.0, 40.0, 80.0, 160.0]
"#;

fn run_cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let cfg = dir.join("scenario.toml");
    fs::write(&cfg, SWEEP_CONFIG).map_err(|e| e.to_string())?;
    let o = Command::new(env!("CARGO_BIN_EXE_psnads"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&o.stderr).into_owned())
    }
}

fn adiabatic_scaling() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("sweep");
    run_cli(dir.path(), &["sweep", "--output", out.to_str().unwrap()])?;
    let csv = fs::read_to_string(out.join("sweep.csv")).map_err(|e| e.to_string())?;
    let transfer: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    let monotone = transfer.windows(2).all(|w| w[1] <= w[0]);
    let last = *transfer.last().unwrap();
    ensure(
        transfer.len() == 4 && monotone && last < 1e-3,
        format!("transfer at fwhm x1,2,4,8: {}", transfer.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(", ")),
    )
}

fn noise_separation() -> Check {
    let started = Instant::now();
    let sys = two_level(0.0, 1.1, 0.0, 0.01, 0.4);
    let pulse = FieldPulse::new(1.0, Envelope::Gaussian { peak: 0.05, center: 100.0, fwhm: 40.0 }, PhaseModulation::default()).unwrap();
    let t = uniform_grid(0.0, 200.0, 20, 1.0).unwrap();
    let qe = quasi_energy_series(&sys, &pulse, &t).map_err(|e| e.to_string())?;
    let ledger = ledger_two_level(&qe, &pulse, 0.4, &t).map_err(|e| e.to_string())?;
    let model = NoiseModel { sigma: 1.0, seed: 12345, realizations: 10_000 };
    let ensemble = inject_phase_noise(&ledger, &model).map_err(|e| e.to_string())?;
    let mut identical = ensemble.report.ground_series_invariant;
    for k in [0, 1, 4999, 9999] {
        let r = ensemble.realization(k);
        identical &= r.ground_real.iter().zip(&ledger.ground_real).all(|(a, b)| a.to_bits() == b.to_bits());
        identical &= r.ground_virtual[0].iter().zip(&ledger.ground_virtual[0]).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    // independent estimate from the kicks themselves
    let n = ensemble.kicks.len() as f64;
    let (c, s) = ensemble.kicks.iter().fold((0.0, 0.0), |(c, s), k| (c + k.cos(), s + k.sin()));
    let variance = 1.0 - (c * c + s * s).sqrt() / n;
    let expected = 1.0 - (-0.5f64).exp();
    let rel = (variance - expected).abs() / expected;
    let agrees = (variance - ensemble.report.circular_variance).abs() < 1e-9;
    let secs = started.elapsed().as_secs_f64();
    ensure(
        identical && rel < 0.05 && agrees && secs < 60.0,
        format!("ground series bit-identical: {identical}, circular variance {variance:.4} vs {expected:.4} ({:.2}%), {secs:.1} s", 100.0 * rel),
    )
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn reproducibility() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        run_cli(dir.path(), &["sweep", "--jobs", if k == 0 { "1" } else { "4" }, "--output", out.to_str().unwrap()])?;
        runs.push(data_files(&out));
    }
    let same = runs[0] == runs[1] && !runs[0].is_empty();
    ensure(same, format!("{} data files byte-identical across runs with 1 and 4 jobs: {same}", runs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("rabi oracle", rabi_oracle),
        ("norm decay", norm_decay),
        ("two-level chain identities", chain_identities),
        ("virtual-virtual stationarity", virtual_stationarity),
        ("fast residual and classification", fast_residual),
        ("stark shift perturbative limit", stark_shift),
        ("two-level reduction", two_level_reduction),
        ("zero-field reduction", zero_field),
        ("adiabatic scaling", adiabatic_scaling),
        ("noise separation", noise_separation),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", k + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
