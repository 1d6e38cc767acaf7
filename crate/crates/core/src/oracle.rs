//! Brute-force checks of the analytic ledger against integrated dynamics.
//!
//! Numeric phases are read from rotating-frame amplitudes and lifted back to
//! the lab convention by adding `w_g (t - t_0)` for the ground level and
//! `w_g (t - t_0) + w t` for excited levels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dressed::decompose_trajectory;
use crate::error::{Error, Result};
use crate::ledger::PhaseLedger;
use crate::model::{FieldPulse, Frame, LevelSystem};
use crate::tdse::{phase_of_series, Trajectory};

/// Agreement threshold for the oracle comparisons, in radians.
pub const ORACLE_TOLERANCE: f64 = 1e-2;

/// Virtual-phase comparisons use samples where the envelope is at least
/// this fraction of its peak (the FWHM of a Gaussian).
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualDrift {
    pub i: usize,
    pub j: usize,
    pub drift: f64,
    /// Mean numeric residual over the window.
    pub mean_residual: f64,
    /// `offset_i - offset_j`
    pub expected_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Largest `|Phi_Gr(ledger) - Phi_Gr(numeric)|` over the full grid.
    pub ground_max_error: f64,
    pub ground_samples: usize,
    pub virtual_drifts: Vec<VirtualDrift>,
    pub max_virtual_drift: f64,
    pub window: Option<(f64, f64)>,
    pub window_samples: usize,
    pub tolerance: f64,
    /// Two-level: ground phase within tolerance. Multi-level: every
    /// virtual-virtual drift within tolerance.
    pub passed: bool,
}

fn wrap_to(reference: f64, value: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    value + tau * ((reference - value) / tau).round()
}

/// Numeric `Phi_Gr` from the trajectory: the dressed ground projection for
/// two levels, the bare ground amplitude otherwise.
pub fn numeric_ground_phase(trajectory: &Trajectory, system: &LevelSystem, pulse: &FieldPulse) -> Result<Vec<f64>> {
    require_rwa(trajectory)?;
    let overlaps: Vec<Complex64> = if system.len() == 2 {
        decompose_trajectory(trajectory, system, pulse)?
            .into_iter()
            .map(|p| p.ground)
            .collect()
    } else {
        trajectory.component(0)
    };
    let phase = phase_of_series(&trajectory.t_grid, &overlaps)?;
    let t0 = trajectory.t_grid[0];
    let w_g = system.ground().bohr_frequency;
    Ok(phase
        .values
        .iter()
        .zip(&trajectory.t_grid)
        .map(|(p, t)| p + w_g * (t - t0))
        .collect())
}

/// Numeric `Phi_Gv,i` over a sample range, from the bare excited amplitude
/// of level `i + 1` with the virtual offset applied as a basis phase.
pub fn numeric_virtual_phase(
    trajectory: &Trajectory,
    system: &LevelSystem,
    pulse: &FieldPulse,
    i: usize,
    offset: f64,
    range: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    require_rwa(trajectory)?;
    if i + 1 >= system.len() {
        return Err(Error::Index {
            what: "virtual component",
            index: i,
            len: system.excited_count(),
        });
    }
    let t = &trajectory.t_grid[range.clone()];
    let amps: Vec<Complex64> = trajectory.samples[range].iter().map(|s| s.amplitudes[i + 1]).collect();
    let phase = phase_of_series(t, &amps)?;
    let t0 = trajectory.t_grid[0];
    let w_g = system.ground().bohr_frequency;
    Ok(phase
        .values
        .iter()
        .zip(t)
        .map(|(p, &t)| p + offset + w_g * (t - t0) + pulse.carrier() * t)
        .collect())
}

fn require_rwa(trajectory: &Trajectory) -> Result<()> {
    if trajectory.frame != Frame::Rwa {
        return Err(Error::UnsupportedFrame(format!(
            "oracle phases are read in the rotating frame, got {}",
            trajectory.frame
        )));
    }
    Ok(())
}

/// Sample range where the envelope is at least `fraction` of its peak.
pub fn field_window(t_grid: &[f64], pulse: &FieldPulse, fraction: f64) -> Option<std::ops::Range<usize>> {
    let peak = pulse.envelope().peak();
    if peak <= 0.0 {
        return None;
    }
    let on = |t: &f64| pulse.amplitude(*t) >= fraction * peak;
    let start = t_grid.iter().position(on)?;
    let end = t_grid.iter().rposition(on)? + 1;
    Some(start..end)
}

/// Compares the analytic ledger with phases extracted from a rotating-frame
/// trajectory started in the ground state.
pub fn oracle_check(
    trajectory: &Trajectory,
    system: &LevelSystem,
    pulse: &FieldPulse,
    ledger: &PhaseLedger,
    window_fraction: f64,
) -> Result<OracleReport> {
    if ledger.len() != trajectory.len() {
        return Err(Error::Shape {
            what: "ledger samples",
            expected: trajectory.len(),
            found: ledger.len(),
        });
    }
    let numeric = numeric_ground_phase(trajectory, system, pulse)?;
    let shift = wrap_to(ledger.ground_real[0], numeric[0]) - numeric[0];
    let ground_max_error = numeric
        .iter()
        .zip(&ledger.ground_real)
        .map(|(n, a)| (n + shift - a).abs())
        .fold(0.0, f64::max);

    let n = ledger.virtual_count();
    let mut virtual_drifts = Vec::new();
    let mut window = None;
    let mut window_samples = 0;
    if n >= 2 {
        let range = field_window(&trajectory.t_grid, pulse, window_fraction).ok_or_else(|| {
            Error::InvalidArgument {
                name: "pulse",
                reason: "field never reaches the oracle window threshold".into(),
            }
        })?;
        window = Some((trajectory.t_grid[range.start], trajectory.t_grid[range.end - 1]));
        window_samples = range.len();
        let phases = (0..n)
            .map(|i| numeric_virtual_phase(trajectory, system, pulse, i, ledger.offsets[i], range.clone()))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..n {
            for j in (i + 1)..n {
                let expected = ledger.offsets[i] - ledger.offsets[j];
                let residual: Vec<f64> = phases[i].iter().zip(&phases[j]).map(|(a, b)| a - b).collect();
                let r0 = residual[0];
                let drift = residual.iter().fold(0.0f64, |m, r| m.max((r - r0).abs()));
                let mean = residual.iter().sum::<f64>() / residual.len() as f64;
                virtual_drifts.push(VirtualDrift {
                    i,
                    j,
                    drift,
                    mean_residual: wrap_to(expected, mean),
                    expected_residual: expected,
                });
            }
        }
    }
    let max_virtual_drift = virtual_drifts.iter().map(|d| d.drift).fold(0.0, f64::max);
    let passed = if n >= 2 {
        max_virtual_drift < ORACLE_TOLERANCE
    } else {
        ground_max_error < ORACLE_TOLERANCE
    };
    Ok(OracleReport {
        ground_max_error,
        ground_samples: trajectory.len(),
        virtual_drifts,
        max_virtual_drift,
        window,
        window_samples,
        tolerance: ORACLE_TOLERANCE,
        passed,
    })
}
