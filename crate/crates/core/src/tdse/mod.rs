//! Time-dependent Schrodinger equation with the non-Hermitian Hamiltonian.
//!
//! The state evolves as `i d psi/dt = H(t) psi`. Trajectories are sampled
//! on a caller-supplied grid that must resolve the carrier with at least
//! [`MIN_SAMPLES_PER_CYCLE`] samples per period.

mod dopri;
mod phase;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{apply_dense, write_hamiltonian, FieldPulse, Frame, LevelSystem};
use crate::table::Table;

pub use dopri::{dopri5, rk4, AdaptiveSettings, IntegratorStats, Rhs};
pub(crate) use phase::gradient;
pub use phase::{extract_numeric_phase, phase_of_series, unwrap_phase, PhaseSeries, MAGNITUDE_FLOOR};

pub const MIN_SAMPLES_PER_CYCLE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub t: f64,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>, t: f64) -> Self {
        Self { amplitudes, t }
    }

    /// All population in level `j`.
    pub fn basis(dim: usize, j: usize, t: f64) -> Self {
        let mut amplitudes = vec![Complex64::default(); dim];
        amplitudes[j] = Complex64::new(1.0, 0.0);
        Self { amplitudes, t }
    }

    /// Ground-state start carrying the ground level's initial phase, so that
    /// the amplitude reads `e^{-i phi_g}`.
    pub fn ground(system: &LevelSystem, t: f64) -> Self {
        let mut s = Self::basis(system.len(), 0, t);
        s.amplitudes[0] = Complex64::from_polar(1.0, -system.ground().initial_phase);
        s
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn population(&self, j: usize) -> f64 {
        self.amplitudes[j].norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Dormand-Prince 5(4) with dense output at the grid.
    Adaptive,
    /// Classical RK4 with a fixed number of steps per grid interval.
    FixedRk4 { substeps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub frame: Frame,
    pub method: Method,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            frame: Frame::Rwa,
            method: Method::Adaptive,
            max_steps: 50_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<StateVector>,
    pub t_grid: Vec<f64>,
    pub frame: Frame,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.amplitudes.len())
    }

    pub fn last(&self) -> &StateVector {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn populations(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.population(j)).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.samples.iter().map(StateVector::norm_sqr).collect()
    }

    /// Amplitude of level `j` at every sample.
    pub fn component(&self, j: usize) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.amplitudes[j]).collect()
    }

    /// Columns: `t`, then `re_j`, `im_j` for each amplitude, then `norm_sqr`.
    pub fn to_table(&self) -> Table {
        let mut columns = vec!["t".to_string()];
        for j in 0..self.dim() {
            columns.push(format!("re_{j}"));
            columns.push(format!("im_{j}"));
        }
        columns.push("norm_sqr".into());
        let mut table = Table::new(columns);
        for s in &self.samples {
            let mut row = Vec::with_capacity(2 * s.amplitudes.len() + 2);
            row.push(s.t);
            for a in &s.amplitudes {
                row.push(a.re);
                row.push(a.im);
            }
            row.push(s.norm_sqr());
            table.push(row);
        }
        table
    }
}

/// Uniform grid on `[t_start, t_end]` with at least `samples_per_cycle`
/// samples per carrier period. The last point is exactly `t_end`.
pub fn uniform_grid(t_start: f64, t_end: f64, samples_per_cycle: usize, carrier: f64) -> Result<Vec<f64>> {
    if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
        return Err(Error::InvalidArgument {
            name: "t_end",
            reason: format!("need t_end > t_start, got [{t_start}, {t_end}]"),
        });
    }
    if samples_per_cycle < MIN_SAMPLES_PER_CYCLE {
        return Err(Error::InvalidArgument {
            name: "samples_per_cycle",
            reason: format!("{samples_per_cycle} < {MIN_SAMPLES_PER_CYCLE}"),
        });
    }
    if !(carrier.is_finite() && carrier > 0.0) {
        return Err(Error::InvalidArgument {
            name: "carrier",
            reason: format!("{carrier} must be > 0"),
        });
    }
    let dt_max = TAU / (carrier * samples_per_cycle as f64);
    let intervals = ((t_end - t_start) / dt_max).ceil().max(1.0) as usize;
    let dt = (t_end - t_start) / intervals as f64;
    let mut grid: Vec<f64> = (0..intervals).map(|k| t_start + k as f64 * dt).collect();
    grid.push(t_end);
    Ok(grid)
}

fn validate_grid(t_grid: &[f64], carrier: f64) -> Result<()> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidArgument {
            name: "t_grid",
            reason: "need at least two samples".into(),
        });
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "t_grid",
            reason: "non-finite time".into(),
        });
    }
    let dt_max = TAU / (carrier * MIN_SAMPLES_PER_CYCLE as f64);
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        if dt <= 0.0 {
            return Err(Error::InvalidArgument {
                name: "t_grid",
                reason: format!("not strictly increasing at t = {}", w[0]),
            });
        }
        if dt > dt_max * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument {
                name: "t_grid",
                reason: format!(
                    "spacing {dt} at t = {} exceeds 2pi/({MIN_SAMPLES_PER_CYCLE} w) = {dt_max}",
                    w[0]
                ),
            });
        }
    }
    Ok(())
}

/// Integrates the Schrodinger equation from `psi0` (given at `t_grid[0]`)
/// and samples the state at every grid time.
pub fn integrate(
    system: &LevelSystem,
    pulse: &FieldPulse,
    psi0: &StateVector,
    t_grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let n = system.len();
    if psi0.amplitudes.len() != n {
        return Err(Error::Shape {
            what: "initial state",
            expected: n,
            found: psi0.amplitudes.len(),
        });
    }
    if psi0.amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::InvalidArgument {
            name: "initial_state",
            reason: "non-finite amplitude".into(),
        });
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::InvalidArgument {
            name: "tolerances",
            reason: format!("rel_tol = {}, abs_tol = {} must be > 0", opts.rel_tol, opts.abs_tol),
        });
    }
    validate_grid(t_grid, pulse.carrier())?;
    if psi0.t != t_grid[0] {
        return Err(Error::InvalidArgument {
            name: "initial_state",
            reason: format!("state given at t = {} but grid starts at {}", psi0.t, t_grid[0]),
        });
    }
    if opts.frame == Frame::Rwa {
        system.require_ladder()?;
    }

    let mut h = vec![Complex64::default(); n * n];
    let frame = opts.frame;
    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        write_hamiltonian(system, pulse, t, frame, &mut h);
        apply_dense(n, &h, y, dy);
        for z in dy.iter_mut() {
            // -i * z
            *z = Complex64::new(z.im, -z.re);
        }
    };
    let (states, stats) = match opts.method {
        Method::Adaptive => dopri5(
            &mut rhs,
            t_grid,
            &psi0.amplitudes,
            &AdaptiveSettings {
                rel_tol: opts.rel_tol,
                abs_tol: opts.abs_tol,
                max_steps: opts.max_steps,
                max_step: t_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
            },
        )?,
        Method::FixedRk4 { substeps } => rk4(&mut rhs, t_grid, &psi0.amplitudes, substeps)?,
    };
    let samples = states
        .into_iter()
        .zip(t_grid)
        .map(|(amplitudes, &t)| StateVector { amplitudes, t })
        .collect();
    Ok(Trajectory {
        samples,
        t_grid: t_grid.to_vec(),
        frame,
        stats,
    })
}
