//! Numeric material phases from sampled amplitudes.
//!
//! Components are taken to evolve as `e^{-i Phi}`, so the extracted phase is
//! the negative argument, accumulated sample by sample from the principal
//! branch increment.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::Trajectory;
use crate::error::{Error, Result};

/// Projections smaller than this have no meaningful phase.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub values: Vec<f64>,
    pub t_grid: Vec<f64>,
}

impl PhaseSeries {
    /// Finite-difference `d Phi / dt`: central differences inside, one-sided
    /// at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        gradient(&self.values, &self.t_grid)
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("phase series is never empty")
    }
}

pub(crate) fn gradient(y: &[f64], t: &[f64]) -> Vec<f64> {
    let n = y.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| {
                let (a, b) = if k == 0 {
                    (0, 1)
                } else if k == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (k - 1, k + 1)
                };
                (y[b] - y[a]) / (t[b] - t[a])
            })
            .collect(),
    }
}

fn principal(x: f64) -> f64 {
    // (-pi, pi]
    let r = x - TAU * ((x + PI) / TAU).floor();
    if r <= -PI {
        r + TAU
    } else if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Continuity unwrap of wrapped angles.
pub fn unwrap_phase(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut acc = match wrapped.first() {
        Some(&w) => w,
        None => return out,
    };
    out.push(acc);
    for w in wrapped.windows(2) {
        acc += principal(w[1] - w[0]);
        out.push(acc);
    }
    out
}

/// Unwrapped `-arg(z)` of a sampled complex series, starting in `(-pi, pi]`.
pub fn phase_of_series(t_grid: &[f64], values: &[Complex64]) -> Result<PhaseSeries> {
    if t_grid.len() != values.len() {
        return Err(Error::Shape {
            what: "phase samples",
            expected: t_grid.len(),
            found: values.len(),
        });
    }
    if let Some((k, z)) = values.iter().enumerate().find(|(_, z)| !(z.norm() > MAGNITUDE_FLOOR)) {
        return Err(Error::UndefinedPhase {
            t: t_grid[k],
            magnitude: z.norm(),
        });
    }
    let wrapped: Vec<f64> = values.iter().map(|z| principal(-z.arg())).collect();
    Ok(PhaseSeries {
        values: unwrap_phase(&wrapped),
        t_grid: t_grid.to_vec(),
    })
}

/// Phase of `<projector(t)|psi(t)>` at every sample of the trajectory.
pub fn extract_numeric_phase(trajectory: &Trajectory, projectors: &[Vec<Complex64>]) -> Result<PhaseSeries> {
    if projectors.len() != trajectory.len() {
        return Err(Error::Shape {
            what: "projectors",
            expected: trajectory.len(),
            found: projectors.len(),
        });
    }
    let mut overlaps = Vec::with_capacity(trajectory.len());
    for (p, s) in projectors.iter().zip(&trajectory.samples) {
        if p.len() != s.amplitudes.len() {
            return Err(Error::Shape {
                what: "projector",
                expected: s.amplitudes.len(),
                found: p.len(),
            });
        }
        overlaps.push(p.iter().zip(&s.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex64>());
    }
    phase_of_series(&trajectory.t_grid, &overlaps)
}
