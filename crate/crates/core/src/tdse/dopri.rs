//! Dormand-Prince 5(4) with the fourth-order continuous extension, and a
//! classical fixed-step RK4, both over complex state vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl<F: FnMut(f64, &[Complex64], &mut [Complex64])> Rhs for F {
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected_steps: usize,
    /// Largest scaled local error among accepted steps (at most 1).
    pub max_local_error: f64,
    /// Sum of absolute local error estimates over accepted steps; a loose
    /// bound on the global error of the propagated solution.
    pub accumulated_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Upper bound on the step; keeps quiet stretches from stepping over
    /// features between samples.
    pub max_step: f64,
}

fn scaled_error(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], s: &AdaptiveSettings) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = s.abs_tol + s.rel_tol * a.norm().max(b.norm());
            let r = e.norm() / sc;
            r * r
        })
        .sum();
    (sum / n).sqrt()
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn initial_step<R: Rhs>(
    rhs: &mut R,
    t0: f64,
    y0: &[Complex64],
    f0: &[Complex64],
    span: f64,
    s: &AdaptiveSettings,
) -> f64 {
    let n = y0.len();
    let scale = |y: &[Complex64], v: &[Complex64]| -> f64 {
        let sum: f64 = v
            .iter()
            .zip(y)
            .map(|(vk, yk)| {
                let sc = s.abs_tol + s.rel_tol * yk.norm();
                (vk.norm() / sc).powi(2)
            })
            .sum();
        (sum / n.max(1) as f64).sqrt()
    };
    let d0 = scale(y0, y0);
    let d1 = scale(y0, f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1: Vec<Complex64> = y0.iter().zip(f0).map(|(y, f)| y + f * h0).collect();
    let mut f1 = vec![Complex64::default(); n];
    rhs.eval(t0 + h0, &y1, &mut f1);
    let diff: Vec<Complex64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scale(y0, &diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates with DOPRI5 and reports the solution at every time in `grid`
/// through the continuous extension. `grid[0]` is the initial time.
pub fn dopri5<R: Rhs>(
    rhs: &mut R,
    grid: &[f64],
    y0: &[Complex64],
    settings: &AdaptiveSettings,
) -> Result<(Vec<Vec<Complex64>>, IntegratorStats)> {
    let n = y0.len();
    let mut out = Vec::with_capacity(grid.len());
    let mut stats = IntegratorStats::default();
    out.push(y0.to_vec());
    if grid.len() < 2 {
        return Ok((out, stats));
    }
    let t_end = *grid.last().unwrap();
    let mut t = grid[0];
    let span = t_end - t;

    let zero = Complex64::default();
    let mut y = y0.to_vec();
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut err = vec![zero; n];
    let mut r = [vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]];

    rhs.eval(t, &y, &mut k1);
    let mut h = initial_step(rhs, t, &y, &k1, span, settings).min(settings.max_step);
    let mut next = 1usize;
    let mut last_rejected = false;

    while next < grid.len() {
        if stats.steps + stats.rejected_steps >= settings.max_steps {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step budget of {} exhausted", settings.max_steps),
            });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(span.abs()).max(1.0);
        if h < h_min || !h.is_finite() {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let final_step = t + h >= t_end;
        if final_step {
            h = t_end - t;
        }

        for i in 0..n {
            ytmp[i] = y[i] + k1[i] * (h * A21);
        }
        rhs.eval(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        rhs.eval(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        rhs.eval(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        rhs.eval(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] =
                y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        let t_new = if final_step { t_end } else { t + h };
        rhs.eval(t_new, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] =
                y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        rhs.eval(t_new, &ynew, &mut k7);
        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h;
        }
        let e = scaled_error(&err, &y, &ynew, settings);
        if !e.is_finite() {
            return Err(Error::IntegrationFailure {
                t,
                reason: "non-finite error estimate".into(),
            });
        }

        if e <= 1.0 {
            stats.steps += 1;
            stats.max_local_error = stats.max_local_error.max(e);
            stats.accumulated_error += max_norm(&err);

            // Continuous extension coefficients for [t, t_new].
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = k1[i] * h - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - k7[i] * h - bspl;
                r[4][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6
                    + k7[i] * D7)
                    * h;
            }
            while next < grid.len() && (grid[next] <= t_new || final_step) {
                let tg = grid[next];
                if tg == t_new || final_step && next == grid.len() - 1 {
                    out.push(ynew.clone());
                } else {
                    let s = (tg - t) / h;
                    let s1 = 1.0 - s;
                    out.push(
                        (0..n)
                            .map(|i| r[0][i] + (r[1][i] + (r[2][i] + (r[3][i] + r[4][i] * s1) * s) * s1) * s)
                            .collect(),
                    );
                }
                next += 1;
            }

            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;

            let mut fac = (SAFETY * e.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(settings.max_step);
        } else {
            stats.rejected_steps += 1;
            last_rejected = true;
            h *= (SAFETY * e.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }
    Ok((out, stats))
}

/// Classical RK4 with `substeps` equal steps between consecutive grid points.
pub fn rk4<R: Rhs>(
    rhs: &mut R,
    grid: &[f64],
    y0: &[Complex64],
    substeps: usize,
) -> Result<(Vec<Vec<Complex64>>, IntegratorStats)> {
    if substeps == 0 {
        return Err(Error::InvalidArgument {
            name: "substeps",
            reason: "must be >= 1".into(),
        });
    }
    let n = y0.len();
    let zero = Complex64::default();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];
    let mut out = Vec::with_capacity(grid.len());
    let mut stats = IntegratorStats::default();
    out.push(y.clone());
    for w in grid.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        let mut t = w[0];
        for _ in 0..substeps {
            rhs.eval(t, &y, &mut k1);
            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (0.5 * h);
            }
            rhs.eval(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + k2[i] * (0.5 * h);
            }
            rhs.eval(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + k3[i] * h;
            }
            rhs.eval(t + h, &tmp, &mut k4);
            for i in 0..n {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            t += h;
            stats.steps += 1;
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::IntegrationFailure {
                t: w[1],
                reason: "non-finite state".into(),
            });
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}
