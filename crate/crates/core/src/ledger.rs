//! Material-phase bookkeeping for dressed-state components.
//!
//! Two-level chain, with `Phi_F = phi(t) + w t`:
//!
//! ```text
//! Phi_Gr  = phi_g + int w'_G
//! Phi_Gv  = Phi_Gr + Phi_F
//! Phi_Er  = Phi_Gv + Phi_NAD          Phi_NAD = int (w'_E - w'_G - w)
//! Phi_Ev  = Phi_Er - Phi_F
//! ```
//!
//! Multi-level ground state: `Phi_Gv_i = offset_i + Phi_Gr + Phi_F`.
//!
//! Integrals run from the first grid time with the composite trapezoidal
//! rule. Only real parts of quasi-energies contribute to phases.

use serde::{Deserialize, Serialize};

use crate::dressed::{DressedDecomposition, QuasiEnergySeries};
use crate::error::{Error, Result};
use crate::model::FieldPulse;
use crate::table::Table;

/// Running trapezoidal integral, starting at zero.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(y.len());
    if y.is_empty() {
        return out;
    }
    out.push(0.0);
    for k in 1..y.len() {
        acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        out.push(acc);
    }
    out
}

/// Richardson estimate of the trapezoidal error of the full integral,
/// comparing the grid with its every-other-point subgrid.
pub fn trapezoid_error_estimate(t: &[f64], y: &[f64]) -> f64 {
    let last = (t.len().saturating_sub(1)) & !1;
    if last < 2 {
        return 0.0;
    }
    let fine = cumulative_trapezoid(&t[..=last], &y[..=last])[last];
    let ts: Vec<f64> = t[..=last].iter().step_by(2).copied().collect();
    let ys: Vec<f64> = y[..=last].iter().step_by(2).copied().collect();
    let coarse = *cumulative_trapezoid(&ts, &ys).last().unwrap();
    (fine - coarse).abs() / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitedPhases {
    /// `Phi_E,r`
    pub real: Vec<f64>,
    /// `Phi_E,v`
    pub virtual_: Vec<f64>,
    /// `Phi_NAD`
    pub nad: Vec<f64>,
    /// `w'_E - w'_G - w`
    pub nad_detuning: Vec<f64>,
    /// `w'_E`
    pub frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLedger {
    pub t_grid: Vec<f64>,
    /// `Phi_G,r`
    pub ground_real: Vec<f64>,
    /// `Phi_G,v,i`, one series per virtual component.
    pub ground_virtual: Vec<Vec<f64>>,
    /// `Phi_F`
    pub field_phase: Vec<f64>,
    /// `w'_G`
    pub ground_frequency: Vec<f64>,
    /// Present for two-level ledgers.
    pub excited: Option<ExcitedPhases>,
    pub initial_phase: f64,
    pub offsets: Vec<f64>,
    pub pulse: FieldPulse,
}

/// Phases carried into a ledger segment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerStart {
    pub ground_phase: f64,
    pub nad_phase: f64,
}

impl LedgerStart {
    pub fn ground(phi_g: f64) -> Self {
        Self {
            ground_phase: phi_g,
            nad_phase: 0.0,
        }
    }
}

/// Largest per-sample violation of each chain identity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainResiduals {
    /// `|Phi_Gv,i - Phi_Gr - Phi_F - offset_i|`
    pub virtual_real_field: f64,
    /// `|Phi_Er - Phi_Gv - Phi_NAD|` (two-level)
    pub excited_virtual_nad: f64,
    /// `|Phi_Ev - Phi_Er + Phi_F|` (two-level)
    pub excited_field: f64,
}

impl ChainResiduals {
    pub fn max(&self) -> f64 {
        self.virtual_real_field
            .max(self.excited_virtual_nad)
            .max(self.excited_field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerMetadata {
    pub initial_phase: f64,
    pub offsets: Vec<f64>,
    pub pulse: FieldPulse,
    pub two_level: bool,
    pub samples: usize,
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Shape {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

fn max_abs<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `(w'_E - w'_G - w, int of it)` along the grid.
pub fn nonadiabatic_phase(qe: &QuasiEnergySeries, carrier: f64, t_grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("ground quasi-energies", t_grid.len(), qe.ground.len())?;
    check_len("excited quasi-energies", t_grid.len(), qe.excited.len())?;
    let detuning: Vec<f64> = qe
        .ground
        .iter()
        .zip(&qe.excited)
        .map(|(g, e)| e.re - g.re - carrier)
        .collect();
    let phase = cumulative_trapezoid(t_grid, &detuning);
    Ok((detuning, phase))
}

pub fn ledger_two_level(qe: &QuasiEnergySeries, pulse: &FieldPulse, phi_g: f64, t_grid: &[f64]) -> Result<PhaseLedger> {
    ledger_two_level_from(qe, pulse, LedgerStart::ground(phi_g), t_grid)
}

/// Two-level ledger starting from carried-over phases at `t_grid[0]`.
pub fn ledger_two_level_from(
    qe: &QuasiEnergySeries,
    pulse: &FieldPulse,
    start: LedgerStart,
    t_grid: &[f64],
) -> Result<PhaseLedger> {
    if t_grid.is_empty() {
        return Err(Error::Shape {
            what: "t_grid",
            expected: 1,
            found: 0,
        });
    }
    let (nad_detuning, nad_integral) = nonadiabatic_phase(qe, pulse.carrier(), t_grid)?;
    let ground_frequency: Vec<f64> = qe.ground.iter().map(|z| z.re).collect();
    let frequency: Vec<f64> = qe.excited.iter().map(|z| z.re).collect();
    let field_phase: Vec<f64> = t_grid.iter().map(|&t| pulse.total_phase(t)).collect();
    let ground_real: Vec<f64> = cumulative_trapezoid(t_grid, &ground_frequency)
        .into_iter()
        .map(|x| start.ground_phase + x)
        .collect();
    let ground_virtual: Vec<f64> = ground_real.iter().zip(&field_phase).map(|(r, f)| r + f).collect();
    let nad: Vec<f64> = nad_integral.into_iter().map(|x| start.nad_phase + x).collect();
    let real: Vec<f64> = ground_virtual.iter().zip(&nad).map(|(v, n)| v + n).collect();
    let virtual_: Vec<f64> = real.iter().zip(&field_phase).map(|(r, f)| r - f).collect();
    Ok(PhaseLedger {
        t_grid: t_grid.to_vec(),
        ground_real,
        ground_virtual: vec![ground_virtual],
        field_phase,
        ground_frequency,
        excited: Some(ExcitedPhases {
            real,
            virtual_,
            nad,
            nad_detuning,
            frequency,
        }),
        initial_phase: start.ground_phase,
        offsets: vec![0.0],
        pulse: *pulse,
    })
}

pub fn ledger_multilevel(
    series: &[DressedDecomposition],
    pulse: &FieldPulse,
    phi_g: f64,
    offsets: &[f64],
) -> Result<PhaseLedger> {
    let n = series.first().map_or(0, |d| d.virtuals.len());
    check_len("offsets", n, offsets.len())?;
    if series.is_empty() {
        return Err(Error::Shape {
            what: "decomposition series",
            expected: 1,
            found: 0,
        });
    }
    if let Some(d) = series.iter().find(|d| d.virtuals.len() != n) {
        return Err(Error::Shape {
            what: "virtual components",
            expected: n,
            found: d.virtuals.len(),
        });
    }
    let t_grid: Vec<f64> = series.iter().map(|d| d.t).collect();
    let ground_frequency: Vec<f64> = series.iter().map(|d| d.ground_frequency()).collect();
    let field_phase: Vec<f64> = t_grid.iter().map(|&t| pulse.total_phase(t)).collect();
    let ground_real: Vec<f64> = cumulative_trapezoid(&t_grid, &ground_frequency)
        .into_iter()
        .map(|x| phi_g + x)
        .collect();
    let ground_virtual = offsets
        .iter()
        .map(|&off| {
            ground_real
                .iter()
                .zip(&field_phase)
                .map(|(r, f)| off + r + f)
                .collect()
        })
        .collect();
    Ok(PhaseLedger {
        t_grid,
        ground_real,
        ground_virtual,
        field_phase,
        ground_frequency,
        excited: None,
        initial_phase: phi_g,
        offsets: offsets.to_vec(),
        pulse: *pulse,
    })
}

impl PhaseLedger {
    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn virtual_count(&self) -> usize {
        self.ground_virtual.len()
    }

    pub fn is_two_level(&self) -> bool {
        self.excited.is_some()
    }

    pub fn virtual_phase(&self, i: usize) -> Result<&[f64]> {
        self.ground_virtual
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::Index {
                what: "virtual component",
                index: i,
                len: self.ground_virtual.len(),
            })
    }

    /// Phases to carry into the next segment, read at the last sample.
    pub fn end_state(&self) -> LedgerStart {
        LedgerStart {
            ground_phase: *self.ground_real.last().unwrap_or(&self.initial_phase),
            nad_phase: self
                .excited
                .as_ref()
                .and_then(|e| e.nad.last().copied())
                .unwrap_or(0.0),
        }
    }

    pub fn chain_residuals(&self) -> ChainResiduals {
        let virtual_real_field = max_abs(self.ground_virtual.iter().zip(&self.offsets).flat_map(|(v, off)| {
            v.iter()
                .zip(&self.ground_real)
                .zip(&self.field_phase)
                .map(move |((v, r), f)| v - r - f - off)
        }));
        let (excited_virtual_nad, excited_field) = match &self.excited {
            Some(e) => (
                max_abs(
                    e.real
                        .iter()
                        .zip(&self.ground_virtual[0])
                        .zip(&e.nad)
                        .map(|((r, v), n)| r - v - n),
                ),
                max_abs(
                    e.virtual_
                        .iter()
                        .zip(&e.real)
                        .zip(&self.field_phase)
                        .map(|((ev, er), f)| ev - er + f),
                ),
            ),
            None => (0.0, 0.0),
        };
        ChainResiduals {
            virtual_real_field,
            excited_virtual_nad,
            excited_field,
        }
    }

    /// Largest gap between `Phi_E,r` and its direct form
    /// `phi_g + phi(t) + int w'_E` (shifted by the carried-over NAD phase
    /// and by `w t_0` when the grid does not start at zero).
    pub fn direct_route_deviation(&self) -> Option<f64> {
        let e = self.excited.as_ref()?;
        let t0 = self.t_grid[0];
        let start = self.initial_phase + e.nad[0];
        let integral = cumulative_trapezoid(&self.t_grid, &e.frequency);
        Some(max_abs(self.t_grid.iter().zip(&integral).zip(&e.real).map(|((&t, i), r)| {
            r - (start + self.pulse.phase(t) + self.pulse.carrier() * t0 + i)
        })))
    }

    /// Richardson estimate of the quadrature error in `Phi_G,r` at the end.
    pub fn quadrature_error(&self) -> f64 {
        let mut err = trapezoid_error_estimate(&self.t_grid, &self.ground_frequency);
        if let Some(e) = &self.excited {
            err = err.max(trapezoid_error_estimate(&self.t_grid, &e.nad_detuning));
        }
        err
    }

    /// Adds `delta` to the nonadiabatic phase and everything built on it.
    pub fn with_nad_kick(&self, delta: f64) -> PhaseLedger {
        let mut out = self.clone();
        if let Some(e) = out.excited.as_mut() {
            for series in [&mut e.nad, &mut e.real, &mut e.virtual_] {
                series.iter_mut().for_each(|x| *x += delta);
            }
        }
        out
    }

    pub fn metadata(&self) -> LedgerMetadata {
        LedgerMetadata {
            initial_phase: self.initial_phase,
            offsets: self.offsets.clone(),
            pulse: self.pulse,
            two_level: self.is_two_level(),
            samples: self.len(),
        }
    }

    /// Columns: `t, Phi_Gr, Phi_Gv{i}...`, then for two-level ledgers
    /// `Phi_Er, Phi_Ev, Phi_NAD, dw_NAD`.
    pub fn to_table(&self) -> Table {
        let mut columns = vec!["t".to_string(), "Phi_Gr".to_string()];
        columns.extend((1..=self.virtual_count()).map(|i| format!("Phi_Gv{i}")));
        if self.excited.is_some() {
            columns.extend(["Phi_Er", "Phi_Ev", "Phi_NAD", "dw_NAD"].iter().map(|s| s.to_string()));
        }
        let mut table = Table::new(columns);
        for k in 0..self.len() {
            let mut row = vec![self.t_grid[k], self.ground_real[k]];
            row.extend(self.ground_virtual.iter().map(|v| v[k]));
            if let Some(e) = &self.excited {
                row.extend([e.real[k], e.virtual_[k], e.nad[k], e.nad_detuning[k]]);
            }
            table.push(row);
        }
        table
    }
}
