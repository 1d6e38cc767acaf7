//! Phase correlations between dressed-state components.
//!
//! The residual between a virtual and the real ground component carries the
//! full field phase and therefore turns at the carrier rate ("hidden"
//! coherence). Between two virtual components the carrier term and the
//! Stark-shifted integral cancel, leaving the constant offset difference
//! ("high" coherence). The classifier separates the two by comparing the
//! mean residual rate with `eps_slow * w`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::DressedDecomposition;
use crate::error::{Error, Result};
use crate::ledger::PhaseLedger;
use crate::table::Table;
use crate::tdse::gradient;

pub const DEFAULT_EPS_SLOW: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    VirtualVsReal,
    VirtualVsVirtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    High,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Real,
    Virtual(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub kind: CorrelationKind,
    pub pair: (Component, Component),
    #[serde(skip)]
    pub t_grid: Vec<f64>,
    #[serde(skip)]
    pub residual: Vec<f64>,
    #[serde(skip)]
    pub rate: Vec<f64>,
    /// Mean of `|d residual / dt|`.
    pub mean_rate: f64,
    /// `max |residual - residual(t_0)|`
    pub drift: f64,
    pub window: f64,
    pub residual_start: f64,
    pub residual_end: f64,
    pub eps_slow: f64,
    pub classification: Classification,
}

impl CorrelationReport {
    fn build(
        kind: CorrelationKind,
        pair: (Component, Component),
        t_grid: &[f64],
        residual: Vec<f64>,
        carrier: f64,
        eps_slow: f64,
    ) -> Result<Self> {
        let rate = gradient(&residual, t_grid);
        let mean_rate = if rate.is_empty() {
            0.0
        } else {
            rate.iter().map(|r| r.abs()).sum::<f64>() / rate.len() as f64
        };
        let r0 = residual[0];
        let drift = residual.iter().fold(0.0f64, |m, r| m.max((r - r0).abs()));
        let mut report = Self {
            kind,
            pair,
            t_grid: t_grid.to_vec(),
            residual_start: r0,
            residual_end: *residual.last().unwrap(),
            residual,
            rate,
            mean_rate,
            drift,
            window: t_grid.last().unwrap() - t_grid[0],
            eps_slow,
            classification: Classification::High,
        };
        report.classification = classify(&report, carrier, eps_slow)?;
        Ok(report)
    }

    /// Columns: `t, residual, rate`.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(vec!["t".into(), "residual".into(), "rate".into()]);
        for k in 0..self.residual.len() {
            table.push(vec![self.t_grid[k], self.residual[k], self.rate[k]]);
        }
        table
    }
}

/// Hidden when the mean residual rate exceeds `eps_slow * carrier`.
pub fn classify(report: &CorrelationReport, carrier: f64, eps_slow: f64) -> Result<Classification> {
    if carrier == 0.0 {
        return Err(Error::UndefinedCarrier);
    }
    if !(eps_slow > 0.0 && eps_slow < 1.0) {
        return Err(Error::InvalidArgument {
            name: "eps_slow",
            reason: format!("{eps_slow} must lie in (0, 1)"),
        });
    }
    Ok(if report.mean_rate > eps_slow * carrier.abs() {
        Classification::Hidden
    } else {
        Classification::High
    })
}

fn check_nonempty(ledger: &PhaseLedger) -> Result<()> {
    if ledger.is_empty() {
        return Err(Error::Shape {
            what: "ledger samples",
            expected: 1,
            found: 0,
        });
    }
    Ok(())
}

/// Residual `Phi_Gv,i - Phi_Gr` (virtual indices from 0).
pub fn fast_correlation(ledger: &PhaseLedger, i: usize, eps_slow: f64) -> Result<CorrelationReport> {
    check_nonempty(ledger)?;
    let v = ledger.virtual_phase(i)?;
    let residual = v.iter().zip(&ledger.ground_real).map(|(v, r)| v - r).collect();
    CorrelationReport::build(
        CorrelationKind::VirtualVsReal,
        (Component::Virtual(i), Component::Real),
        &ledger.t_grid,
        residual,
        ledger.pulse.carrier(),
        eps_slow,
    )
}

/// Residual `Phi_Gv,i - Phi_Gv,j`.
pub fn slow_correlation(ledger: &PhaseLedger, i: usize, j: usize, eps_slow: f64) -> Result<CorrelationReport> {
    check_nonempty(ledger)?;
    let vi = ledger.virtual_phase(i)?;
    let vj = ledger.virtual_phase(j)?;
    let residual = vi.iter().zip(vj).map(|(a, b)| a - b).collect();
    CorrelationReport::build(
        CorrelationKind::VirtualVsVirtual,
        (Component::Virtual(i), Component::Virtual(j)),
        &ledger.t_grid,
        residual,
        ledger.pulse.carrier(),
        eps_slow,
    )
}

/// Largest deviation of a fast residual from `offset_i + phi(t) + w t`,
/// evaluated straight from the pulse.
pub fn fast_contract_deviation(ledger: &PhaseLedger, report: &CorrelationReport) -> Result<f64> {
    let i = match report.pair.0 {
        Component::Virtual(i) => i,
        Component::Real => {
            return Err(Error::InvalidArgument {
                name: "report",
                reason: "not a virtual-vs-real report".into(),
            })
        }
    };
    let offset = *ledger.offsets.get(i).ok_or(Error::Index {
        what: "offset",
        index: i,
        len: ledger.offsets.len(),
    })?;
    let pulse = &ledger.pulse;
    Ok(report
        .t_grid
        .iter()
        .zip(&report.residual)
        .map(|(&t, r)| (r - (offset + pulse.phase(t) + pulse.carrier() * t)).abs())
        .fold(0.0, f64::max))
}

/// `|sum_i C_vi e^{-i phi_Gv,i}|^2 / (sum_i |C_vi|)^2`
pub fn interference_visibility(decomposition: &DressedDecomposition) -> Result<f64> {
    let total: f64 = decomposition.virtuals.iter().map(|v| v.strength.abs()).sum();
    if total == 0.0 {
        return Err(Error::NoVirtualComponents);
    }
    let phasor: Complex64 = decomposition
        .virtuals
        .iter()
        .map(|v| Complex64::from_polar(v.strength, -v.offset))
        .sum();
    Ok((phasor.norm_sqr() / (total * total)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian kick added to `Phi_NAD`.
    pub sigma: f64,
    pub seed: u64,
    pub realizations: usize,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidArgument {
                name: "sigma",
                reason: format!("{} must be finite and >= 0", self.sigma),
            });
        }
        if self.realizations == 0 {
            return Err(Error::InvalidArgument {
                name: "realizations",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// Kick of realization `k`. Each realization has its own ChaCha stream,
    /// so the value does not depend on evaluation order.
    pub fn kick(&self, k: usize) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        Normal::new(0.0, self.sigma)
            .expect("validated sigma")
            .sample(&mut rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub sigma: f64,
    pub seed: u64,
    pub realizations: usize,
    /// `1 - |<e^{i (Phi_Er - Phi_Gv)}>|` over realizations at the last sample.
    pub circular_variance: f64,
    /// `1 - e^{-sigma^2 / 2}`
    pub expected_circular_variance: f64,
    pub relative_error: f64,
    /// Every ground-state series and every virtual-virtual residual is
    /// bit-identical to the unperturbed ledger in every realization.
    pub ground_series_invariant: bool,
    /// Number of realizations whose NAD-dependent series changed.
    pub perturbed_realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEnsemble {
    pub base: PhaseLedger,
    pub kicks: Vec<f64>,
    pub report: NoiseReport,
}

impl NoiseEnsemble {
    pub fn realization(&self, k: usize) -> PhaseLedger {
        self.base.with_nad_kick(self.kicks[k])
    }

    /// Columns: `realization, kick, Phi_NAD_end, Phi_Er_end`.
    pub fn realizations_table(&self) -> Table {
        let mut table = Table::new(
            ["realization", "kick", "Phi_NAD_end", "Phi_Er_end"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        );
        let e = self.base.excited.as_ref().expect("two-level ledger");
        let (nad, er) = (*e.nad.last().unwrap(), *e.real.last().unwrap());
        for (k, &d) in self.kicks.iter().enumerate() {
            table.push(vec![k as f64, d, nad + d, er + d]);
        }
        table
    }
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn ground_residuals(ledger: &PhaseLedger) -> Vec<Vec<f64>> {
    let n = ledger.virtual_count();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(
                ledger.ground_virtual[i]
                    .iter()
                    .zip(&ledger.ground_virtual[j])
                    .map(|(a, b)| a - b)
                    .collect(),
            );
        }
    }
    out
}

/// Monte Carlo ensemble of stochastic transitions between dressed states:
/// each realization adds an independent Gaussian kick to `Phi_NAD`.
pub fn inject_phase_noise(ledger: &PhaseLedger, noise: &NoiseModel) -> Result<NoiseEnsemble> {
    noise.validate()?;
    let excited = ledger.excited.as_ref().ok_or_else(|| {
        Error::Configuration("phase noise enters through Phi_NAD and needs a two-level ledger".into())
    })?;
    if ledger.is_empty() {
        return Err(Error::Shape {
            what: "ledger samples",
            expected: 1,
            found: 0,
        });
    }
    let last = ledger.len() - 1;
    let base_residuals = ground_residuals(ledger);

    let per_realization: Vec<(f64, Complex64, bool, bool)> = (0..noise.realizations)
        .into_par_iter()
        .map(|k| {
            let kick = noise.kick(k);
            let r = ledger.with_nad_kick(kick);
            let e = r.excited.as_ref().unwrap();
            let invariant = bits_equal(&r.ground_real, &ledger.ground_real)
                && r
                    .ground_virtual
                    .iter()
                    .zip(&ledger.ground_virtual)
                    .all(|(a, b)| bits_equal(a, b))
                && ground_residuals(&r)
                    .iter()
                    .zip(&base_residuals)
                    .all(|(a, b)| bits_equal(a, b));
            let changed = !bits_equal(&e.nad, &excited.nad);
            let gap = e.real[last] - r.ground_virtual[0][last];
            (kick, Complex64::from_polar(1.0, gap), invariant, changed)
        })
        .collect();

    // ordered reduction
    let mut sum = Complex64::new(0.0, 0.0);
    let mut invariant = true;
    let mut perturbed = 0;
    let mut kicks = Vec::with_capacity(noise.realizations);
    for (kick, phasor, inv, changed) in per_realization {
        kicks.push(kick);
        sum += phasor;
        invariant &= inv;
        perturbed += changed as usize;
    }
    let mean = sum / noise.realizations as f64;
    let circular_variance = 1.0 - mean.norm();
    let expected = 1.0 - (-0.5 * noise.sigma * noise.sigma).exp();
    let relative_error = if expected > 0.0 {
        (circular_variance - expected).abs() / expected
    } else {
        circular_variance.abs()
    };
    Ok(NoiseEnsemble {
        base: ledger.clone(),
        kicks,
        report: NoiseReport {
            sigma: noise.sigma,
            seed: noise.seed,
            realizations: noise.realizations,
            circular_variance,
            expected_circular_variance: expected,
            relative_error,
            ground_series_invariant: invariant,
            perturbed_realizations: perturbed,
        },
    })
}
