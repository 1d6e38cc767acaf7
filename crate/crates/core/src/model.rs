//! Level systems, driving fields and the damped light-matter Hamiltonian.
//!
//! Units are natural (reduced Planck constant = 1): energies and angular
//! frequencies are interchangeable. Level 0 is always the ground state.
//!
//! Two frames are supported. In the lab frame the Hamiltonian is
//!
//! ```text
//! H_jj = w_j - i g_j / 2
//! H_jk = -mu_jk E(t) cos(w t + phi(t))
//! ```
//!
//! In the rotating frame (ladder topology only) each excited amplitude is
//! referenced to `w_g + w` and the counter-rotating terms are dropped:
//!
//! ```text
//! H_00 = -i g_0 / 2
//! H_ii = D_i - i g_i / 2,          D_i = w_i - w_0 - w
//! H_i0 = -W_i(t) / 2 e^{-i phi(t)}, W_i(t) = mu_0i E(t)
//! H_0i = conj(H_i0)
//! ```

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub label: String,
    pub bohr_frequency: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub initial_phase: f64,
}

impl Level {
    pub fn new(label: impl Into<String>, bohr_frequency: f64) -> Self {
        Self {
            label: label.into(),
            bohr_frequency,
            damping: 0.0,
            initial_phase: 0.0,
        }
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_initial_phase(mut self, phase: f64) -> Self {
        self.initial_phase = phase;
        self
    }
}

/// Dipole coupling between an unordered pair of levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dipole {
    pub pair: [usize; 2],
    pub coupling: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawLevelSystem {
    levels: Vec<Level>,
    #[serde(default)]
    dipoles: Vec<Dipole>,
}

/// Bare levels plus real, symmetric dipole couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLevelSystem", into = "RawLevelSystem")]
pub struct LevelSystem {
    levels: Vec<Level>,
    // keyed by (min, max)
    dipoles: BTreeMap<(usize, usize), f64>,
}

impl TryFrom<RawLevelSystem> for LevelSystem {
    type Error = Error;

    fn try_from(raw: RawLevelSystem) -> Result<Self> {
        LevelSystem::new(raw.levels, raw.dipoles)
    }
}

impl From<LevelSystem> for RawLevelSystem {
    fn from(sys: LevelSystem) -> Self {
        let dipoles = sys
            .dipoles
            .iter()
            .map(|(&(a, b), &coupling)| Dipole {
                pair: [a, b],
                coupling,
            })
            .collect();
        RawLevelSystem {
            levels: sys.levels,
            dipoles,
        }
    }
}

impl LevelSystem {
    pub fn new(levels: Vec<Level>, dipoles: Vec<Dipole>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidSystem {
                field: "levels",
                reason: format!("need at least 2 levels, got {}", levels.len()),
            });
        }
        for (j, level) in levels.iter().enumerate() {
            if !level.bohr_frequency.is_finite() {
                return Err(Error::InvalidSystem {
                    field: "bohr_frequency",
                    reason: format!("level {j} ({}) is not finite", level.label),
                });
            }
            if !(level.damping.is_finite() && level.damping >= 0.0) {
                return Err(Error::InvalidSystem {
                    field: "damping",
                    reason: format!(
                        "level {j} ({}) has damping {}; must be finite and >= 0",
                        level.label, level.damping
                    ),
                });
            }
            if !level.initial_phase.is_finite() {
                return Err(Error::InvalidSystem {
                    field: "initial_phase",
                    reason: format!("level {j} ({}) is not finite", level.label),
                });
            }
        }
        let mut map = BTreeMap::new();
        for d in dipoles {
            let [a, b] = d.pair;
            if a == b {
                return Err(Error::InvalidSystem {
                    field: "dipoles",
                    reason: format!("diagonal coupling ({a}, {a}) not allowed"),
                });
            }
            if a >= levels.len() || b >= levels.len() {
                return Err(Error::InvalidSystem {
                    field: "dipoles",
                    reason: format!("pair ({a}, {b}) references a missing level"),
                });
            }
            if !d.coupling.is_finite() {
                return Err(Error::InvalidSystem {
                    field: "dipoles",
                    reason: format!("coupling for ({a}, {b}) is not finite"),
                });
            }
            let key = (a.min(b), a.max(b));
            if map.insert(key, d.coupling).is_some() {
                return Err(Error::InvalidSystem {
                    field: "dipoles",
                    reason: format!("pair ({}, {}) listed twice", key.0, key.1),
                });
            }
        }
        Ok(Self {
            levels,
            dipoles: map,
        })
    }

    /// Ground level coupled to each excited level with the given couplings.
    pub fn ladder(ground: Level, excited: Vec<(Level, f64)>) -> Result<Self> {
        let mut levels = vec![ground];
        let mut dipoles = Vec::with_capacity(excited.len());
        for (i, (level, coupling)) in excited.into_iter().enumerate() {
            levels.push(level);
            dipoles.push(Dipole {
                pair: [0, i + 1],
                coupling,
            });
        }
        Self::new(levels, dipoles)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> &Level {
        &self.levels[j]
    }

    pub fn ground(&self) -> &Level {
        &self.levels[0]
    }

    pub fn dipoles(&self) -> impl Iterator<Item = Dipole> + '_ {
        self.dipoles.iter().map(|(&(a, b), &coupling)| Dipole {
            pair: [a, b],
            coupling,
        })
    }

    /// Symmetric coupling; zero for uncoupled pairs and for `j == k`.
    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        self.dipoles
            .get(&(j.min(k), j.max(k)))
            .copied()
            .unwrap_or(0.0)
    }

    /// True when every coupling connects the ground level to an excited one.
    pub fn is_ladder(&self) -> bool {
        self.dipoles.keys().all(|&(a, _)| a == 0)
    }

    pub fn require_ladder(&self) -> Result<()> {
        if let Some(&(a, b)) = self.dipoles.keys().find(|&&(a, _)| a != 0) {
            return Err(Error::Configuration(format!(
                "rotating frame and dressed construction need the ladder topology; \
                 found excited-excited coupling ({a}, {b})"
            )));
        }
        Ok(())
    }

    pub fn excited_count(&self) -> usize {
        self.levels.len() - 1
    }

    /// Detuning `w_i - w_0 - w` of excited level `i` (1-based level index).
    pub fn detuning(&self, level: usize, carrier: f64) -> f64 {
        self.levels[level].bohr_frequency - self.levels[0].bohr_frequency - carrier
    }

    /// Rabi frequency `mu_0i E(t)` of excited level `i` at time `t`.
    pub fn rabi_frequency(&self, level: usize, pulse: &FieldPulse, t: f64) -> f64 {
        self.coupling(0, level) * pulse.amplitude(t)
    }
}

/// Pulse envelope. New shapes are added as variants; every consumer goes
/// through [`Envelope::value`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    /// `amplitude` on `[t_on, t_off]`, zero elsewhere.
    Constant { amplitude: f64, t_on: f64, t_off: f64 },
    Gaussian { peak: f64, center: f64, fwhm: f64 },
    Sech { peak: f64, center: f64, width: f64 },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant {
                amplitude,
                t_on,
                t_off,
            } => {
                if t >= t_on && t <= t_off {
                    amplitude
                } else {
                    0.0
                }
            }
            Envelope::Gaussian { peak, center, fwhm } => {
                let x = (t - center) / fwhm;
                peak * (-4.0 * LN_2 * x * x).exp()
            }
            Envelope::Sech {
                peak,
                center,
                width,
            } => peak / ((t - center) / width).cosh(),
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Envelope::Constant { amplitude, .. } => amplitude,
            Envelope::Gaussian { peak, .. } | Envelope::Sech { peak, .. } => peak,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidPulse { field, reason });
        match *self {
            Envelope::Constant {
                amplitude,
                t_on,
                t_off,
            } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return bad("amplitude", format!("{amplitude} must be finite and >= 0"));
                }
                if !(t_on.is_finite() && t_off.is_finite() && t_off >= t_on) {
                    return bad("t_off", format!("window [{t_on}, {t_off}] is invalid"));
                }
            }
            Envelope::Gaussian { peak, center, fwhm } => {
                if !(peak.is_finite() && peak >= 0.0) {
                    return bad("peak", format!("{peak} must be finite and >= 0"));
                }
                if !center.is_finite() {
                    return bad("center", "not finite".into());
                }
                if !(fwhm.is_finite() && fwhm > 0.0) {
                    return bad("fwhm", format!("{fwhm} must be > 0"));
                }
            }
            Envelope::Sech {
                peak,
                center,
                width,
            } => {
                if !(peak.is_finite() && peak >= 0.0) {
                    return bad("peak", format!("{peak} must be finite and >= 0"));
                }
                if !center.is_finite() {
                    return bad("center", "not finite".into());
                }
                if !(width.is_finite() && width > 0.0) {
                    return bad("width", format!("{width} must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Slowly varying phase `phi(t)` riding on the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PhaseModulation {
    Constant { phi0: f64 },
    /// `phi(t) = phi0 + rate * t^2 / 2`
    LinearChirp { phi0: f64, rate: f64 },
}

impl Default for PhaseModulation {
    fn default() -> Self {
        PhaseModulation::Constant { phi0: 0.0 }
    }
}

impl PhaseModulation {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            PhaseModulation::Constant { phi0 } => phi0,
            PhaseModulation::LinearChirp { phi0, rate } => phi0 + 0.5 * rate * t * t,
        }
    }

    /// `d phi / dt`
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            PhaseModulation::Constant { .. } => 0.0,
            PhaseModulation::LinearChirp { rate, .. } => rate * t,
        }
    }

    pub fn is_chirped(&self) -> bool {
        matches!(self, PhaseModulation::LinearChirp { rate, .. } if *rate != 0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawFieldPulse {
    carrier: f64,
    envelope: Envelope,
    #[serde(default)]
    phase: PhaseModulation,
}

/// Classical field `E(t) cos(w t + phi(t))` with envelope `E(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFieldPulse", into = "RawFieldPulse")]
pub struct FieldPulse {
    carrier: f64,
    envelope: Envelope,
    phase: PhaseModulation,
}

impl TryFrom<RawFieldPulse> for FieldPulse {
    type Error = Error;

    fn try_from(raw: RawFieldPulse) -> Result<Self> {
        FieldPulse::new(raw.carrier, raw.envelope, raw.phase)
    }
}

impl From<FieldPulse> for RawFieldPulse {
    fn from(p: FieldPulse) -> Self {
        RawFieldPulse {
            carrier: p.carrier,
            envelope: p.envelope,
            phase: p.phase,
        }
    }
}

impl FieldPulse {
    pub fn new(carrier: f64, envelope: Envelope, phase: PhaseModulation) -> Result<Self> {
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(Error::InvalidPulse {
                field: "carrier",
                reason: format!("{carrier} must be finite and > 0"),
            });
        }
        envelope.validate()?;
        let phase_ok = match phase {
            PhaseModulation::Constant { phi0 } => phi0.is_finite(),
            PhaseModulation::LinearChirp { phi0, rate } => phi0.is_finite() && rate.is_finite(),
        };
        if !phase_ok {
            return Err(Error::InvalidPulse {
                field: "phase",
                reason: "phase parameters must be finite".into(),
            });
        }
        Ok(Self {
            carrier,
            envelope,
            phase,
        })
    }

    /// Constant-amplitude field switched on over `[t_on, t_off]` with zero phase.
    pub fn continuous(carrier: f64, amplitude: f64, t_on: f64, t_off: f64) -> Result<Self> {
        Self::new(
            carrier,
            Envelope::Constant {
                amplitude,
                t_on,
                t_off,
            },
            PhaseModulation::default(),
        )
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn phase_modulation(&self) -> &PhaseModulation {
        &self.phase
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        self.envelope.value(t)
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.phase.value(t)
    }

    /// Field phase `phi(t) + w t`, unwrapped.
    pub fn total_phase(&self, t: f64) -> f64 {
        self.phase.value(t) + self.carrier * t
    }

    /// Instantaneous physical field.
    pub fn field(&self, t: f64) -> f64 {
        self.amplitude(t) * self.total_phase(t).cos()
    }

    pub fn with_carrier(mut self, carrier: f64) -> Result<Self> {
        self.carrier = carrier;
        Self::new(self.carrier, self.envelope, self.phase)
    }
}

pub fn field_amplitude(pulse: &FieldPulse, t: f64) -> f64 {
    pulse.amplitude(t)
}

pub fn field_phase_total(pulse: &FieldPulse, t: f64) -> f64 {
    pulse.total_phase(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    #[default]
    Rwa,
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frame::Lab => f.write_str("lab"),
            Frame::Rwa => f.write_str("rwa"),
        }
    }
}

/// Dense row-major Hamiltonian at a single time.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
    frame: Frame,
    t: f64,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| self.get(r, c) == self.get(c, r).conj()))
    }

    /// `out = H psi`
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        apply_dense(self.dim, &self.entries, psi, out);
    }
}

pub(crate) fn apply_dense(dim: usize, entries: &[Complex64], psi: &[Complex64], out: &mut [Complex64]) {
    for (r, o) in out.iter_mut().enumerate().take(dim) {
        let row = &entries[r * dim..(r + 1) * dim];
        *o = row.iter().zip(psi).map(|(h, p)| h * p).sum();
    }
}

/// Writes the Hamiltonian entries at time `t` into `out` (length `n * n`).
/// The caller is responsible for checking the ladder topology in the
/// rotating frame.
pub(crate) fn write_hamiltonian(
    system: &LevelSystem,
    pulse: &FieldPulse,
    t: f64,
    frame: Frame,
    out: &mut [Complex64],
) {
    let n = system.len();
    out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    let envelope = pulse.amplitude(t);
    match frame {
        Frame::Lab => {
            for (j, level) in system.levels.iter().enumerate() {
                out[j * n + j] = Complex64::new(level.bohr_frequency, -0.5 * level.damping);
            }
            let carrier = pulse.total_phase(t).cos();
            for (&(a, b), &mu) in &system.dipoles {
                let v = Complex64::new(-mu * envelope * carrier, 0.0);
                out[a * n + b] = v;
                out[b * n + a] = v;
            }
        }
        Frame::Rwa => {
            let ground = &system.levels[0];
            out[0] = Complex64::new(0.0, -0.5 * ground.damping);
            for i in 1..n {
                let level = &system.levels[i];
                let detuning = level.bohr_frequency - ground.bohr_frequency - pulse.carrier;
                out[i * n + i] = Complex64::new(detuning, -0.5 * level.damping);
            }
            let phi = pulse.phase(t);
            let rot = Complex64::from_polar(1.0, -phi);
            for (&(_, i), &mu) in &system.dipoles {
                let lower = rot * (-0.5 * mu * envelope);
                out[i * n] = lower;
                out[i] = lower.conj();
            }
        }
    }
}

/// Hamiltonian of the damped, driven system at time `t`.
pub fn hamiltonian(
    system: &LevelSystem,
    pulse: &FieldPulse,
    t: f64,
    frame: Frame,
) -> Result<HamiltonianMatrix> {
    if frame == Frame::Rwa {
        system.require_ladder()?;
    }
    let n = system.len();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    write_hamiltonian(system, pulse, t, frame, &mut entries);
    Ok(HamiltonianMatrix {
        dim: n,
        entries,
        frame,
        t,
    })
}
