//! Phase-sensitive dressed states.
//!
//! For a ground level coupled to excited levels `i = 1..n` the ground dressed
//! state is written as one real component plus one virtual component per
//! excited level,
//!
//! ```text
//! |G> = C_r |G_r> + sum_i C_vi |G_v>_i
//! ```
//!
//! Each pair (ground, excited i) has a mixing angle `theta_i = atan2(W_i, D_i)`
//! in `[0, pi]`. The virtual strengths start from the pairwise weights
//! `w_i = tan(theta_i / 2)` and are normalized together, which reduces to
//! `(cos(theta/2), sin(theta/2))` for a single excited level. The ground
//! quasi-energy adds the pairwise ground-branch shifts to `w_g`; every
//! virtual component sits exactly one carrier quantum above it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FieldPulse, Frame, LevelSystem};
use crate::table::Table;
use crate::tdse::Trajectory;

/// `theta = atan2(rabi, detuning)` in `[0, pi]`.
pub fn mixing_angle(detuning: f64, rabi: f64) -> Result<f64> {
    if !(rabi >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "rabi",
            reason: format!("Rabi frequency {rabi} must be >= 0"),
        });
    }
    if !detuning.is_finite() || !rabi.is_finite() {
        return Err(Error::InvalidArgument {
            name: "detuning",
            reason: "non-finite input".into(),
        });
    }
    if detuning == 0.0 && rabi == 0.0 {
        return Err(Error::DegenerateAngle);
    }
    Ok(rabi.atan2(detuning))
}

/// Complex quasi-energies of the ground and excited dressed states of one
/// (ground, excited) pair. Real parts are Bohr frequencies, imaginary parts
/// are minus half the effective damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiEnergies {
    pub ground: Complex64,
    pub excited: Complex64,
}

impl QuasiEnergies {
    pub fn gap(&self) -> Complex64 {
        self.excited - self.ground
    }
}

/// Eigenvalues `lambda_G`, `lambda_E` of the rotating-frame pair matrix
/// `[[-i g_g/2, -W/2], [-W/2, D - i g_e/2]]`, with the ground branch chosen
/// by continuity from `W = 0`.
fn pair_eigenvalues(detuning: f64, rabi: f64, gamma_g: f64, gamma_e: f64) -> (Complex64, Complex64) {
    let a = Complex64::new(0.0, -0.5 * gamma_g);
    let d = Complex64::new(detuning, -0.5 * gamma_e);
    let mean = (a + d) * 0.5;
    let split = d - a;
    let mut s = (split * split + rabi * rabi).sqrt();
    // Align with the bare splitting so that W -> 0 recovers (a, d). At an
    // exceptional alignment pick the lower real part for the ground branch.
    let align = (s * split.conj()).re;
    let scale = split.norm_sqr().max(rabi * rabi).max(f64::MIN_POSITIVE);
    if align < -1e-14 * scale || (align.abs() <= 1e-14 * scale && s.re < 0.0) {
        s = -s;
    }
    (mean - s * 0.5, mean + s * 0.5)
}

pub fn quasi_energies(
    omega_g: f64,
    omega_e: f64,
    carrier: f64,
    rabi: f64,
    gamma_g: f64,
    gamma_e: f64,
) -> QuasiEnergies {
    let detuning = omega_e - omega_g - carrier;
    let (lg, le) = pair_eigenvalues(detuning, rabi, gamma_g, gamma_e);
    QuasiEnergies {
        ground: lg + omega_g,
        excited: le + omega_g + carrier,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualComponent {
    /// Level index of the excited bare state (1-based, level 0 is ground).
    pub excited_index: usize,
    pub strength: f64,
    pub mixing_angle: f64,
    pub detuning: f64,
    pub rabi_frequency: f64,
    pub offset: f64,
    /// `w'_G + w`
    pub quasi_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DressedDecomposition {
    pub t: f64,
    pub carrier: f64,
    pub real_strength: f64,
    pub virtuals: Vec<VirtualComponent>,
    /// `w'_G - i g'_G / 2`
    pub ground_quasi_energy: Complex64,
    /// Present for two-level systems only.
    pub excited_quasi_energy: Option<Complex64>,
}

impl DressedDecomposition {
    pub fn ground_frequency(&self) -> f64 {
        self.ground_quasi_energy.re
    }

    pub fn excited_frequency(&self) -> Option<f64> {
        self.excited_quasi_energy.map(|z| z.re)
    }

    pub fn strengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.virtuals.iter().map(|v| v.strength)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.real_strength * self.real_strength + self.strengths().map(|c| c * c).sum::<f64>()
    }
}

fn check_offsets(system: &LevelSystem, offsets: &[f64]) -> Result<()> {
    if offsets.len() != system.excited_count() {
        return Err(Error::Shape {
            what: "offsets",
            expected: system.excited_count(),
            found: offsets.len(),
        });
    }
    if offsets.iter().any(|o| !o.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "offsets",
            reason: "non-finite offset".into(),
        });
    }
    Ok(())
}

fn check_couplings(system: &LevelSystem) -> Result<()> {
    system.require_ladder()?;
    if let Some(d) = system.dipoles().find(|d| d.coupling < 0.0) {
        return Err(Error::Configuration(format!(
            "coupling ({}, {}) is negative; dressed construction expects mu >= 0 \
             (absorb the sign into the bare-state phase)",
            d.pair[0], d.pair[1]
        )));
    }
    Ok(())
}

/// Ground dressed state of a ladder at time `t`.
pub fn build_psnads(
    system: &LevelSystem,
    pulse: &FieldPulse,
    t: f64,
    offsets: &[f64],
) -> Result<DressedDecomposition> {
    check_couplings(system)?;
    check_offsets(system, offsets)?;
    build_unchecked(system, pulse, t, offsets)
}

fn build_unchecked(
    system: &LevelSystem,
    pulse: &FieldPulse,
    t: f64,
    offsets: &[f64],
) -> Result<DressedDecomposition> {
    let ground = system.ground();
    let carrier = pulse.carrier();
    let n = system.excited_count();

    let mut weights = Vec::with_capacity(n);
    let mut shift = Complex64::new(0.0, 0.0);
    let mut excited_qe = None;
    let mut angles = Vec::with_capacity(n);
    for i in 1..=n {
        let level = system.level(i);
        let detuning = system.detuning(i, carrier);
        let rabi = system.rabi_frequency(i, pulse, t);
        let theta = match mixing_angle(detuning, rabi) {
            Ok(theta) => theta,
            Err(Error::DegenerateAngle) => {
                return Err(Error::Configuration(format!(
                    "excited level {i} is resonant with zero coupling at t = {t}; dressed state undefined"
                )))
            }
            Err(e) => return Err(e),
        };
        if theta >= std::f64::consts::PI {
            return Err(Error::Branch { index: i - 1 });
        }
        let qe = quasi_energies(
            ground.bohr_frequency,
            level.bohr_frequency,
            carrier,
            rabi,
            ground.damping,
            level.damping,
        );
        shift += qe.ground - Complex64::new(ground.bohr_frequency, -0.5 * ground.damping);
        if n == 1 {
            excited_qe = Some(qe.excited);
        }
        weights.push((theta * 0.5).tan());
        angles.push((theta, detuning, rabi));
    }
    let real_strength = 1.0 / (1.0 + weights.iter().map(|w| w * w).sum::<f64>()).sqrt();
    let ground_quasi_energy = Complex64::new(ground.bohr_frequency, -0.5 * ground.damping) + shift;
    let virtual_frequency = ground_quasi_energy.re + carrier;
    let virtuals = weights
        .iter()
        .zip(&angles)
        .zip(offsets)
        .enumerate()
        .map(|(k, ((w, &(theta, detuning, rabi)), &offset))| VirtualComponent {
            excited_index: k + 1,
            strength: w * real_strength,
            mixing_angle: theta,
            detuning,
            rabi_frequency: rabi,
            offset,
            quasi_energy: virtual_frequency,
        })
        .collect();
    Ok(DressedDecomposition {
        t,
        carrier,
        real_strength,
        virtuals,
        ground_quasi_energy,
        excited_quasi_energy: excited_qe,
    })
}

/// [`build_psnads`] at every grid time.
pub fn decomposition_series(
    system: &LevelSystem,
    pulse: &FieldPulse,
    t_grid: &[f64],
    offsets: &[f64],
) -> Result<Vec<DressedDecomposition>> {
    check_couplings(system)?;
    check_offsets(system, offsets)?;
    t_grid
        .iter()
        .map(|&t| build_unchecked(system, pulse, t, offsets))
        .collect()
}

/// Columns: `t, C_r`, then per virtual `C_v{i}, theta_{i}`, then
/// `omega_G`, then per virtual `omega_Gv{i}` (virtuals numbered from 1).
pub fn decomposition_table(series: &[DressedDecomposition]) -> Table {
    let n = series.first().map_or(0, |d| d.virtuals.len());
    let mut columns = vec!["t".to_string(), "C_r".to_string()];
    for i in 1..=n {
        columns.push(format!("C_v{i}"));
        columns.push(format!("theta_{i}"));
    }
    columns.push("omega_G".into());
    for i in 1..=n {
        columns.push(format!("omega_Gv{i}"));
    }
    let mut table = Table::new(columns);
    for d in series {
        let mut row = vec![d.t, d.real_strength];
        for v in &d.virtuals {
            row.push(v.strength);
            row.push(v.mixing_angle);
        }
        row.push(d.ground_frequency());
        row.extend(d.virtuals.iter().map(|v| v.quasi_energy));
        table.push(row);
    }
    table
}

/// Two-level quasi-energies along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiEnergySeries {
    pub t_grid: Vec<f64>,
    pub ground: Vec<Complex64>,
    pub excited: Vec<Complex64>,
}

pub fn quasi_energy_series(system: &LevelSystem, pulse: &FieldPulse, t_grid: &[f64]) -> Result<QuasiEnergySeries> {
    if system.len() != 2 {
        return Err(Error::Configuration(format!(
            "two-level quasi-energies need exactly 2 levels, got {}",
            system.len()
        )));
    }
    check_couplings(system)?;
    let (g, e) = (system.level(0), system.level(1));
    let (ground, excited) = t_grid
        .iter()
        .map(|&t| {
            let qe = quasi_energies(
                g.bohr_frequency,
                e.bohr_frequency,
                pulse.carrier(),
                system.rabi_frequency(1, pulse, t),
                g.damping,
                e.damping,
            );
            (qe.ground, qe.excited)
        })
        .unzip();
    Ok(QuasiEnergySeries {
        t_grid: t_grid.to_vec(),
        ground,
        excited,
    })
}

/// Amplitudes of a two-level state on the instantaneous dressed pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedAmplitudes {
    pub t: f64,
    pub ground: Complex64,
    pub excited: Complex64,
}

/// Instantaneous dressed pair in the rotating frame:
/// `|G> = cos(theta/2)|g> + sin(theta/2) e^{-i phi}|e>` and
/// `|E> = -sin(theta/2)|g> + cos(theta/2) e^{-i phi}|e>`.
/// With the field off the pair is the bare basis.
pub fn dressed_pair(detuning: f64, rabi: f64, phi: f64) -> Result<[[Complex64; 2]; 2]> {
    let theta = if rabi == 0.0 { 0.0 } else { mixing_angle(detuning, rabi)? };
    let (s, c) = (0.5 * theta).sin_cos();
    let rot = Complex64::from_polar(1.0, -phi);
    Ok([
        [Complex64::new(c, 0.0), rot * s],
        [Complex64::new(-s, 0.0), rot * c],
    ])
}

/// Projects a rotating-frame two-level trajectory onto the instantaneous
/// dressed pair.
pub fn decompose_trajectory(
    trajectory: &Trajectory,
    system: &LevelSystem,
    pulse: &FieldPulse,
) -> Result<Vec<DressedAmplitudes>> {
    if system.len() != 2 {
        return Err(Error::Configuration(format!(
            "dressed projection needs exactly 2 levels, got {}",
            system.len()
        )));
    }
    if trajectory.frame != Frame::Rwa {
        return Err(Error::UnsupportedFrame(format!(
            "dressed projection needs a rotating-frame trajectory, got {}",
            trajectory.frame
        )));
    }
    check_couplings(system)?;
    let detuning = system.detuning(1, pulse.carrier());
    trajectory
        .samples
        .iter()
        .map(|s| {
            let pair = dressed_pair(detuning, system.rabi_frequency(1, pulse, s.t), pulse.phase(s.t))?;
            let project = |v: &[Complex64; 2]| v[0].conj() * s.amplitudes[0] + v[1].conj() * s.amplitudes[1];
            Ok(DressedAmplitudes {
                t: s.t,
                ground: project(&pair[0]),
                excited: project(&pair[1]),
            })
        })
        .collect()
}

pub fn projection_table(projections: &[DressedAmplitudes]) -> Table {
    let mut table = Table::new(
        ["t", "re_G", "im_G", "re_E", "im_E"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for p in projections {
        table.push(vec![p.t, p.ground.re, p.ground.im, p.excited.re, p.excited.im]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Envelope, Level, PhaseModulation};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn mixing_angle_examples() {
        assert_eq!(mixing_angle(1.0, 0.0).unwrap(), 0.0);
        assert!((mixing_angle(0.0, 0.5).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((mixing_angle(1.0, 1.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(mixing_angle(0.0, 0.0), Err(Error::DegenerateAngle));
        assert!(mixing_angle(1.0, -0.1).is_err());
    }

    #[test]
    fn bare_limit_quasi_energies() {
        let qe = quasi_energies(0.3, 2.0, 1.5, 0.0, 0.0, 0.0);
        assert_eq!(qe.ground, Complex64::new(0.3, 0.0));
        assert_eq!(qe.excited, Complex64::new(2.0, 0.0));
        // red detuning keeps the branches attached to their bare levels
        let qe = quasi_energies(0.3, 2.0, 2.5, 0.0, 0.1, 0.2);
        assert!((qe.ground - Complex64::new(0.3, -0.05)).norm() < 1e-15);
        assert!((qe.excited - Complex64::new(2.0, -0.1)).norm() < 1e-15);
    }

    #[test]
    fn resonant_splitting() {
        let w = 7.0;
        let qe = quasi_energies(0.0, w, w, 0.2, 0.0, 0.0);
        assert!((qe.ground.re + 0.1).abs() < 1e-15);
        assert!((qe.excited.re - (w + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn stark_shift_matches_perturbation_theory() {
        let rabi = 0.05;
        let detuning = 20.0 * rabi;
        let qe = quasi_energies(0.0, 3.0 + detuning, 3.0, rabi, 0.0, 0.0);
        let oracle = -rabi * rabi / (4.0 * detuning);
        assert!(((qe.ground.re - oracle) / oracle).abs() < 0.02);
        // red side shifts up
        let qe = quasi_energies(0.0, 3.0 - detuning, 3.0, rabi, 0.0, 0.0);
        assert!(((qe.ground.re + oracle) / oracle).abs() < 0.02);
    }

    #[test]
    fn branch_continuity_in_coupling_with_damping() {
        // Growing the coupling from zero at fixed detuning keeps each branch
        // attached to its bare level, on both sides of resonance.
        for detuning in [-0.3, -0.01, 0.01, 0.2] {
            let mut prev = quasi_energies(0.0, 1.0 + detuning, 1.0, 0.0, 0.02, 0.05);
            assert!((prev.ground - Complex64::new(0.0, -0.01)).norm() < 1e-15);
            for k in 1..=400 {
                let qe = quasi_energies(0.0, 1.0 + detuning, 1.0, k as f64 * 0.0025, 0.02, 0.05);
                assert!((qe.ground - prev.ground).norm() < 0.01, "jump at detuning {detuning}, step {k}");
                assert!((qe.excited - prev.excited).norm() < 0.01);
                prev = qe;
            }
        }
    }

    fn ladder(detunings: &[f64], couplings: &[f64], carrier: f64) -> LevelSystem {
        LevelSystem::ladder(
            Level::new("g", 0.5),
            detunings
                .iter()
                .zip(couplings)
                .enumerate()
                .map(|(i, (d, mu))| (Level::new(format!("e{}", i + 1), 0.5 + carrier + d), *mu))
                .collect(),
        )
        .unwrap()
    }

    fn cw(carrier: f64, amplitude: f64) -> FieldPulse {
        FieldPulse::continuous(carrier, amplitude, -1e9, 1e9).unwrap()
    }

    #[test]
    fn zero_field_bare_limit() {
        let sys = ladder(&[0.3, 0.7], &[1.0, 2.0], 5.0);
        let d = build_psnads(&sys, &cw(5.0, 0.0), 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(d.real_strength, 1.0);
        assert!(d.strengths().all(|c| c == 0.0));
        assert_eq!(d.ground_frequency(), 0.5);
    }

    #[test]
    fn single_virtual_matches_half_angle() {
        let sys = ladder(&[0.4], &[1.0], 5.0);
        let d = build_psnads(&sys, &cw(5.0, 0.3), 0.0, &[0.0]).unwrap();
        let theta = 0.3f64.atan2(0.4);
        assert!((d.real_strength - (theta / 2.0).cos()).abs() < 1e-12);
        assert!((d.virtuals[0].strength - (theta / 2.0).sin()).abs() < 1e-12);
        assert!(d.excited_quasi_energy.is_some());
    }

    #[test]
    fn two_resonant_virtuals_share_equally() {
        let sys = ladder(&[0.0, 0.0], &[1.0, 1.0], 5.0);
        let d = build_psnads(&sys, &cw(5.0, 0.2), 0.0, &[0.0, 0.0]).unwrap();
        let third = 1.0 / 3f64.sqrt();
        assert!((d.real_strength - third).abs() < 1e-15);
        assert!(d.strengths().all(|c| (c - third).abs() < 1e-15));
        assert!(d.excited_quasi_energy.is_none());
    }

    #[test]
    fn rejects_branch_and_shape_errors() {
        let sys = ladder(&[-0.3], &[1.0], 5.0);
        assert_eq!(
            build_psnads(&sys, &cw(5.0, 0.0), 0.0, &[0.0]),
            Err(Error::Branch { index: 0 })
        );
        assert!(build_psnads(&sys, &cw(5.0, 0.1), 0.0, &[0.0]).is_ok());
        assert!(matches!(
            build_psnads(&sys, &cw(5.0, 0.1), 0.0, &[0.0, 1.0]),
            Err(Error::Shape { .. })
        ));
        let resonant = ladder(&[0.0], &[1.0], 5.0);
        assert!(matches!(
            build_psnads(&resonant, &cw(5.0, 0.0), 0.0, &[0.0]),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn virtual_frequencies_are_identical() {
        let sys = ladder(&[0.3, 0.9, 1.7], &[1.0, 0.5, 2.0], 5.0);
        let d = build_psnads(&sys, &cw(5.0, 0.1), 0.0, &[0.1, 0.2, 0.3]).unwrap();
        for v in &d.virtuals {
            assert_eq!(v.quasi_energy, d.ground_frequency() + 5.0);
        }
    }

    #[test]
    fn table_layout() {
        let sys = ladder(&[0.3, 0.9], &[1.0, 0.5], 5.0);
        let series = decomposition_series(&sys, &cw(5.0, 0.1), &[0.0, 1.0], &[0.0, 0.0]).unwrap();
        let table = decomposition_table(&series);
        assert_eq!(
            table.columns,
            ["t", "C_r", "C_v1", "theta_1", "C_v2", "theta_2", "omega_G", "omega_Gv1", "omega_Gv2"]
        );
    }

    #[test]
    fn zero_field_projection_is_bare() {
        let sys = ladder(&[-0.2], &[1.0], 5.0);
        let pair = dressed_pair(sys.detuning(1, 5.0), 0.0, 0.4).unwrap();
        assert_eq!(pair[0], [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(pair[1][1], Complex64::from_polar(1.0, -0.4));
    }

    #[test]
    fn dressed_pair_diagonalizes_rwa_matrix() {
        let (d, w, phi) = (0.3, 0.4, 0.9);
        let pair = dressed_pair(d, w, phi).unwrap();
        let h = [
            [Complex64::new(0.0, 0.0), Complex64::from_polar(-0.5 * w, phi)],
            [Complex64::from_polar(-0.5 * w, -phi), Complex64::new(d, 0.0)],
        ];
        let qe = quasi_energies(0.0, 1.0 + d, 1.0, w, 0.0, 0.0);
        for (v, lambda) in pair.iter().zip([qe.ground.re, qe.excited.re - 1.0]) {
            for r in 0..2 {
                let hv = h[r][0] * v[0] + h[r][1] * v[1];
                assert!((hv - v[r] * lambda).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_series_is_continuous() {
        let sys = ladder(&[0.5], &[1.0], 5.0);
        let pulse = FieldPulse::new(
            5.0,
            Envelope::Gaussian { peak: 0.2, center: 10.0, fwhm: 4.0 },
            PhaseModulation::default(),
        )
        .unwrap();
        let grid: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.01).collect();
        let series = decomposition_series(&sys, &pulse, &grid, &[0.0]).unwrap();
        for w in series.windows(2) {
            assert!((w[1].real_strength - w[0].real_strength).abs() < 1e-3);
            assert!((w[1].ground_frequency() - w[0].ground_frequency()).abs() < 1e-3);
        }
    }
}
