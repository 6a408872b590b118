//! System parameters and the derived quantities every solver consumes.
//!
//! The active ring (index 1) has intrinsic loss `c1`, waveguide coupling
//! loss `gamma1`, linear gain `a`, and gain saturation `b`. The passive
//! ring (index 2) has `c2` and `gamma2`. The rings exchange energy at rate
//! `kappa`, and a coherent drive of amplitude `epsilon` enters through the
//! waveguide coupled to ring 1 (port 1) or ring 2 (port 4).

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use std::f64::consts::PI;

const REL_CONSISTENCY: f64 = 1e-12;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn require_finite(value: f64, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}

fn require_nonneg(value: f64, name: &str) -> Result<()> {
    require_finite(value, name)?;
    if value < 0.0 {
        Err(Error::Domain(format!("{name} must be >= 0, got {value}")))
    } else {
        Ok(())
    }
}

/// Which waveguide port carries the input field. Port 1 sits on the
/// waveguide coupled to the active ring; port 4 on the passive ring's
/// waveguide. The corresponding output ports are 4 and 1 (add/drop
/// geometry), and port 2 is the through port next to port 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrivePort {
    Port1,
    Port4,
}

/// Ring frequencies and losses. Both rings share the common resonance
/// `omega_c`; `c1`, `c2` are intrinsic (material and bending) losses and
/// `gamma1`, `gamma2` the waveguide coupling losses, all field rates in
/// s^-1. The waveguide rates also set how the drive and the extracted
/// output couple to each ring.
///
/// `q1`/`q2` optionally record the intrinsic quality factors the losses
/// were derived from; when present they must reproduce `c_i = omega_c / q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorParams {
    pub omega_c: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
}

impl ResonatorParams {
    pub fn new(omega_c: f64, c1: f64, c2: f64, gamma1: f64, gamma2: f64) -> Self {
        Self {
            omega_c,
            c1,
            c2,
            gamma1,
            gamma2,
            q1: None,
            q2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_nonneg(self.omega_c, "resonators.omega_c")?;
        require_nonneg(self.c1, "resonators.C1")?;
        require_nonneg(self.c2, "resonators.C2")?;
        require_nonneg(self.gamma1, "resonators.gamma1")?;
        require_nonneg(self.gamma2, "resonators.gamma2")?;
        if self.c1 + self.gamma1 <= 0.0 {
            return Err(Error::Domain(
                "resonators: total loss C1 + gamma1 of the active ring must be > 0".into(),
            ));
        }
        if self.c2 + self.gamma2 <= 0.0 {
            return Err(Error::Domain(
                "resonators: total loss C2 + gamma2 of the passive ring must be > 0".into(),
            ));
        }
        for (q, c, qn, cn) in [
            (self.q1, self.c1, "resonators.Q1", "resonators.C1"),
            (self.q2, self.c2, "resonators.Q2", "resonators.C2"),
        ] {
            if let Some(q) = q {
                if !(q.is_finite() && q > 0.0) {
                    return Err(Error::Domain(format!("{qn} must be > 0, got {q}")));
                }
                if self.omega_c <= 0.0 {
                    return Err(Error::Domain(format!(
                        "{qn} given but resonators.omega_c is not positive; cannot form omega_c/Q"
                    )));
                }
                let implied = self.omega_c / q;
                if !rel_close(c, implied, REL_CONSISTENCY) {
                    return Err(Error::Domain(format!(
                        "{cn} = {c} disagrees with omega_c/{qn} = {implied} beyond relative 1e-12"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Microscopic gain-medium parameters behind an `(a, b)` pair:
/// single-atom coupling `g`, incoherent pump rate `pump_rate`, and atomic
/// decay rate `atom_decay`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroscopicGain {
    pub g: f64,
    pub pump_rate: f64,
    pub atom_decay: f64,
}

/// Linear gain `a` and saturation `b` of the active ring, both s^-1
/// (`b` is a rate per photon). `microscopic`, when present, must reproduce
/// `(a, b)` through [`gain_coefficients`].
#[derive(Debug, Clone, PartialEq)]
pub struct GainParams {
    pub a: f64,
    pub b: f64,
    pub microscopic: Option<MicroscopicGain>,
}

impl GainParams {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            microscopic: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_nonneg(self.a, "gain.A")?;
        require_nonneg(self.b, "gain.B")?;
        if let Some(m) = &self.microscopic {
            let (a, b) = gain_coefficients(m.g, m.pump_rate, m.atom_decay)?;
            if !rel_close(self.a, a, REL_CONSISTENCY) || !rel_close(self.b, b, REL_CONSISTENCY) {
                return Err(Error::Domain(format!(
                    "gain: (A, B) = ({}, {}) disagrees with the microscopic triple's ({a}, {b}) \
                     beyond relative 1e-12",
                    self.a, self.b
                )));
            }
        }
        Ok(())
    }
}

/// Input power and vacuum wavelength behind a drive amplitude; must
/// reproduce `epsilon` through [`epsilon_from_power`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDrive {
    /// Input power at the drive port, W.
    pub power: f64,
    /// Vacuum wavelength of the drive laser, m.
    pub wavelength: f64,
}

/// Coherent drive: entry port, amplitude `epsilon` (s^-1), and laser
/// frequency `omega_l` (angular, s^-1). Solvers work in the frame rotating
/// at `omega_l`; only the detuning `omega_l - omega_c` matters except for
/// lab-frame trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    pub port: DrivePort,
    pub epsilon: f64,
    pub omega_l: f64,
    pub source: Option<PowerDrive>,
}

impl DriveConfig {
    pub fn new(port: DrivePort, epsilon: f64, omega_l: f64) -> Self {
        Self {
            port,
            epsilon,
            omega_l,
            source: None,
        }
    }

    /// `gamma_in` is the waveguide coupling rate of the driven ring, needed
    /// to check a power-derived amplitude.
    pub fn validate(&self, gamma_in: f64) -> Result<()> {
        require_nonneg(self.epsilon, "drive.epsilon")?;
        require_finite(self.omega_l, "drive.omega_l")?;
        if let Some(src) = &self.source {
            let implied = epsilon_from_power(src.power, src.wavelength, gamma_in)?;
            if !rel_close(self.epsilon, implied, REL_CONSISTENCY) {
                return Err(Error::Domain(format!(
                    "drive.epsilon = {} disagrees with the power-derived value {implied} \
                     beyond relative 1e-12",
                    self.epsilon
                )));
            }
        }
        Ok(())
    }
}

/// Complete system: rings, gain, inter-ring coupling `kappa` (s^-1), drive.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub resonators: ResonatorParams,
    pub gain: GainParams,
    pub kappa: f64,
    pub drive: DriveConfig,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.resonators.validate()?;
        self.gain.validate()?;
        require_nonneg(self.kappa, "kappa")?;
        self.drive.validate(self.drive_coupling())
    }

    /// Waveguide coupling rate on the driven side.
    pub fn drive_coupling(&self) -> f64 {
        match self.drive.port {
            DrivePort::Port1 => self.resonators.gamma1,
            DrivePort::Port4 => self.resonators.gamma2,
        }
    }

    /// Drive detuning from the common resonance.
    pub fn detuning(&self) -> f64 {
        self.drive.omega_l - self.resonators.omega_c
    }
}

/// Quantities derived from a [`SystemConfig`] at drive frequency `omega`,
/// evaluated at zero intensity (the saturation correction `-b*i1` is applied
/// by the consumers that know the intensity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Total loss of the active ring, `c1 + gamma1`.
    pub gamma_total1: f64,
    /// Total loss of the passive ring, `c2 + gamma2`.
    pub gamma_total2: f64,
    /// Net linear gain of the active ring, `a - gamma_total1 - (7/4) b`.
    pub g1: f64,
    /// Drive detuning `omega - omega_c`.
    pub delta: f64,
    /// Passive-ring enhancement `4 kappa^2 / (gamma_total2^2 + 4 delta^2)`;
    /// the forward intensity ratio `i2/i1`.
    pub f: f64,
    /// Effective net loss `(f * gamma_total2 - g1) / 2` of the active ring
    /// after adiabatic elimination of the passive one.
    pub big_f: f64,
}

/// Derives the solver-facing parameter set at drive frequency `omega`.
/// Requires a validated config (total losses positive, so `f` is finite).
pub fn derive(config: &SystemConfig, omega: f64) -> DerivedParams {
    let r = &config.resonators;
    let gamma_total1 = r.c1 + r.gamma1;
    let gamma_total2 = r.c2 + r.gamma2;
    let g1 = config.gain.a - gamma_total1 - 1.75 * config.gain.b;
    let delta = omega - r.omega_c;
    let f = 4.0 * config.kappa * config.kappa
        / (gamma_total2 * gamma_total2 + 4.0 * delta * delta);
    let big_f = (f * gamma_total2 - g1) / 2.0;
    DerivedParams {
        gamma_total1,
        gamma_total2,
        g1,
        delta,
        f,
        big_f,
    }
}

/// Maps a gain medium's single-atom coupling `g`, pump rate `r`, and atomic
/// decay `atom_decay` to the linear gain `a = 2 g^2 r / atom_decay^2` and
/// saturation `b = 4 g^2 a / atom_decay^2`.
///
/// Guarantees `b * atom_decay^2 = 4 g^2 a` to relative 1e-15 (b is computed
/// from that expression directly).
pub fn gain_coefficients(g: f64, pump_rate: f64, atom_decay: f64) -> Result<(f64, f64)> {
    require_nonneg(g, "gain.g")?;
    require_nonneg(pump_rate, "gain.pump_rate")?;
    require_finite(atom_decay, "gain.atom_decay")?;
    if atom_decay <= 0.0 {
        return Err(Error::Domain(format!(
            "gain.atom_decay must be > 0 to form the gain coefficients, got {atom_decay}"
        )));
    }
    let g2 = g * g;
    let decay2 = atom_decay * atom_decay;
    let a = 2.0 * g2 * pump_rate / decay2;
    let b = 4.0 * g2 * a / decay2;
    Ok((a, b))
}

/// Drive amplitude from input power (W) and vacuum wavelength (m):
/// `epsilon = sqrt(gamma_in * P / (hbar * omega_photon))` with
/// `omega_photon = 2 pi c / wavelength`.
pub fn epsilon_from_power(power: f64, wavelength: f64, gamma_in: f64) -> Result<f64> {
    require_nonneg(power, "drive.power")?;
    require_nonneg(gamma_in, "drive coupling rate")?;
    require_finite(wavelength, "drive.wavelength")?;
    if wavelength <= 0.0 {
        return Err(Error::Domain(format!(
            "drive.wavelength must be > 0, got {wavelength}"
        )));
    }
    Ok((gamma_in * power * wavelength / (HBAR * 2.0 * PI * SPEED_OF_LIGHT)).sqrt())
}

/// Saturation coefficient from a linear gain and the saturation intensity
/// (photon number) at which the gain halves: `b = a / saturation_photons`.
pub fn saturation_from_gain(a: f64, saturation_photons: f64) -> Result<f64> {
    require_nonneg(a, "gain.A")?;
    require_finite(saturation_photons, "gain saturation photon number")?;
    if saturation_photons <= 0.0 {
        return Err(Error::Domain(format!(
            "gain saturation photon number must be > 0, got {saturation_photons}"
        )));
    }
    Ok(a / saturation_photons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_config() -> SystemConfig {
        SystemConfig {
            resonators: ResonatorParams::new(0.0, 300.0e6, 1.0e6, 1.15e6, 1.15e6),
            gain: GainParams::new(301.0e6, 0.05),
            kappa: 1.0e6,
            drive: DriveConfig::new(DrivePort::Port1, 2.0e9, 0.0),
        }
    }

    #[test]
    fn total_losses_and_net_gain() {
        let cfg = base_config();
        cfg.validate().unwrap();
        let d = derive(&cfg, 0.0);
        assert_eq!(d.gamma_total1, 301.15e6);
        assert_eq!(d.gamma_total2, 2.15e6);
        // 301e6 - 301.15e6 - 1.75 * 0.05, all exact in f64
        assert_eq!(d.g1, -150000.0875);
    }

    #[test]
    fn passive_enhancement_unity_case() {
        let mut cfg = base_config();
        cfg.resonators.c2 = 1.0e6;
        cfg.resonators.gamma2 = 1.0e6;
        cfg.kappa = 1.0e6;
        let d = derive(&cfg, 0.0);
        assert_eq!(d.f, 1.0); // 4 kappa^2 = gamma_total2^2 at delta = 0
    }

    #[test]
    fn enhancement_falls_off_resonance() {
        let cfg = base_config();
        let on = derive(&cfg, 0.0);
        let off = derive(&cfg, 3.0e6);
        assert!(off.f < on.f);
        assert_eq!(off.delta, 3.0e6);
        let g2 = 2.15e6_f64;
        assert_relative_eq!(
            off.f,
            4.0e12 / (g2 * g2 + 4.0 * 9.0e12),
            max_relative = 1e-15
        );
    }

    #[test]
    fn gain_coefficients_symmetric_point() {
        // g = r = atom_decay collapses to (2 decay, 8 decay)
        let decay = 3.7e6;
        let (a, b) = gain_coefficients(decay, decay, decay).unwrap();
        assert_eq!(a, 2.0 * decay);
        assert_eq!(b, 8.0 * decay);
    }

    #[test]
    fn gain_coefficients_internal_identity() {
        let cases = [
            (1.3e4, 2.0e6, 8.0e5),
            (5.0e2, 1.0e7, 3.3e6),
            (9.9e5, 4.2e4, 1.1e7),
        ];
        for (g, r, decay) in cases {
            let (a, b) = gain_coefficients(g, r, decay).unwrap();
            let lhs = b * decay * decay;
            let rhs = 4.0 * g * g * a;
            assert!((lhs - rhs).abs() <= 1e-15 * lhs.abs().max(rhs.abs()));
        }
    }

    #[test]
    fn gain_coefficients_reject_zero_atom_decay() {
        assert!(matches!(
            gain_coefficients(1.0e3, 1.0e6, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn epsilon_from_power_reference_point() {
        // 100 nW at 1550 nm into a 25 MHz coupling
        let eps = epsilon_from_power(100.0e-9, 1550.0e-9, 25.0e6).unwrap();
        assert_relative_eq!(eps, 4416695791.106791, max_relative = 1e-12);
        // photon energy consistency: eps^2 * hbar * omega = gamma * P
        let omega = 2.0 * PI * SPEED_OF_LIGHT / 1550.0e-9;
        assert_relative_eq!(
            eps * eps * HBAR * omega,
            25.0e6 * 100.0e-9,
            max_relative = 1e-12
        );
    }

    #[test]
    fn epsilon_from_power_rejects_bad_wavelength() {
        assert!(matches!(
            epsilon_from_power(1.0e-9, 0.0, 25.0e6),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            epsilon_from_power(1.0e-9, -1.0, 25.0e6),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn saturation_from_gain_reference_point() {
        let b = saturation_from_gain(301.0e6, 6.02e9).unwrap();
        assert_relative_eq!(b, 0.05, max_relative = 1e-15);
        assert!(saturation_from_gain(301.0e6, 0.0).is_err());
    }

    #[test]
    fn q_factor_consistency() {
        let omega_c = 2.0 * PI * SPEED_OF_LIGHT / 1550.0e-9;
        let mut r = ResonatorParams::new(omega_c, omega_c / 4.0e7, 1.0e6, 1.15e6, 1.15e6);
        r.q1 = Some(4.0e7);
        r.validate().unwrap();
        r.q1 = Some(4.1e7);
        assert!(matches!(r.validate(), Err(Error::Domain(_))));
        // Q given without a carrier frequency is unusable
        let mut r0 = ResonatorParams::new(0.0, 25.0e6, 1.0e6, 1.15e6, 1.15e6);
        r0.q1 = Some(4.0e7);
        assert!(matches!(r0.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn microscopic_gain_consistency() {
        let (a, b) = gain_coefficients(1.3e4, 2.0e6, 8.0e5).unwrap();
        let mut gain = GainParams::new(a, b);
        gain.microscopic = Some(MicroscopicGain {
            g: 1.3e4,
            pump_rate: 2.0e6,
            atom_decay: 8.0e5,
        });
        gain.validate().unwrap();
        gain.b *= 1.0 + 1e-6;
        assert!(matches!(gain.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn power_drive_consistency() {
        let eps = epsilon_from_power(100.0e-9, 1550.0e-9, 25.0e6).unwrap();
        let mut cfg = base_config();
        cfg.resonators.gamma1 = 25.0e6;
        cfg.drive = DriveConfig::new(DrivePort::Port1, eps, 0.0);
        cfg.drive.source = Some(PowerDrive {
            power: 100.0e-9,
            wavelength: 1550.0e-9,
        });
        cfg.validate().unwrap();
        cfg.drive.epsilon *= 1.0 + 1e-6;
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_negative_rates() {
        let mut cfg = base_config();
        cfg.kappa = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
        let mut cfg = base_config();
        cfg.resonators.gamma1 = f64::NAN;
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.gain.b = -0.05;
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_lossless_ring() {
        let mut cfg = base_config();
        cfg.resonators.c2 = 0.0;
        cfg.resonators.gamma2 = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn detuning_is_laser_minus_resonance() {
        let mut cfg = base_config();
        cfg.resonators.omega_c = 5.0e8;
        cfg.drive.omega_l = 5.0e8 + 2.5e6;
        assert_eq!(cfg.detuning(), 2.5e6);
        let d = derive(&cfg, cfg.drive.omega_l);
        assert_eq!(d.delta, 2.5e6);
    }
}
