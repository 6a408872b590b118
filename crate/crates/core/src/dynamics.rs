//! Time-domain evolution of the coupled amplitudes and linear stability of
//! steady-state roots.
//!
//! The integrator works on a nondimensionalized copy of the equations (time
//! in units of the fastest rate, amplitudes against a reference magnitude),
//! so tolerances mean the same thing from sub-Hz saturation scales up to
//! optical carrier frequencies.

use crate::error::{Error, Result};
use crate::model::{self, DrivePort, SystemConfig};
use crate::ode::{self, OdeOptions, OdeStats, StepOutcome};
use crate::steady::{self, Direction};
use nalgebra::Matrix4;
use num_complex::Complex64;
use std::collections::VecDeque;

/// Reference frame of a trajectory. `Rotating` co-rotates with the drive
/// laser (amplitudes steady at a fixed point); `Lab` keeps the optical
/// carrier, with the drive oscillating explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

/// Instantaneous pair of ring amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub a1: Complex64,
    pub a2: Complex64,
    pub frame: Frame,
}

impl TrajectoryState {
    pub fn new(frame: Frame, t: f64, a1: Complex64, a2: Complex64) -> Self {
        Self { t, a1, a2, frame }
    }
}

/// Tolerances and horizons for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Absolute tolerance in units of the trajectory's amplitude scale.
    pub abs_tol: f64,
    /// Hard cap on the step size, seconds.
    pub max_step: f64,
    /// Integration horizon, seconds. Must be finite and positive.
    pub max_time: f64,
    /// Trailing window (seconds) over which the state must stop moving to
    /// declare convergence; zero disables early stopping.
    pub convergence_window: f64,
    /// Relative sup-norm motion allowed over the window.
    pub convergence_eps: f64,
}

impl IntegratorConfig {
    /// Fixed-horizon run.
    pub fn for_duration(max_time: f64) -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_time,
            convergence_window: 0.0,
            convergence_eps: 0.0,
        }
    }

    /// Run-to-steady-state with early stopping.
    pub fn to_steady(max_time: f64, window: f64) -> Self {
        Self {
            convergence_window: window,
            convergence_eps: 1e-10,
            ..Self::for_duration(max_time)
        }
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// State stopped moving over the trailing window.
    ConvergedSteady { t: f64 },
    /// Horizon reached without settling. `window_spread` is the relative
    /// sup-norm motion over the last window; a large spread without drift
    /// marks a suspected limit cycle (reported, not characterized).
    MaxTimeReached {
        window_spread: f64,
        oscillation_suspected: bool,
    },
    /// Amplitudes ran away (linear gain above every loss with no
    /// saturation); integration stopped at `t`.
    Diverged { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frame: Frame,
    /// Every accepted step, initial state first.
    pub samples: Vec<TrajectoryState>,
    pub outcome: Outcome,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &TrajectoryState {
        self.samples.last().expect("samples never empty")
    }
}

/// Right-hand side of the amplitude equations in either frame, drive
/// included. Gain saturation enters as the instantaneous `-b |a1|^2 / 2`
/// correction to the active ring's net gain.
pub fn rhs(config: &SystemConfig, frame: Frame, t: f64, a1: Complex64, a2: Complex64) -> (Complex64, Complex64) {
    let d = model::derive(config, config.drive.omega_l);
    let b = config.gain.b;
    let kappa = config.kappa;
    let eps = config.drive.epsilon;
    let (rot1, rot2, drive) = match frame {
        Frame::Rotating => {
            let idelta = Complex64::new(0.0, d.delta);
            (idelta, idelta, Complex64::new(eps, 0.0))
        }
        Frame::Lab => {
            let icarrier = Complex64::new(0.0, -config.resonators.omega_c);
            (
                icarrier,
                icarrier,
                Complex64::from_polar(eps, -config.drive.omega_l * t),
            )
        }
    };
    let sat = (d.g1 - b * a1.norm_sqr()) / 2.0;
    let mut da1 = (rot1 + sat) * a1 - kappa * a2;
    let mut da2 = (rot2 - d.gamma_total2 / 2.0) * a2 + kappa * a1;
    match config.drive.port {
        DrivePort::Port1 => da1 -= drive,
        DrivePort::Port4 => da2 -= drive,
    }
    (da1, da2)
}

fn rate_scale(config: &SystemConfig, frame: Frame) -> f64 {
    let d = model::derive(config, config.drive.omega_l);
    let mut rs = d
        .gamma_total1
        .max(d.gamma_total2)
        .max(config.gain.a)
        .max(config.kappa)
        .max(d.delta.abs());
    if frame == Frame::Lab {
        rs = rs
            .max(config.resonators.omega_c.abs())
            .max(config.drive.omega_l.abs());
    }
    rs.max(1.0)
}

fn amplitude_scale(config: &SystemConfig, initial: &TrajectoryState, rs: f64) -> f64 {
    let mut s = initial.a1.norm().max(initial.a2.norm());
    s = s.max(config.drive.epsilon / rs);
    let d = model::derive(config, config.drive.omega_l);
    if d.g1 > 0.0 && config.gain.b > 0.0 {
        s = s.max((d.g1 / config.gain.b).sqrt());
    }
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

const DIVERGENCE_FACTOR: f64 = 1e9;

/// Integrates the pair from `initial` until convergence, divergence, or the
/// horizon. Samples every accepted step.
pub fn integrate(
    initial: &TrajectoryState,
    config: &SystemConfig,
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if !(icfg.max_time.is_finite() && icfg.max_time > initial.t) {
        return Err(Error::Domain(format!(
            "max_time must be finite and beyond the initial time, got {} vs {}",
            icfg.max_time, initial.t
        )));
    }
    if !(icfg.rel_tol > 0.0 && icfg.abs_tol >= 0.0) {
        return Err(Error::Domain(
            "integrator tolerances must be positive".into(),
        ));
    }
    let frame = initial.frame;
    let rs = rate_scale(config, frame);
    let a_ref = amplitude_scale(config, initial, rs);
    let opts = OdeOptions {
        rtol: icfg.rel_tol,
        atol: icfg.abs_tol * a_ref,
        h_max: icfg.max_step * rs,
        ..Default::default()
    };
    let tau_end = icfg.max_time * rs;
    let tau_window = icfg.convergence_window * rs;
    let detect = tau_window > 0.0 && icfg.convergence_eps > 0.0;

    let y0 = [initial.a1, initial.a2];
    let mut samples = vec![*initial];
    let mut window: VecDeque<(f64, [Complex64; 2])> = VecDeque::new();
    window.push_back((initial.t * rs, y0));
    let mut outcome: Option<Outcome> = None;

    let cfg = config.clone();
    let rhs_scaled = move |tau: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let (d1, d2) = rhs(&cfg, frame, tau / rs, y[0], y[1]);
        dy[0] = d1 / rs;
        dy[1] = d2 / rs;
    };

    let (_, tau_final, stats) = ode::integrate(
        rhs_scaled,
        &y0,
        initial.t * rs,
        tau_end,
        &opts,
        |tau, y| {
            let t = tau / rs;
            samples.push(TrajectoryState::new(frame, t, y[0], y[1]));
            let mag = y[0].norm().max(y[1].norm());
            if mag > DIVERGENCE_FACTOR * a_ref {
                outcome = Some(Outcome::Diverged { t });
                return StepOutcome::Stop;
            }
            window.push_back((tau, [y[0], y[1]]));
            while window.len() > 2 && window.front().map(|f| f.0).unwrap() < tau - tau_window {
                window.pop_front();
            }
            if detect && window.len() >= 4 {
                let (tau0, _) = window[0];
                if tau - tau0 >= 0.999 * tau_window {
                    let spread = window
                        .iter()
                        .map(|(_, w)| (w[0] - y[0]).norm().max((w[1] - y[1]).norm()))
                        .fold(0.0f64, f64::max);
                    let scale = a_ref.max(mag);
                    if spread <= icfg.convergence_eps * scale {
                        outcome = Some(Outcome::ConvergedSteady { t });
                        return StepOutcome::Stop;
                    }
                }
            }
            StepOutcome::Continue
        },
    )?;

    let outcome = outcome.unwrap_or_else(|| {
        // horizon reached: summarize the trailing window
        let last = *samples.last().expect("nonempty");
        let yl = [last.a1, last.a2];
        let spread = window
            .iter()
            .map(|(_, w)| (w[0] - yl[0]).norm().max((w[1] - yl[1]).norm()))
            .fold(0.0f64, f64::max);
        let scale = a_ref.max(yl[0].norm()).max(yl[1].norm());
        let rel_spread = spread / scale;
        // oscillation: sustained motion with no net drift across the window
        let half = window.len() / 2;
        let mean = |it: &mut dyn Iterator<Item = &(f64, [Complex64; 2])>| {
            let mut n = 0usize;
            let mut acc = 0.0;
            for (_, w) in it {
                acc += w[0].norm();
                n += 1;
            }
            if n > 0 {
                acc / n as f64
            } else {
                0.0
            }
        };
        let m1 = mean(&mut window.iter().take(half));
        let m2 = mean(&mut window.iter().skip(half));
        let drift = (m2 - m1).abs() / scale;
        let oscillation_suspected = window.len() >= 8
            && rel_spread > 100.0 * icfg.convergence_eps.max(1e-12)
            && drift < 0.5 * rel_spread;
        let _ = tau_final;
        Outcome::MaxTimeReached {
            window_spread: rel_spread,
            oscillation_suspected,
        }
    });

    Ok(Trajectory {
        frame,
        samples,
        outcome,
        stats,
    })
}

/// Linear stability classification of a steady-state intensity root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootStability {
    Stable,
    Unstable,
    /// Leading eigenvalue within the numerical margin of zero.
    Marginal,
}

/// Classifies an intensity root by the eigenvalues of the real 4x4 Jacobian
/// of the amplitude equations at the reconstructed fixed point. The margin
/// for "zero" scales with the system's rates.
pub fn stability_of_root(
    config: &SystemConfig,
    omega: f64,
    direction: Direction,
    i1: f64,
) -> Result<RootStability> {
    let amps = steady::amplitudes_at_root(config, omega, direction, i1)?;
    let d = model::derive(config, omega);
    let b = config.gain.b;
    // complex derivatives of the two mode equations
    let alpha1 = Complex64::new(d.g1 / 2.0 - b * i1, d.delta);
    let beta1 = -0.5 * b * amps.a1 * amps.a1;
    let alpha2 = Complex64::new(-d.gamma_total2 / 2.0, d.delta);
    let kappa = config.kappa;

    let block = |alpha: Complex64, beta: Complex64| {
        [
            [(alpha + beta).re, (beta - alpha).im],
            [(alpha + beta).im, (alpha - beta).re],
        ]
    };
    let b11 = block(alpha1, beta1);
    let b22 = block(alpha2, Complex64::default());
    let mut j = Matrix4::<f64>::zeros();
    for r in 0..2 {
        for c in 0..2 {
            j[(r, c)] = b11[r][c];
            j[(2 + r, 2 + c)] = b22[r][c];
        }
    }
    // coupling enters as real multiples of the identity in each 2x2 block
    j[(0, 2)] = -kappa;
    j[(1, 3)] = -kappa;
    j[(2, 0)] = kappa;
    j[(3, 1)] = kappa;

    let eigs = j.complex_eigenvalues();
    let max_re = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let rs = d
        .gamma_total1
        .max(d.gamma_total2)
        .max(config.gain.a)
        .max(kappa)
        .max(d.delta.abs())
        .max(b * i1)
        .max(1.0);
    let margin = 1e-9 * rs;
    Ok(if max_re > margin {
        RootStability::Unstable
    } else if max_re < -margin {
        RootStability::Stable
    } else {
        RootStability::Marginal
    })
}
