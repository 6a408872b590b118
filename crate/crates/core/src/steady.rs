//! Driven steady states in the frame rotating at the drive frequency.
//!
//! Eliminating the passive ring turns the fixed-point condition into a real
//! cubic in the active-ring intensity `i1 = |a1|^2`; the complex amplitudes
//! are then reconstructed from the chosen root.

use crate::cubic;
use crate::dynamics::{self, RootStability};
use crate::error::{Error, Result};
use crate::model::{self, DrivePort, SystemConfig};
use num_complex::Complex64;

/// Propagation direction through the add/drop structure. `Forward` drives
/// port 1 (active-ring side), `Backward` drives port 4 (passive-ring side).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl From<DrivePort> for Direction {
    fn from(port: DrivePort) -> Self {
        match port {
            DrivePort::Port1 => Direction::Forward,
            DrivePort::Port4 => Direction::Backward,
        }
    }
}

impl Direction {
    pub fn port(self) -> DrivePort {
        match self {
            Direction::Forward => DrivePort::Port1,
            Direction::Backward => DrivePort::Port4,
        }
    }
}

/// Coefficients of the intensity cubic `l1 i^3 + l2 i^2 + l3 i + l4 = 0`.
/// By construction `l1 >= 0`, `l3 >= 0`, `l4 <= 0`; `l2` carries the sign of
/// the effective loss and is negative exactly when saturable gain overcomes
/// the total linear loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl CubicCoeffs {
    pub fn as_array(&self) -> [f64; 4] {
        [self.l1, self.l2, self.l3, self.l4]
    }
}

/// Intensity cubic for the given drive frequency and direction. The only
/// direction dependence is the drive term: a backward drive reaches the
/// active ring through the coupler, picking up the enhancement factor `f`.
pub fn cubic_coeffs(config: &SystemConfig, omega: f64, direction: Direction) -> CubicCoeffs {
    let d = model::derive(config, omega);
    let b = config.gain.b;
    let eps2 = config.drive.epsilon * config.drive.epsilon;
    let fd = d.delta * (d.f - 1.0);
    CubicCoeffs {
        l1: b * b / 4.0,
        l2: b * d.big_f,
        l3: d.big_f * d.big_f + fd * fd,
        l4: match direction {
            Direction::Forward => -eps2,
            Direction::Backward => -d.f * eps2,
        },
    }
}

/// Real roots of an intensity cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityRoots {
    /// Every real root, ascending, with rounding-level negatives clamped to
    /// zero.
    pub roots: Vec<f64>,
    /// The subset admissible as intensities (nonnegative), ascending.
    pub physical: Vec<f64>,
    /// Cubic discriminant; positive means three real roots.
    pub discriminant: f64,
}

/// Solves the intensity cubic. Degenerate leading coefficients reduce the
/// order; a negative discriminant takes the closed form, otherwise the
/// companion eigensolve. Every returned root satisfies the cubic to a
/// relative residual below 1e-10.
pub fn solve_intensity(coeffs: &CubicCoeffs) -> Result<IntensityRoots> {
    let c = coeffs.as_array();
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("intensity cubic has non-finite coefficients".into()));
    }
    if coeffs.l1 < 0.0 || coeffs.l3 < 0.0 || coeffs.l4 > 0.0 {
        return Err(Error::Domain(format!(
            "intensity cubic out of domain: need l1 >= 0, l3 >= 0, l4 <= 0, got {coeffs:?}"
        )));
    }
    let discriminant = cubic::discriminant(&c);
    let mut roots = if coeffs.l1 == 0.0 && coeffs.l2 == 0.0 {
        if coeffs.l3 == 0.0 {
            if coeffs.l4 == 0.0 {
                // fully degenerate: undriven exactly at threshold
                vec![0.0]
            } else {
                return Err(Error::NoSolution(
                    "response coefficients vanish but the drive does not; \
                     the linearized system is exactly singular at this detuning"
                        .into(),
                ));
            }
        } else {
            vec![-coeffs.l4 / coeffs.l3]
        }
    } else if coeffs.l1 > 0.0 {
        match cubic::closed_form_unique_root(&c) {
            Some(r) => vec![r],
            None => cubic::real_roots(&c),
        }
    } else {
        cubic::real_roots(&c)
    };
    if roots.is_empty() {
        return Err(Error::NoSolution(
            "intensity polynomial has no real root".into(),
        ));
    }
    let scale = roots.iter().fold(0.0f64, |m, r| m.max(r.abs())).max(f64::MIN_POSITIVE);
    for r in &mut roots {
        if *r < 0.0 && *r > -1e-12 * scale {
            *r = 0.0;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup();
    for &r in &roots {
        if r >= 0.0 && cubic::rel_residual(&c, r) >= 1e-10 {
            return Err(Error::Inconsistent(format!(
                "intensity root {r} has relative residual {} (>= 1e-10)",
                cubic::rel_residual(&c, r)
            )));
        }
    }
    let physical = roots.iter().copied().filter(|&r| r >= 0.0).collect();
    Ok(IntensityRoots {
        roots,
        physical,
        discriminant,
    })
}

/// Complex amplitudes reconstructed from one intensity root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyAmplitudes {
    pub a1: Complex64,
    pub a2: Complex64,
    pub i1: f64,
    pub i2: f64,
    /// Phase of the active-ring field relative to the drive.
    pub phi1: f64,
    /// Relative residual of the full two-mode fixed-point equations.
    pub residual: f64,
}

/// Rebuilds `(a1, a2)` from an intensity root and verifies the full
/// fixed-point equations to relative 1e-9.
///
/// Forward drive fixes the phase of `a1` through the drive balance (the
/// quadrature equations must close: `cos^2 + sin^2 = 1` within 1e-9).
/// Backward drive reaches `a1` through the coupler, so `kappa > 0` is
/// required and `|a1|^2` must rebuild the root to relative 1e-10.
pub fn amplitudes_at_root(
    config: &SystemConfig,
    omega: f64,
    direction: Direction,
    i1: f64,
) -> Result<SteadyAmplitudes> {
    let d = model::derive(config, omega);
    let b = config.gain.b;
    let eps = config.drive.epsilon;
    let kappa = config.kappa;
    if eps <= 0.0 {
        return Err(Error::Domain(
            "steady-state reconstruction requires drive.epsilon > 0".into(),
        ));
    }
    if !(i1 >= 0.0) {
        return Err(Error::Domain(format!("intensity root must be >= 0, got {i1}")));
    }
    let g1p = d.g1 - b * i1;
    let i_delta = Complex64::new(0.0, d.delta);
    let (a1, a2, i2, phi1) = match direction {
        Direction::Forward => {
            let mag = i1.sqrt();
            let cos = mag * (d.g1 - d.f * d.gamma_total2 - b * i1) / (2.0 * eps);
            let sin = mag * d.delta * (d.f - 1.0) / eps;
            let norm = cos * cos + sin * sin;
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Inconsistent(format!(
                    "forward phase quadratures square to {norm}, not 1, at i1 = {i1}"
                )));
            }
            let phi1 = sin.atan2(cos);
            let a1 = Complex64::from_polar(mag, phi1);
            let a2 = if kappa == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                kappa * a1 / Complex64::new(d.gamma_total2 / 2.0, -d.delta)
            };
            (a1, a2, d.f * i1, phi1)
        }
        Direction::Backward => {
            if kappa == 0.0 {
                return Err(Error::NoTransmission(
                    "backward drive with kappa = 0 never reaches the active ring".into(),
                ));
            }
            let det = (i_delta - d.gamma_total2 / 2.0) * (i_delta + g1p / 2.0) + kappa * kappa;
            let a1 = kappa * eps / det;
            let rebuilt = a1.norm_sqr();
            if (rebuilt - i1).abs() > 1e-10 * i1.max(rebuilt).max(f64::MIN_POSITIVE) {
                return Err(Error::Inconsistent(format!(
                    "backward amplitude rebuilds |a1|^2 = {rebuilt} from root {i1}"
                )));
            }
            let a2 = (i_delta + g1p / 2.0) * a1 / kappa;
            (a1, a2, a2.norm_sqr(), a1.arg())
        }
    };
    // full fixed-point residual of both mode equations
    let drive1 = if direction == Direction::Forward { eps } else { 0.0 };
    let drive4 = eps - drive1;
    let t1a = (i_delta + g1p / 2.0) * a1;
    let t1b = kappa * a2;
    let t2a = (i_delta - d.gamma_total2 / 2.0) * a2;
    let t2b = kappa * a1;
    let r1 = t1a - t1b - drive1;
    let r2 = t2a + t2b - drive4;
    let scale = [t1a.norm(), t1b.norm(), t2a.norm(), t2b.norm(), eps]
        .into_iter()
        .fold(f64::MIN_POSITIVE, f64::max);
    let residual = r1.norm().max(r2.norm()) / scale;
    if residual > 1e-9 {
        return Err(Error::Inconsistent(format!(
            "fixed-point residual {residual} exceeds 1e-9 at i1 = {i1}"
        )));
    }
    Ok(SteadyAmplitudes {
        a1,
        a2,
        i1,
        i2,
        phi1,
        residual,
    })
}

/// A fully reconstructed steady state plus the root landscape it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution {
    pub direction: Direction,
    pub i1: f64,
    pub i2: f64,
    pub phi1: f64,
    pub a1: Complex64,
    pub a2: Complex64,
    /// Linear stability of the selected root.
    pub stability: RootStability,
    /// Number of real roots of the intensity cubic.
    pub n_real_roots: usize,
    /// All real roots, ascending (including unphysical negatives, unclamped
    /// beyond rounding level).
    pub all_real_roots: Vec<f64>,
    /// Relative residual of the fixed-point equations.
    pub residual: f64,
}

/// Solves for the steady state the system settles into: among nonnegative
/// intensity roots the smallest dynamically stable one, falling back to the
/// smallest root if none is stable (then flagged by `stability`).
pub fn steady_state(
    config: &SystemConfig,
    omega: f64,
    direction: Direction,
) -> Result<SteadyStateSolution> {
    config.validate()?;
    if config.drive.epsilon <= 0.0 {
        return Err(Error::Domain(
            "steady_state requires drive.epsilon > 0; undriven dynamics belong to the \
             time-domain integrator"
                .into(),
        ));
    }
    if direction == Direction::Backward && config.kappa == 0.0 {
        return Err(Error::NoTransmission(
            "backward drive with kappa = 0 never reaches the active ring".into(),
        ));
    }
    let coeffs = cubic_coeffs(config, omega, direction);
    let roots = solve_intensity(&coeffs)?;
    if roots.physical.is_empty() {
        return Err(Error::NoSolution(
            "all real intensity roots are negative".into(),
        ));
    }
    let mut chosen: Option<(f64, RootStability)> = None;
    if roots.physical.len() == 1 {
        let r = roots.physical[0];
        let s = dynamics::stability_of_root(config, omega, direction, r)?;
        chosen = Some((r, s));
    } else {
        let mut first: Option<(f64, RootStability)> = None;
        for &r in &roots.physical {
            let s = dynamics::stability_of_root(config, omega, direction, r)?;
            if first.is_none() {
                first = Some((r, s));
            }
            if s != RootStability::Unstable {
                chosen = Some((r, s));
                break;
            }
        }
        if chosen.is_none() {
            chosen = first;
        }
    }
    let (root, stability) = chosen.expect("at least one physical root");
    let amps = amplitudes_at_root(config, omega, direction, root)?;
    Ok(SteadyStateSolution {
        direction,
        i1: amps.i1,
        i2: amps.i2,
        phi1: amps.phi1,
        a1: amps.a1,
        a2: amps.a2,
        stability,
        n_real_roots: roots.roots.len(),
        all_real_roots: roots.roots,
        residual: amps.residual,
    })
}

/// Root landscape of the intensity cubic at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistabilityReport {
    pub discriminant: f64,
    pub n_real_roots: usize,
    /// Nonnegative roots, ascending.
    pub physical_roots: Vec<f64>,
    /// Stability of each physical root, same order.
    pub stabilities: Vec<RootStability>,
    /// More than one nonnegative intensity root (the response is
    /// multivalued, whatever each branch's stability).
    pub multistable: bool,
}

/// Classifies the root structure at `omega`: a positive discriminant with
/// several nonnegative roots marks optical multistability.
pub fn detect_multistability(
    config: &SystemConfig,
    omega: f64,
    direction: Direction,
) -> Result<MultistabilityReport> {
    config.validate()?;
    let coeffs = cubic_coeffs(config, omega, direction);
    let roots = solve_intensity(&coeffs)?;
    let mut stabilities = Vec::with_capacity(roots.physical.len());
    for &r in &roots.physical {
        stabilities.push(dynamics::stability_of_root(config, omega, direction, r)?);
    }
    Ok(MultistabilityReport {
        discriminant: roots.discriminant,
        n_real_roots: roots.roots.len(),
        multistable: roots.physical.len() > 1,
        physical_roots: roots.physical,
        stabilities,
    })
}
