//! Eigenfrequency spectrum of the coupled pair and its exceptional points.
//!
//! The linearized two-mode dynamics `d(a1,a2)/dt = -i M (a1,a2)` has
//! eigenfrequencies that coalesce, together with their eigenvectors, where
//! the square-root argument `4 kappa^2 - (g1' + gamma_total2)^2 / 4`
//! vanishes. Gain saturation makes `g1'` intensity-dependent, so the
//! exceptional point of the running system must be located self-consistently
//! against the driven steady state.

use crate::error::{Error, Result};
use crate::model::{self, SystemConfig};
use crate::steady::{self, Direction};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

/// Coefficient matrix of the linearized modes in the frame rotating at
/// `omega`, with the active ring's gain saturated by the intensity `i1`.
pub fn evolution_matrix(config: &SystemConfig, omega: f64, i1: f64) -> Matrix2<Complex64> {
    let d = model::derive(config, omega);
    let g1p = d.g1 - config.gain.b * i1;
    Matrix2::new(
        Complex64::new(-d.delta, g1p / 2.0),
        Complex64::new(0.0, -config.kappa),
        Complex64::new(0.0, config.kappa),
        Complex64::new(-d.delta, -d.gamma_total2 / 2.0),
    )
}

/// Which side of the eigenvalue coalescence the system sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtPhase {
    /// Coupling dominates: real frequency splitting, both modes share one
    /// linewidth.
    Unbroken,
    /// Gain-loss contrast dominates: degenerate frequencies, split
    /// linewidths.
    Broken,
    /// Square-root argument at zero within tolerance.
    ExceptionalPoint,
}

/// Lab-frame complex eigenfrequencies, sorted `Re(plus) >= Re(minus)` with
/// ties broken by `Im(plus) >= Im(minus)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSpectrum {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
    /// `4 kappa^2 - (g1' + gamma_total2)^2 / 4`; its sign decides the phase.
    pub splitting_arg: f64,
    pub at_ep: bool,
    pub phase: PtPhase,
}

const EP_REL_TOL: f64 = 1e-9;

/// Closed-form spectrum at saturating intensity `i1`. The drive frequency
/// drops out: both eigenfrequencies sit symmetrically about the common
/// resonance, shifted into the complex plane by the net gain-loss average.
pub fn eigenfrequencies(config: &SystemConfig, i1: f64) -> EigenSpectrum {
    let d = model::derive(config, config.resonators.omega_c);
    let g1p = d.g1 - config.gain.b * i1;
    let sum = g1p + d.gamma_total2;
    let arg = 4.0 * config.kappa * config.kappa - sum * sum / 4.0;
    let scale = 4.0 * config.kappa * config.kappa + sum * sum / 4.0;
    let mid = Complex64::new(config.resonators.omega_c, (g1p - d.gamma_total2) / 4.0);
    let at_ep = arg.abs() <= EP_REL_TOL * scale;
    let (omega_plus, omega_minus, phase) = if arg > 0.0 {
        let h = 0.5 * arg.sqrt();
        (mid + h, mid - h, PtPhase::Unbroken)
    } else {
        let h = 0.5 * (-arg).sqrt();
        (
            mid + Complex64::new(0.0, h),
            mid - Complex64::new(0.0, h),
            PtPhase::Broken,
        )
    };
    let phase = if at_ep { PtPhase::ExceptionalPoint } else { phase };
    EigenSpectrum {
        omega_plus,
        omega_minus,
        splitting_arg: arg,
        at_ep,
        phase,
    }
}

/// Eigenvalues of a 2x2 complex matrix by the stable quadratic formula,
/// polished on the characteristic polynomial. Sorted like [`EigenSpectrum`].
pub fn eigenvalues_numeric(m: &Matrix2<Complex64>) -> [Complex64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let half = tr / 2.0;
    let disc = (half * half - det).sqrt();
    // root pairing that avoids cancellation: pick the larger magnitude first
    let e0 = if (half + disc).norm() >= (half - disc).norm() {
        half + disc
    } else {
        half - disc
    };
    let mut eigs = if e0.norm() > 0.0 {
        [e0, det / e0] // Vieta for the partner
    } else {
        [half + disc, half - disc]
    };
    for e in &mut eigs {
        // one Newton step on p(x) = x^2 - tr x + det
        for _ in 0..2 {
            let p = *e * *e - tr * *e + det;
            let dp = 2.0 * *e - tr;
            if dp.norm() > 0.0 {
                *e -= p / dp;
            }
        }
    }
    if (eigs[0].re, eigs[0].im) < (eigs[1].re, eigs[1].im) {
        eigs.swap(0, 1);
    }
    eigs
}

/// Right eigenvector for eigenvalue `e`, from the better-conditioned row of
/// `M - e I`, normalized to unit length.
pub fn eigenvector(m: &Matrix2<Complex64>, e: Complex64) -> Vector2<Complex64> {
    let c1 = Vector2::new(m[(0, 1)], e - m[(0, 0)]);
    let c2 = Vector2::new(e - m[(1, 1)], m[(1, 0)]);
    let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
    let n = v.norm();
    if n > 0.0 {
        v / Complex64::new(n, 0.0)
    } else {
        Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }
}

/// `|<v_plus, v_minus>|` for unit eigenvectors; approaches 1 at an
/// exceptional point and 0 for a normal (orthogonal) pair.
pub fn eigenvector_overlap(m: &Matrix2<Complex64>) -> f64 {
    let eigs = eigenvalues_numeric(m);
    let v0 = eigenvector(m, eigs[0]);
    let v1 = eigenvector(m, eigs[1]);
    v0.dotc(&v1).norm()
}

/// Deviation of `M` from parity-time symmetry: `|P conj(M) P - M| / |M|`
/// (Frobenius). Zero exactly when the saturated gain equals the passive
/// ring's total loss.
pub fn pt_defect(m: &Matrix2<Complex64>) -> f64 {
    let swapped = Matrix2::new(
        m[(1, 1)].conj(),
        m[(1, 0)].conj(),
        m[(0, 1)].conj(),
        m[(0, 0)].conj(),
    );
    let num = (swapped - m).norm();
    let den = m.norm();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Gain-loss balance of the pair, with the intrinsic losses common to both
/// rings factored out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtClassification {
    /// `a - c1 - c2 - b * i1 = 0` within tolerance (saturated balance).
    pub balanced_saturated: bool,
    /// `a - c1 - c2 = 0` within tolerance (zero-intensity balance).
    pub balanced_linear: bool,
    pub rel_tol: f64,
}

impl PtClassification {
    pub fn label(&self) -> &'static str {
        if self.balanced_saturated {
            "balanced (saturated)"
        } else if self.balanced_linear {
            "balanced (linear)"
        } else {
            "unbalanced"
        }
    }
}

/// Tests the gain-loss balance conditions at saturating intensity `i1`,
/// relative to the magnitude of the rates involved.
pub fn classify_pt(config: &SystemConfig, i1: f64, rel_tol: f64) -> PtClassification {
    let r = &config.resonators;
    let sat = config.gain.b * i1;
    let scale = config
        .gain
        .a
        .abs()
        .max(r.c1)
        .max(r.c2)
        .max(sat)
        .max(f64::MIN_POSITIVE);
    PtClassification {
        balanced_saturated: (config.gain.a - r.c1 - r.c2 - sat).abs() <= rel_tol * scale,
        balanced_linear: (config.gain.a - r.c1 - r.c2).abs() <= rel_tol * scale,
        rel_tol,
    }
}

/// How to treat gain saturation when locating the coupling strength where
/// the eigenvalues coalesce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpSearch {
    /// Zero-intensity spectrum: closed form.
    Linear,
    /// Intensity follows the driven steady state at resonance for each
    /// coupling; crossings located on a log grid + bisection over the
    /// default bracket.
    SelfConsistent(Direction),
    /// Self-consistent over an explicit coupling bracket.
    SelfConsistentIn(Direction, f64, f64),
}

/// Outcome of an exceptional-point search.
#[derive(Debug, Clone, PartialEq)]
pub struct EpReport {
    /// Couplings where the splitting argument crosses zero, ascending.
    /// Empty when no crossing lies in the bracket (not an error: a strongly
    /// saturated system can stay on one side everywhere).
    pub crossings: Vec<f64>,
    /// Bracket actually scanned (equal endpoints for the linear mode).
    pub bracket: (f64, f64),
    /// Grid points where the steady state failed to evaluate.
    pub skipped_points: usize,
}

impl EpReport {
    pub fn found(&self) -> bool {
        !self.crossings.is_empty()
    }
    /// The smallest crossing, the conventional quote.
    pub fn kappa_ep(&self) -> Option<f64> {
        self.crossings.first().copied()
    }
}

const EP_GRID: usize = 400;

/// Locates couplings where the frequency splitting closes.
///
/// Linear: `kappa_ep = (g1 + gamma_total2) / 4` directly, which reduces to
/// `c2 / 2` at the zero-intensity balance point with equal intrinsic
/// losses.
pub fn find_ep(config: &SystemConfig, search: EpSearch) -> Result<EpReport> {
    config.validate()?;
    let d = model::derive(config, config.resonators.omega_c);
    let linear_ep = (d.g1 + d.gamma_total2).abs() / 4.0;
    match search {
        EpSearch::Linear => Ok(EpReport {
            crossings: vec![linear_ep],
            bracket: (linear_ep, linear_ep),
            skipped_points: 0,
        }),
        EpSearch::SelfConsistent(direction) => {
            let anchor = linear_ep.max(d.gamma_total2 / 4.0);
            find_ep_self_consistent(config, direction, anchor * 1e-3, anchor * 1e3)
        }
        EpSearch::SelfConsistentIn(direction, lo, hi) => {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Domain(format!(
                    "EP search bracket must satisfy 0 < min < max, got ({lo}, {hi})"
                )));
            }
            find_ep_self_consistent(config, direction, lo, hi)
        }
    }
}

fn splitting_arg_at(config: &SystemConfig, direction: Direction, kappa: f64) -> Result<f64> {
    let mut cfg = config.clone();
    cfg.kappa = kappa;
    let sol = steady::steady_state(&cfg, cfg.resonators.omega_c, direction)?;
    Ok(eigenfrequencies(&cfg, sol.i1).splitting_arg)
}

fn find_ep_self_consistent(
    config: &SystemConfig,
    direction: Direction,
    lo: f64,
    hi: f64,
) -> Result<EpReport> {
    if config.drive.epsilon <= 0.0 {
        return Err(Error::Domain(
            "self-consistent EP search needs drive.epsilon > 0 to define the intensity".into(),
        ));
    }
    if direction == Direction::Backward && config.kappa == 0.0 {
        // kappa is swept anyway; only the direction matters
    }
    let ratio = (hi / lo).ln();
    let mut skipped = 0usize;
    let mut grid: Vec<(f64, f64)> = Vec::with_capacity(EP_GRID + 1);
    for k in 0..=EP_GRID {
        let kappa = lo * (ratio * k as f64 / EP_GRID as f64).exp();
        match splitting_arg_at(config, direction, kappa) {
            Ok(arg) => grid.push((kappa, arg)),
            Err(_) => skipped += 1,
        }
    }
    let mut crossings = Vec::new();
    for w in grid.windows(2) {
        let (k0, a0) = w[0];
        let (k1, a1) = w[1];
        if a0 == 0.0 {
            crossings.push(k0);
            continue;
        }
        if a0 * a1 < 0.0 {
            let (mut x0, mut f0, mut x1) = (k0, a0, k1);
            for _ in 0..200 {
                let xm = 0.5 * (x0 + x1);
                if xm <= x0 || xm >= x1 {
                    break;
                }
                match splitting_arg_at(config, direction, xm) {
                    Ok(fm) => {
                        if fm == 0.0 {
                            x0 = xm;
                            x1 = xm;
                            break;
                        }
                        if (fm > 0.0) == (f0 > 0.0) {
                            x0 = xm;
                            f0 = fm;
                        } else {
                            x1 = xm;
                        }
                    }
                    Err(_) => break,
                }
            }
            crossings.push(0.5 * (x0 + x1));
        }
    }
    if let Some(&(klast, alast)) = grid.last() {
        if alast == 0.0 {
            crossings.push(klast);
        }
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    crossings.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    Ok(EpReport {
        crossings,
        bracket: (lo, hi),
        skipped_points: skipped,
    })
}
