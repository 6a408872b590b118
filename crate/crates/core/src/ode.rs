//! Adaptive Dormand-Prince 5(4) integrator over complex state vectors.
//!
//! One implementation serves both the two-mode amplitude equations and the
//! vectorized density-matrix evolution, so it works on flat `Complex64`
//! slices. First-same-as-last evaluation reuse, PI step-size control.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Butcher tableau of the Dormand-Prince 5(4) pair.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Fifth-minus-fourth-order weights for the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.2;
const FAC2: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component, in solution units.
    pub atol: f64,
    /// Upper bound on the step size (same units as `t`).
    pub h_max: f64,
    /// Initial step; `None` selects one automatically.
    pub h_init: Option<f64>,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Verdict from the accepted-step callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    /// Stop integrating and return the current state.
    Stop,
}

fn weighted_rms(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        let q = err[i].norm() / sc;
        acc += q * q;
    }
    (acc / err.len() as f64).sqrt()
}

fn initial_step<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[Complex64],
    f0: &[Complex64],
    opts: &OdeOptions,
) -> f64
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].norm();
        d0 += (y0[i].norm() / sc).powi(2);
        d1 += (f0[i].norm() / sc).powi(2);
    }
    let d0 = (d0 / n as f64).sqrt();
    let d1 = (d1 / n as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(opts.h_max);
    let mut y1 = vec![Complex64::default(); n];
    let mut f1 = vec![Complex64::default(); n];
    for i in 0..n {
        y1[i] = y0[i] + h0 * f0[i];
    }
    rhs(t0 + h0, &y1, &mut f1);
    let mut d2 = 0.0f64;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].norm();
        d2 += ((f1[i] - f0[i]).norm() / sc).powi(2);
    }
    let d2 = (d2 / n as f64).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t_end`, invoking
/// `on_accept` after every accepted step (it may modify the state in place,
/// e.g. to re-impose a structural constraint, and may stop the run).
/// Returns the final state, the time reached, and step statistics.
pub fn integrate<F, G>(
    mut rhs: F,
    y0: &[Complex64],
    t0: f64,
    t_end: f64,
    opts: &OdeOptions,
    mut on_accept: G,
) -> Result<(Vec<Complex64>, f64, OdeStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    G: FnMut(f64, &mut [Complex64]) -> StepOutcome,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats::default();
    if !(t_end > t0) {
        return Ok((y, t0, stats));
    }
    let span = t_end - t0;
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![Complex64::default(); n]).collect();
    let mut ytmp = vec![Complex64::default(); n];
    let mut ynew = vec![Complex64::default(); n];
    let mut errv = vec![Complex64::default(); n];

    let mut t = t0;
    rhs(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&mut rhs, t, &y, &k[0], opts))
        .min(opts.h_max)
        .min(span);
    if !(h > 0.0) {
        h = span * 1e-10;
    }
    let mut facold = 1e-4f64;
    let mut last = false;

    for _ in 0..opts.max_steps {
        if h < f64::EPSILON * 16.0 * t.abs().max(span) {
            return Err(Error::Stiffness { t });
        }
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        macro_rules! stage {
            ($idx:expr, $coeffs:expr) => {{
                for i in 0..n {
                    let mut acc = Complex64::default();
                    for (j, &a) in $coeffs.iter().enumerate() {
                        if a != 0.0 {
                            acc += a * k[j][i];
                        }
                    }
                    ytmp[i] = y[i] + h * acc;
                }
                let (before, after) = k.split_at_mut($idx);
                let _ = before;
                rhs(t + C[$idx] * h, &ytmp, &mut after[0]);
                stats.rhs_evals += 1;
            }};
        }

        stage!(1, A2);
        stage!(2, A3);
        stage!(3, A4);
        stage!(4, A5);
        stage!(5, A6);
        // the 6th stage lands on the solution point; A7 doubles as the
        // 5th-order weights
        for i in 0..n {
            let mut acc = Complex64::default();
            for (j, &a) in A7.iter().enumerate() {
                if a != 0.0 {
                    acc += a * k[j][i];
                }
            }
            ynew[i] = y[i] + h * acc;
        }
        {
            let (before, after) = k.split_at_mut(6);
            let _ = before;
            rhs(t + h, &ynew, &mut after[0]);
            stats.rhs_evals += 1;
        }
        for i in 0..n {
            let mut acc = Complex64::default();
            for (j, &e) in E.iter().enumerate() {
                if e != 0.0 {
                    acc += e * k[j][i];
                }
            }
            errv[i] = h * acc;
        }
        let err = weighted_rms(&errv, &y, &ynew, opts);

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // accept
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC2, 1.0 / FAC1);
            facold = err.max(1e-4);
            t += h;
            stats.accepted += 1;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6); // FSAL
            let verdict = on_accept(t, &mut y);
            if verdict == StepOutcome::Stop {
                return Ok((y, t, stats));
            }
            // the callback may have adjusted y; FSAL derivative stays a
            // valid O(h^5) starter either way for the projections used here
            if last || t >= t_end {
                return Ok((y, t, stats));
            }
            h = (h / fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            let fac = (fac11 / SAFE).min(1.0 / FAC1);
            h /= fac;
            last = false;
        }
    }
    Err(Error::Stiffness { t })
}
