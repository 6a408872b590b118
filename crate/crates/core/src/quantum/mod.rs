//! Truncated-Fock master-equation backend for the coupled pair.
//!
//! States live on the product of two photon-number ladders cut off at
//! `n_max1`, `n_max2`. The generator is applied term by term in sparse
//! form; the full superoperator matrix is never materialized.

mod generator;
pub mod ops;

pub use generator::{build_generator, form_difference_generator, Generator};

use crate::error::{Error, Result};
use crate::model::{DrivePort, SystemConfig};
use crate::ode::{self, OdeOptions, OdeStats, StepOutcome};
use crate::{dynamics::IntegratorConfig, model};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Default cap on the product-space dimension.
pub const DIM_BUDGET: usize = 4096;
/// Hermiticity tolerance for constructed states.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace-normalization tolerance for constructed states.
pub const TRACE_TOL: f64 = 1e-8;
/// Top-layer occupation allowed in a constructed state.
pub const LEAKAGE_TOL: f64 = 1e-6;
/// Trace drift that aborts an evolution.
pub const TRACE_DRIFT_MAX: f64 = 1e-6;

/// Photon-number cutoffs of the two modes. Mode `k` keeps levels
/// `0..=n_max_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_max1: usize,
    n_max2: usize,
}

impl FockBasis {
    pub fn new(n_max1: usize, n_max2: usize) -> Result<Self> {
        Self::with_budget(n_max1, n_max2, DIM_BUDGET)
    }

    pub fn with_budget(n_max1: usize, n_max2: usize, budget: usize) -> Result<Self> {
        let dim = (n_max1 + 1) * (n_max2 + 1);
        if dim > budget {
            return Err(Error::CutoffBudget { dim, budget });
        }
        Ok(Self { n_max1, n_max2 })
    }

    pub fn n_max1(&self) -> usize {
        self.n_max1
    }

    pub fn n_max2(&self) -> usize {
        self.n_max2
    }

    pub fn dim1(&self) -> usize {
        self.n_max1 + 1
    }

    pub fn dim2(&self) -> usize {
        self.n_max2 + 1
    }

    pub fn dim(&self) -> usize {
        self.dim1() * self.dim2()
    }

    /// Flat index of `|n1, n2>`.
    pub fn index(&self, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 < self.dim1() && n2 < self.dim2());
        n1 * self.dim2() + n2
    }
}

/// Which algebraic form of the gain master equation to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterEquationForm {
    /// Direct weak-saturation form: trace-preserving but not a Lindblad
    /// dissipator sum.
    NonLindbladian,
    /// Deformed-jump-operator completion; differs from the direct form at
    /// second order in the saturation.
    Lindblad,
}

/// Two-mode density matrix, dense row-major `dim x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: FockBasis,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.basis.dim() + col]
    }

    /// Validates hermiticity, unit trace, and top-layer occupation of a
    /// constructed state.
    pub fn from_flat(basis: FockBasis, data: Vec<Complex64>) -> Result<Self> {
        let d = basis.dim();
        if data.len() != d * d {
            return Err(Error::Domain(format!(
                "density matrix length {} does not match dim {d} squared",
                data.len()
            )));
        }
        let dm = Self { basis, data };
        let mut herm = 0.0f64;
        for i in 0..d {
            for j in i..d {
                herm = herm.max((dm.get(i, j) - dm.get(j, i).conj()).norm());
            }
        }
        if herm > HERMITICITY_TOL {
            return Err(Error::Domain(format!(
                "density matrix is not Hermitian: max asymmetry {herm:.3e}"
            )));
        }
        let tr = dm.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Domain(format!(
                "density matrix trace {tr} is not 1 within {TRACE_TOL:.0e}"
            )));
        }
        let leak = dm.top_layer_occupation();
        if leak > LEAKAGE_TOL {
            return Err(Error::Domain(format!(
                "constructed state already occupies the top Fock layer at {leak:.3e}; \
                 raise the cutoff"
            )));
        }
        Ok(dm)
    }

    /// Pure state from a normalized amplitude vector (renormalized here).
    pub fn pure(basis: FockBasis, amplitudes: &[Complex64]) -> Result<Self> {
        let d = basis.dim();
        if amplitudes.len() != d {
            return Err(Error::Domain(format!(
                "amplitude vector length {} does not match dim {d}",
                amplitudes.len()
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::Domain("amplitude vector is zero".into()));
        }
        let mut data = vec![Complex64::default(); d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = amplitudes[i] * amplitudes[j].conj() / norm2;
            }
        }
        Self::from_flat(basis, data)
    }

    pub fn vacuum(basis: FockBasis) -> Self {
        let d = basis.dim();
        let mut data = vec![Complex64::default(); d * d];
        data[0] = Complex64::new(1.0, 0.0);
        Self { basis, data }
    }

    /// Truncated two-mode coherent state `|alpha1, alpha2>`, renormalized.
    pub fn coherent(basis: FockBasis, alpha1: Complex64, alpha2: Complex64) -> Result<Self> {
        let mode = |alpha: Complex64, dim: usize| -> Vec<Complex64> {
            let mut v = Vec::with_capacity(dim);
            let mut amp = Complex64::new(1.0, 0.0);
            v.push(amp);
            for n in 1..dim {
                amp *= alpha / (n as f64).sqrt();
                v.push(amp);
            }
            v
        };
        let v1 = mode(alpha1, basis.dim1());
        let v2 = mode(alpha2, basis.dim2());
        let mut amps = vec![Complex64::default(); basis.dim()];
        for n1 in 0..basis.dim1() {
            for n2 in 0..basis.dim2() {
                amps[basis.index(n1, n2)] = v1[n1] * v2[n2];
            }
        }
        Self::pure(basis, &amps)
    }

    pub fn trace(&self) -> f64 {
        let d = self.basis.dim();
        (0..d).map(|i| self.data[i * d + i].re).sum()
    }

    /// Total probability in the highest kept level of either mode. A mode
    /// cut off at zero is deliberately frozen, not truncated, and does not
    /// count.
    pub fn top_layer_occupation(&self) -> f64 {
        let b = &self.basis;
        let mut worst = 0.0f64;
        if b.n_max1 > 0 {
            let top1: f64 = (0..b.dim2())
                .map(|n2| self.get(b.index(b.n_max1, n2), b.index(b.n_max1, n2)).re)
                .sum();
            worst = worst.max(top1);
        }
        if b.n_max2 > 0 {
            let top2: f64 = (0..b.dim1())
                .map(|n1| self.get(b.index(n1, b.n_max2), b.index(n1, b.n_max2)).re)
                .sum();
            worst = worst.max(top2);
        }
        worst
    }

    /// Smallest eigenvalue; slightly negative values witness truncation and
    /// integration error.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.basis.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.data[i * d + j]);
        let sym = m.symmetric_eigen();
        sym.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Expectation values extracted directly from a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectations {
    pub a1: Complex64,
    pub a2: Complex64,
    pub n1: f64,
    pub n2: f64,
    /// `<a1' a1 a1>`, the saturation moment in the amplitude equation.
    pub na1: Complex64,
    pub trace: f64,
    pub purity: f64,
}

/// Computes the standard observable set with direct index sums (no operator
/// application).
pub fn expectations(rho: &DensityMatrix) -> Expectations {
    expectations_of(rho.basis(), rho.data())
}

fn expectations_of(b: &FockBasis, data: &[Complex64]) -> Expectations {
    let d = b.dim();
    let mut a1 = Complex64::default();
    let mut a2 = Complex64::default();
    let mut na1 = Complex64::default();
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    let mut trace = 0.0;
    for m1 in 0..b.dim1() {
        for m2 in 0..b.dim2() {
            let i = b.index(m1, m2);
            let diag = data[i * d + i].re;
            trace += diag;
            n1 += m1 as f64 * diag;
            n2 += m2 as f64 * diag;
            if m1 >= 1 {
                // <a1> and <n1 a1> pick up <n1-1,n2| rho |n1,n2> elements
                let j = b.index(m1 - 1, m2);
                let elem = data[i * d + j];
                let root = (m1 as f64).sqrt();
                a1 += root * elem;
                na1 += (m1 as f64 - 1.0) * root * elem;
            }
            if m2 >= 1 {
                let j = b.index(m1, m2 - 1);
                a2 += (m2 as f64).sqrt() * data[i * d + j];
            }
        }
    }
    let purity = data.iter().map(|v| v.norm_sqr()).sum();
    Expectations {
        a1,
        a2,
        n1,
        n2,
        na1,
        trace,
        purity,
    }
}

/// One sampled instant of an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationRecord {
    pub t: f64,
    pub values: Expectations,
}

/// Result of integrating the master equation.
#[derive(Debug, Clone)]
pub struct QuantumEvolution {
    /// Expectations at every accepted step, initial state first.
    pub records: Vec<ExpectationRecord>,
    pub final_state: DensityMatrix,
    /// Largest `|trace - 1|` seen along the way.
    pub trace_drift: f64,
    /// Top-layer occupation of the final state.
    pub top_layer_leakage: f64,
    /// Set when the leakage exceeds the constructed-state budget; evolved
    /// states report rather than fail, since the run may still meet its
    /// accuracy target.
    pub leakage_warning: Option<String>,
    pub stats: OdeStats,
}

/// Integrates `d rho/dt = L(rho)` from `rho0` to `t_final` (seconds), in
/// nondimensional time internally. The state is re-Hermitized after every
/// accepted step; trace drift beyond [`TRACE_DRIFT_MAX`] aborts. The
/// convergence-window fields of `icfg` are ignored: quantum runs use a
/// fixed horizon.
pub fn evolve(
    rho0: &DensityMatrix,
    generator: &Generator,
    t_final: f64,
    icfg: &IntegratorConfig,
) -> Result<QuantumEvolution> {
    if rho0.basis() != generator.basis() {
        return Err(Error::Domain(
            "density matrix and generator use different Fock cutoffs".into(),
        ));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!(
            "t_final must be finite and positive, got {t_final}"
        )));
    }
    let d = rho0.basis().dim();
    let rs = generator.rate_scale();
    let tau_end = t_final * rs;
    let opts = OdeOptions {
        rtol: icfg.rel_tol,
        atol: icfg.abs_tol,
        h_max: icfg.max_step * rs,
        ..Default::default()
    };

    let mut scratch = vec![Complex64::default(); d * d];
    let mut records = Vec::new();
    records.push(ExpectationRecord {
        t: 0.0,
        values: expectations(rho0),
    });
    let tr0 = records[0].values.trace;
    let mut trace_drift = 0.0f64;
    let mut abort: Option<Error> = None;

    let rhs = |_tau: f64, y: &[Complex64], dy: &mut [Complex64]| {
        generator.apply(y, dy, &mut scratch);
        for v in dy.iter_mut() {
            *v /= rs;
        }
    };
    let basis = rho0.basis().clone();
    let (yf, _tf, stats) = ode::integrate(
        rhs,
        rho0.data(),
        0.0,
        tau_end,
        &opts,
        |tau, y| {
            // re-impose Hermitian structure: rho <- (rho + rho')/2
            for i in 0..d {
                let ii = i * d + i;
                y[ii] = Complex64::new(y[ii].re, 0.0);
                for j in (i + 1)..d {
                    let upper = y[i * d + j];
                    let lower = y[j * d + i];
                    let avg = 0.5 * (upper + lower.conj());
                    y[i * d + j] = avg;
                    y[j * d + i] = avg.conj();
                }
            }
            let t = tau / rs;
            let vals = expectations_of(&basis, y);
            records.push(ExpectationRecord { t, values: vals });
            let drift = (vals.trace - tr0).abs();
            trace_drift = trace_drift.max(drift);
            if drift > TRACE_DRIFT_MAX {
                abort = Some(Error::TraceDrift { t, drift });
                return StepOutcome::Stop;
            }
            StepOutcome::Continue
        },
    )?;
    if let Some(err) = abort {
        return Err(err);
    }
    let final_state = DensityMatrix {
        basis: rho0.basis().clone(),
        data: yf,
    };
    let top_layer_leakage = final_state.top_layer_occupation();
    let leakage_warning = (top_layer_leakage > LEAKAGE_TOL).then(|| {
        format!(
            "final top-layer occupation {top_layer_leakage:.3e} exceeds {LEAKAGE_TOL:.0e}; \
             raise the cutoffs to remove truncation bias"
        )
    });
    Ok(QuantumEvolution {
        records,
        final_state,
        trace_drift,
        top_layer_leakage,
        leakage_warning,
        stats,
    })
}

/// Largest deviation of the sampled `d<a1>/dt` from the amplitude equation
/// `(i delta + g1/2) <a1> - kappa <a2> - (b/2) <a1' a1 a1> - drive`,
/// relative to the equation's own magnitude. Uses a three-point stencil on
/// the nonuniform sample times, so the result is meaningful only when the
/// sampling is dense against the system's rates (cap `max_step`).
pub fn rate_equation_residual(records: &[ExpectationRecord], config: &SystemConfig) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::Domain(
            "need at least three samples to form the centered derivative".into(),
        ));
    }
    let d = model::derive(config, config.drive.omega_l);
    let drive = match config.drive.port {
        DrivePort::Port1 => Complex64::new(config.drive.epsilon, 0.0),
        DrivePort::Port4 => Complex64::default(),
    };
    let coef = Complex64::new(d.g1 / 2.0, d.delta);
    let mut worst = 0.0f64;
    let mut scale = f64::MIN_POSITIVE;
    for w in records.windows(3) {
        let (r0, r1, r2) = (&w[0], &w[1], &w[2]);
        let hm = r1.t - r0.t;
        let hp = r2.t - r1.t;
        if hm <= 0.0 || hp <= 0.0 {
            return Err(Error::Domain("sample times must increase".into()));
        }
        let wm = -hp / (hm * (hm + hp));
        let w0 = (hp - hm) / (hm * hp);
        let wp = hm / (hp * (hm + hp));
        let fd = wm * r0.values.a1 + w0 * r1.values.a1 + wp * r2.values.a1;
        let rhs = coef * r1.values.a1 - config.kappa * r1.values.a2
            - 0.5 * config.gain.b * r1.values.na1
            - drive;
        worst = worst.max((fd - rhs).norm());
        scale = scale.max(rhs.norm());
    }
    Ok(worst / scale)
}
