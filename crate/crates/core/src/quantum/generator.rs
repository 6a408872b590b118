//! Master-equation generators on the truncated two-mode Fock space.
//!
//! Both generator forms share the Hamiltonian and the two loss channels and
//! differ only in how the saturable gain enters:
//!
//! * `NonLindbladian`: linear-gain dissipator plus the saturation
//!   superoperator, the direct weak-saturation expansion of the gain
//!   medium's dynamics. Not of Lindblad form, but exactly trace-preserving.
//! * `Lindblad`: gain jump operator deformed by the saturation,
//!   `sqrt(A) a1'(1 - b/(2A) a1 a1')`, plus a pure-dephasing-like channel in
//!   `a1 a1'`. Completes the saturation terms into dissipator squares at
//!   the cost of extra pieces of order `b^2 / A`.
//!
//! Their difference is exactly `(b^2 / 4A) D[a1' a1 a1']`, which tests pin
//! down; everything either form adds beyond the other is quadratic in `b`.

use super::{FockBasis, MasterEquationForm};
use crate::error::{Error, Result};
use crate::model::{self, DrivePort, SystemConfig};
use crate::quantum::ops::{annihilation, identity, kron_triplets, lift, SparseOp};
use crate::steady::{self, Direction};
use nalgebra::DMatrix;
use num_complex::Complex64;

struct Term {
    coef: Complex64,
    left: Option<SparseOp>,
    right: Option<SparseOp>,
}

/// A right-hand side `d rho / dt = L(rho)` as a sum of sparse
/// `coef * left * rho * right` sandwiches.
pub struct Generator {
    basis: FockBasis,
    form: MasterEquationForm,
    terms: Vec<Term>,
    rate_scale: f64,
    /// Set when the classically estimated photon number crowds the cutoff.
    pub cutoff_warning: Option<String>,
}

impl Generator {
    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn form(&self) -> MasterEquationForm {
        self.form
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Largest rate entering the generator, for nondimensional time.
    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }

    /// `out = L(rho)`. `scratch` must match `rho` in length.
    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.dim() * self.dim();
        assert_eq!(rho.len(), n);
        assert_eq!(out.len(), n);
        assert_eq!(scratch.len(), n);
        out.fill(Complex64::default());
        let one = Complex64::new(1.0, 0.0);
        for term in &self.terms {
            match (&term.left, &term.right) {
                (Some(l), Some(r)) => {
                    scratch.fill(Complex64::default());
                    l.mul_left_accum(one, rho, scratch);
                    r.mul_right_accum(term.coef, scratch, out);
                }
                (Some(l), None) => l.mul_left_accum(term.coef, rho, out),
                (None, Some(r)) => r.mul_right_accum(term.coef, rho, out),
                (None, None) => {
                    for i in 0..n {
                        out[i] += term.coef * rho[i];
                    }
                }
            }
        }
    }
}

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Appends `rate * D[m]` acting on one mode, with
/// `D[L] rho = L rho L' - (L'L rho + rho L'L) / 2`.
fn push_dissipator(
    terms: &mut Vec<Term>,
    basis: &FockBasis,
    rate: f64,
    m: &DMatrix<Complex64>,
    mode: usize,
) {
    if rate == 0.0 {
        return;
    }
    let md = m.adjoint();
    let mdm = &md * m;
    let (d1, d2) = (basis.dim1(), basis.dim2());
    let on = |op: &DMatrix<Complex64>| -> SparseOp {
        if mode == 1 {
            lift(op, &identity(d2))
        } else {
            lift(&identity(d1), op)
        }
    };
    terms.push(Term {
        coef: cplx(rate),
        left: Some(on(m)),
        right: Some(on(&md)),
    });
    terms.push(Term {
        coef: cplx(-rate / 2.0),
        left: Some(on(&mdm)),
        right: None,
    });
    terms.push(Term {
        coef: cplx(-rate / 2.0),
        left: None,
        right: Some(on(&mdm)),
    });
}

fn hamiltonian(config: &SystemConfig, basis: &FockBasis, delta: f64) -> SparseOp {
    let (d1, d2) = (basis.dim1(), basis.dim2());
    let a1 = annihilation(d1);
    let a2 = annihilation(d2);
    let n1 = a1.adjoint() * &a1;
    let n2 = a2.adjoint() * &a2;
    let i1 = identity(d1);
    let i2 = identity(d2);
    let eps = config.drive.epsilon;
    let kappa = config.kappa;
    let mut trips = Vec::new();
    // -delta (n1 + n2)
    kron_triplets(&n1, &i2, cplx(-delta), &mut trips);
    kron_triplets(&i1, &n2, cplx(-delta), &mut trips);
    // i kappa (a1 a2' - a1' a2)
    let ik = Complex64::new(0.0, kappa);
    kron_triplets(&a1, &a2.adjoint(), ik, &mut trips);
    kron_triplets(&a1.adjoint(), &a2, -ik, &mut trips);
    // i eps (a_d - a_d') on the driven mode
    let ie = Complex64::new(0.0, eps);
    match config.drive.port {
        DrivePort::Port1 => {
            kron_triplets(&a1, &i2, ie, &mut trips);
            kron_triplets(&a1.adjoint(), &i2, -ie, &mut trips);
        }
        DrivePort::Port4 => {
            kron_triplets(&i1, &a2, ie, &mut trips);
            kron_triplets(&i1, &a2.adjoint(), -ie, &mut trips);
        }
    }
    SparseOp::from_triplets(basis.dim(), trips)
}

fn rate_scale_of(config: &SystemConfig) -> f64 {
    let d = model::derive(config, config.drive.omega_l);
    [
        d.gamma_total1,
        d.gamma_total2,
        config.gain.a,
        config.kappa,
        d.delta.abs(),
        config.drive.epsilon,
        1.0,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn estimate_photon_numbers(config: &SystemConfig) -> Option<(f64, f64)> {
    let d = model::derive(config, config.drive.omega_l);
    if config.drive.epsilon > 0.0 {
        let direction = Direction::from(config.drive.port);
        if direction == Direction::Backward && config.kappa == 0.0 {
            return None;
        }
        steady::steady_state(config, config.drive.omega_l, direction)
            .ok()
            .map(|s| (s.i1, s.i2))
    } else if d.g1 > 0.0 && config.gain.b > 0.0 {
        // undriven lasing estimate; the passive ring follows through f
        let i1 = d.g1 / config.gain.b;
        Some((i1, d.f * i1))
    } else {
        Some((0.0, 0.0))
    }
}

/// Builds the generator for `config` in the rotating frame of the drive.
///
/// Fails when the Lindblad form is requested with saturation but no linear
/// gain (its jump operator divides by the gain). Emits a cutoff warning
/// when the classical steady state predicts a photon number beyond half the
/// cutoff of either mode.
pub fn build_generator(
    config: &SystemConfig,
    basis: &FockBasis,
    form: MasterEquationForm,
) -> Result<Generator> {
    config.validate()?;
    let d = model::derive(config, config.drive.omega_l);
    let a = config.gain.a;
    let b = config.gain.b;
    if form == MasterEquationForm::Lindblad && b > 0.0 && a == 0.0 {
        return Err(Error::Domain(
            "the Lindblad gain operator needs A > 0 when B > 0 (it carries B/(2A))".into(),
        ));
    }
    let (d1, d2) = (basis.dim1(), basis.dim2());
    let a1 = annihilation(d1);
    let a2 = annihilation(d2);
    let q1 = &a1 * a1.adjoint();

    let mut terms = Vec::new();
    let h = hamiltonian(config, basis, d.delta);
    let mi = Complex64::new(0.0, -1.0);
    terms.push(Term {
        coef: mi,
        left: Some(h.clone()),
        right: None,
    });
    terms.push(Term {
        coef: -mi,
        left: None,
        right: Some(h),
    });
    push_dissipator(&mut terms, basis, d.gamma_total1, &a1, 1);
    push_dissipator(&mut terms, basis, d.gamma_total2, &a2, 2);

    match form {
        MasterEquationForm::NonLindbladian => {
            push_dissipator(&mut terms, basis, a, &a1.adjoint(), 1);
            if b > 0.0 {
                let i2m = identity(d2);
                let on1 = |op: &DMatrix<Complex64>| lift(op, &i2m);
                let q_sq = &q1 * &q1;
                let qa = &q1 * &a1;
                let adq = a1.adjoint() * &q1;
                let q_lift = on1(&q1);
                terms.push(Term {
                    coef: cplx(b / 8.0),
                    left: Some(on1(&q_sq)),
                    right: None,
                });
                terms.push(Term {
                    coef: cplx(b / 8.0),
                    left: None,
                    right: Some(on1(&q_sq)),
                });
                terms.push(Term {
                    coef: cplx(6.0 * b / 8.0),
                    left: Some(q_lift.clone()),
                    right: Some(q_lift),
                });
                terms.push(Term {
                    coef: cplx(-b / 2.0),
                    left: Some(on1(&a1.adjoint())),
                    right: Some(on1(&qa)),
                });
                terms.push(Term {
                    coef: cplx(-b / 2.0),
                    left: Some(on1(&adq)),
                    right: Some(on1(&a1)),
                });
            }
        }
        MasterEquationForm::Lindblad => {
            if a > 0.0 {
                let mut l1 = a1.adjoint();
                if b > 0.0 {
                    l1 -= (a1.adjoint() * &q1) * cplx(b / (2.0 * a));
                }
                push_dissipator(&mut terms, basis, a, &l1, 1);
            }
            if b > 0.0 {
                push_dissipator(&mut terms, basis, 3.0 * b / 4.0, &q1, 1);
            }
        }
    }

    let cutoff_warning = estimate_photon_numbers(config).and_then(|(n1, n2)| {
        let lim1 = basis.n_max1() as f64 / 2.0;
        let lim2 = basis.n_max2() as f64 / 2.0;
        if n1 > lim1 || n2 > lim2 {
            Some(format!(
                "estimated steady photon numbers ({n1:.3e}, {n2:.3e}) crowd the cutoffs \
                 ({}, {}); expect truncation bias",
                basis.n_max1(),
                basis.n_max2()
            ))
        } else {
            None
        }
    });

    Ok(Generator {
        basis: basis.clone(),
        form,
        terms,
        rate_scale: rate_scale_of(config),
        cutoff_warning,
    })
}

/// The completion dissipator `(b^2 / 4A) D[a1' a1 a1']` separating the two
/// forms, exposed for convergence studies.
pub fn form_difference_generator(
    config: &SystemConfig,
    basis: &FockBasis,
) -> Result<Generator> {
    config.validate()?;
    let a = config.gain.a;
    let b = config.gain.b;
    if a <= 0.0 {
        return Err(Error::Domain(
            "form difference is defined only for A > 0".into(),
        ));
    }
    let a1 = annihilation(basis.dim1());
    let adq = a1.adjoint() * (&a1 * a1.adjoint());
    let mut terms = Vec::new();
    push_dissipator(&mut terms, basis, b * b / (4.0 * a), &adq, 1);
    Ok(Generator {
        basis: basis.clone(),
        form: MasterEquationForm::Lindblad,
        terms,
        rate_scale: rate_scale_of(config),
        cutoff_warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveConfig, GainParams, ResonatorParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> SystemConfig {
        SystemConfig {
            resonators: ResonatorParams::new(0.0, 0.5, 0.1, 0.5, 0.4),
            gain: GainParams::new(0.3, 3.0e-3),
            kappa: 0.35,
            drive: DriveConfig::new(DrivePort::Port1, 0.4, 0.15),
        }
    }

    fn random_hermitian_unit_trace(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let mut m = DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        m = (&m * m.adjoint()).scale(1.0); // positive semidefinite
        let tr: Complex64 = (0..dim).map(|i| m[(i, i)]).sum();
        m /= tr;
        let mut flat = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                flat[i * dim + j] = m[(i, j)];
            }
        }
        flat
    }

    fn apply_flat(g: &Generator, rho: &[Complex64]) -> Vec<Complex64> {
        let n = rho.len();
        let mut out = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); n];
        g.apply(rho, &mut out, &mut scratch);
        out
    }

    #[test]
    fn both_forms_preserve_trace_exactly() {
        let cfg = small_config();
        let basis = FockBasis::new(4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for form in [MasterEquationForm::NonLindbladian, MasterEquationForm::Lindblad] {
            let g = build_generator(&cfg, &basis, form).unwrap();
            for _ in 0..5 {
                let rho = random_hermitian_unit_trace(basis.dim(), &mut rng);
                let out = apply_flat(&g, &rho);
                let tr: Complex64 = (0..basis.dim()).map(|i| out[i * basis.dim() + i]).sum();
                assert!(tr.norm() < 1e-12, "trace leak {tr} under {form:?}");
            }
        }
    }

    #[test]
    fn generators_preserve_hermiticity() {
        let cfg = small_config();
        let basis = FockBasis::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = basis.dim();
        for form in [MasterEquationForm::NonLindbladian, MasterEquationForm::Lindblad] {
            let g = build_generator(&cfg, &basis, form).unwrap();
            let rho = random_hermitian_unit_trace(d, &mut rng);
            let out = apply_flat(&g, &rho);
            for i in 0..d {
                for j in 0..d {
                    let diff = (out[i * d + j] - out[j * d + i].conj()).norm();
                    assert!(diff < 1e-13, "hermiticity broken at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn forms_differ_by_the_completion_dissipator() {
        let cfg = small_config();
        let basis = FockBasis::new(5, 2).unwrap();
        let d = basis.dim();
        let g_nl = build_generator(&cfg, &basis, MasterEquationForm::NonLindbladian).unwrap();
        let g_l = build_generator(&cfg, &basis, MasterEquationForm::Lindblad).unwrap();
        let g_diff = form_difference_generator(&cfg, &basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let rho = random_hermitian_unit_trace(d, &mut rng);
            let nl = apply_flat(&g_nl, &rho);
            let li = apply_flat(&g_l, &rho);
            let df = apply_flat(&g_diff, &rho);
            let scale = li
                .iter()
                .map(|v| v.norm())
                .fold(f64::MIN_POSITIVE, f64::max);
            for i in 0..d * d {
                let got = li[i] - nl[i];
                assert!(
                    (got - df[i]).norm() <= 1e-12 * scale,
                    "difference mismatch at {i}: {got} vs {}",
                    df[i]
                );
            }
        }
    }

    #[test]
    fn lindblad_without_linear_gain_is_rejected() {
        let mut cfg = small_config();
        cfg.gain.a = 0.0;
        let basis = FockBasis::new(3, 3).unwrap();
        assert!(matches!(
            build_generator(&cfg, &basis, MasterEquationForm::Lindblad),
            Err(Error::Domain(_))
        ));
        // the direct form has no such restriction
        build_generator(&cfg, &basis, MasterEquationForm::NonLindbladian).unwrap();
    }

    #[test]
    fn cutoff_warning_fires_when_crowded() {
        let mut cfg = small_config();
        cfg.drive.epsilon = 5.0; // classical i1 ~ 49 photons
        let basis = FockBasis::new(3, 3).unwrap();
        let g = build_generator(&cfg, &basis, MasterEquationForm::NonLindbladian).unwrap();
        assert!(g.cutoff_warning.is_some());
        cfg.drive.epsilon = 1.0; // classical i1 ~ 2 photons
        let roomy = FockBasis::new(20, 20).unwrap();
        let g = build_generator(&cfg, &roomy, MasterEquationForm::NonLindbladian).unwrap();
        assert!(g.cutoff_warning.is_none());
    }
}
