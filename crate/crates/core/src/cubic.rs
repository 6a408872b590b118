//! Real roots of the steady-state intensity polynomial
//! `c0 x^3 + c1 x^2 + c2 x + c3`.
//!
//! Two routes, selected by the discriminant: a closed form for the
//! single-real-root regime and a companion-matrix eigensolve for the
//! three-real-root regime. Both finish with a Newton polish in the original
//! coefficients; the physical cubics span ~30 orders of magnitude between
//! leading and trailing coefficients, so every intermediate works on a
//! rescaled copy.

use nalgebra::Matrix3;

/// Discriminant of `c0 x^3 + c1 x^2 + c2 x + c3`. Positive: three distinct
/// real roots. Negative: one real root and a complex pair. Zero: a repeated
/// root.
pub fn discriminant(c: &[f64; 4]) -> f64 {
    let [a, b, cc, d] = *c;
    18.0 * a * b * cc * d - 4.0 * b * b * b * d + b * b * cc * cc
        - 4.0 * a * cc * cc * cc
        - 27.0 * a * a * d * d
}

/// Magnitude scale of the roots: substituting `x = s*y` makes the scaled
/// cubic's coefficients comparable.
fn root_scale(c: &[f64; 4]) -> f64 {
    let s = if c[0] != 0.0 {
        (c[1] / c[0])
            .abs()
            .max((c[2] / c[0]).abs().sqrt())
            .max((c[3] / c[0]).abs().cbrt())
    } else if c[1] != 0.0 {
        (c[2] / c[1]).abs().max((c[3] / c[1]).abs().sqrt())
    } else if c[2] != 0.0 {
        (c[3] / c[2]).abs()
    } else {
        0.0
    };
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

fn eval(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

/// Residual of `x` relative to the largest monomial, so a well-resolved root
/// scores near machine epsilon regardless of the coefficient magnitudes.
pub fn rel_residual(c: &[f64; 4], x: f64) -> f64 {
    let p = eval(c, x);
    let scale = (c[0] * x * x * x)
        .abs()
        .max((c[1] * x * x).abs())
        .max((c[2] * x).abs())
        .max(c[3].abs());
    if scale == 0.0 {
        p.abs()
    } else {
        (p / scale).abs()
    }
}

/// Newton refinement in the original coefficients, keeping the best iterate
/// by relative residual. A simple root polishes to machine precision in one
/// or two steps; near-multiple roots stall and keep the input.
pub fn polish(c: &[f64; 4], x0: f64) -> f64 {
    let mut x = x0;
    let mut best = x0;
    let mut best_r = rel_residual(c, x0);
    for _ in 0..50 {
        let p = eval(c, x);
        let dp = (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2];
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        x = next;
        let r = rel_residual(c, x);
        if r < best_r {
            best_r = r;
            best = x;
        }
        if step.abs() <= f64::EPSILON * x.abs() || r == 0.0 {
            break;
        }
    }
    best
}

/// The unique real root when the discriminant is negative, in closed form.
/// Returns `None` when `c0 <= 0` or the cubic is not in the
/// single-real-root regime (those cases belong to [`real_roots`]).
///
/// Uses the resolvent radical on the undepressed cubic with the
/// subtraction-free cube-root branch, then one Newton polish: the quotient
/// form cancels badly when the root is far below the coefficient scale, and
/// polishing a simple root cannot jump to a different one.
pub fn closed_form_unique_root(c: &[f64; 4]) -> Option<f64> {
    if !(c[0] > 0.0) || !c.iter().all(|v| v.is_finite()) {
        return None;
    }
    let s = root_scale(c);
    let mut m = [c[0] * (s * s * s), c[1] * (s * s), c[2] * s, c[3]];
    let mag = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in &mut m {
        *v /= mag;
    }
    let d0 = m[1] * m[1] - 3.0 * m[0] * m[2];
    let d1 = 2.0 * m[1] * m[1] * m[1] - 9.0 * m[0] * m[1] * m[2] + 27.0 * m[0] * m[0] * m[3];
    let rad = d1 * d1 - 4.0 * d0 * d0 * d0;
    if !(rad > 0.0) {
        return None;
    }
    let sq = rad.sqrt();
    // pick the cube root with the same sign as -d1 to avoid cancellation
    let u3 = if d1 <= 0.0 {
        4.0 * (sq - d1)
    } else {
        -4.0 * (sq + d1)
    };
    let u = u3.cbrt();
    let y = (u * u - 2.0 * m[1] * u + 4.0 * d0) / (6.0 * m[0] * u);
    let x = y * s;
    if !x.is_finite() {
        return None;
    }
    Some(polish(c, x))
}

fn quadratic_real_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    if b == 0.0 {
        if c == 0.0 {
            return Vec::new(); // constant; no roots (or all x when d = 0)
        }
        return vec![-d / c];
    }
    let disc = c * c - 4.0 * b * d;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // q-formula: the large root first, the small one by Vieta
    let q = -0.5 * (c + c.signum() * sq);
    let mut roots = if c == 0.0 {
        vec![sq / (2.0 * b), -sq / (2.0 * b)]
    } else {
        vec![q / b, d / q]
    };
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup();
    roots
}

/// All real roots, ascending, with duplicates from a repeated root merged.
/// Degenerate leading coefficients fall back to the quadratic and linear
/// formulas. The cubic path solves the scaled monic companion eigenproblem
/// and keeps eigenvalues whose imaginary part is rounding-level, each
/// polished in the original coefficients.
pub fn real_roots(c: &[f64; 4]) -> Vec<f64> {
    if !c.iter().all(|v| v.is_finite()) {
        return Vec::new();
    }
    if c[0] == 0.0 {
        return quadratic_real_roots(c[1], c[2], c[3]);
    }
    let s = root_scale(c);
    let p2 = c[1] / c[0] / s;
    let p1 = c[2] / c[0] / (s * s);
    let p0 = c[3] / c[0] / (s * s * s);
    let companion = Matrix3::new(-p2, -p1, -p0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eigs = companion.complex_eigenvalues();
    let mut roots: Vec<f64> = Vec::with_capacity(3);
    for e in eigs.iter() {
        if e.im.abs() <= 1e-8 * (1.0 + e.norm()) {
            let x = polish(c, e.re * s);
            if rel_residual(c, x) < 1e-9 {
                roots.push(x);
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
    roots
}
