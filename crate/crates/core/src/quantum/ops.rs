//! Sparse two-mode operators assembled from dense single-mode matrices.
//!
//! Every operator the master equation needs factorizes per mode, so each is
//! built as a small dense matrix on its own Fock ladder, multiplied out
//! there, and lifted to the product space as a sparse Kronecker product.
//! Composites are always products of the *truncated* ladder operators;
//! that keeps every dissipator exactly trace-preserving on the truncated
//! space.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Row-compressed sparse matrix over the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<Complex64>,
}

impl SparseOp {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Builds from (row, col, value) triplets, merging duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(dim: usize, mut trips: Vec<(u32, u32, Complex64)>) -> Self {
        trips.retain(|t| t.2 != Complex64::default());
        trips.sort_unstable_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(u32, u32, Complex64)> = Vec::with_capacity(trips.len());
        for t in trips {
            match merged.last_mut() {
                Some(last) if last.0 == t.0 && last.1 == t.1 => last.2 += t.2,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.2 != Complex64::default());
        let mut indptr = vec![0usize; dim + 1];
        for t in &merged {
            indptr[t.0 as usize + 1] += 1;
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        let indices = merged.iter().map(|t| t.1).collect();
        let values = merged.iter().map(|t| t.2).collect();
        Self {
            dim,
            indptr,
            indices,
            values,
        }
    }

    /// `out += coef * self * rho`, with `rho` and `out` dense row-major
    /// `dim x dim`.
    pub fn mul_left_accum(&self, coef: Complex64, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        for i in 0..d {
            let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
            if lo == hi {
                continue;
            }
            let out_row = &mut out[i * d..(i + 1) * d];
            for e in lo..hi {
                let k = self.indices[e] as usize;
                let w = coef * self.values[e];
                let rho_row = &rho[k * d..(k + 1) * d];
                for j in 0..d {
                    out_row[j] += w * rho_row[j];
                }
            }
        }
    }

    /// `out += coef * rho * self`.
    pub fn mul_right_accum(&self, coef: Complex64, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        for i in 0..d {
            let rho_row = &rho[i * d..(i + 1) * d];
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let x = rho_row[k];
                if x == Complex64::default() {
                    continue;
                }
                let w = coef * x;
                for e in self.indptr[k]..self.indptr[k + 1] {
                    out_row[self.indices[e] as usize] += w * self.values[e];
                }
            }
        }
    }

    /// Dense reconstruction, for tests and small-scale diagnostics.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for e in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[e] as usize)] = self.values[e];
            }
        }
        m
    }
}

/// Truncated annihilation operator on a `dim`-level ladder.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn identity(dim: usize) -> DMatrix<Complex64> {
    DMatrix::identity(dim, dim)
}

/// Kronecker lift `m1 (x) m2` into triplets scaled by `coef`, appended to
/// `into`. Index convention: `(n1, n2) -> n1 * dim2 + n2`.
pub fn kron_triplets(
    m1: &DMatrix<Complex64>,
    m2: &DMatrix<Complex64>,
    coef: Complex64,
    into: &mut Vec<(u32, u32, Complex64)>,
) {
    let d2 = m2.nrows();
    for i1 in 0..m1.nrows() {
        for j1 in 0..m1.ncols() {
            let v1 = m1[(i1, j1)];
            if v1 == Complex64::default() {
                continue;
            }
            for i2 in 0..d2 {
                for j2 in 0..d2 {
                    let v2 = m2[(i2, j2)];
                    if v2 == Complex64::default() {
                        continue;
                    }
                    into.push((
                        (i1 * d2 + i2) as u32,
                        (j1 * d2 + j2) as u32,
                        coef * v1 * v2,
                    ));
                }
            }
        }
    }
}

/// Sparse lift of a single Kronecker product.
pub fn lift(m1: &DMatrix<Complex64>, m2: &DMatrix<Complex64>) -> SparseOp {
    let dim = m1.nrows() * m2.nrows();
    let mut trips = Vec::new();
    kron_triplets(m1, m2, Complex64::new(1.0, 0.0), &mut trips);
    SparseOp::from_triplets(dim, trips)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
        (a - b).iter().all(|v| v.norm() <= tol)
    }

    #[test]
    fn ladder_algebra() {
        let a = annihilation(5);
        let ad = a.adjoint();
        let n = &ad * &a;
        for k in 0..5 {
            // diagonal entries come from sqrt(k)*sqrt(k), not exact integers
            assert!((n[(k, k)].re - k as f64).abs() <= 4.0 * f64::EPSILON * (k as f64).max(1.0));
        }
        // aa† = n+1 except for the truncated top level
        let q = &a * &ad;
        for k in 0..4 {
            assert!((q[(k, k)].re - (k + 1) as f64).abs() <= 4.0 * f64::EPSILON * (k + 1) as f64);
        }
        assert_eq!(q[(4, 4)].re, 0.0);
    }

    #[test]
    fn lift_matches_dense_kron() {
        let a = annihilation(3);
        let b = annihilation(4);
        let s = lift(&a, &b.adjoint());
        let dense = a.kronecker(&b.adjoint());
        assert!(approx_eq(&s.to_dense(), &dense, 0.0));
        assert_eq!(s.dim(), 12);
    }

    #[test]
    fn triplet_merge_and_zero_drop() {
        let one = Complex64::new(1.0, 0.0);
        let trips = vec![
            (0, 1, one),
            (0, 1, one),
            (2, 0, 2.0 * one),
            (1, 1, Complex64::default()),
            (2, 0, -2.0 * one),
        ];
        let s = SparseOp::from_triplets(3, trips);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.to_dense()[(0, 1)], 2.0 * one);
    }

    #[test]
    fn left_and_right_products_match_dense() {
        let a = annihilation(3);
        let op = lift(&a, &identity(2));
        let d = op.dim();
        // a made-up dense "rho"
        let mut rho = vec![Complex64::default(); d * d];
        for (k, r) in rho.iter_mut().enumerate() {
            *r = Complex64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.02);
        }
        let rho_m = DMatrix::from_fn(d, d, |i, j| rho[i * d + j]);
        let coef = Complex64::new(0.3, -0.7);

        let mut out = vec![Complex64::default(); d * d];
        op.mul_left_accum(coef, &rho, &mut out);
        let want = op.to_dense() * &rho_m * coef;
        for i in 0..d {
            for j in 0..d {
                assert!((out[i * d + j] - want[(i, j)]).norm() < 1e-14);
            }
        }

        let mut out = vec![Complex64::default(); d * d];
        op.mul_right_accum(coef, &rho, &mut out);
        let want = &rho_m * op.to_dense() * coef;
        for i in 0..d {
            for j in 0..d {
                assert!((out[i * d + j] - want[(i, j)]).norm() < 1e-14);
            }
        }
    }
}
