//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sampling::SamplingMatrix;

/// Largest acceptable condition number of a restricted column block.
pub(crate) const MAX_CONDITION: f64 = 1e12;

pub(crate) fn submatrix(a: &SamplingMatrix, cols: &[usize]) -> DMatrix<Complex64> {
    let n = a.rows();
    DMatrix::from_iterator(n, cols.len(), cols.iter().flat_map(|&c| a.column(c).iter().copied()))
}

/// `⟨u, v⟩ = Σ conj(u_i) v_i`.
pub(crate) fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        acc += a.conj() * b;
    }
    acc
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian Gram matrix `A_T* A_T` of the chosen columns.
pub(crate) fn gram(a: &SamplingMatrix, cols: &[usize]) -> DMatrix<Complex64> {
    let m = cols.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = inner(a.column(cols[i]), a.column(cols[j]));
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

/// `(λ_min, λ_max)` of a Hermitian matrix.
pub(crate) fn hermitian_extremes(h: DMatrix<Complex64>) -> (f64, f64) {
    if h.nrows() == 0 {
        return (f64::NAN, f64::NAN);
    }
    if h.nrows() == 1 {
        let v = h[(0, 0)].re;
        return (v, v);
    }
    let eig = h.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Least-squares solution of `B z ≈ y` through a Householder QR of `B`.
///
/// Fails when `B` has more columns than rows or is numerically rank
/// deficient (condition number above [`MAX_CONDITION`]).
pub(crate) fn qr_least_squares(b: DMatrix<Complex64>, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let (n, m) = b.shape();
    if m == 0 {
        return Ok(Vec::new());
    }
    if m > n {
        return Err(Error::invalid(
            "support",
            format!("{m} columns exceed the {n} available samples"),
        ));
    }
    let qr = b.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) || smax / smin > MAX_CONDITION {
        return Err(Error::Degenerate(format!(
            "restricted columns are rank deficient (condition {:.3e})",
            smax / smin
        )));
    }
    let q = qr.q();
    let rhs = q.adjoint() * DVector::from_column_slice(y);
    let z = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Degenerate("singular triangular factor".into()))?;
    Ok(z.iter().copied().collect())
}
