//! Sparse recovery from samples `y = A c`.

mod bp;
mod omp;

pub use bp::{basis_pursuit, BpConfig};
pub use omp::{omp, restricted_least_squares, OmpConfig};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::SupportSet;
use crate::linalg::norm;
use crate::sampling::SparsePolynomial;

/// Output of a decoder. `coefficients` follow the lattice's canonical order.
#[derive(Clone, Debug, Serialize)]
pub struct DecodeResult {
    pub coefficients: Vec<Complex64>,
    /// Recovered support, in selection order for OMP and canonical order for BP.
    pub support: SupportSet,
    #[serde(skip)]
    pub support_columns: Vec<usize>,
    /// ℓ2 residual norms; for OMP `‖r^0‖, ‖r^1‖, …`.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Relative ℓ2 error of `result` against the true coefficients, on the
/// full lattice.
pub fn relative_error(truth: &SparsePolynomial, result: &DecodeResult) -> Result<f64> {
    let dense = truth.dense_coefficients();
    if dense.len() != result.coefficients.len() {
        return Err(Error::invalid("result", "coefficient length does not match the lattice"));
    }
    let diff: Vec<Complex64> = dense
        .iter()
        .zip(&result.coefficients)
        .map(|(a, b)| a - b)
        .collect();
    let scale = norm(&dense);
    Ok(if scale == 0.0 { norm(&diff) } else { norm(&diff) / scale })
}

/// Default relative tolerance for [`recovery_success`].
pub const DEFAULT_SUCCESS_TOLERANCE: f64 = 1e-4;

/// `‖ĉ − c‖₂ / ‖c‖₂ ≤ tol`.
pub fn recovery_success(truth: &SparsePolynomial, result: &DecodeResult, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    Ok(relative_error(truth, result)? <= tol)
}
