use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DecodeResult;
use crate::error::{Error, Result};
use crate::index::SupportSet;
use crate::linalg::{inner, norm, qr_least_squares, submatrix};
use crate::sampling::SamplingMatrix;

/// Stopping rules for [`omp`]. At least one must be active.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmpConfig {
    /// Iteration (and support size) cap; `None` means limited only by `N`.
    pub max_sparsity: Option<usize>,
    /// Absolute ℓ2 residual at which to stop.
    pub tolerance: f64,
}

impl OmpConfig {
    pub fn sparsity(m: usize) -> Self {
        OmpConfig {
            max_sparsity: Some(m),
            tolerance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance", "must be nonnegative"));
        }
        match self.max_sparsity {
            Some(0) | None if self.tolerance == 0.0 => Err(Error::invalid(
                "max_sparsity",
                "need a sparsity cap >= 1 or a positive residual tolerance",
            )),
            _ => Ok(()),
        }
    }
}

/// Minimizer of `‖y − A z‖₂` over `z` supported on `support`, via QR.
pub fn restricted_least_squares(
    a: &SamplingMatrix,
    support: &SupportSet,
    y: &[Complex64],
) -> Result<Vec<Complex64>> {
    if y.len() != a.rows() {
        return Err(Error::invalid("y", format!("expected {} samples", a.rows())));
    }
    let cols = support.columns(a.lattice())?;
    qr_least_squares(submatrix(a, &cols), y)
}

/// Orthogonal Matching Pursuit.
///
/// Each pass correlates the residual with every column (`A* r`), adds the
/// best unselected column to the support (lowest index on ties), re-fits
/// the samples on that support by least squares and recomputes the
/// residual. The loop runs while `‖r‖ > tolerance` and the support is
/// smaller than the sparsity cap.
pub fn omp(a: &SamplingMatrix, y: &[Complex64], cfg: &OmpConfig) -> Result<DecodeResult> {
    cfg.validate()?;
    if y.len() != a.rows() {
        return Err(Error::invalid("y", format!("expected {} samples", a.rows())));
    }
    let budget = cfg
        .max_sparsity
        .unwrap_or(usize::MAX)
        .min(a.rows())
        .min(a.cols());
    let mut selected: Vec<usize> = Vec::new();
    let mut in_support = vec![false; a.cols()];
    let mut fit: Vec<Complex64> = Vec::new();
    let mut residual = y.to_vec();
    let mut history = vec![norm(&residual)];

    while *history.last().unwrap() > cfg.tolerance && selected.len() < budget {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..a.cols() {
            if in_support[c] {
                continue;
            }
            let h = inner(a.column(c), &residual).norm();
            if best.is_none_or(|(_, b)| h > b) {
                best = Some((c, h));
            }
        }
        let Some((pick, corr)) = best.filter(|&(_, h)| h > 0.0) else {
            break;
        };
        debug_assert!(corr.is_finite());
        selected.push(pick);
        in_support[pick] = true;

        fit = qr_least_squares(submatrix(a, &selected), y)?;
        residual.copy_from_slice(y);
        for (&c, &z) in selected.iter().zip(&fit) {
            for (r, &v) in residual.iter_mut().zip(a.column(c)) {
                *r -= v * z;
            }
        }
        history.push(norm(&residual));
    }

    let mut coefficients = vec![Complex64::new(0.0, 0.0); a.cols()];
    for (&c, &z) in selected.iter().zip(&fit) {
        coefficients[c] = z;
    }
    let last = *history.last().unwrap();
    Ok(DecodeResult {
        coefficients,
        support: SupportSet::from_columns(a.lattice(), &selected)?,
        support_columns: selected.clone(),
        iterations: selected.len(),
        residual_history: history,
        converged: last <= cfg.tolerance || selected.len() == budget,
    })
}
