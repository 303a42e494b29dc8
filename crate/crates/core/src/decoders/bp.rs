use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DecodeResult;
use crate::error::{Error, Result};
use crate::index::SupportSet;
use crate::linalg::norm;
use crate::sampling::SamplingMatrix;

/// Parameters of the ADMM solver behind [`basis_pursuit`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    /// Initial penalty `ρ`; rebalanced during the run.
    pub rho: f64,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            rho: 1.0,
            primal_tolerance: 1e-8,
            dual_tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::invalid("rho", "must be positive"));
        }
        if !(self.primal_tolerance > 0.0 && self.dual_tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

const RELAXATION: f64 = 1.6;

/// Orthogonal projection onto `{c : A c = y}` using a Cholesky factor of
/// `A A*`.
struct AffineProjector<'a> {
    a: &'a SamplingMatrix,
    chol: nalgebra::Cholesky<Complex64, nalgebra::Dyn>,
    y: DVector<Complex64>,
}

impl<'a> AffineProjector<'a> {
    fn new(a: &'a SamplingMatrix, y: &[Complex64]) -> Result<Self> {
        let m = a.entries();
        let aat: DMatrix<Complex64> = m * m.adjoint();
        let chol = aat.cholesky().ok_or_else(|| {
            Error::Degenerate("A A* is not positive definite; rows are dependent".into())
        })?;
        Ok(AffineProjector {
            a,
            chol,
            y: DVector::from_column_slice(y),
        })
    }

    fn project(&self, v: &[Complex64], out: &mut [Complex64]) {
        let av = DVector::from_vec(self.a.apply(v));
        let w = self.chol.solve(&(av - &self.y));
        let correction = self.a.adjoint_apply(w.as_slice());
        for ((o, &x), c) in out.iter_mut().zip(v).zip(correction) {
            *o = x - c;
        }
    }
}

/// Shrinks each modulus by `t`, keeping the phase.
fn soft_threshold(v: Complex64, t: f64) -> Complex64 {
    let r = v.norm();
    if r <= t {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((r - t) / r)
    }
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Basis Pursuit: minimize `Σ |c_k|` subject to `A c = y`.
///
/// Scaled-form ADMM on the split `c = z`:
///
/// ```text
/// c ← P(z − u)                    projection onto A c = y
/// ĉ ← α c + (1 − α) z             over-relaxation, α = 1.6
/// z ← shrink(ĉ + u, 1/ρ)          complex soft-thresholding
/// u ← u + ĉ − z
/// ```
///
/// `ρ` is rebalanced when the primal and dual residuals drift more than a
/// factor of 10 apart; the projection does not depend on `ρ`, so the
/// factorization is reused. The returned coefficients are the last
/// projected iterate, so they satisfy the constraint to rounding error.
pub fn basis_pursuit(a: &SamplingMatrix, y: &[Complex64], cfg: &BpConfig) -> Result<DecodeResult> {
    cfg.validate()?;
    if y.len() != a.rows() {
        return Err(Error::invalid("y", format!("expected {} samples", a.rows())));
    }
    let d = a.cols();
    let zero = Complex64::new(0.0, 0.0);
    if norm(y) == 0.0 {
        return Ok(DecodeResult {
            coefficients: vec![zero; d],
            support: SupportSet::empty(),
            support_columns: Vec::new(),
            residual_history: vec![0.0],
            iterations: 0,
            converged: true,
        });
    }
    let proj = AffineProjector::new(a, y)?;

    let mut c = vec![zero; d];
    let mut z = vec![zero; d];
    let mut u = vec![zero; d];
    let mut z_old = vec![zero; d];
    let mut scratch = vec![zero; d];
    let mut rho = cfg.rho;
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<Complex64>, Vec<Complex64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        for ((s, zi), ui) in scratch.iter_mut().zip(&z).zip(&u) {
            *s = zi - ui;
        }
        proj.project(&scratch, &mut c);

        z_old.copy_from_slice(&z);
        let t = 1.0 / rho;
        // over-relaxed point α c + (1 − α) z
        for (((zi, s), ci), ui) in z.iter_mut().zip(scratch.iter_mut()).zip(&c).zip(&u) {
            *s = ci * RELAXATION + *zi * (1.0 - RELAXATION);
            *zi = soft_threshold(*s + ui, t);
        }
        let mut primal = 0.0;
        for (((ui, ci), zi), s) in u.iter_mut().zip(&c).zip(&z).zip(&scratch) {
            primal += (ci - zi).norm_sqr();
            *ui += s - zi;
        }
        let primal = primal.sqrt();
        let dual = rho
            * z.iter()
                .zip(&z_old)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
        history.push(primal);

        let scale_p = norm(&c).max(norm(&z)).max(1.0);
        let scale_d = (rho * norm(&u)).max(1.0);
        let score = (primal / scale_p / cfg.primal_tolerance).max(dual / scale_d / cfg.dual_tolerance);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, c.clone(), z.clone()));
        }
        if primal <= cfg.primal_tolerance * scale_p && dual <= cfg.dual_tolerance * scale_d {
            converged = true;
            break;
        }

        if primal > 10.0 * dual {
            rho *= 2.0;
            u.iter_mut().for_each(|v| *v /= 2.0);
        } else if dual > 10.0 * primal {
            rho /= 2.0;
            u.iter_mut().for_each(|v| *v *= 2.0);
        }
    }

    let (coefficients, z) = if converged {
        (c, z)
    } else {
        let (_, c, z) = best.expect("at least one iteration ran");
        (c, z)
    };
    let support_columns: Vec<usize> = (0..d).filter(|&i| z[i] != zero).collect();
    debug_assert!(l1(&coefficients).is_finite());
    Ok(DecodeResult {
        coefficients,
        support: SupportSet::from_columns(a.lattice(), &support_columns)?,
        support_columns,
        residual_history: history,
        iterations,
        converged,
    })
}
