//! Coherence, frame bounds and restricted-isometry diagnostics.
//!
//! All routines expect column-normalized matrices (`F_X / √N`); inner
//! products are Hermitian, `⟨a, b⟩ = Σ conj(a_i) b_i`, and Gram matrices
//! are `A_T* A_T`.

use std::f64::consts::TAU;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{is_prime, pow_mod, FrequencyIndex, SupportSet};
use crate::linalg::{gram, hermitian_extremes, inner, norm};
use crate::sampling::{Provenance, SamplingMatrix};
use crate::seed;

/// Most supports [`rip_bruteforce`] will enumerate.
pub const RIP_SUPPORT_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct CoherenceReport {
    pub mu: f64,
    /// Canonical column positions of a pair attaining `mu`.
    pub argmax: (usize, usize),
    pub argmax_frequencies: (FrequencyIndex, FrequencyIndex),
    pub welch_bound: f64,
    /// `(d-1)/√N`; a guaranteed upper bound for deterministic sampling.
    pub weil_bound: f64,
    pub deterministic: bool,
    pub n: usize,
    #[serde(rename = "D")]
    pub cols: usize,
}

/// `√((D−N)/((N−1)D))`, clamped to 0 when `D ≤ N`.
pub fn welch_bound(n: usize, cols: usize) -> f64 {
    if cols <= n {
        return 0.0;
    }
    if n <= 1 {
        return 1.0;
    }
    let (n, c) = (n as f64, cols as f64);
    ((c - n) / ((n - 1.0) * c)).sqrt()
}

/// `(d−1)/√N`.
pub fn weil_bound(n: usize, d: usize) -> f64 {
    (d as f64 - 1.0) / (n as f64).sqrt()
}

fn require_normalized(a: &SamplingMatrix) -> Result<()> {
    if a.is_normalized() {
        Ok(())
    } else {
        Err(Error::invalid("matrix", "expected unit-norm columns (normalized matrix)"))
    }
}

/// Mutual coherence by an exhaustive scan of all column pairs.
pub fn coherence(a: &SamplingMatrix) -> Result<CoherenceReport> {
    require_normalized(a)?;
    let cols = a.cols();
    let (mu, argmax) = (0..cols)
        .into_par_iter()
        .map(|i| {
            let ci = a.column(i);
            let mut best = (0.0f64, (i, i));
            for j in i + 1..cols {
                let v = inner(ci, a.column(j)).norm();
                if v > best.0 {
                    best = (v, (i, j));
                }
            }
            best
        })
        .reduce(
            || (0.0, (0, 0)),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }
            },
        );
    let argmax = if cols > 1 && argmax.0 == argmax.1 { (0, 1) } else { argmax };
    let lattice = a.lattice();
    Ok(CoherenceReport {
        mu,
        argmax,
        argmax_frequencies: (
            lattice.index_at(argmax.0),
            lattice.index_at(argmax.1.min(cols - 1)),
        ),
        welch_bound: welch_bound(a.rows(), cols),
        weil_bound: weil_bound(a.rows(), lattice.dimension()),
        deterministic: matches!(a.points().provenance(), Provenance::Deterministic { .. }),
        n: a.rows(),
        cols,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeilCheck {
    pub magnitude: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|Σ_{x=1}^p exp(2πi (m_1 x + … + m_d x^d)/p)|` against `(d−1)√p`.
///
/// `coeffs[t]` multiplies `x^{t+1}`; `d` is `coeffs.len()`.
pub fn weil_sum_check(p: u64, coeffs: &[i64]) -> Result<WeilCheck> {
    if !is_prime(p) {
        return Err(Error::invalid("p", format!("{p} is not prime")));
    }
    if coeffs.iter().all(|&m| m.rem_euclid(p as i64) == 0) {
        return Err(Error::invalid("coeffs", "every coefficient vanishes mod p"));
    }
    let reduced: Vec<u64> = coeffs.iter().map(|&m| m.rem_euclid(p as i64) as u64).collect();
    let sum: Complex64 = (1..=p)
        .map(|x| {
            let mut phase = 0u64;
            for (t, &m) in reduced.iter().enumerate() {
                let term = (m as u128 * pow_mod(x, t as u64 + 1, p) as u128 % p as u128) as u64;
                phase = (phase + term) % p;
            }
            let signed = if 2 * phase > p { phase as f64 - p as f64 } else { phase as f64 };
            Complex64::from_polar(1.0, TAU * signed / p as f64)
        })
        .sum();
    let magnitude = sum.norm();
    let bound = (coeffs.len() as f64 - 1.0) * (p as f64).sqrt();
    Ok(WeilCheck {
        magnitude,
        bound,
        holds: magnitude <= bound + 1e-8,
    })
}

/// Extreme eigenvalues of `A_T* A_T`.
pub fn gram_extreme_eigs(a: &SamplingMatrix, support: &SupportSet) -> Result<(f64, f64)> {
    require_normalized(a)?;
    if support.len() > a.rows() {
        return Err(Error::invalid("support", "larger than the number of samples"));
    }
    if support.is_empty() {
        return Err(Error::invalid("support", "must not be empty"));
    }
    let cols = support.columns(a.lattice())?;
    Ok(gram_extremes_for(a, &cols))
}

pub(crate) fn gram_extremes_for(a: &SamplingMatrix, cols: &[usize]) -> (f64, f64) {
    // a normalized column has unit norm by construction; report that rather
    // than its rounded sum of squares
    if cols.len() == 1 && a.is_normalized() {
        return (1.0, 1.0);
    }
    hermitian_extremes(gram(a, cols))
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeExtremes {
    pub size: usize,
    pub supports: u128,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RipReport {
    pub order: usize,
    pub delta_min: f64,
    pub per_size: Vec<SizeExtremes>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

/// Advances `idx` to the next `k`-subset of `lo..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - (k - pos) {
            idx[pos] += 1;
            for later in pos + 1..k {
                idx[later] = idx[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Smallest RIP constant over every support of size at most `order`,
/// by exhaustive enumeration.
pub fn rip_bruteforce(a: &SamplingMatrix, order: usize) -> Result<RipReport> {
    require_normalized(a)?;
    let cols = a.cols();
    if order == 0 || order > cols {
        return Err(Error::invalid("k", format!("order must be in 1..={cols}")));
    }
    let total: u128 = (1..=order).map(|s| binomial(cols, s)).fold(0u128, u128::saturating_add);
    if total > RIP_SUPPORT_LIMIT {
        return Err(Error::TooLarge {
            count: total,
            limit: RIP_SUPPORT_LIMIT,
        });
    }
    let mut per_size = Vec::with_capacity(order);
    for size in 1..=order {
        let (lo, hi) = (0..=cols - size)
            .into_par_iter()
            .map(|first| {
                let mut rest: Vec<usize> = (first + 1..first + size).collect();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                loop {
                    let mut support = Vec::with_capacity(size);
                    support.push(first);
                    support.extend_from_slice(&rest);
                    let (l, h) = gram_extremes_for(a, &support);
                    lo = lo.min(l);
                    hi = hi.max(h);
                    if rest.is_empty() || !next_combination(&mut rest, cols) {
                        break;
                    }
                }
                (lo, hi)
            })
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |x, y| (x.0.min(y.0), x.1.max(y.1)),
            );
        per_size.push(SizeExtremes {
            size,
            supports: binomial(cols, size),
            lambda_min: lo,
            lambda_max: hi,
        });
    }
    let delta_min = per_size
        .iter()
        .map(|s| (s.lambda_max - 1.0).max(1.0 - s.lambda_min))
        .fold(0.0, f64::max);
    Ok(RipReport {
        order,
        delta_min,
        per_size,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StripEstimate {
    pub order: usize,
    pub delta: f64,
    pub trials: usize,
    pub successes: usize,
    pub probability: f64,
    /// Wilson score interval at 95%.
    pub interval: (f64, f64),
}

impl StripEstimate {
    pub fn half_width(&self) -> f64 {
        (self.interval.1 - self.interval.0) / 2.0
    }
}

/// Wilson score interval for `successes` out of `trials` at `z = 1.96`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // the exact interval always contains p; rounding can clip it at 0 or 1
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Uniformly random `k`-subset of `0..cols`, sorted.
pub(crate) fn random_support<R: Rng + ?Sized>(rng: &mut R, cols: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..cols).collect();
    let (chosen, _) = all.partial_shuffle(rng, k);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    chosen
}

/// Monte-Carlo estimate of `Pr(|‖Ay‖² − 1| ≤ δ)` for unit `k`-sparse `y`
/// with uniform support and rotation-invariant complex Gaussian values.
pub fn strip_estimate(
    a: &SamplingMatrix,
    order: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<StripEstimate> {
    require_normalized(a)?;
    if order == 0 || order > a.cols() {
        return Err(Error::invalid("k", format!("order must be in 1..={}", a.cols())));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", "must lie strictly between 0 and 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let successes = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = seed::rng(seed, &[t as u64]);
            let support = random_support(&mut rng, a.cols(), order);
            let mut vals: Vec<Complex64> = (0..order)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let s = norm(&vals);
            vals.iter_mut().for_each(|v| *v /= s);
            let mut ay = vec![Complex64::new(0.0, 0.0); a.rows()];
            for (&c, &v) in support.iter().zip(&vals) {
                for (o, &x) in ay.iter_mut().zip(a.column(c)) {
                    *o += x * v;
                }
            }
            let energy: f64 = ay.iter().map(|z| z.norm_sqr()).sum();
            (energy - 1.0).abs() <= delta
        })
        .count();
    Ok(StripEstimate {
        order,
        delta,
        trials,
        successes,
        probability: successes as f64 / trials as f64,
        interval: wilson_interval(successes, trials),
    })
}

/// Order `⌊δ² N/(8 ln D) · (ln(D/N)/ln N)²⌋`, clamped to at least 1, at
/// which the mixed-radix matrix is a StRIP with probability `1 − 1/D`.
pub fn strip_theorem_order(delta: f64, n: usize, cols: usize) -> usize {
    let (nf, df) = (n as f64, cols as f64);
    let ratio = (df / nf).ln() / nf.ln();
    let k = delta * delta * nf / (8.0 * df.ln()) * ratio * ratio;
    (k.floor() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenStat {
    #[serde(rename = "M")]
    pub m: usize,
    pub samples: usize,
    pub mean_lambda_min: f64,
    pub mean_lambda_max: f64,
    #[serde(skip)]
    pub sd_lambda_min: f64,
    #[serde(skip)]
    pub sd_lambda_max: f64,
}

impl EigenStat {
    pub fn stderr_min(&self) -> f64 {
        self.sd_lambda_min / (self.samples as f64).sqrt()
    }

    pub fn stderr_max(&self) -> f64 {
        self.sd_lambda_max / (self.samples as f64).sqrt()
    }
}

/// Sample means of the extreme Gram eigenvalues over uniform random supports
/// of each size in `sizes`.
pub fn eigen_statistics(
    a: &SamplingMatrix,
    sizes: RangeInclusive<usize>,
    samples: usize,
    seed: u64,
) -> Result<Vec<EigenStat>> {
    require_normalized(a)?;
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    if *sizes.start() == 0 || *sizes.end() > a.rows().min(a.cols()) {
        return Err(Error::invalid(
            "M",
            format!("sizes must lie in 1..={}", a.rows().min(a.cols())),
        ));
    }
    Ok(sizes
        .map(|m| {
            let draws: Vec<(f64, f64)> = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let mut rng = seed::rng(seed, &[m as u64, s as u64]);
                    let support = random_support(&mut rng, a.cols(), m);
                    gram_extremes_for(a, &support)
                })
                .collect();
            let n = samples as f64;
            let mean_min = draws.iter().map(|d| d.0).sum::<f64>() / n;
            let mean_max = draws.iter().map(|d| d.1).sum::<f64>() / n;
            let sd = |f: fn(&(f64, f64)) -> f64, mean: f64| {
                if samples < 2 {
                    return 0.0;
                }
                (draws.iter().map(|d| (f(d) - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            EigenStat {
                m,
                samples,
                mean_lambda_min: mean_min,
                mean_lambda_max: mean_max,
                sd_lambda_min: sd(|d| d.0, mean_min),
                sd_lambda_max: sd(|d| d.1, mean_max),
            }
        })
        .collect())
}

/// CSV with columns `M,mean_lambda_min,mean_lambda_max,samples`.
pub fn write_eigen_csv<W: std::io::Write>(stats: &[EigenStat], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "mean_lambda_min", "mean_lambda_max", "samples"])?;
    for s in stats {
        w.write_record([
            s.m.to_string(),
            s.mean_lambda_min.to_string(),
            s.mean_lambda_max.to_string(),
            s.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
