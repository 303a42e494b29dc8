//! Sampling sets, Fourier sampling matrices and polynomial evaluation.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{is_prime, pow_mod, AxisRange, FrequencyIndex, FrequencyLattice, SupportSet};

/// How a sampling set was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// `x_j = (j, j², …, j^d)/N mod 1` for prime `N`.
    Deterministic { n: u64 },
    /// i.i.d. uniform on `[0,1)^d`.
    UniformContinuous { seed: u64 },
    /// i.i.d. uniform on `{0, 1/m, …, (m-1)/m}^d`.
    UniformLattice { m: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
enum Coordinates {
    /// Exact points `a / denominator`, `0 <= a < denominator`.
    Rational {
        denominator: u64,
        numerators: Vec<Vec<u64>>,
    },
    Real(Vec<Vec<f64>>),
}

/// The points `x_1, …, x_N` in `[0,1)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingSet {
    dimension: usize,
    provenance: Provenance,
    coords: Coordinates,
}

impl SamplingSet {
    pub fn len(&self) -> usize {
        match &self.coords {
            Coordinates::Rational { numerators, .. } => numerators.len(),
            Coordinates::Real(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Exact numerators and common denominator, when the points are rational.
    pub fn rational(&self) -> Option<(u64, &[Vec<u64>])> {
        match &self.coords {
            Coordinates::Rational {
                denominator,
                numerators,
            } => Some((*denominator, numerators)),
            Coordinates::Real(_) => None,
        }
    }

    /// Point `j` (0-based) as floating-point coordinates.
    pub fn point(&self, j: usize) -> Vec<f64> {
        match &self.coords {
            Coordinates::Rational {
                denominator,
                numerators,
            } => numerators[j]
                .iter()
                .map(|&a| a as f64 / *denominator as f64)
                .collect(),
            Coordinates::Real(p) => p[j].clone(),
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    /// `k·x_j mod 1`, in turns. Exact modular arithmetic for rational points.
    pub fn phase_turns(&self, j: usize, k: &FrequencyIndex) -> f64 {
        match &self.coords {
            Coordinates::Rational {
                denominator,
                numerators,
            } => rational_phase(k.coords(), &numerators[j], *denominator) as f64
                / *denominator as f64,
            Coordinates::Real(p) => {
                let t: f64 = k.coords().iter().zip(&p[j]).map(|(&c, &x)| c as f64 * x).sum();
                t - t.floor()
            }
        }
    }
}

/// `(Σ k_t a_t) mod den` in exact integer arithmetic.
fn rational_phase(k: &[i64], a: &[u64], den: u64) -> u64 {
    let den = i128::from(den);
    let mut acc: i128 = 0;
    for (&c, &x) in k.iter().zip(a) {
        acc = (acc + i128::from(c) * i128::from(x)).rem_euclid(den);
    }
    acc as u64
}

/// `exp(2πi r/den)` for `r = 0..den`, each from one trigonometric call.
fn unit_roots(den: u64) -> Vec<Complex64> {
    (0..den)
        .map(|r| {
            // reduce to (-1/2, 1/2] turns before scaling
            let signed = if 2 * r > den { r as f64 - den as f64 } else { r as f64 };
            Complex64::from_polar(1.0, TAU * signed / den as f64)
        })
        .collect()
}

/// The `N` points `x_j = (j, j², …, j^d)/N mod 1`, `j = 1..N`.
///
/// Row `j-1` holds `x_j`; the last point `x_N` is the origin.
pub fn deterministic_points(n: u64, d: usize) -> Result<SamplingSet> {
    if !is_prime(n) {
        return Err(Error::invalid("N", format!("{n} is not prime")));
    }
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let numerators = (1..=n)
        .map(|j| (1..=d as u64).map(|t| pow_mod(j, t, n)).collect())
        .collect();
    Ok(SamplingSet {
        dimension: d,
        provenance: Provenance::Deterministic { n },
        coords: Coordinates::Rational {
            denominator: n,
            numerators,
        },
    })
}

/// `N` i.i.d. uniform points on `[0,1)^d`.
pub fn random_points_continuous(n: usize, d: usize, seed: u64) -> Result<SamplingSet> {
    if n == 0 {
        return Err(Error::invalid("N", "need at least one point"));
    }
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    Ok(SamplingSet {
        dimension: d,
        provenance: Provenance::UniformContinuous { seed },
        coords: Coordinates::Real(pts),
    })
}

/// `N` i.i.d. uniform points on the grid `Z_m^d / m`.
pub fn random_points_lattice(n: usize, d: usize, m: u64, seed: u64) -> Result<SamplingSet> {
    if m < 2 {
        return Err(Error::invalid("m", "lattice modulus must be at least 2"));
    }
    if n == 0 {
        return Err(Error::invalid("N", "need at least one point"));
    }
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let numerators = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(0..m)).collect())
        .collect();
    Ok(SamplingSet {
        dimension: d,
        provenance: Provenance::UniformLattice { m, seed },
        coords: Coordinates::Rational {
            denominator: m,
            numerators,
        },
    })
}

/// The box `I_1 × … × I_d` for primes `p_1 ≥ … ≥ p_d`, where
/// `I_t = [-(p_t-1)/2, (p_t-1)/2]` for odd `p_t` and `[0, 1]` for `p_t = 2`.
pub fn mixed_radix_lattice(primes: &[u64]) -> Result<FrequencyLattice> {
    if primes.is_empty() {
        return Err(Error::invalid("primes", "need at least one prime"));
    }
    if let Some(p) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(Error::invalid("primes", format!("{p} is not prime")));
    }
    if primes.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("primes", "must be in descending order"));
    }
    let axes = primes
        .iter()
        .map(|&p| {
            if p == 2 {
                AxisRange { lo: 0, hi: 1 }
            } else {
                let h = ((p - 1) / 2) as i64;
                AxisRange { lo: -h, hi: h }
            }
        })
        .collect();
    FrequencyLattice::from_axes(axes)
}

/// Dense `N × D` matrix with entries `exp(2πi k·x_j)`, optionally scaled
/// by `1/√N`, columns in canonical lattice order.
#[derive(Clone, Debug)]
pub struct SamplingMatrix {
    entries: DMatrix<Complex64>,
    points: SamplingSet,
    lattice: FrequencyLattice,
    normalized: bool,
}

pub fn build_matrix(
    points: &SamplingSet,
    lattice: &FrequencyLattice,
    normalized: bool,
) -> Result<SamplingMatrix> {
    if points.dimension() != lattice.dimension() {
        return Err(Error::invalid(
            "lattice",
            format!(
                "dimension {} does not match point dimension {}",
                lattice.dimension(),
                points.dimension()
            ),
        ));
    }
    let n = points.len();
    let scale = if normalized { 1.0 / (n as f64).sqrt() } else { 1.0 };
    let roots = points.rational().map(|(den, _)| unit_roots(den));
    let columns: Vec<Vec<Complex64>> = (0..lattice.len())
        .into_par_iter()
        .map(|c| {
            let k = lattice.index_at(c);
            (0..n)
                .map(|j| {
                    let e = match (points.rational(), &roots) {
                        (Some((den, nums)), Some(roots)) => {
                            roots[rational_phase(k.coords(), &nums[j], den) as usize]
                        }
                        _ => {
                            let t = points.phase_turns(j, &k);
                            let t = if t > 0.5 { t - 1.0 } else { t };
                            Complex64::from_polar(1.0, TAU * t)
                        }
                    };
                    e * scale
                })
                .collect()
        })
        .collect();
    let entries = DMatrix::from_iterator(n, lattice.len(), columns.into_iter().flatten());
    Ok(SamplingMatrix {
        entries,
        points: points.clone(),
        lattice: lattice.clone(),
        normalized,
    })
}

impl SamplingMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn points(&self) -> &SamplingSet {
        &self.points
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Copy scaled to unit-norm columns. Idempotent.
    pub fn normalize(&self) -> SamplingMatrix {
        if self.normalized {
            return self.clone();
        }
        let s = 1.0 / (self.rows() as f64).sqrt();
        SamplingMatrix {
            entries: self.entries.map(|z| z * s),
            points: self.points.clone(),
            lattice: self.lattice.clone(),
            normalized: true,
        }
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        let n = self.rows();
        &self.entries.as_slice()[c * n..(c + 1) * n]
    }

    /// `A c` for a full-length coefficient vector.
    pub fn apply(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.cols());
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows()];
        for (c, &w) in coeffs.iter().enumerate() {
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(c)) {
                *o += a * w;
            }
        }
        out
    }

    /// `A* r` (conjugate transpose).
    pub fn adjoint_apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(r.len(), self.rows());
        (0..self.cols())
            .map(|c| self.column(c).iter().zip(r).map(|(a, &v)| a.conj() * v).sum())
            .collect()
    }
}

/// A trigonometric polynomial with support `T` on a lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsePolynomial {
    lattice: FrequencyLattice,
    support: SupportSet,
    coefficients: Vec<Complex64>,
}

impl SparsePolynomial {
    pub fn new(
        lattice: FrequencyLattice,
        support: SupportSet,
        coefficients: Vec<Complex64>,
    ) -> Result<Self> {
        if support.len() != coefficients.len() {
            return Err(Error::invalid(
                "coefficients",
                format!("{} values for a support of size {}", coefficients.len(), support.len()),
            ));
        }
        if coefficients.iter().any(|c| c.norm_sqr() == 0.0) {
            return Err(Error::invalid("coefficients", "support coefficients must be nonzero"));
        }
        support.columns(&lattice)?;
        Ok(SparsePolynomial {
            lattice,
            support,
            coefficients,
        })
    }

    /// The zero polynomial.
    pub fn zero(lattice: FrequencyLattice) -> Self {
        SparsePolynomial {
            lattice,
            support: SupportSet::empty(),
            coefficients: Vec::new(),
        }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficients laid out along the lattice's canonical order.
    pub fn dense_coefficients(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.lattice.len()];
        let cols = self.support.columns(&self.lattice).expect("validated on construction");
        for (c, &v) in cols.into_iter().zip(&self.coefficients) {
            out[c] = v;
        }
        out
    }
}

/// `y_j = f(x_j)` by direct summation over the support.
pub fn evaluate(f: &SparsePolynomial, points: &SamplingSet) -> Result<Vec<Complex64>> {
    if f.lattice().dimension() != points.dimension() {
        return Err(Error::invalid("points", "dimension does not match the polynomial"));
    }
    Ok((0..points.len())
        .map(|j| {
            f.support()
                .iter()
                .zip(f.coefficients())
                .map(|(k, &c)| {
                    let t = points.phase_turns(j, k);
                    c * Complex64::from_polar(1.0, TAU * t)
                })
                .sum()
        })
        .collect())
}

// ---- JSON forms ----

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    /// `[[numerator, denominator], …]`
    Rational(Vec<[u64; 2]>),
    Real(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct SamplingSetRepr {
    dimension: usize,
    provenance: Provenance,
    points: Vec<PointRepr>,
}

impl Serialize for SamplingSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let points = match &self.coords {
            Coordinates::Rational {
                denominator,
                numerators,
            } => numerators
                .iter()
                .map(|p| PointRepr::Rational(p.iter().map(|&a| [a, *denominator]).collect()))
                .collect(),
            Coordinates::Real(p) => p.iter().map(|x| PointRepr::Real(x.clone())).collect(),
        };
        SamplingSetRepr {
            dimension: self.dimension,
            provenance: self.provenance,
            points,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SamplingSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = SamplingSetRepr::deserialize(de)?;
        let set = match r.provenance {
            Provenance::Deterministic { n } => {
                let set = deterministic_points(n, r.dimension).map_err(D::Error::custom)?;
                let expect = SamplingSetRepr::deserialize(
                    serde_json::to_value(&set).map_err(D::Error::custom)?,
                )
                .map_err(D::Error::custom)?;
                if serde_json::to_value(&expect.points).ok()
                    != serde_json::to_value(&r.points).ok()
                {
                    return Err(D::Error::custom(
                        "points do not match the deterministic construction",
                    ));
                }
                set
            }
            Provenance::UniformLattice { m, .. } => {
                let numerators = r
                    .points
                    .into_iter()
                    .map(|p| match p {
                        PointRepr::Rational(v) => v
                            .into_iter()
                            .map(|[a, den]| {
                                if den == m && a < m {
                                    Ok(a)
                                } else {
                                    Err(D::Error::custom("lattice point outside Z_m/m"))
                                }
                            })
                            .collect(),
                        PointRepr::Real(_) => Err(D::Error::custom("expected rational points")),
                    })
                    .collect::<std::result::Result<Vec<Vec<u64>>, _>>()?;
                SamplingSet {
                    dimension: r.dimension,
                    provenance: r.provenance,
                    coords: Coordinates::Rational {
                        denominator: m,
                        numerators,
                    },
                }
            }
            Provenance::UniformContinuous { .. } => {
                let pts = r
                    .points
                    .into_iter()
                    .map(|p| match p {
                        PointRepr::Real(v) if v.iter().all(|x| (0.0..1.0).contains(x)) => Ok(v),
                        _ => Err(D::Error::custom("expected real points in [0,1)")),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                SamplingSet {
                    dimension: r.dimension,
                    provenance: r.provenance,
                    coords: Coordinates::Real(pts),
                }
            }
        };
        if (0..set.len()).any(|j| set.point(j).len() != set.dimension) {
            return Err(D::Error::custom("point dimension mismatch"));
        }
        Ok(set)
    }
}

#[derive(Serialize)]
struct MatrixRepr<'a> {
    rows: usize,
    cols: usize,
    normalized: bool,
    lattice: &'a FrequencyLattice,
    sampling_set: &'a SamplingSet,
    /// row-major `[re, im]`
    entries: Vec<Vec<Complex64>>,
}

impl Serialize for SamplingMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            normalized: self.normalized,
            lattice: &self.lattice,
            sampling_set: &self.points,
            entries: self.entries.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
        .serialize(s)
    }
}
