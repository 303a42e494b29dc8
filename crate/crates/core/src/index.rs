//! Number-theoretic helpers and frequency-index bookkeeping.
//!
//! Frequencies live on a box lattice `I_1 × … × I_d` of integer vectors.
//! Columns of every sampling matrix follow the lattice's canonical order:
//! lexicographic over axes (axis 0 most significant), each axis ascending.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic Miller-Rabin; this witness set is exact for all `u64`.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod m` by square-and-multiply.
pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Exact primality test for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `p >= lower`.
pub fn next_prime_at_least(lower: u64) -> Result<u64> {
    if lower < 2 {
        return Err(Error::invalid("lower", "must be at least 2"));
    }
    let mut n = lower;
    loop {
        if is_prime(n) {
            return Ok(n);
        }
        n = n.checked_add(1).ok_or(Error::Overflow("next prime"))?;
    }
}

/// Smallest prime `N >= max{2q+1, (d-1)²(2M-1)²+1}`.
///
/// Sampling at that many deterministic points recovers every `M`-sparse
/// polynomial of degree `q` in `d` variables with OMP.
pub fn theorem_sample_count(q: u64, d: u64, sparsity: u64) -> Result<u64> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    if sparsity == 0 {
        return Err(Error::invalid("M", "sparsity must be at least 1"));
    }
    let width = q
        .checked_mul(2)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("2q+1"))?;
    let odd = sparsity
        .checked_mul(2)
        .map(|v| v - 1)
        .ok_or(Error::Overflow("2M-1"))?;
    let coherence_need = (d - 1)
        .checked_mul(odd)
        .and_then(|v| v.checked_mul(v))
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("(d-1)^2(2M-1)^2+1"))?;
    next_prime_at_least(width.max(coherence_need).max(2))
}

/// A lattice point `k ∈ Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyIndex(pub Vec<i64>);

impl FrequencyIndex {
    pub fn new(coords: Vec<i64>) -> Self {
        FrequencyIndex(coords)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl From<Vec<i64>> for FrequencyIndex {
    fn from(v: Vec<i64>) -> Self {
        FrequencyIndex(v)
    }
}

impl fmt::Display for FrequencyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Closed integer interval `[lo, hi]` on one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: i64,
    pub hi: i64,
}

impl AxisRange {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    axes: Vec<AxisRange>,
}

/// Box of frequencies with a fixed enumeration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "LatticeRepr", try_from = "LatticeRepr")]
pub struct FrequencyLattice {
    axes: Vec<AxisRange>,
    // strides[t] = Π_{s>t} |I_s|
    strides: Vec<usize>,
    len: usize,
}

impl From<FrequencyLattice> for LatticeRepr {
    fn from(l: FrequencyLattice) -> Self {
        LatticeRepr { axes: l.axes }
    }
}

impl TryFrom<LatticeRepr> for FrequencyLattice {
    type Error = Error;

    fn try_from(r: LatticeRepr) -> Result<Self> {
        FrequencyLattice::from_axes(r.axes)
    }
}

impl FrequencyLattice {
    pub fn from_axes(axes: Vec<AxisRange>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("lattice", "dimension must be at least 1"));
        }
        if let Some(a) = axes.iter().find(|a| a.is_empty()) {
            return Err(Error::invalid(
                "lattice",
                format!("empty axis range [{}, {}]", a.lo, a.hi),
            ));
        }
        let mut strides = vec![1usize; axes.len()];
        let mut len = 1usize;
        for t in (0..axes.len()).rev() {
            strides[t] = len;
            len = len
                .checked_mul(axes[t].len())
                .ok_or(Error::Overflow("lattice cardinality"))?;
        }
        Ok(FrequencyLattice { axes, strides, len })
    }

    /// The cube `[-q, q]^d` with `D = (2q+1)^d` points.
    pub fn uniform(q: u32, d: usize) -> Result<Self> {
        let q = i64::from(q);
        Self::from_axes(vec![AxisRange { lo: -q, hi: q }; d])
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisRange] {
        &self.axes
    }

    /// Number of frequencies `D`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The degree `q` if this is a cube `[-q, q]^d`.
    pub fn uniform_degree(&self) -> Option<u32> {
        let first = self.axes[0];
        let symmetric = first.lo == -first.hi && first.hi >= 0;
        (symmetric && self.axes.iter().all(|a| *a == first)).then_some(first.hi as u32)
    }

    pub fn contains(&self, k: &FrequencyIndex) -> bool {
        k.dimension() == self.dimension()
            && k.0.iter().zip(&self.axes).all(|(&c, a)| a.contains(c))
    }

    /// Canonical position of `k`, if it lies in the lattice.
    pub fn index_of(&self, k: &FrequencyIndex) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        Some(
            k.0.iter()
                .zip(&self.axes)
                .zip(&self.strides)
                .map(|((&c, a), &s)| (c - a.lo) as usize * s)
                .sum(),
        )
    }

    /// Frequency at canonical position `i`. Panics if `i >= len()`.
    pub fn index_at(&self, i: usize) -> FrequencyIndex {
        assert!(i < self.len, "lattice position {i} out of range {}", self.len);
        let mut rest = i;
        let coords = self
            .axes
            .iter()
            .zip(&self.strides)
            .map(|(a, &s)| {
                let digit = rest / s;
                rest %= s;
                a.lo + digit as i64
            })
            .collect();
        FrequencyIndex(coords)
    }

    pub fn iter(&self) -> impl Iterator<Item = FrequencyIndex> + '_ {
        (0..self.len).map(|i| self.index_at(i))
    }
}

/// Ordered set of distinct frequencies of a common dimension.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct SupportSet(Vec<FrequencyIndex>);

impl<'de> Deserialize<'de> for SupportSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<FrequencyIndex>::deserialize(de)?;
        SupportSet::new(v).map_err(serde::de::Error::custom)
    }
}

impl SupportSet {
    pub fn new(indices: Vec<FrequencyIndex>) -> Result<Self> {
        if let Some(first) = indices.first() {
            let d = first.dimension();
            if indices.iter().any(|k| k.dimension() != d) {
                return Err(Error::invalid("support", "mixed dimensions"));
            }
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for k in &indices {
            if !seen.insert(k) {
                return Err(Error::invalid("support", format!("duplicate index {k}")));
            }
        }
        Ok(SupportSet(indices))
    }

    /// Support given by canonical lattice positions. Duplicates are rejected.
    pub fn from_columns(lattice: &FrequencyLattice, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= lattice.len()) {
            return Err(Error::invalid(
                "support",
                format!("column {c} outside lattice of size {}", lattice.len()),
            ));
        }
        Self::new(columns.iter().map(|&c| lattice.index_at(c)).collect())
    }

    pub fn empty() -> Self {
        SupportSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[FrequencyIndex] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FrequencyIndex> {
        self.0.iter()
    }

    /// Canonical column positions within `lattice`, in support order.
    pub fn columns(&self, lattice: &FrequencyLattice) -> Result<Vec<usize>> {
        self.0
            .iter()
            .map(|k| {
                lattice.index_of(k).ok_or_else(|| {
                    Error::invalid("support", format!("index {k} is not in the lattice"))
                })
            })
            .collect()
    }
}

/// Largest, over distinct pairs, of the smallest nonzero coordinate gap.
///
/// This is the least `β` such that every pair `k₁ ≠ k₂` in `Γ` has some
/// coordinate with `0 < |k₁,j − k₂,j| ≤ β`.
pub fn beta_gamma(gamma: &SupportSet) -> Result<u64> {
    if gamma.len() < 2 {
        return Err(Error::invalid("support", "beta needs at least two indices"));
    }
    let ks = gamma.indices();
    let mut beta = 0u64;
    for (i, a) in ks.iter().enumerate() {
        for b in &ks[i + 1..] {
            let gap = a
                .0
                .iter()
                .zip(&b.0)
                .map(|(x, y)| x.abs_diff(*y))
                .filter(|&g| g > 0)
                .min()
                .expect("distinct indices differ somewhere");
            beta = beta.max(gap);
        }
    }
    Ok(beta)
}

/// Exact `⌊m / b^{t/d}⌋` for integers, without floating point.
///
/// With `s = b^{t/d} ≥ 1`, for `m ≥ 0` the floor is the largest `r ≥ 0` with
/// `r^d b^t ≤ m^d`; for `m < 0` it is `-⌈|m|/s⌉`.
fn floor_div_root(m: i64, b: u64, t: u32, d: u32) -> i64 {
    let scale = BigUint::from(b).pow(t);
    let a = m.unsigned_abs();
    let target = BigUint::from(a).pow(d);
    let scaled = |r: u64| BigUint::from(r).pow(d) * &scale;
    if m >= 0 {
        // largest r in [0, a] with scaled(r) <= target
        let (mut lo, mut hi) = (0u64, a);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if scaled(mid) <= target {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo as i64
    } else {
        // smallest r in [0, a] with scaled(r) >= target
        let (mut lo, mut hi) = (0u64, a);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if scaled(mid) >= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        -(lo as i64)
    }
}

/// The curve `Γ₀ = {(m, ⌊m/(2q+1)^{1/d}⌋, …, ⌊m/(2q+1)^{(d-1)/d}⌋) : |m| ≤ q}`.
///
/// Floors round toward −∞ and are computed in exact integer arithmetic.
pub fn gamma0_curve(q: u32, d: usize) -> Result<SupportSet> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let d32 = u32::try_from(d).map_err(|_| Error::invalid("d", "dimension too large"))?;
    let base = 2 * u64::from(q) + 1;
    let q = i64::from(q);
    let points = (-q..=q)
        .map(|m| {
            let coords = (0..d32).map(|t| floor_div_root(m, base, t, d32)).collect();
            FrequencyIndex(coords)
        })
        .collect();
    SupportSet::new(points)
}
