//! Deterministic sampling of sparse multivariate trigonometric polynomials.
//!
//! A polynomial `f(x) = Σ c_k exp(2πi k·x)` with frequencies `k` in the box
//! `[-q, q]^d` is sampled at the `N` points `x_j = (j, j², …, j^d)/N mod 1`
//! for a prime `N`. The crate builds those points and the associated complex
//! Fourier matrices, measures their coherence and restricted-isometry
//! behaviour, recovers sparse coefficient vectors with Orthogonal Matching
//! Pursuit or Basis Pursuit, and runs seeded Monte-Carlo comparisons against
//! random sampling.
//!
//! Module map:
//!
//! * [`index`]: primality, frequency lattices, support sets, `β_Γ` and the
//!   `Γ₀` curve.
//! * [`sampling`]: sampling sets, sampling matrices, polynomial evaluation.
//! * [`frames`]: coherence, Welch/Weil bounds, Gram spectra, RIP and StRIP.
//! * [`decoders`]: OMP, restricted least squares, Basis Pursuit.
//! * [`experiments`]: seeded success-rate and eigenvalue experiments, CSV.

pub mod decoders;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod index;
mod linalg;
pub mod seed;
pub mod sampling;

pub use error::{Error, Result};
pub use num_complex::Complex64;
