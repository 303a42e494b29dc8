//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export takes plain numbers and returns a JSON string; the same
//! functions are callable from Rust, which is how they are tested.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sparsetrig::decoders::{basis_pursuit, omp, recovery_success, relative_error, BpConfig, OmpConfig};
use sparsetrig::experiments::random_sparse_signal;
use sparsetrig::frames::{coherence, eigen_statistics};
use sparsetrig::index::FrequencyLattice;
use sparsetrig::seed::substream;
use sparsetrig::sampling::{
    build_matrix, deterministic_points, evaluate, random_points_continuous, SamplingMatrix, SamplingSet,
};

/// Keeps a single call responsive in a browser tab.
const MAX_COLUMNS: usize = 3125;
const MAX_ROWS: u64 = 1000;
const MAX_EIGEN_SAMPLES: usize = 5000;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn points_for(model: &str, n: u64, d: usize, seed: u64) -> Result<SamplingSet, String> {
    if n > MAX_ROWS {
        return Err(format!("N is capped at {MAX_ROWS} in the demo"));
    }
    match model {
        "deterministic" => deterministic_points(n, d).map_err(fail),
        "random" => random_points_continuous(n as usize, d, seed).map_err(fail),
        other => Err(format!("unknown sampling model '{other}'")),
    }
}

fn matrix_for(x: &SamplingSet, q: u32, d: usize, normalized: bool) -> Result<SamplingMatrix, String> {
    let lattice = FrequencyLattice::uniform(q, d).map_err(fail)?;
    if lattice.len() > MAX_COLUMNS {
        return Err(format!("(2q+1)^d = {} exceeds the demo cap of {MAX_COLUMNS}", lattice.len()));
    }
    build_matrix(x, &lattice, normalized).map_err(fail)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(fail)
}

#[derive(Serialize)]
struct Exploration {
    /// First two coordinates of every point (the second repeats the first when d = 1).
    points: Vec<[f64; 2]>,
    mu: f64,
    welch_bound: f64,
    weil_bound: f64,
    rows: usize,
    cols: usize,
    argmax_frequencies: (Vec<i64>, Vec<i64>),
}

/// Sampling points and coherence for the given model and sizes.
pub fn explore_json(q: u32, d: usize, n: u64, model: &str, seed: u64) -> Result<String, String> {
    let x = points_for(model, n, d, seed)?;
    let report = coherence(&matrix_for(&x, q, d, true)?).map_err(fail)?;
    let points = x
        .points()
        .into_iter()
        .map(|p| [p[0], *p.get(1).unwrap_or(&p[0])])
        .collect();
    to_json(&Exploration {
        points,
        mu: report.mu,
        welch_bound: report.welch_bound,
        weil_bound: report.weil_bound,
        rows: report.n,
        cols: report.cols,
        argmax_frequencies: (report.argmax_frequencies.0 .0, report.argmax_frequencies.1 .0),
    })
}

#[derive(Serialize)]
struct Recovery {
    /// |c_k| of the true polynomial per lattice column.
    truth: Vec<f64>,
    recovered: Vec<f64>,
    support: Vec<usize>,
    relative_error: f64,
    success: bool,
    iterations: usize,
    converged: bool,
}

/// Draws a random M-sparse polynomial, samples it and decodes it.
pub fn recover_json(
    q: u32,
    d: usize,
    n: u64,
    m: usize,
    model: &str,
    decoder: &str,
    seed: u64,
) -> Result<String, String> {
    let x = points_for(model, n, d, seed)?;
    let a = matrix_for(&x, q, d, false)?;
    let f = random_sparse_signal(a.lattice(), m, substream(seed, &[0])).map_err(fail)?;
    let y = evaluate(&f, &x).map_err(fail)?;
    let r = match decoder {
        "omp" => omp(&a, &y, &OmpConfig { max_sparsity: Some(m), tolerance: 1e-9 * l2(&y) }),
        "bp" => basis_pursuit(&a, &y, &BpConfig::default()),
        other => return Err(format!("unknown decoder '{other}'")),
    }
    .map_err(fail)?;
    let err = relative_error(&f, &r).map_err(fail)?;
    to_json(&Recovery {
        truth: f.dense_coefficients().iter().map(|c| c.norm()).collect(),
        recovered: r.coefficients.iter().map(|c| c.norm()).collect(),
        support: r.support_columns.clone(),
        relative_error: err,
        success: recovery_success(&f, &r, 1e-4).map_err(fail)?,
        iterations: r.iterations,
        converged: r.converged,
    })
}

fn l2(v: &[sparsetrig::Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Serialize)]
struct EigenCurve {
    model: &'static str,
    m: Vec<usize>,
    lambda_min: Vec<f64>,
    lambda_max: Vec<f64>,
}

/// Mean extreme Gram eigenvalues over random supports of size 1..=m_max,
/// for the deterministic and a seeded random sampling set.
pub fn eigen_json(q: u32, d: usize, n: u64, m_max: usize, samples: usize, seed: u64) -> Result<String, String> {
    if samples > MAX_EIGEN_SAMPLES {
        return Err(format!("samples is capped at {MAX_EIGEN_SAMPLES} in the demo"));
    }
    let mut curves = Vec::new();
    for (model, name) in [("deterministic", "deterministic"), ("random", "continuous")] {
        let x = points_for(model, n, d, seed)?;
        let a = matrix_for(&x, q, d, true)?;
        let stats = eigen_statistics(&a, 1..=m_max, samples, seed).map_err(fail)?;
        curves.push(EigenCurve {
            model: name,
            m: stats.iter().map(|s| s.m).collect(),
            lambda_min: stats.iter().map(|s| s.mean_lambda_min).collect(),
            lambda_max: stats.iter().map(|s| s.mean_lambda_max).collect(),
        });
    }
    to_json(&curves)
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn explore(q: u32, d: usize, n: u32, model: &str, seed: u32) -> Result<String, JsError> {
    js(explore_json(q, d, n.into(), model, seed.into()))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn recover(q: u32, d: usize, n: u32, m: usize, model: &str, decoder: &str, seed: u32) -> Result<String, JsError> {
    js(recover_json(q, d, n.into(), m, model, decoder, seed.into()))
}

#[wasm_bindgen]
pub fn eigen(q: u32, d: usize, n: u32, m_max: usize, samples: usize, seed: u32) -> Result<String, JsError> {
    js(eigen_json(q, d, n.into(), m_max, samples, seed.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn explore_small_case() {
        let v = parse(explore_json(1, 2, 5, "deterministic", 0));
        assert_eq!(v["points"].as_array().unwrap().len(), 5);
        assert_eq!(v["points"][0], serde_json::json!([0.2, 0.2]));
        assert!((v["mu"].as_f64().unwrap() - 0.2f64.sqrt()).abs() < 1e-12);
        assert_eq!(v["cols"], 9);
    }

    #[test]
    fn recovery_in_guaranteed_regime() {
        for decoder in ["omp", "bp"] {
            let v = parse(recover_json(2, 2, 11, 2, "deterministic", decoder, 3));
            assert_eq!(v["success"], true, "{decoder}: {v}");
            assert_eq!(v["truth"].as_array().unwrap().len(), 25);
        }
    }

    #[test]
    fn eigen_curves_start_at_one() {
        let v = parse(eigen_json(2, 2, 11, 3, 50, 1));
        for curve in v.as_array().unwrap() {
            assert_eq!(curve["lambda_min"][0], 1.0);
            assert_eq!(curve["lambda_max"][0], 1.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(explore_json(1, 2, 6, "deterministic", 0).is_err());
        assert!(explore_json(1, 2, 5, "chebyshev", 0).is_err());
        assert!(recover_json(2, 2, 11, 2, "deterministic", "lasso", 0).is_err());
        assert!(explore_json(3, 5, 11, "deterministic", 0).unwrap_err().contains("cap"));
    }
}
