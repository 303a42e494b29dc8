//! Seeded Monte-Carlo comparisons of deterministic and random sampling.
//!
//! Output is a pure function of the configuration: every random draw comes
//! from a substream keyed by `(master seed, model, M, trial)`, trials of a
//! cell run in parallel but are reduced in trial order, and CSV rows are
//! written cell by cell in `(model, M, decoder)` order.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{
    basis_pursuit, omp, recovery_success, BpConfig, DecodeResult, OmpConfig,
    DEFAULT_SUCCESS_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::frames::{eigen_statistics, EigenStat};
use crate::index::{is_prime, FrequencyLattice, SupportSet};
use crate::linalg::norm;
use crate::sampling::{
    build_matrix, deterministic_points, evaluate, random_points_continuous,
    random_points_lattice, SamplingMatrix, SamplingSet, SparsePolynomial,
};
use crate::seed;

/// Sampling model for one curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingModel {
    Deterministic,
    Continuous,
    Lattice,
}

impl SamplingModel {
    pub fn id(self) -> u64 {
        match self {
            SamplingModel::Deterministic => 0,
            SamplingModel::Continuous => 1,
            SamplingModel::Lattice => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SamplingModel::Deterministic => "deterministic",
            SamplingModel::Continuous => "continuous",
            SamplingModel::Lattice => "lattice",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderChoice {
    Omp,
    Bp,
    Both,
}

impl DecoderChoice {
    fn decoders(self) -> &'static [Decoder] {
        match self {
            DecoderChoice::Omp => &[Decoder::Omp],
            DecoderChoice::Bp => &[Decoder::Bp],
            DecoderChoice::Both => &[Decoder::Omp, Decoder::Bp],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Omp,
    Bp,
}

impl Decoder {
    pub fn name(self) -> &'static str {
        match self {
            Decoder::Omp => "omp",
            Decoder::Bp => "bp",
        }
    }
}

fn default_trials() -> usize {
    100
}
fn default_samples() -> usize {
    2000
}
fn default_tolerance() -> f64 {
    DEFAULT_SUCCESS_TOLERANCE
}
fn default_models() -> Vec<SamplingModel> {
    vec![SamplingModel::Deterministic, SamplingModel::Continuous]
}
fn default_decoder() -> DecoderChoice {
    DecoderChoice::Omp
}
fn default_omp_tolerance() -> f64 {
    1e-9
}

/// Flat experiment description, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub q: u32,
    pub d: usize,
    /// Number of samples; must be prime for the deterministic model.
    pub n: u64,
    pub m_min: usize,
    pub m_max: usize,
    /// Explicit sparsity list; overrides `m_min..=m_max` when present.
    #[serde(default)]
    pub m_values: Option<Vec<usize>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_decoder")]
    pub decoder: DecoderChoice,
    #[serde(default = "default_models")]
    pub models: Vec<SamplingModel>,
    /// Modulus of the lattice random model.
    #[serde(default)]
    pub lattice_m: Option<u64>,
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub success_tolerance: f64,
    /// OMP stops once `‖r‖ ≤ omp_tolerance · ‖y‖`.
    #[serde(default = "default_omp_tolerance")]
    pub omp_tolerance: f64,
    #[serde(default)]
    pub bp: Option<BpConfig>,
    /// Supports drawn per `M` in the eigenvalue experiment.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Record wall-clock runtime; makes the CSV non-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Validation {
            field: "config",
            reason: e.message().to_string()
                + &e.span().map(|s| format!(" (at bytes {s:?})")).unwrap_or_default(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sparsities(&self) -> Vec<usize> {
        match &self.m_values {
            Some(v) => v.clone(),
            None => (self.m_min..=self.m_max).collect(),
        }
    }

    pub fn lattice(&self) -> Result<FrequencyLattice> {
        FrequencyLattice::uniform(self.q, self.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        if self.n < 1 {
            return Err(Error::invalid("n", "need at least one sample"));
        }
        if self.models.is_empty() {
            return Err(Error::invalid("models", "at least one sampling model is required"));
        }
        if self.models.contains(&SamplingModel::Deterministic) && !is_prime(self.n) {
            return Err(Error::invalid("n", format!("{} is not prime", self.n)));
        }
        if self.models.contains(&SamplingModel::Lattice) && self.lattice_m.is_none_or(|m| m < 2) {
            return Err(Error::invalid("lattice_m", "lattice model needs a modulus >= 2"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be at least 1"));
        }
        if self.m_values.is_none() && (self.m_min == 0 || self.m_min > self.m_max) {
            return Err(Error::invalid("m_min", "need 1 <= m_min <= m_max"));
        }
        let lattice = self.lattice()?;
        let ms = self.sparsities();
        if ms.is_empty() || ms.iter().any(|&m| m == 0 || m > lattice.len()) {
            return Err(Error::invalid(
                "m_values",
                format!("sparsities must lie in 1..={}", lattice.len()),
            ));
        }
        if !(self.success_tolerance > 0.0) {
            return Err(Error::invalid("success_tolerance", "must be positive"));
        }
        if !(self.omp_tolerance >= 0.0) {
            return Err(Error::invalid("omp_tolerance", "must be nonnegative"));
        }
        if let Some(bp) = &self.bp {
            bp.validate()?;
        }
        Ok(())
    }

    fn points(&self, model: SamplingModel, seed: u64) -> Result<SamplingSet> {
        let n = self.n as usize;
        match model {
            SamplingModel::Deterministic => deterministic_points(self.n, self.d),
            SamplingModel::Continuous => random_points_continuous(n, self.d, seed),
            SamplingModel::Lattice => {
                random_points_lattice(n, self.d, self.lattice_m.unwrap_or(2), seed)
            }
        }
    }
}

/// Uniform random support of size `m` with i.i.d. standard Gaussian real and
/// imaginary coefficient parts.
pub fn random_sparse_signal(lattice: &FrequencyLattice, m: usize, seed: u64) -> Result<SparsePolynomial> {
    if m > lattice.len() {
        return Err(Error::invalid("M", format!("exceeds lattice size {}", lattice.len())));
    }
    let mut rng = seed::rng(seed, &[]);
    let mut positions: Vec<usize> = (0..lattice.len()).collect();
    let (chosen, _) = positions.partial_shuffle(&mut rng, m);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let coefficients = (0..m)
        .map(|_| loop {
            let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            if c.norm_sqr() != 0.0 {
                break c;
            }
        })
        .collect();
    SparsePolynomial::new(
        lattice.clone(),
        SupportSet::from_columns(lattice, &chosen)?,
        coefficients,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessCell {
    pub model: SamplingModel,
    pub decoder: Decoder,
    #[serde(rename = "M")]
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_runtime_ms: Option<f64>,
    /// Trials whose decoder reported a numerical degeneracy.
    pub degenerate: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuccessCurve {
    pub cells: Vec<SuccessCell>,
}

impl SuccessCurve {
    /// Rates of one `(model, decoder)` series, in `M` order.
    pub fn series(&self, model: SamplingModel, decoder: Decoder) -> Vec<(usize, f64)> {
        self.cells
            .iter()
            .filter(|c| c.model == model && c.decoder == decoder)
            .map(|c| (c.m, c.rate))
            .collect()
    }
}

pub const SUCCESS_CSV_HEADER: [&str; 7] =
    ["model", "decoder", "M", "trials", "successes", "rate", "mean_runtime_ms"];
pub const EIGEN_CSV_HEADER: [&str; 5] =
    ["model", "M", "samples", "mean_lambda_min", "mean_lambda_max"];

struct TrialOutcome {
    success: [bool; 2],
    degenerate: [bool; 2],
    runtime_ms: [f64; 2],
}

fn decode(
    decoder: Decoder,
    a: &SamplingMatrix,
    y: &[Complex64],
    m: usize,
    cfg: &ExperimentConfig,
) -> Result<DecodeResult> {
    match decoder {
        Decoder::Omp => omp(
            a,
            y,
            &OmpConfig {
                max_sparsity: Some(m),
                tolerance: cfg.omp_tolerance * norm(y),
            },
        ),
        Decoder::Bp => basis_pursuit(a, y, &cfg.bp.unwrap_or_default()),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    lattice: &FrequencyLattice,
    model: SamplingModel,
    m: usize,
    trial: usize,
    shared: Option<&SamplingMatrix>,
) -> Result<TrialOutcome> {
    let key = [model.id(), m as u64, trial as u64];
    let signal = random_sparse_signal(lattice, m, seed::substream(cfg.seed, &[key[0], key[1], key[2], 0]))?;
    let owned;
    let a = match shared {
        Some(a) => a,
        None => {
            let x = cfg.points(model, seed::substream(cfg.seed, &[key[0], key[1], key[2], 1]))?;
            owned = build_matrix(&x, lattice, false)?;
            &owned
        }
    };
    let y = evaluate(&signal, a.points())?;
    let mut out = TrialOutcome {
        success: [false; 2],
        degenerate: [false; 2],
        runtime_ms: [0.0; 2],
    };
    for &dec in cfg.decoder.decoders() {
        let slot = dec as usize;
        let start = cfg.timing.then(Instant::now);
        match decode(dec, a, &y, m, cfg) {
            Ok(r) => out.success[slot] = recovery_success(&signal, &r, cfg.success_tolerance)?,
            Err(e) if e.is_numerical() => out.degenerate[slot] = true,
            Err(e) => return Err(e),
        }
        if let Some(s) = start {
            out.runtime_ms[slot] = s.elapsed().as_secs_f64() * 1e3;
        }
    }
    Ok(out)
}

fn format_rate(r: f64) -> String {
    format!("{r:.4}")
}

/// Success rate per `(model, M, decoder)`. When `sink` is given, CSV rows
/// are written as each `(model, M)` cell completes.
pub fn run_success_experiment(
    cfg: &ExperimentConfig,
    sink: Option<&mut dyn Write>,
) -> Result<SuccessCurve> {
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let mut writer = sink.map(csv::Writer::from_writer);
    if let Some(w) = writer.as_mut() {
        w.write_record(SUCCESS_CSV_HEADER)?;
        w.flush()?;
    }
    let mut curve = SuccessCurve::default();
    for &model in &cfg.models {
        let shared = match model {
            SamplingModel::Deterministic => Some(build_matrix(&cfg.points(model, 0)?, &lattice, false)?),
            _ => None,
        };
        for m in cfg.sparsities() {
            let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, &lattice, model, m, t, shared.as_ref()))
                .collect::<Result<_>>()?;
            for &dec in cfg.decoder.decoders() {
                let slot = dec as usize;
                let successes = outcomes.iter().filter(|o| o.success[slot]).count();
                let degenerate = outcomes.iter().filter(|o| o.degenerate[slot]).count();
                let runtime = cfg.timing.then(|| {
                    outcomes.iter().map(|o| o.runtime_ms[slot]).sum::<f64>() / cfg.trials as f64
                });
                let cell = SuccessCell {
                    model,
                    decoder: dec,
                    m,
                    trials: cfg.trials,
                    successes,
                    rate: successes as f64 / cfg.trials as f64,
                    mean_runtime_ms: runtime,
                    degenerate,
                };
                if let Some(w) = writer.as_mut() {
                    w.write_record([
                        model.name().to_string(),
                        dec.name().to_string(),
                        m.to_string(),
                        cell.trials.to_string(),
                        successes.to_string(),
                        format_rate(cell.rate),
                        runtime.map_or_else(|| "NA".to_string(), |r| format!("{r:.3}")),
                    ])?;
                }
                curve.cells.push(cell);
            }
            if let Some(w) = writer.as_mut() {
                w.flush()?;
            }
        }
    }
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRow {
    pub model: SamplingModel,
    #[serde(flatten)]
    pub stat: EigenStat,
}

/// Mean extreme Gram eigenvalues per `M` for each configured sampling model.
///
/// Random models use a single seeded draw of the sampling set.
pub fn run_eigen_experiment(cfg: &ExperimentConfig, sink: Option<&mut dyn Write>) -> Result<Vec<EigenRow>> {
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let ms = cfg.sparsities();
    let (lo, hi) = (*ms.iter().min().unwrap(), *ms.iter().max().unwrap());
    let mut rows = Vec::new();
    for &model in &cfg.models {
        let x = cfg.points(model, seed::substream(cfg.seed, &[model.id(), 0, 0, 1]))?;
        let a = build_matrix(&x, &lattice, true)?;
        let stats = eigen_statistics(&a, lo..=hi, cfg.samples, seed::substream(cfg.seed, &[model.id(), 2]))?;
        rows.extend(
            stats
                .into_iter()
                .filter(|s| ms.contains(&s.m))
                .map(|stat| EigenRow { model, stat }),
        );
    }
    if let Some(out) = sink {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EIGEN_CSV_HEADER)?;
        for r in &rows {
            w.write_record([
                r.model.name().to_string(),
                r.stat.m.to_string(),
                r.stat.samples.to_string(),
                format!("{:.9}", r.stat.mean_lambda_min),
                format!("{:.9}", r.stat.mean_lambda_max),
            ])?;
        }
        w.flush()?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(models: Vec<SamplingModel>) -> ExperimentConfig {
        ExperimentConfig {
            q: 2,
            d: 2,
            n: 11,
            m_min: 1,
            m_max: 4,
            m_values: None,
            trials: 20,
            decoder: DecoderChoice::Both,
            models,
            lattice_m: Some(7),
            seed: 42,
            success_tolerance: 1e-4,
            omp_tolerance: 1e-9,
            bp: None,
            samples: 100,
            timing: false,
            output: None,
        }
    }

    #[test]
    fn full_support_is_whole_lattice() {
        let l = FrequencyLattice::uniform(1, 2).unwrap();
        let f = random_sparse_signal(&l, 9, 1).unwrap();
        assert_eq!(f.support().columns(&l).unwrap(), (0..9).collect::<Vec<_>>());
        assert!(random_sparse_signal(&l, 10, 1).is_err());
    }

    #[test]
    fn support_inclusion_frequency_is_binomial() {
        let l = FrequencyLattice::uniform(2, 2).unwrap();
        let (m, draws) = (5usize, 100_000u64);
        let target = l.index_at(7);
        let hits = (0..draws)
            .filter(|&s| random_sparse_signal(&l, m, s).unwrap().support().indices().contains(&target))
            .count() as f64;
        let p = m as f64 / l.len() as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - draws as f64 * p).abs() <= 3.0 * sigma, "hits {hits}");
    }

    #[test]
    fn coefficient_variance_is_one() {
        let l = FrequencyLattice::uniform(2, 1).unwrap();
        let vals: Vec<f64> = (0..100_000u64)
            .map(|s| random_sparse_signal(&l, 1, s).unwrap().coefficients()[0].re)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn config_validation_names_the_field() {
        let mut c = small(vec![SamplingModel::Deterministic]);
        c.n = 12;
        assert!(matches!(c.validate(), Err(Error::Validation { field: "n", .. })));
        let mut c = small(vec![SamplingModel::Lattice]);
        c.lattice_m = None;
        assert!(matches!(c.validate(), Err(Error::Validation { field: "lattice_m", .. })));
        let err = ExperimentConfig::from_toml("q = 2\nd = 2\nn = 11\nm_min = 1\nm_max = 2\nseed = 1\nbogus = 3\n");
        assert!(matches!(err, Err(Error::Validation { field: "config", .. })));
    }

    #[test]
    fn toml_defaults() {
        let c = ExperimentConfig::from_toml(
            "q = 2\nd = 5\nn = 83\nm_min = 1\nm_max = 40\nseed = 7\ndecoder = \"both\"\nmodels = [\"deterministic\", \"continuous\"]\n",
        )
        .unwrap();
        assert_eq!(c.trials, 100);
        assert_eq!(c.samples, 2000);
        assert_eq!(c.sparsities().len(), 40);
        assert_eq!(c.decoder, DecoderChoice::Both);
    }

    #[test]
    fn success_experiment_is_reproducible() {
        let cfg = small(vec![SamplingModel::Deterministic, SamplingModel::Continuous, SamplingModel::Lattice]);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let curve = run_success_experiment(&cfg, Some(&mut a)).unwrap();
        run_success_experiment(&cfg, Some(&mut b)).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("model,decoder,M,trials,successes,rate,mean_runtime_ms\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 4 * 2);
        // (2M−1)μ < 1 holds for M ≤ 2 on this matrix.
        for (m, rate) in curve.series(SamplingModel::Deterministic, Decoder::Omp) {
            if m <= 2 {
                assert_eq!(rate, 1.0);
            }
        }
    }

    #[test]
    fn oversized_sparsity_does_not_crash() {
        let mut cfg = small(vec![SamplingModel::Deterministic, SamplingModel::Continuous]);
        cfg.m_values = Some(vec![12, 20]);
        cfg.decoder = DecoderChoice::Omp;
        cfg.trials = 5;
        let curve = run_success_experiment(&cfg, None).unwrap();
        assert!(curve.cells.iter().all(|c| c.rate == 0.0));
    }

    #[test]
    fn eigen_experiment_rows() {
        let cfg = small(vec![SamplingModel::Deterministic, SamplingModel::Continuous]);
        let mut out = Vec::new();
        let rows = run_eigen_experiment(&cfg, Some(&mut out)).unwrap();
        assert_eq!(rows.len(), 8);
        for r in rows.iter().filter(|r| r.stat.m == 1) {
            assert!((r.stat.mean_lambda_min - 1.0).abs() < 1e-12);
            assert!((r.stat.mean_lambda_max - 1.0).abs() < 1e-12);
        }
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("model,M,samples,mean_lambda_min,mean_lambda_max\ndeterministic,1,100,"));
    }
}
