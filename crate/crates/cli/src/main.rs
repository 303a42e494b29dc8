use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sparsetrig::decoders::{basis_pursuit, omp, relative_error, BpConfig, OmpConfig};
use sparsetrig::experiments::{
    run_eigen_experiment, run_success_experiment, ExperimentConfig, SamplingModel,
};
use sparsetrig::frames::{coherence, rip_bruteforce, strip_estimate, strip_theorem_order, weil_sum_check};
use sparsetrig::index::FrequencyLattice;
use sparsetrig::sampling::{
    build_matrix, deterministic_points, mixed_radix_lattice, random_points_continuous,
    random_points_lattice, SamplingMatrix, SamplingSet, SparsePolynomial,
};
use sparsetrig::{Complex64, Error};

#[derive(Parser)]
#[command(name = "sparsetrig", version, about = "Deterministic sampling and sparse recovery of trigonometric polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a sampling set as JSON.
    Points(PointArgs),
    /// Emit a sampling matrix (or its coherence report) as JSON.
    Matrix {
        #[command(flatten)]
        spec: MatrixArgs,
        /// Scale columns to unit norm.
        #[arg(long)]
        normalized: bool,
        /// Print the coherence report instead of the entries.
        #[arg(long)]
        report: bool,
    },
    /// Exact pair-scan coherence of the normalized matrix.
    Coherence(MatrixArgs),
    /// Check the Weil bound for one polynomial, or exhaustively.
    WeilCheck(WeilArgs),
    /// Brute-force RIP constant up to order k.
    Rip {
        #[command(flatten)]
        spec: MatrixArgs,
        #[arg(long)]
        k: usize,
    },
    /// Monte-Carlo StRIP probability.
    Strip {
        #[command(flatten)]
        spec: MatrixArgs,
        /// Sparsity order; defaults to the guaranteed StRIP order for delta.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Decode one instance read from a JSON file.
    Recover(RecoverArgs),
    /// Seeded Monte-Carlo experiments writing CSV.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Deterministic,
    Continuous,
    Lattice,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value = "deterministic")]
    model: Model,
    /// Modulus for the lattice model.
    #[arg(long)]
    m: Option<u64>,
    /// Required for random models.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    points: PointArgs,
    /// Degree of the cube [-q, q]^d.
    #[arg(long, required_unless_present = "primes")]
    q: Option<u32>,
    /// Descending primes p_1 >= ... >= p_d for a mixed-radix lattice.
    #[arg(long, value_delimiter = ',', conflicts_with = "q")]
    primes: Option<Vec<u64>>,
}

#[derive(Args)]
struct WeilArgs {
    #[arg(long)]
    p: u64,
    /// Coefficients m_1..m_d of m_1 x + ... + m_d x^d.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "exhaustive")]
    coeffs: Option<Vec<i64>>,
    /// Check every nonzero coefficient vector of length --degree.
    #[arg(long, requires = "degree")]
    exhaustive: bool,
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Omp,
    Bp,
}

#[derive(Args)]
struct RecoverArgs {
    /// JSON with `lattice`, `sampling_set`, `samples` and optional `truth`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "omp")]
    decoder: DecoderArg,
    #[arg(long)]
    max_sparsity: Option<usize>,
    /// Absolute residual tolerance for OMP.
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Success rate per sparsity, sampling model and decoder.
    Success(ExperimentArgs),
    /// Mean extreme Gram eigenvalues per sparsity.
    Eigen(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file with the experiment fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m_min: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderFlag>,
    #[arg(long, value_enum, value_delimiter = ',')]
    models: Option<Vec<Model>>,
    #[arg(long)]
    lattice_m: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderFlag {
    Omp,
    Bp,
    Both,
}

#[derive(Deserialize, Serialize)]
struct RecoverInstance {
    lattice: FrequencyLattice,
    sampling_set: SamplingSet,
    samples: Vec<Complex64>,
    #[serde(default)]
    truth: Option<SparsePolynomial>,
}

#[derive(Serialize)]
struct RecoverOutput<'a> {
    decoder: &'static str,
    result: &'a sparsetrig::decoders::DecodeResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_error: Option<f64>,
}

fn missing(field: &'static str, why: &str) -> Error {
    Error::Validation {
        field,
        reason: why.to_string(),
    }
}

fn sampling_set(p: &PointArgs) -> Result<SamplingSet, Error> {
    match p.model {
        Model::Deterministic => deterministic_points(p.n, p.d),
        Model::Continuous => {
            let seed = p.seed.ok_or_else(|| missing("seed", "required for random models"))?;
            random_points_continuous(p.n as usize, p.d, seed)
        }
        Model::Lattice => {
            let seed = p.seed.ok_or_else(|| missing("seed", "required for random models"))?;
            let m = p.m.ok_or_else(|| missing("m", "required for the lattice model"))?;
            random_points_lattice(p.n as usize, p.d, m, seed)
        }
    }
}

fn matrix(spec: &MatrixArgs, normalized: bool) -> Result<SamplingMatrix, Error> {
    let lattice = match (&spec.primes, spec.q) {
        (Some(primes), _) => {
            if primes.len() != spec.points.d {
                return Err(missing("primes", "need exactly d primes"));
            }
            mixed_radix_lattice(primes)?
        }
        (None, Some(q)) => FrequencyLattice::uniform(q, spec.points.d)?,
        (None, None) => return Err(missing("q", "either --q or --primes is required")),
    };
    build_matrix(&sampling_set(&spec.points)?, &lattice, normalized)
}

fn emit_json<T: Serialize>(v: &T) -> Result<(), Error> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut table = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            text.parse::<toml::Table>().map_err(|e| Error::Validation {
                field: "config",
                reason: e.message().to_string(),
            })?
        }
        None => toml::Table::new(),
    };
    let mut set = |key: &str, v: Option<toml::Value>| {
        if let Some(v) = v {
            table.insert(key.to_string(), v);
        }
    };
    let int = |v: u64| toml::Value::Integer(v as i64);
    set("q", a.q.map(|v| int(v.into())));
    set("d", a.d.map(|v| int(v as u64)));
    set("n", a.n.map(int));
    set("m_min", a.m_min.map(|v| int(v as u64)));
    set("m_max", a.m_max.map(|v| int(v as u64)));
    set("trials", a.trials.map(|v| int(v as u64)));
    set("samples", a.samples.map(|v| int(v as u64)));
    set("lattice_m", a.lattice_m.map(int));
    set("seed", a.seed.map(int));
    set(
        "decoder",
        a.decoder.map(|d| {
            let name = match d {
                DecoderFlag::Omp => "omp",
                DecoderFlag::Bp => "bp",
                DecoderFlag::Both => "both",
            };
            toml::Value::String(name.into())
        }),
    );
    set(
        "models",
        a.models.as_ref().map(|ms| {
            toml::Value::Array(
                ms.iter()
                    .map(|&m| toml::Value::String(model_name(m).into()))
                    .collect(),
            )
        }),
    );
    if !table.contains_key("seed") {
        return Err(missing("seed", "experiments require an explicit seed"));
    }
    ExperimentConfig::from_toml(&table.to_string())
}

fn model_name(m: Model) -> &'static str {
    let model = match m {
        Model::Deterministic => SamplingModel::Deterministic,
        Model::Continuous => SamplingModel::Continuous,
        Model::Lattice => SamplingModel::Lattice,
    };
    model.name()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Points(p) => emit_json(&sampling_set(&p)?),
        Command::Matrix {
            spec,
            normalized,
            report,
        } => {
            if report {
                emit_json(&coherence(&matrix(&spec, true)?)?)
            } else {
                emit_json(&matrix(&spec, normalized)?)
            }
        }
        Command::Coherence(spec) => emit_json(&coherence(&matrix(&spec, true)?)?),
        Command::WeilCheck(w) => {
            if w.exhaustive {
                let d = w.degree.unwrap_or(0);
                if d == 0 {
                    return Err(missing("degree", "must be at least 1"));
                }
                #[derive(Serialize)]
                struct Summary {
                    p: u64,
                    degree: usize,
                    checked: usize,
                    violations: usize,
                    max_ratio: f64,
                }
                let p = w.p;
                let total = (p as usize)
                    .checked_pow(d as u32)
                    .ok_or_else(|| missing("degree", "enumeration too large"))?;
                let (mut violations, mut max_ratio) = (0, 0.0f64);
                for code in 1..total {
                    let mut c = code;
                    let coeffs: Vec<i64> = (0..d)
                        .map(|_| {
                            let v = c % p as usize;
                            c /= p as usize;
                            v as i64
                        })
                        .collect();
                    let r = weil_sum_check(p, &coeffs)?;
                    if !r.holds {
                        violations += 1;
                    }
                    if r.bound > 0.0 {
                        max_ratio = max_ratio.max(r.magnitude / r.bound);
                    }
                }
                emit_json(&Summary {
                    p,
                    degree: d,
                    checked: total - 1,
                    violations,
                    max_ratio,
                })
            } else {
                let coeffs = w.coeffs.unwrap_or_default();
                emit_json(&weil_sum_check(w.p, &coeffs)?)
            }
        }
        Command::Rip { spec, k } => emit_json(&rip_bruteforce(&matrix(&spec, true)?, k)?),
        Command::Strip {
            spec,
            k,
            delta,
            trials,
        } => {
            let seed = spec
                .points
                .seed
                .ok_or_else(|| missing("seed", "required for Monte-Carlo estimates"))?;
            let a = matrix(&spec, true)?;
            let k = k.unwrap_or_else(|| strip_theorem_order(delta, a.rows(), a.cols()));
            emit_json(&strip_estimate(&a, k, delta, trials, seed)?)
        }
        Command::Recover(r) => {
            let text = std::fs::read_to_string(&r.instance)?;
            let inst: RecoverInstance = serde_json::from_str(&text)?;
            let a = build_matrix(&inst.sampling_set, &inst.lattice, false)?;
            let (name, result) = match r.decoder {
                DecoderArg::Omp => (
                    "omp",
                    omp(
                        &a,
                        &inst.samples,
                        &OmpConfig {
                            max_sparsity: r.max_sparsity,
                            tolerance: r.tolerance,
                        },
                    )?,
                ),
                DecoderArg::Bp => ("bp", basis_pursuit(&a, &inst.samples, &BpConfig::default())?),
            };
            let relative_error = inst
                .truth
                .as_ref()
                .map(|t| relative_error(t, &result))
                .transpose()?;
            emit_json(&RecoverOutput {
                decoder: name,
                result: &result,
                relative_error,
            })
        }
        Command::Experiment(e) => {
            let (args, eigen) = match &e {
                ExperimentCommand::Success(a) => (a, false),
                ExperimentCommand::Eigen(a) => (a, true),
            };
            let mut cfg = experiment_config(args)?;
            if let Some(out) = &args.out {
                cfg.output = Some(out.clone());
            }
            let mut sink: Box<dyn Write> = match &cfg.output {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(io::stdout().lock()),
            };
            if eigen {
                run_eigen_experiment(&cfg, Some(&mut *sink))?;
            } else {
                let curve = run_success_experiment(&cfg, Some(&mut *sink))?;
                let degenerate: usize = curve.cells.iter().map(|c| c.degenerate).sum();
                if degenerate > 0 {
                    eprintln!("warning: {degenerate} decodes hit numerical degeneracy and were counted as failures");
                }
            }
            sink.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
