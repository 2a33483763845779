//! Command-line driver.

mod bench;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use bench::{cell_seed, run_bench, truth_seed, BenchOutcome};
pub use config::{
    parse_key_values, DataSource, ExperimentConfig, LambdaChoice, OmegaChoice, SolverKind, AUTO_LAMBDA_SCALE,
};
pub use report::{
    emit_report, read_report, read_report_jsonl, sidecar_path, MetricsRecord, MetricsWriter, TracePoint, TraceWriter,
    METRICS_HEADER,
};

use crate::data::{
    gen_synthetic, read_binary_matrix, read_index_set, sample_one_sided, write_binary_matrix, write_index_set,
    BinaryMatrix, ObservationSet, DEFAULT_CUT,
};
use crate::loss::{choose_omega, evaluate};
use crate::matrix::{DenseMatrix, FactoredMatrix};
use crate::regularizer::RegularizerSpec;
use crate::solver::{fit_accel, fit_basic, ContinuationRule, FitResult, SolverParams};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "pumc", version, about = "Positive-unlabeled binary matrix completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic binary matrix `1{M1·M2 ≥ q}`.
    Synth {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model to a binary matrix.
    Fit(FitArgs),
    /// Score a saved model against a ground-truth matrix.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        heldout: PathBuf,
        /// Observed index set; defaults to truth positives outside the held-out set.
        #[arg(long)]
        observed: Option<PathBuf>,
        /// `auto` or a weight in (0, 1).
        #[arg(long, default_value = "auto")]
        omega: String,
        #[arg(long, default_value_t = DEFAULT_CUT)]
        cut: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark grid described by a key = value config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Binary matrix file.
    #[arg(long)]
    input: PathBuf,
    /// With 1 the input is the observation matrix; below 1 the input is
    /// treated as ground truth and a fraction `delta` of its ones is observed.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// `auto` or a weight in (0, 1).
    #[arg(long, default_value = "auto")]
    omega: String,
    #[arg(long, default_value = "tnn:5")]
    reg: String,
    /// `auto` or a value.
    #[arg(long, default_value = "auto")]
    lambda: String,
    /// Starting λ of the continuation; defaults to 10λ.
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    upsilon: f64,
    #[arg(long, default_value = "recursive")]
    continuation: String,
    /// `auto` or a value above the Lipschitz constant.
    #[arg(long, default_value = "auto")]
    rho: String,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 3)]
    power_iters: usize,
    #[arg(long, default_value = "accel")]
    solver: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// A fitted model on disk: `U diag(s) Vᵀ` with row-major factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub rows: usize,
    pub cols: usize,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(x: &FactoredMatrix) -> Self {
        Self {
            rows: x.rows(),
            cols: x.cols(),
            s: x.singular_values().to_vec(),
            u: x.u().to_row_major(),
            v: x.v().to_row_major(),
        }
    }

    pub fn into_model(self) -> Result<FactoredMatrix> {
        let k = self.s.len();
        if k == 0 {
            return Ok(FactoredMatrix::zeros(self.rows, self.cols));
        }
        let u = DenseMatrix::from_row_major(self.rows, k, &self.u)?;
        let v = DenseMatrix::from_row_major(self.cols, k, &self.v)?;
        FactoredMatrix::new(u, self.s, v)
    }
}

pub fn save_model(path: impl AsRef<Path>, x: &FactoredMatrix) -> Result<()> {
    let text = serde_json::to_string(&ModelFile::from_model(x)).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FactoredMatrix> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_model()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FitSummary {
    rows: usize,
    cols: usize,
    observed: usize,
    omega: f64,
    lambda: f64,
    rho: f64,
    regularizer: String,
    iterations: usize,
    converged: bool,
    final_rank: usize,
    final_objective: f64,
    seconds: f64,
    notes: Vec<String>,
}

fn parse_omega(s: &str, delta: f64) -> Result<f64> {
    match s.parse::<OmegaChoice>()? {
        OmegaChoice::Auto => choose_omega(delta),
        OmegaChoice::Fixed(w) => Ok(w),
    }
}

fn write_trace(path: &Path, fit: &FitResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_record(["iter", "objective", "lambda", "rank", "step_norm_sq", "seconds"])
        .map_err(|e| Error::Parse(e.to_string()))?;
    for t in &fit.trace {
        w.write_record([
            t.iter.to_string(),
            t.objective.to_string(),
            t.lambda.to_string(),
            t.rank.to_string(),
            t.step_norm_sq.to_string(),
            t.elapsed_seconds.to_string(),
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn run_fit(args: &FitArgs) -> Result<()> {
    if !(args.delta > 0.0 && args.delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {}", args.delta)));
    }
    let input = read_binary_matrix(&args.input)?;
    let (observed, heldout) = if args.delta < 1.0 {
        let split = sample_one_sided(&input, args.delta, args.seed)?;
        (split.observed, split.heldout)
    } else {
        let set = input.positive_set();
        let heldout = set.complement();
        (set, heldout)
    };
    let a = BinaryMatrix::new(input.rows(), input.cols(), observed.listed().to_vec())?;
    // Under full observation the fraction of ones seen is unknown; ω = 1/2
    // weighs every entry equally.
    let omega = parse_omega(&args.omega, args.delta)?;
    let spec: RegularizerSpec = args.reg.parse()?;
    let continuation = match args.continuation.as_str() {
        "recursive" => ContinuationRule::Recursive,
        "geometric" => ContinuationRule::Geometric,
        other => return Err(Error::InvalidParameter(format!("continuation must be recursive or geometric, got `{other}`"))),
    };
    let mut params = SolverParams {
        upsilon: args.upsilon,
        continuation,
        rho: match args.rho.as_str() {
            "auto" => None,
            v => Some(v.parse().map_err(|_| Error::Parse(format!("rho: expected a number, got `{v}`")))?),
        },
        max_iter: args.max_iter,
        tol: args.tol,
        power_iters: args.power_iters,
        seed: args.seed,
        ..SolverParams::default()
    };
    let rho = params.rho_for(omega);
    params.lambda_final = match args.lambda.as_str() {
        "auto" => LambdaChoice::Auto { scale: AUTO_LAMBDA_SCALE }.resolve(a.rows(), a.cols(), rho),
        v => v.parse().map_err(|_| Error::Parse(format!("lambda: expected a number, got `{v}`")))?,
    };
    params.lambda_init = args.lambda0;

    let fit = match args.solver.as_str() {
        "accel" => fit_accel(&a, omega, &spec, &params)?,
        "basic" => fit_basic(&a, omega, &spec, &params)?,
        other => return Err(Error::InvalidParameter(format!("solver must be accel or basic, got `{other}`"))),
    };

    std::fs::create_dir_all(&args.out)?;
    save_model(args.out.join("model.json"), &fit.model)?;
    write_trace(&args.out.join("trace.csv"), &fit)?;
    write_index_set(args.out.join("observed.txt"), &observed)?;
    write_index_set(args.out.join("heldout.txt"), &heldout)?;
    let summary = FitSummary {
        rows: a.rows(),
        cols: a.cols(),
        observed: a.nnz(),
        omega,
        lambda: params.lambda_final,
        rho: fit.rho,
        regularizer: spec.to_string(),
        iterations: fit.iterations(),
        converged: fit.converged,
        final_rank: fit.model.rank(),
        final_objective: fit.final_objective(),
        seconds: fit.elapsed_seconds(),
        notes: fit.notes.clone(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(args.out.join("fit.json"), text)?;
    println!(
        "{} iterations, rank {}, F = {:.6}, {:.3}s",
        summary.iterations, summary.final_rank, summary.final_objective, summary.seconds
    );
    Ok(())
}

fn run_eval(
    model: &Path,
    truth: &Path,
    heldout: &Path,
    observed: Option<&Path>,
    omega: &str,
    cut: f64,
    out: Option<&Path>,
) -> Result<()> {
    let x = load_model(model)?;
    let truth = read_binary_matrix(truth)?;
    let heldout = read_index_set(heldout)?;
    let observed: ObservationSet = match observed {
        Some(p) => read_index_set(p)?,
        None => ObservationSet::new(
            truth.rows(),
            truth.cols(),
            truth.positives().iter().copied().filter(|&(i, j)| !heldout.contains(i, j)).collect(),
        )?,
    };
    let a = BinaryMatrix::new(truth.rows(), truth.cols(), observed.iter().collect())?;
    let omega = match omega.parse::<OmegaChoice>()? {
        OmegaChoice::Auto if truth.nnz() > 0 => (a.nnz() as f64 / truth.nnz() as f64) / 2.0,
        OmegaChoice::Auto => return Err(Error::NoObservations),
        OmegaChoice::Fixed(w) => w,
    };
    let report = evaluate(&x, &truth, &a, &heldout, omega, cut, 0.0)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, &text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run_bench_command(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_file(config)?;
    let outcome = run_bench(&cfg)?;
    println!("{:>6} {:>6} {:>10}", "m", "delta", "mean_mse");
    for (m, delta, mse) in outcome.mean_mse() {
        println!("{m:>6} {delta:>6.2} {mse:>10.4}");
    }
    println!("{} records written to {}", outcome.records.len(), cfg.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { m, k, q, seed, out } => {
            let b = gen_synthetic(m, k, q, seed)?;
            write_binary_matrix(&out, &b)?;
            println!("{}x{} with {} ones written to {}", b.rows(), b.cols(), b.nnz(), out.display());
            Ok(())
        }
        Command::Fit(args) => run_fit(&args),
        Command::Eval { model, truth, heldout, observed, omega, cut, out } => {
            run_eval(&model, &truth, &heldout, observed.as_deref(), &omega, cut, out.as_deref())
        }
        Command::Bench { config } => run_bench_command(&config),
    }
}

/// Parses `args` (program name first) and runs the command. Exit code 0 on
/// success, 1 on a usage error, 2 when the command itself fails.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_file_round_trip() {
        let u = DenseMatrix::from_row_major(3, 1, &[0.6, 0.8, 0.0]).unwrap();
        let v = DenseMatrix::from_row_major(2, 1, &[1.0, 0.0]).unwrap();
        let x = FactoredMatrix::new(u, vec![2.0], v).unwrap();
        let back = ModelFile::from_model(&x).into_model().unwrap();
        assert!((back.entry(1, 0) - 1.6).abs() < 1e-15);
        let zero = ModelFile::from_model(&FactoredMatrix::zeros(3, 2)).into_model().unwrap();
        assert_eq!(zero.rank(), 0);
    }

    #[test]
    fn omega_argument() {
        assert_eq!(parse_omega("auto", 0.4).unwrap(), 0.2);
        assert_eq!(parse_omega("0.3", 1.0).unwrap(), 0.3);
        assert!(parse_omega("1.5", 1.0).is_err());
    }
}
