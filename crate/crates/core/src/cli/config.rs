use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::regularizer::RegularizerSpec;
use crate::solver::{ContinuationRule, SolverParams};
use crate::{Error, Result};

/// Where bench ground truth comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// Square synthetic matrices of each listed size.
    Synthetic { sizes: Vec<usize>, k: usize, q: f64 },
    /// A ratings file binarized at `threshold` (mean rating when absent).
    Ratings { path: PathBuf, threshold: Option<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaChoice {
    Auto,
    Fixed(f64),
}

impl FromStr for OmegaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(OmegaChoice::Auto);
        }
        let v = parse_f64("omega", s)?;
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!("ω must lie in (0, 1), got {v}")));
        }
        Ok(OmegaChoice::Fixed(v))
    }
}

/// λ either given directly or as `scale · ρ · √max(m, n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaChoice {
    Auto { scale: f64 },
    Fixed(f64),
}

/// Default `scale` of [`LambdaChoice::Auto`].
pub const AUTO_LAMBDA_SCALE: f64 = 0.5;

impl LambdaChoice {
    pub fn resolve(&self, rows: usize, cols: usize, rho: f64) -> f64 {
        match *self {
            LambdaChoice::Auto { scale } => scale * rho * (rows.max(cols) as f64).sqrt(),
            LambdaChoice::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Accel,
    Basic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub regularizer: RegularizerSpec,
    pub deltas: Vec<f64>,
    pub repetitions: usize,
    pub omega: OmegaChoice,
    pub lambda: LambdaChoice,
    /// λ₀ as a multiple of λ.
    pub lambda0_factor: f64,
    /// Everything in [`SolverParams`] except λ, λ₀ and the seed, which are
    /// set per cell.
    pub solver: SolverParams,
    pub solver_kind: SolverKind,
    pub seed: u64,
    pub workers: usize,
    /// Output CSV; the JSONL sidecar and trace file sit next to it.
    pub out: PathBuf,
    pub write_trace: bool,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::Parse(format!("{key}: expected a finite number, got `{v}`")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: expected a count, got `{v}`")))
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| f(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: expected true or false, got `{v}`"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(out)
}

const KNOWN_KEYS: &[&str] = &[
    "source", "m", "k", "q", "threshold", "reg", "deltas", "reps", "omega", "lambda",
    "lambda_scale", "lambda0_factor", "upsilon", "continuation", "rho", "max_iter", "tol",
    "power_iters", "solver", "seed", "workers", "out", "trace",
];

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if cfg.out.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.out = dir.join(&cfg.out);
            }
        }
        if let DataSource::Ratings { path: p, .. } = &mut cfg.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        if let Some(unknown) = kv.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown config key `{unknown}`")));
        }
        let get = |k: &str| kv.get(k).map(String::as_str);

        let source = match get("source").unwrap_or("synthetic") {
            "synthetic" => DataSource::Synthetic {
                sizes: parse_list("m", get("m").unwrap_or("500"), parse_usize)?,
                k: get("k").map_or(Ok(5), |v| parse_usize("k", v))?,
                q: get("q").map_or(Ok(0.5), |v| parse_f64("q", v))?,
            },
            other => match other.split_once(':') {
                Some(("ratings", p)) if !p.trim().is_empty() => DataSource::Ratings {
                    path: PathBuf::from(p.trim()),
                    threshold: get("threshold").map(|v| parse_f64("threshold", v)).transpose()?,
                },
                _ => return Err(Error::Parse(format!("source must be `synthetic` or `ratings:<path>`, got `{other}`"))),
            },
        };

        let defaults = SolverParams::default();
        let lambda = match get("lambda").unwrap_or("auto") {
            "auto" => LambdaChoice::Auto {
                scale: get("lambda_scale").map_or(Ok(AUTO_LAMBDA_SCALE), |v| parse_f64("lambda_scale", v))?,
            },
            v => LambdaChoice::Fixed(parse_f64("lambda", v)?),
        };
        let solver = SolverParams {
            upsilon: get("upsilon").map_or(Ok(defaults.upsilon), |v| parse_f64("upsilon", v))?,
            continuation: match get("continuation").unwrap_or("recursive") {
                "recursive" => ContinuationRule::Recursive,
                "geometric" => ContinuationRule::Geometric,
                other => return Err(Error::Parse(format!("continuation must be recursive or geometric, got `{other}`"))),
            },
            rho: match get("rho").unwrap_or("auto") {
                "auto" => None,
                v => Some(parse_f64("rho", v)?),
            },
            max_iter: get("max_iter").map_or(Ok(defaults.max_iter), |v| parse_usize("max_iter", v))?,
            tol: get("tol").map_or(Ok(defaults.tol), |v| parse_f64("tol", v))?,
            power_iters: get("power_iters").map_or(Ok(defaults.power_iters), |v| parse_usize("power_iters", v))?,
            ..defaults
        };
        let cfg = ExperimentConfig {
            source,
            regularizer: get("reg").unwrap_or("tnn:5").parse()?,
            deltas: parse_list("deltas", get("deltas").unwrap_or("0.3,0.4,0.5,0.6,0.7,0.8,0.9"), parse_f64)?,
            repetitions: get("reps").map_or(Ok(10), |v| parse_usize("reps", v))?,
            omega: get("omega").unwrap_or("auto").parse()?,
            lambda,
            lambda0_factor: get("lambda0_factor").map_or(Ok(10.0), |v| parse_f64("lambda0_factor", v))?,
            solver,
            solver_kind: match get("solver").unwrap_or("accel") {
                "accel" => SolverKind::Accel,
                "basic" => SolverKind::Basic,
                other => return Err(Error::Parse(format!("solver must be accel or basic, got `{other}`"))),
            },
            seed: get("seed").map_or(Ok(0), |v| {
                v.trim().parse().map_err(|_| Error::Parse(format!("seed: expected an integer, got `{v}`")))
            })?,
            workers: get("workers").map_or(Ok(1), |v| parse_usize("workers", v))?,
            out: PathBuf::from(get("out").unwrap_or("bench.csv")),
            write_trace: get("trace").map_or(Ok(true), |v| parse_bool("trace", v))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.deltas.is_empty() {
            return bad("delta grid is empty".into());
        }
        if let Some(d) = self.deltas.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
            return bad(format!("sampling rates must lie in (0, 1], got {d}"));
        }
        if self.repetitions == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.lambda0_factor.is_nan() || self.lambda0_factor < 1.0 {
            return bad(format!("lambda0_factor must be at least 1, got {}", self.lambda0_factor));
        }
        match self.lambda {
            LambdaChoice::Auto { scale } if scale.is_nan() || scale < 0.0 => return bad(format!("lambda_scale must be nonnegative, got {scale}")),
            LambdaChoice::Fixed(v) if v.is_nan() || v < 0.0 => return bad(format!("lambda must be nonnegative, got {v}")),
            _ => {}
        }
        if let DataSource::Synthetic { sizes, k, .. } = &self.source {
            if sizes.is_empty() {
                return bad("no matrix sizes given".into());
            }
            if let Some(m) = sizes.iter().find(|&&m| *k == 0 || *k >= m) {
                return bad(format!("latent rank k = {k} must satisfy 0 < k < m = {m}"));
            }
        }
        // Range checks that do not depend on ω or λ.
        SolverParams { lambda_final: 0.0, ..self.solver.clone() }.validate(0.5)?;
        Ok(())
    }

    pub fn trace_path(&self) -> PathBuf {
        let stem = self.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        self.out.with_file_name(format!("{stem}_trace.csv"))
    }
}
