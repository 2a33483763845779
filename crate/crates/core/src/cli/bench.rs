use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use super::config::{DataSource, ExperimentConfig, OmegaChoice, SolverKind};
use super::report::{MetricsRecord, MetricsWriter, TracePoint, TraceWriter};
use crate::data::{gen_synthetic, ingest_ratings, sample_one_sided, BinaryMatrix};
use crate::loss::{choose_omega, masked_mse, recovery_error};
use crate::matrix::FactoredMatrix;
use crate::solver::{fit_accel_with_probe, fit_basic, SolverParams};
use crate::Result;

/// SplitMix64 finalizer, used to derive independent seeds from a tuple.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, &p| mix(acc ^ mix(p)))
}

/// Seed of cell (δ index, repetition). Cells never depend on execution order.
pub fn cell_seed(master: u64, delta_index: usize, rep: usize) -> u64 {
    hash_seed(&[master, delta_index as u64, rep as u64])
}

const TRUTH_TAG: u64 = 0x7275_7468;

/// Ground-truth seed for a synthetic matrix of side `m` in repetition `rep`,
/// shared by every δ of that repetition.
pub fn truth_seed(master: u64, m: usize, rep: usize) -> u64 {
    hash_seed(&[master, TRUTH_TAG, m as u64, rep as u64])
}

#[derive(Clone, Debug)]
struct Cell {
    size_index: usize,
    delta_index: usize,
    rep: usize,
}

/// Everything a bench run produced, sorted by (size, δ, rep).
#[derive(Clone, Debug, Default)]
pub struct BenchOutcome {
    pub records: Vec<MetricsRecord>,
    pub traces: Vec<Vec<TracePoint>>,
}

impl BenchOutcome {
    /// Mean MSE per (m, δ), in grid order.
    pub fn mean_mse(&self) -> Vec<(usize, f64, f64)> {
        let mut out: Vec<(usize, f64, f64, usize)> = Vec::new();
        for r in &self.records {
            match out.iter_mut().find(|(m, d, _, _)| *m == r.m && *d == r.delta) {
                Some(e) => {
                    e.2 += r.mse;
                    e.3 += 1;
                }
                None => out.push((r.m, r.delta, r.mse, 1)),
            }
        }
        out.into_iter().map(|(m, d, s, c)| (m, d, s / c as f64)).collect()
    }
}

enum Truth {
    Synthetic { sizes: Vec<usize>, k: usize, q: f64 },
    Fixed(BinaryMatrix),
}

impl Truth {
    fn count(&self) -> usize {
        match self {
            Truth::Synthetic { sizes, .. } => sizes.len(),
            Truth::Fixed(_) => 1,
        }
    }

    fn get(&self, size_index: usize, rep: usize, master: u64) -> Result<std::borrow::Cow<'_, BinaryMatrix>> {
        match self {
            Truth::Synthetic { sizes, k, q } => {
                let m = sizes[size_index];
                Ok(std::borrow::Cow::Owned(gen_synthetic(m, *k, *q, truth_seed(master, m, rep))?))
            }
            Truth::Fixed(b) => Ok(std::borrow::Cow::Borrowed(b)),
        }
    }
}

fn run_cell(cfg: &ExperimentConfig, truth: &BinaryMatrix, cell: &Cell) -> Result<(MetricsRecord, Vec<TracePoint>)> {
    let delta = cfg.deltas[cell.delta_index];
    let seed = cell_seed(cfg.seed, cell.delta_index, cell.rep);
    let split = sample_one_sided(truth, delta, seed)?;
    let a = split.observation_matrix();
    let omega = match cfg.omega {
        OmegaChoice::Auto => choose_omega(delta)?,
        OmegaChoice::Fixed(w) => w,
    };
    let (m, n) = truth.shape();
    let rho = cfg.solver.rho_for(omega);
    let lambda = cfg.lambda.resolve(m, n, rho);
    let params = SolverParams {
        lambda_final: lambda,
        lambda_init: Some(lambda * cfg.lambda0_factor),
        seed: mix(seed),
        ..cfg.solver.clone()
    };
    let heldout = &split.heldout;
    let result = match cfg.solver_kind {
        SolverKind::Accel if cfg.write_trace => {
            let mut probe = |x: &FactoredMatrix| masked_mse(x, truth, heldout).ok();
            fit_accel_with_probe(&a, omega, &cfg.regularizer, &params, &mut probe)?
        }
        SolverKind::Accel => fit_accel_with_probe(&a, omega, &cfg.regularizer, &params, &mut |_: &FactoredMatrix| None)?,
        SolverKind::Basic => fit_basic(&a, omega, &cfg.regularizer, &params)?,
    };
    for note in &result.notes {
        log::info!("m={m} delta={delta} rep={}: {note}", cell.rep);
    }
    let record = MetricsRecord {
        m,
        n,
        delta,
        rep: cell.rep,
        regularizer: cfg.regularizer.to_string(),
        mse: masked_mse(&result.model, truth, heldout)?,
        recovery_error: recovery_error(&result.model, truth)?,
        seconds: result.elapsed_seconds(),
        final_rank: result.model.rank(),
        iterations: result.iterations(),
        final_f: result.final_objective(),
    };
    let trace = result
        .trace
        .iter()
        .filter_map(|t| {
            t.probe.map(|mse| TracePoint {
                m,
                n,
                delta,
                rep: cell.rep,
                iter: t.iter,
                seconds: t.elapsed_seconds,
                mse,
                objective: t.objective,
                rank: t.rank,
            })
        })
        .collect();
    Ok((record, trace))
}

/// Runs every (size, δ, repetition) cell, appending each record to the CSV
/// and JSONL outputs as soon as it is available.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let truth = match &cfg.source {
        DataSource::Synthetic { sizes, k, q } => Truth::Synthetic { sizes: sizes.clone(), k: *k, q: *q },
        DataSource::Ratings { path, threshold } => {
            let data = ingest_ratings(path, *threshold)?;
            log::info!(
                "{}: {} users x {} items, {} ratings, {} positives at threshold {}",
                path.display(),
                data.users.len(),
                data.items.len(),
                data.ratings,
                data.matrix.nnz(),
                data.threshold
            );
            Truth::Fixed(data.matrix)
        }
    };

    let mut cells = Vec::new();
    for size_index in 0..truth.count() {
        for rep in 0..cfg.repetitions {
            for delta_index in 0..cfg.deltas.len() {
                cells.push(Cell { size_index, delta_index, rep });
            }
        }
    }

    if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut writer = MetricsWriter::create(&cfg.out)?;
    let mut trace_writer = if cfg.write_trace && cfg.solver_kind == SolverKind::Accel {
        Some(TraceWriter::create(cfg.trace_path())?)
    } else {
        None
    };

    let mut done: Vec<(usize, MetricsRecord, Vec<TracePoint>)> = Vec::with_capacity(cells.len());
    let mut emit = |idx: usize, record: MetricsRecord, trace: Vec<TracePoint>| -> Result<()> {
        writer.append(&record)?;
        if let Some(t) = trace_writer.as_mut() {
            t.append(&trace)?;
        }
        log::info!(
            "m={} delta={} rep={} mse={:.4} rank={} iters={} {:.2}s",
            record.m,
            record.delta,
            record.rep,
            record.mse,
            record.final_rank,
            record.iterations,
            record.seconds
        );
        done.push((idx, record, trace));
        Ok(())
    };

    if cfg.workers == 1 {
        // Cells of one repetition share their ground truth.
        let mut cached: Option<((usize, usize), BinaryMatrix)> = None;
        for (idx, cell) in cells.iter().enumerate() {
            let key = (cell.size_index, cell.rep);
            if cached.as_ref().map(|(k, _)| *k) != Some(key) {
                cached = Some((key, truth.get(cell.size_index, cell.rep, cfg.seed)?.into_owned()));
            }
            let (record, trace) = run_cell(cfg, &cached.as_ref().unwrap().1, cell)?;
            emit(idx, record, trace)?;
        }
    } else {
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel();
        std::thread::scope(|scope| -> Result<()> {
            for _ in 0..cfg.workers.min(cells.len()) {
                let tx = tx.clone();
                let (cells, next, truth) = (&cells, &next, &truth);
                scope.spawn(move || loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    let Some(cell) = cells.get(idx) else { break };
                    let out = truth
                        .get(cell.size_index, cell.rep, cfg.seed)
                        .and_then(|t| run_cell(cfg, &t, cell));
                    let failed = out.is_err();
                    if tx.send((idx, out)).is_err() || failed {
                        break;
                    }
                });
            }
            drop(tx);
            for (idx, out) in rx {
                let (record, trace) = out?;
                emit(idx, record, trace)?;
            }
            Ok(())
        })?;
    }

    done.sort_by_key(|(idx, _, _)| *idx);
    let (records, traces) = done.into_iter().map(|(_, r, t)| (r, t)).unzip();
    Ok(BenchOutcome { records, traces })
}
