//! Proximal solvers for the penalized PU objective.
//!
//! [`fit_basic`] is plain proximal gradient with a full SVD per step.
//! [`fit_accel`] extrapolates with momentum, decays λ by continuation, and
//! replaces the full SVD by a warm-started power method followed by an exact
//! SVD of the projected `k × n` matrix. Every dense `m × n` quantity in the
//! accelerated loop stays implicit as low-rank factors plus a sparse term on Ω.

mod params;

use std::time::{Duration, Instant};

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use params::{
    continuation_lambda, momentum_update, ContinuationRule, MomentumState, SolverParams, RHO_MARGIN,
};
pub use crate::regularizer::rank_select;

use crate::data::BinaryMatrix;
use crate::loss::objective;
use crate::matrix::{
    power_method, qr_orthonormalize, DenseMatrix, FactoredMatrix, LowRankPlusSparse, SparseCoo,
};
use crate::regularizer::{gsvt_full_factored, gsvt_projected_detailed, RegularizerSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tol,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// `F(X_{t+1})` at the target λ.
    pub objective: f64,
    /// λ_t used by this step.
    pub lambda: f64,
    pub rank: usize,
    /// `‖X_{t+1} − X_t‖_F²`.
    pub step_norm_sq: f64,
    /// Solver wall time since the start, excluding probes.
    pub elapsed_seconds: f64,
    /// Width of the projection subspace (accelerated solver only).
    pub subspace_width: Option<usize>,
    /// Value returned by the caller's probe, if any.
    pub probe: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: FactoredMatrix,
    pub trace: Vec<TraceRecord>,
    /// `F(X₁)` with `X₁ = 0`.
    pub initial_objective: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub rho: f64,
    /// Diagnostics: momentum restarts, clamped subspaces, short spectra.
    pub notes: Vec<String>,
}

impl FitResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(self.initial_objective, |r| r.objective)
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.elapsed_seconds)
    }
}

fn check_inputs(a: &BinaryMatrix, omega: f64, params: &SolverParams) -> Result<f64> {
    let rho = params.validate(omega)?;
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidParameter("empty observation matrix".into()));
    }
    Ok(rho)
}

fn step_is_small(step_norm_sq: f64, model: &FactoredMatrix, tol: f64) -> bool {
    step_norm_sq == 0.0 || step_norm_sq.sqrt() <= tol * model.frobenius_sq().sqrt()
}

/// Gradient step coefficients: the iterate is scaled by `1 − c₃`, and each
/// entry on Ω receives `c₃ + c₄·(Z_ij − 1)`.
fn step_coefficients(omega: f64, rho: f64) -> (f64, f64) {
    (2.0 * (1.0 - omega) / rho, 2.0 * (1.0 - 2.0 * omega) / rho)
}

/// Proximal gradient with a full SVD per iteration, starting from `X₁ = 0`
/// and keeping `λ_t ≡ λ`.
pub fn fit_basic(a: &BinaryMatrix, omega: f64, spec: &RegularizerSpec, params: &SolverParams) -> Result<FitResult> {
    let rho = check_inputs(a, omega, params)?;
    let (m, n) = a.shape();
    if m.max(n) > params.full_svd_cap {
        return Err(Error::TooLargeForFullSvd { rows: m, cols: n, cap: params.full_svd_cap });
    }
    let lambda = params.lambda_final;
    let eta = lambda / rho;
    let (c3, c4) = step_coefficients(omega, rho);

    let mut x = FactoredMatrix::zeros(m, n);
    let initial_objective = objective(&x, a, omega, lambda, spec)?;
    let mut trace = Vec::new();
    let start = Instant::now();

    for iter in 1..=params.max_iter {
        let mut z = x.to_dense().scale(1.0 - c3).into_faer();
        let on_omega = x.entries_at(a.positives().iter().copied());
        for (&(i, j), v) in a.positives().iter().zip(on_omega) {
            z[(i, j)] += c3 + c4 * (v - 1.0);
        }
        let next = gsvt_full_factored(&DenseMatrix::from_faer(z)?, spec, eta)?;
        let step_norm_sq = next.dist_sq(&x)?;
        let f = objective(&next, a, omega, lambda, spec)?;
        x = next;
        trace.push(TraceRecord {
            iter,
            objective: f,
            lambda,
            rank: x.rank(),
            step_norm_sq,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            subspace_width: None,
            probe: None,
        });
        if step_is_small(step_norm_sq, &x, params.tol) {
            return Ok(FitResult {
                model: x,
                trace,
                initial_objective,
                converged: true,
                stop_reason: StopReason::Tol,
                rho,
                notes: Vec::new(),
            });
        }
    }
    Ok(FitResult {
        model: x,
        trace,
        initial_objective,
        converged: false,
        stop_reason: StopReason::MaxIter,
        rho,
        notes: Vec::new(),
    })
}

/// Implicit gradient-step point
/// `Z_ig = c₁X_t + c₂X_{t−1} + c₃A + c₄P_Ω(Z_t − A)` around the extrapolation
/// `Z_t = (1 + c_t)X_t − c_t·X_{t−1}`.
pub fn extrapolated_operator(
    x_curr: &FactoredMatrix,
    x_prev: &FactoredMatrix,
    c_t: f64,
    a: &BinaryMatrix,
    omega: f64,
    rho: f64,
) -> Result<LowRankPlusSparse> {
    let (m, n) = a.shape();
    let (c3, c4) = step_coefficients(omega, rho);
    let c1 = (1.0 + c_t) * (1.0 - c3);
    let c2 = c_t * (c3 - 1.0);
    let cur = x_curr.entries_at(a.positives().iter().copied());
    let entries: Vec<(usize, usize, f64)> = if c_t == 0.0 {
        a.positives()
            .iter()
            .zip(cur)
            .map(|(&(i, j), xc)| (i, j, c3 + c4 * (xc - 1.0)))
            .collect()
    } else {
        let prev = x_prev.entries_at(a.positives().iter().copied());
        a.positives()
            .iter()
            .zip(cur.into_iter().zip(prev))
            .map(|(&(i, j), (xc, xp))| {
                let zt = (1.0 + c_t) * xc - c_t * xp;
                (i, j, c3 + c4 * (zt - 1.0))
            })
            .collect()
    };
    let mut op = LowRankPlusSparse::new(m, n).with_factored(x_curr, c1)?;
    if c_t != 0.0 {
        op = op.with_factored(x_prev, c2)?;
    }
    op.with_sparse(1.0, SparseCoo::from_sorted_unchecked(m, n, entries))
}

/// Start block for the power method: orthonormalized `[V_t, V_{t−1}]`,
/// truncated to at most `cap` columns.
pub fn warm_start_block(v_curr: &DenseMatrix, v_prev: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    let stacked = v_curr.hstack(v_prev)?;
    let basis = qr_orthonormalize(&stacked)?;
    Ok(basis.into_matrix().leading_columns(cap.max(1)))
}

fn gaussian_block(rows: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut m = Mat::<f64>::zeros(rows, 1);
    for i in 0..rows {
        m[(i, 0)] = StandardNormal.sample(rng);
    }
    DenseMatrix::from_faer(m).expect("normal draws are finite")
}

/// Accelerated solver. See [`fit_accel_with_probe`].
pub fn fit_accel(a: &BinaryMatrix, omega: f64, spec: &RegularizerSpec, params: &SolverParams) -> Result<FitResult> {
    fit_accel_with_probe(a, omega, spec, params, &mut |_: &FactoredMatrix| None)
}

/// Accelerated solver that hands every iterate to `probe`. The probe's
/// running time is excluded from the recorded wall time, and its return
/// value is stored in the trace.
pub fn fit_accel_with_probe(
    a: &BinaryMatrix,
    omega: f64,
    spec: &RegularizerSpec,
    params: &SolverParams,
    probe: &mut dyn FnMut(&FactoredMatrix) -> Option<f64>,
) -> Result<FitResult> {
    let rho = check_inputs(a, omega, params)?;
    let (m, n) = a.shape();
    let lambda = params.lambda_final;
    let mut x_curr = FactoredMatrix::zeros(m, n);
    let initial_objective = objective(&x_curr, a, omega, lambda, spec)?;
    if a.nnz() == 0 {
        return Ok(FitResult {
            model: x_curr,
            trace: Vec::new(),
            initial_objective,
            converged: true,
            stop_reason: StopReason::Tol,
            rho,
            notes: vec!["no observed entries: zero model".into()],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut v_prev = gaussian_block(n, &mut rng);
    let mut v_curr = gaussian_block(n, &mut rng);
    let mut x_prev = x_curr.clone();
    let mut momentum = MomentumState::default();
    let mut lambda_t = params.lambda_start();
    let lambda0 = lambda_t;
    let mut last_f = initial_objective;
    let mut increases = 0usize;
    let mut notes = Vec::new();
    let mut short_spectrum_steps = 0usize;

    let mut trace = Vec::new();
    let mut spent = Duration::ZERO;
    let mut clock = Instant::now();

    for iter in 1..=params.max_iter {
        let c_t = momentum.extrapolation();
        let op = extrapolated_operator(&x_curr, &x_prev, c_t, a, omega, rho)?;

        let cap = m.min(n).min(2 * x_curr.rank() + 5);
        let y = warm_start_block(&v_curr, &v_prev, cap)?;
        let w = power_method(&op, &y, params.power_iters)?;

        lambda_t = match params.continuation {
            ContinuationRule::Recursive => continuation_lambda(lambda_t, lambda, params.upsilon, iter),
            ContinuationRule::Geometric => continuation_lambda(lambda0, lambda, params.upsilon, iter),
        };
        let step = gsvt_projected_detailed(&op, &w, spec, lambda_t / rho)?;
        if step.spectrum_short {
            short_spectrum_steps += 1;
        }
        let next = step.model;
        let step_norm_sq = next.dist_sq(&x_curr)?;
        let f = objective(&next, a, omega, lambda, spec)?;

        x_prev = std::mem::replace(&mut x_curr, next);
        v_prev = std::mem::replace(&mut v_curr, step.right_vectors);
        momentum = momentum_update(momentum);

        if f > last_f {
            increases += 1;
            if increases >= params.restart_after {
                notes.push(format!("iteration {iter}: momentum restarted after {increases} increases of F"));
                momentum = MomentumState::default();
                increases = 0;
            }
        } else {
            increases = 0;
        }
        last_f = f;

        spent += clock.elapsed();
        let probed = probe(&x_curr);
        clock = Instant::now();

        trace.push(TraceRecord {
            iter,
            objective: f,
            lambda: lambda_t,
            rank: x_curr.rank(),
            step_norm_sq,
            elapsed_seconds: spent.as_secs_f64(),
            subspace_width: Some(w.width()),
            probe: probed,
        });

        let lambda_settled = lambda_t - lambda <= params.tol * lambda;
        if lambda_settled && step_is_small(step_norm_sq, &x_curr, params.tol) {
            if short_spectrum_steps > 0 {
                notes.push(short_spectrum_note(short_spectrum_steps));
            }
            return Ok(FitResult {
                model: x_curr,
                trace,
                initial_objective,
                converged: true,
                stop_reason: StopReason::Tol,
                rho,
                notes,
            });
        }
    }
    if short_spectrum_steps > 0 {
        notes.push(short_spectrum_note(short_spectrum_steps));
    }
    Ok(FitResult {
        model: x_curr,
        trace,
        initial_objective,
        converged: false,
        stop_reason: StopReason::MaxIter,
        rho,
        notes,
    })
}

fn short_spectrum_note(steps: usize) -> String {
    format!("{steps} steps had no singular value beyond the truncation; cutoff taken as 0")
}
