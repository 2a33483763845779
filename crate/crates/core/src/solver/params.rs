use serde::{Deserialize, Serialize};

use crate::loss::lipschitz_beta;
use crate::{Error, Result};

/// How λ_t approaches λ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuationRule {
    /// `λ_t = (λ_{t−1} − λ)·υᵗ + λ`; the gap shrinks by a growing power of υ.
    #[default]
    Recursive,
    /// `λ_t = (λ₀ − λ)·υᵗ + λ`.
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Target regularization weight λ.
    pub lambda_final: f64,
    /// Starting weight λ₀ for continuation. `None` means `10·λ`.
    pub lambda_init: Option<f64>,
    /// Continuation decay υ ∈ (0, 1).
    pub upsilon: f64,
    pub continuation: ContinuationRule,
    /// Step denominator ρ. `None` means `1.01·β(ω)`.
    pub rho: Option<f64>,
    pub max_iter: usize,
    /// Stop once `‖X_{t+1} − X_t‖_F ≤ tol·‖X_{t+1}‖_F`.
    pub tol: f64,
    /// Power iterations H per step.
    pub power_iters: usize,
    /// Restart momentum after this many consecutive increases of F.
    pub restart_after: usize,
    /// Largest side accepted by the full-SVD solver.
    pub full_svd_cap: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda_final: 1.0,
            lambda_init: None,
            upsilon: 0.5,
            continuation: ContinuationRule::Recursive,
            rho: None,
            max_iter: 500,
            tol: 1e-5,
            power_iters: 3,
            restart_after: 5,
            full_svd_cap: 2000,
            seed: 0,
        }
    }
}

/// Step size margin over the Lipschitz constant used when ρ is automatic.
pub const RHO_MARGIN: f64 = 1.01;

impl SolverParams {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda_final: lambda, ..Self::default() }
    }

    pub fn lambda_start(&self) -> f64 {
        self.lambda_init.unwrap_or(10.0 * self.lambda_final)
    }

    pub fn rho_for(&self, omega: f64) -> f64 {
        self.rho.unwrap_or(RHO_MARGIN * lipschitz_beta(omega))
    }

    /// Checks the parameter ranges for a given ω and returns the resolved ρ.
    pub fn validate(&self, omega: f64) -> Result<f64> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(omega > 0.0 && omega < 1.0) {
            return bad(format!("ω must lie in (0, 1), got {omega}"));
        }
        if !(self.lambda_final.is_finite() && self.lambda_final >= 0.0) {
            return bad(format!("λ must be finite and nonnegative, got {}", self.lambda_final));
        }
        let l0 = self.lambda_start();
        if !(l0.is_finite() && l0 >= self.lambda_final) {
            return bad(format!("λ₀ = {l0} must be finite and at least λ = {}", self.lambda_final));
        }
        if !(self.upsilon > 0.0 && self.upsilon < 1.0) {
            return bad(format!("υ must lie in (0, 1), got {}", self.upsilon));
        }
        let rho = self.rho_for(omega);
        let beta = lipschitz_beta(omega);
        if !(rho.is_finite() && rho > beta) {
            return bad(format!("ρ = {rho} must exceed the Lipschitz constant β = {beta}"));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return bad(format!("tol must be finite and nonnegative, got {}", self.tol));
        }
        if self.power_iters == 0 {
            return bad("power_iters must be positive".into());
        }
        if self.restart_after == 0 {
            return bad("restart_after must be positive".into());
        }
        Ok(rho)
    }
}

/// `λ_t` from `λ_{t−1}` (or from λ₀ under [`ContinuationRule::Geometric`]).
pub fn continuation_lambda(lambda_prev: f64, lambda_final: f64, upsilon: f64, t: usize) -> f64 {
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    (lambda_prev - lambda_final) * upsilon.powi(t) + lambda_final
}

/// Momentum weights `(α_{t−1}, α_t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumState {
    pub alpha_prev: f64,
    pub alpha_curr: f64,
}

impl Default for MomentumState {
    fn default() -> Self {
        Self { alpha_prev: 1.0, alpha_curr: 1.0 }
    }
}

impl MomentumState {
    /// Extrapolation weight `c_t = (α_{t−1} − 1)/α_t`.
    pub fn extrapolation(&self) -> f64 {
        (self.alpha_prev - 1.0) / self.alpha_curr
    }
}

/// `α_{t+1} = ½(√(4α_t² + 1) + 1)`.
pub fn momentum_update(state: MomentumState) -> MomentumState {
    let a = state.alpha_curr;
    MomentumState {
        alpha_prev: a,
        alpha_curr: 0.5 * ((4.0 * a * a + 1.0).sqrt() + 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuation_examples() {
        assert_eq!(continuation_lambda(10.0, 1.0, 0.5, 1), 5.5);
        assert_eq!(continuation_lambda(1.0, 1.0, 0.5, 7), 1.0);
        let mut l = 10.0;
        for t in 1..40 {
            let next = continuation_lambda(l, 1.0, 0.5, t);
            assert!(next <= l);
            l = next;
        }
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_examples() {
        let s = momentum_update(MomentumState::default());
        assert!((s.alpha_curr - 0.5 * (5f64.sqrt() + 1.0)).abs() < 1e-15);
        assert_eq!(MomentumState::default().extrapolation(), 0.0);
        let mut s = MomentumState::default();
        for _ in 0..100 {
            let n = momentum_update(s);
            assert!(n.alpha_curr > s.alpha_curr);
            assert!((0.0..1.0).contains(&n.extrapolation()));
            s = n;
        }
    }

    #[test]
    fn validation() {
        let p = SolverParams::with_lambda(1.0);
        assert!((p.validate(0.25).unwrap() - 1.01 * 1.5).abs() < 1e-15);
        let bad = SolverParams { rho: Some(1.0), ..p.clone() };
        assert!(bad.validate(0.25).is_err());
        let bad = SolverParams { lambda_init: Some(0.5), ..p.clone() };
        assert!(bad.validate(0.25).is_err());
        let bad = SolverParams { upsilon: 1.0, ..p };
        assert!(bad.validate(0.25).is_err());
    }
}
