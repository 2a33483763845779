//! Spectral penalties and their singular value thresholding operators.
//!
//! Every penalty is `r_n(X) = Σᵢ r(σᵢ(X))` with `r` concave, nondecreasing and
//! `r(0) = 0`. The proximal step of `η·r_n` acts on each singular value
//! separately through [`scalar_prox`], and each penalty has a cutoff γ below
//! which that scalar step returns exactly zero.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::matrix::{small_svd, DenseMatrix, FactoredMatrix, LowRankPlusSparse, OrthonormalBasis};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegularizerKind {
    /// Truncated nuclear norm: the `μ` leading singular values are free.
    Tnn,
    /// `min(σ, μ)`.
    CappedL1,
    /// Log-sum penalty `log(σ/μ + 1)`.
    Lsp,
    /// Convex baseline `σ`.
    Nuclear,
}

/// A penalty together with its shape parameter `μ` (ignored for nuclear).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizerSpec {
    kind: RegularizerKind,
    mu: f64,
}

impl RegularizerSpec {
    pub fn new(kind: RegularizerKind, mu: f64) -> Result<Self> {
        if kind == RegularizerKind::Nuclear {
            return Ok(Self::nuclear());
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("μ must be positive, got {mu}")));
        }
        if kind == RegularizerKind::Tnn && mu.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "TNN μ counts singular values and must be an integer, got {mu}"
            )));
        }
        Ok(Self { kind, mu })
    }

    pub fn tnn(mu: usize) -> Result<Self> {
        Self::new(RegularizerKind::Tnn, mu as f64)
    }

    pub fn capped_l1(mu: f64) -> Result<Self> {
        Self::new(RegularizerKind::CappedL1, mu)
    }

    pub fn lsp(mu: f64) -> Result<Self> {
        Self::new(RegularizerKind::Lsp, mu)
    }

    pub fn nuclear() -> Self {
        Self { kind: RegularizerKind::Nuclear, mu: 0.0 }
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `r(σ)` for the singular value at 1-based position `index`.
    pub fn penalty(&self, sigma: f64, index: usize) -> f64 {
        match self.kind {
            RegularizerKind::Tnn => {
                if (index as f64) <= self.mu {
                    0.0
                } else {
                    sigma
                }
            }
            RegularizerKind::CappedL1 => sigma.min(self.mu),
            RegularizerKind::Lsp => (sigma / self.mu).ln_1p(),
            RegularizerKind::Nuclear => sigma,
        }
    }
}

impl fmt::Display for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RegularizerKind::Tnn => write!(f, "tnn:{}", self.mu as u64),
            RegularizerKind::CappedL1 => write!(f, "capped:{}", self.mu),
            RegularizerKind::Lsp => write!(f, "lsp:{}", self.mu),
            RegularizerKind::Nuclear => f.write_str("nuclear"),
        }
    }
}

impl FromStr for RegularizerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("nuclear") {
            return Ok(Self::nuclear());
        }
        let (name, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("regularizer `{s}` is not of the form name:mu")))?;
        let mu: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad regularizer parameter `{value}`")))?;
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "tnn" => RegularizerKind::Tnn,
            "capped" | "capped-l1" | "cappedl1" => RegularizerKind::CappedL1,
            "lsp" => RegularizerKind::Lsp,
            other => return Err(Error::Parse(format!("unknown regularizer `{other}`"))),
        };
        Self::new(kind, mu)
    }
}

/// Input to the scalar proximal step: one singular value, the step weight
/// `η = λ/ρ`, and its 1-based position in the sorted spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxInput {
    pub sigma: f64,
    pub eta: f64,
    pub index: usize,
}

/// `½(s − σ)² + η·r(s)`, the scalar objective the prox minimizes.
pub fn scalar_objective(spec: &RegularizerSpec, input: &ProxInput, s: f64) -> f64 {
    0.5 * (s - input.sigma).powi(2) + input.eta * spec.penalty(s, input.index)
}

/// Closed-form minimizer of `½(s − σ)² + η·r(s)` over `s ≥ 0`.
pub fn scalar_prox(spec: &RegularizerSpec, input: ProxInput) -> f64 {
    let ProxInput { sigma, eta, index } = input;
    let soft = (sigma - eta).max(0.0);
    match spec.kind {
        RegularizerKind::Nuclear => soft,
        RegularizerKind::Tnn => {
            if (index as f64) <= spec.mu {
                sigma
            } else {
                soft
            }
        }
        RegularizerKind::CappedL1 => {
            let mu = spec.mu;
            let below = soft.min(mu);
            let above = sigma.max(mu);
            let f_below = scalar_objective(spec, &input, below);
            let f_above = scalar_objective(spec, &input, above);
            // ties go to the larger value
            if f_above <= f_below {
                above
            } else {
                below
            }
        }
        RegularizerKind::Lsp => {
            // stationarity: s² + (μ − σ)s + (η − σμ) = 0
            let mu = spec.mu;
            let disc = (mu + sigma).powi(2) - 4.0 * eta;
            if disc < 0.0 {
                return 0.0;
            }
            let root = 0.5 * ((sigma - mu) + disc.sqrt());
            if root <= 0.0 {
                return 0.0;
            }
            let f_zero = scalar_objective(spec, &input, 0.0);
            let f_root = scalar_objective(spec, &input, root);
            if f_root <= f_zero {
                root
            } else {
                0.0
            }
        }
    }
}

fn check_spectrum(sigmas: &[f64]) -> Result<()> {
    if sigmas.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("singular values"));
    }
    if sigmas.iter().any(|&s| s < 0.0) || sigmas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::UnsortedSpectrum);
    }
    Ok(())
}

/// `Σᵢ η·r(σᵢ)` over a nonincreasing spectrum.
pub fn penalty_value(spec: &RegularizerSpec, sigmas: &[f64], eta: f64) -> Result<f64> {
    check_spectrum(sigmas)?;
    Ok(sigmas
        .iter()
        .enumerate()
        .map(|(i, &s)| eta * spec.penalty(s, i + 1))
        .sum())
}

/// Cutoff γ such that [`scalar_prox`] is zero for every singular value `σ ≤ γ`.
///
/// * TNN: `min(σ_{μ+1}, η)`; a spectrum with at most `μ` entries has
///   `σ_{μ+1} = 0`.
/// * capped-ℓ1: `min(η, √(2μη))`
/// * LSP: `min(η/μ, μ)`
/// * nuclear: `η`
pub fn threshold_gamma(spec: &RegularizerSpec, eta: f64, sigmas: &[f64]) -> f64 {
    match spec.kind {
        RegularizerKind::Tnn => {
            let next = sigmas.get(spec.mu as usize).copied().unwrap_or(0.0);
            next.min(eta)
        }
        RegularizerKind::CappedL1 => eta.min((2.0 * spec.mu * eta).sqrt()),
        RegularizerKind::Lsp => (eta / spec.mu).min(spec.mu),
        RegularizerKind::Nuclear => eta,
    }
}

/// True when a TNN cutoff had to assume `σ_{μ+1} = 0` because the given
/// spectrum is too short.
pub fn spectrum_too_short(spec: &RegularizerSpec, sigmas: &[f64]) -> bool {
    spec.kind == RegularizerKind::Tnn && sigmas.len() <= spec.mu as usize
}

/// `#{i : σᵢ > γ}` over a nonincreasing spectrum.
pub fn rank_select(sigmas: &[f64], gamma: f64) -> usize {
    sigmas.iter().take_while(|&&s| s > gamma).count()
}

/// Applies the scalar prox to a sorted spectrum, position by position.
pub fn prox_spectrum(spec: &RegularizerSpec, sigmas: &[f64], eta: f64) -> Vec<f64> {
    sigmas
        .iter()
        .enumerate()
        .map(|(i, &sigma)| scalar_prox(spec, ProxInput { sigma, eta, index: i + 1 }))
        .collect()
}

/// Builds `U diag(ŝ) Vᵀ` from the first `ŝ.len()` columns of `u`, `v`, dropping
/// zero weights and keeping the weights sorted.
fn assemble(u: &DenseMatrix, s_hat: &[f64], v: &DenseMatrix) -> Result<FactoredMatrix> {
    let mut order: Vec<usize> = (0..s_hat.len()).filter(|&i| s_hat[i] > 0.0).collect();
    order.sort_by(|&a, &b| s_hat[b].total_cmp(&s_hat[a]).then(a.cmp(&b)));
    let uu = Mat::from_fn(u.rows(), order.len(), |i, c| u.get(i, order[c]));
    let vv = Mat::from_fn(v.rows(), order.len(), |i, c| v.get(i, order[c]));
    let s: Vec<f64> = order.iter().map(|&i| s_hat[i]).collect();
    FactoredMatrix::new(DenseMatrix::wrap(uu), s, DenseMatrix::wrap(vv))
}

/// Generalized singular value thresholding through a full SVD, in factored
/// form. Reference path for small matrices.
pub fn gsvt_full_factored(z: &DenseMatrix, spec: &RegularizerSpec, eta: f64) -> Result<FactoredMatrix> {
    let svd = small_svd(z)?;
    let s_hat = prox_spectrum(spec, &svd.s, eta);
    assemble(&svd.u, &s_hat, &svd.v)
}

/// Generalized singular value thresholding through a full SVD.
pub fn gsvt_full(z: &DenseMatrix, spec: &RegularizerSpec, eta: f64) -> Result<DenseMatrix> {
    Ok(gsvt_full_factored(z, spec, eta)?.to_dense())
}

/// Everything the projected thresholding step produces.
#[derive(Clone, Debug)]
pub struct ProjectedProx {
    /// `W·U_a·diag(ŝ)·V_aᵀ`.
    pub model: FactoredMatrix,
    /// Full spectrum of the reduced matrix `WᵀZ`.
    pub reduced_spectrum: Vec<f64>,
    /// All right singular vectors of `WᵀZ` (`n × width(W)`), for warm starts.
    pub right_vectors: DenseMatrix,
    pub gamma: f64,
    /// Number of reduced singular values above `gamma`.
    pub selected: usize,
    pub spectrum_short: bool,
}

/// Thresholding step on the projection `WᵀZ`, lifted back through `W`.
///
/// Exact whenever `span(W)` contains every left singular vector of `Z` whose
/// singular value exceeds γ.
pub fn gsvt_projected(
    z: &LowRankPlusSparse,
    w: &OrthonormalBasis,
    spec: &RegularizerSpec,
    eta: f64,
) -> Result<FactoredMatrix> {
    Ok(gsvt_projected_detailed(z, w, spec, eta)?.model)
}

pub fn gsvt_projected_detailed(
    z: &LowRankPlusSparse,
    w: &OrthonormalBasis,
    spec: &RegularizerSpec,
    eta: f64,
) -> Result<ProjectedProx> {
    if w.rows() != z.rows() {
        return Err(Error::DimensionMismatch(format!(
            "basis with {} rows for a {}x{} operator",
            w.rows(),
            z.rows(),
            z.cols()
        )));
    }
    // ZᵀW = P·diag(s)·Qᵀ, so WᵀZ = Q·diag(s)·Pᵀ.
    let zt_w = z.apply_transpose(w.matrix())?;
    let svd = small_svd(&zt_w)?;
    let gamma = threshold_gamma(spec, eta, &svd.s);
    let selected = rank_select(&svd.s, gamma);
    let s_hat = prox_spectrum(spec, &svd.s[..selected], eta);
    let lifted_u = w.matrix().matmul(&svd.v.leading_columns(selected))?;
    let model = assemble(&lifted_u, &s_hat, &svd.u.leading_columns(selected))?;
    Ok(ProjectedProx {
        model,
        spectrum_short: spectrum_too_short(spec, &svd.s),
        reduced_spectrum: svd.s,
        right_vectors: svd.u,
        gamma,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(sigma: f64, eta: f64, index: usize) -> ProxInput {
        ProxInput { sigma, eta, index }
    }

    #[test]
    fn parse_and_display() {
        for s in ["tnn:5", "capped:1", "lsp:0.5", "nuclear"] {
            let spec: RegularizerSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("tnn:1.5".parse::<RegularizerSpec>().is_err());
        assert!("lsp:-1".parse::<RegularizerSpec>().is_err());
        assert!("scad:1".parse::<RegularizerSpec>().is_err());
        assert!("lsp".parse::<RegularizerSpec>().is_err());
    }

    #[test]
    fn penalty_examples() {
        let lsp = RegularizerSpec::lsp(1.0).unwrap();
        assert_eq!(penalty_value(&lsp, &[0.0], 0.7).unwrap(), 0.0);

        let tnn = RegularizerSpec::tnn(1).unwrap();
        assert!((penalty_value(&tnn, &[3.0, 2.0], 0.5).unwrap() - 1.0).abs() < 1e-15);

        let capped = RegularizerSpec::capped_l1(1.0).unwrap();
        assert!(matches!(
            penalty_value(&capped, &[0.5, 4.0], 0.5),
            Err(Error::UnsortedSpectrum)
        ));
        assert!((penalty_value(&capped, &[4.0, 0.5], 0.5).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn prox_examples() {
        let tnn = RegularizerSpec::tnn(2).unwrap();
        assert_eq!(scalar_prox(&tnn, input(3.0, 0.5, 1)), 3.0);
        assert!((scalar_prox(&tnn, input(3.0, 0.5, 3)) - 2.5).abs() < 1e-15);
        assert_eq!(scalar_prox(&tnn, input(0.3, 0.5, 3)), 0.0);

        let capped = RegularizerSpec::capped_l1(1.0).unwrap();
        assert_eq!(scalar_prox(&capped, input(5.0, 0.5, 1)), 5.0);
        assert_eq!(scalar_prox(&capped, input(0.3, 0.5, 1)), 0.0);

        let lsp = RegularizerSpec::lsp(1.0).unwrap();
        let s = scalar_prox(&lsp, input(2.0, 0.3, 1));
        assert!((s - 0.5 * (1.0 + 7.8_f64.sqrt())).abs() < 1e-12);
        assert!((s - 1.8964).abs() < 1e-4);
    }

    #[test]
    fn capped_tie_prefers_larger() {
        // σ = √(2μη) with η > √(2μη): both regional candidates score ημ.
        let spec = RegularizerSpec::capped_l1(0.5).unwrap();
        let eta = 4.0;
        let sigma = (2.0_f64 * 0.5 * eta).sqrt();
        assert_eq!(scalar_prox(&spec, input(sigma, eta, 1)), sigma);
    }

    #[test]
    fn gamma_examples() {
        let capped = RegularizerSpec::capped_l1(1.0).unwrap();
        assert_eq!(threshold_gamma(&capped, 0.5, &[]), 0.5);
        let lsp = RegularizerSpec::lsp(1.0).unwrap();
        assert_eq!(threshold_gamma(&lsp, 0.3, &[]), 0.3);
        assert_eq!(threshold_gamma(&RegularizerSpec::nuclear(), 0.5, &[]), 0.5);

        let tnn = RegularizerSpec::tnn(2).unwrap();
        assert_eq!(threshold_gamma(&tnn, 1.0, &[10.0, 8.0, 6.0, 4.0]), 1.0);
        assert_eq!(threshold_gamma(&tnn, 1.0, &[10.0, 8.0, 0.5, 0.3]), 0.5);
        assert_eq!(threshold_gamma(&tnn, 1.0, &[10.0, 8.0]), 0.0);
        assert!(spectrum_too_short(&tnn, &[10.0, 8.0]));
    }

    #[test]
    fn rank_select_counts_strictly_greater() {
        assert_eq!(rank_select(&[3.0, 0.4], 0.5), 1);
        assert_eq!(rank_select(&[0.3, 0.1], 0.5), 0);
        assert_eq!(rank_select(&[2.0, 1.0, 0.0], 0.0), 2);
        assert_eq!(rank_select(&[2.0, 0.5], 0.5), 1);
    }

    #[test]
    fn gsvt_full_diagonal() {
        let z = DenseMatrix::from_row_major(2, 2, &[3.0, 0.0, 0.0, 0.3]).unwrap();
        let x = gsvt_full(&z, &RegularizerSpec::nuclear(), 0.5).unwrap();
        let expect = DenseMatrix::from_row_major(2, 2, &[2.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(x.sub(&expect).unwrap().max_abs() < 1e-14);

        let zero = gsvt_full(&DenseMatrix::zeros(3, 2), &RegularizerSpec::lsp(1.0).unwrap(), 1.0).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }
}
