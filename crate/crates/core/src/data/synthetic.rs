use faer::Mat;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BinaryMatrix, ObservationSet};
use crate::{Error, Result};

/// Square `m × m` ground truth `M_ij = 1{Q_ij ≥ q}` with `Q = M₁M₂`, where
/// `M₁ ∈ ℝ^{m×k}` and `M₂ ∈ ℝ^{k×m}` have i.i.d. standard normal entries.
pub fn gen_synthetic(m: usize, k: usize, q: f64, seed: u64) -> Result<BinaryMatrix> {
    if k == 0 || k >= m {
        return Err(Error::InvalidParameter(format!(
            "latent rank k must satisfy 0 < k < m, got k = {k}, m = {m}"
        )));
    }
    if !q.is_finite() {
        return Err(Error::NonFinite("threshold q"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    // Fill order is fixed (row-major over M₁, then M₂) so a seed pins the output.
    let mut m1 = Mat::<f64>::zeros(m, k);
    for i in 0..m {
        for r in 0..k {
            m1[(i, r)] = draw();
        }
    }
    let mut m2 = Mat::<f64>::zeros(k, m);
    for r in 0..k {
        for j in 0..m {
            m2[(r, j)] = draw();
        }
    }
    let qmat = &m1 * &m2;
    let mut positives = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if qmat[(i, j)] >= q {
                positives.push((i, j));
            }
        }
    }
    Ok(BinaryMatrix::from_sorted(m, m, positives))
}

/// Observed positives Ω together with the held-out set used for evaluation.
#[derive(Clone, Debug)]
pub struct SampleSplit {
    pub observed: ObservationSet,
    /// Every position outside Ω.
    pub heldout: ObservationSet,
    pub delta: f64,
}

impl SampleSplit {
    /// The observation matrix `A` (ones exactly on Ω).
    pub fn observation_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_sorted(
            self.observed.rows(),
            self.observed.cols(),
            self.observed.listed().to_vec(),
        )
    }
}

/// Observes exactly `round(δ·|Ω₁|)` positives of `truth`, drawn uniformly
/// without replacement. Zeros are never observed.
pub fn sample_one_sided(truth: &BinaryMatrix, delta: f64, seed: u64) -> Result<SampleSplit> {
    if delta == 0.0 {
        return Err(Error::NoObservations);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("sampling rate must lie in (0, 1], got {delta}")));
    }
    let pool = truth.positives();
    let count = (delta * pool.len() as f64).round() as usize;
    if count == 0 {
        return Err(Error::NoObservations);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), count).into_vec();
    picked.sort_unstable();
    let listed: Vec<(usize, usize)> = picked.into_iter().map(|p| pool[p]).collect();
    let observed = ObservationSet::from_sorted(truth.rows(), truth.cols(), listed, false);
    Ok(SampleSplit { heldout: observed.complement(), observed, delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic() {
        let a = gen_synthetic(60, 3, 0.5, 11).unwrap();
        let b = gen_synthetic(60, 3, 0.5, 11).unwrap();
        let c = gen_synthetic(60, 3, 0.5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.shape(), (60, 60));
        assert!(gen_synthetic(5, 5, 0.5, 0).is_err());
    }

    #[test]
    fn exact_count_sampling() {
        let positives: Vec<_> = (0..1000).map(|p| (p / 40, p % 40)).collect();
        let m = BinaryMatrix::new(40, 40, positives).unwrap();
        let s = sample_one_sided(&m, 0.3, 5).unwrap();
        assert_eq!(s.observed.len(), 300);
        assert!(s.observed.iter().all(|(i, j)| m.get(i, j)));
        assert_eq!(s.heldout.len(), 1600 - 300);

        let again = sample_one_sided(&m, 0.3, 5).unwrap();
        assert_eq!(again.observed, s.observed);
        let other = sample_one_sided(&m, 0.3, 6).unwrap();
        assert_ne!(other.observed, s.observed);
        assert_eq!(other.observed.len(), 300);
    }

    #[test]
    fn full_and_empty_rates() {
        let m = gen_synthetic(30, 2, 0.5, 1).unwrap();
        let s = sample_one_sided(&m, 1.0, 0).unwrap();
        assert_eq!(s.observation_matrix(), m);
        assert!(matches!(sample_one_sided(&m, 0.0, 0), Err(Error::NoObservations)));
        assert!(sample_one_sided(&m, 1.5, 0).is_err());
    }
}
