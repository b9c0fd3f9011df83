use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabelScorer, ScorerError};
use crate::label_units::LabelId;
use crate::num::{log_normalize, Real};

/// Test double peaked on a planted reference.
///
/// At step `n` the reference label `n` gets probability `peak` (EOS once the
/// reference is exhausted) and every other label shares the rest uniformly.
/// The distribution depends on the step index only, not on the history.
#[derive(Debug, Clone)]
pub struct OracleScorer<F> {
    reference: Vec<LabelId>,
    vocab_size: usize,
    eos: LabelId,
    on: F,
    off: F,
    noise: Option<(u64, F)>,
}

impl<F: Real> OracleScorer<F> {
    pub fn new(
        reference: Vec<LabelId>,
        vocab_size: usize,
        eos: LabelId,
        peak: F,
    ) -> Result<Self, ScorerError> {
        let p = peak.as_f64();
        if vocab_size < 2 || !(p > 1.0 / vocab_size as f64 && p <= 1.0) {
            return Err(ScorerError::PeakOutOfRange {
                peak: p,
                vocab_size,
            });
        }
        for &l in reference.iter().chain([&eos]) {
            if l.index() >= vocab_size {
                return Err(ScorerError::LabelOutOfRange {
                    label: l.0,
                    vocab_size,
                });
            }
        }
        let off = (1.0 - p) / (vocab_size - 1) as f64;
        Ok(Self {
            reference,
            vocab_size,
            eos,
            on: F::of(p.ln()),
            off: F::of(off.ln()),
            noise: None,
        })
    }

    /// Adds uniform noise in `[-sigma, sigma]` to every log-probability
    /// before renormalizing. The noise is a function of `seed` and the step
    /// index, so decoding stays deterministic.
    pub fn with_noise(mut self, seed: u64, sigma: F) -> Result<Self, ScorerError> {
        let s = sigma.as_f64();
        if !(s.is_finite() && s >= 0.0) {
            return Err(ScorerError::BadNoise(s));
        }
        self.noise = (s > 0.0).then_some((seed, sigma));
        Ok(self)
    }

    pub fn reference(&self) -> &[LabelId] {
        &self.reference
    }

    /// Probability given to each off-reference label.
    pub fn off_peak(&self) -> F {
        self.off.exp()
    }
}

impl<F: Real> LabelScorer<F> for OracleScorer<F> {
    type State = usize;

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn start(&self) -> usize {
        0
    }

    fn step(&self, state: &usize, _label: LabelId) -> usize {
        state + 1
    }

    fn log_dist(&self, &n: &usize) -> Vec<F> {
        let target = self.reference.get(n).copied().unwrap_or(self.eos);
        let mut row = vec![self.off; self.vocab_size];
        row[target.index()] = self.on;
        if let Some((seed, sigma)) = self.noise {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let s = sigma.as_f64();
            for x in row.iter_mut() {
                *x += F::of(rng.gen_range(-s..=s));
            }
            log_normalize(&mut row);
        }
        row
    }

    fn context_len(&self) -> Option<usize> {
        Some(self.reference.len())
    }
}
