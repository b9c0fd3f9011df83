use super::{LabelScorer, ScorerError};
use crate::label_units::LabelId;
use crate::num::{log_normalize, Real};

/// Whether a combined row is renormalized after adding the weighted LM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Normalized,
    /// Plain score addition; rows no longer sum to one.
    Unnormalized,
}

/// Log-linear combination `primary + lambda * lm`.
#[derive(Debug, Clone)]
pub struct CombinedScorer<P, L, F> {
    primary: P,
    lm: L,
    lambda: F,
    normalization: Normalization,
}

impl<F: Real, P: LabelScorer<F>, L: LabelScorer<F>> CombinedScorer<P, L, F> {
    pub fn new(primary: P, lm: L, lambda: F, normalization: Normalization) -> Result<Self, ScorerError> {
        if primary.vocab_size() != lm.vocab_size() {
            return Err(ScorerError::VocabMismatch {
                primary: primary.vocab_size(),
                other: lm.vocab_size(),
            });
        }
        let l = lambda.as_f64();
        if !(l.is_finite() && l >= 0.0) {
            return Err(ScorerError::BadWeight(l));
        }
        Ok(Self {
            primary,
            lm,
            lambda,
            normalization,
        })
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }
}

/// Normalized combination, the form that satisfies the scorer contract.
pub fn combine_scorers<F: Real, P: LabelScorer<F>, L: LabelScorer<F>>(
    primary: P,
    lm: L,
    lambda: F,
) -> Result<CombinedScorer<P, L, F>, ScorerError> {
    CombinedScorer::new(primary, lm, lambda, Normalization::Normalized)
}

impl<F: Real, P: LabelScorer<F>, L: LabelScorer<F>> LabelScorer<F> for CombinedScorer<P, L, F> {
    type State = (P::State, L::State);

    fn vocab_size(&self) -> usize {
        self.primary.vocab_size()
    }

    fn start(&self) -> Self::State {
        (self.primary.start(), self.lm.start())
    }

    fn step(&self, (p, l): &Self::State, label: LabelId) -> Self::State {
        (self.primary.step(p, label), self.lm.step(l, label))
    }

    fn log_dist(&self, (p, l): &Self::State) -> Vec<F> {
        let mut row = self.primary.log_dist(p);
        if self.lambda == F::zero() {
            return row;
        }
        for (x, y) in row.iter_mut().zip(self.lm.log_dist(l)) {
            *x += self.lambda * y;
        }
        if self.normalization == Normalization::Normalized {
            log_normalize(&mut row);
        }
        row
    }

    fn context_len(&self) -> Option<usize> {
        self.primary.context_len()
    }
}
