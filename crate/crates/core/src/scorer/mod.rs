//! Per-step label posteriors.
//!
//! A [`LabelScorer`] stands in for the acoustic model: given the labels
//! emitted so far (carried in its state) it returns a natural-log
//! distribution over the whole label vocabulary.

mod combine;
mod dump;
mod ngram;
mod oracle;
mod replay;

use thiserror::Error;

use crate::label_units::LabelId;
use crate::num::Real;

pub use combine::{combine_scorers, CombinedScorer, Normalization};
pub use dump::{check_vocab, read_dump, write_dump, DumpError, DumpHeader, DumpRows, DumpUtterance, DUMP_MAGIC};
pub use ngram::LmLabelScorer;
pub use oracle::OracleScorer;
pub use replay::ReplayScorer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScorerError {
    #[error("peak probability {peak} must lie in (1/{vocab_size}, 1]")]
    PeakOutOfRange { peak: f64, vocab_size: usize },
    #[error("vocabulary sizes differ: {primary} vs {other}")]
    VocabMismatch { primary: usize, other: usize },
    #[error("LM weight must be finite and non-negative, got {0}")]
    BadWeight(f64),
    #[error("reference label {label} outside vocabulary of size {vocab_size}")]
    LabelOutOfRange { label: u32, vocab_size: usize },
    #[error("noise scale must be finite and non-negative, got {0}")]
    BadNoise(f64),
}

pub trait LabelScorer<F: Real> {
    type State: Clone;

    fn vocab_size(&self) -> usize;

    fn start(&self) -> Self::State;

    fn step(&self, state: &Self::State, label: LabelId) -> Self::State;

    /// Natural-log probabilities of every label, length [`Self::vocab_size`].
    fn log_dist(&self, state: &Self::State) -> Vec<F>;

    /// Input length hint (number of encoder frames), if known.
    fn context_len(&self) -> Option<usize> {
        None
    }
}

impl<F: Real, T: LabelScorer<F> + ?Sized> LabelScorer<F> for &T {
    type State = T::State;

    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn start(&self) -> Self::State {
        (**self).start()
    }

    fn step(&self, state: &Self::State, label: LabelId) -> Self::State {
        (**self).step(state, label)
    }

    fn log_dist(&self, state: &Self::State) -> Vec<F> {
        (**self).log_dist(state)
    }

    fn context_len(&self) -> Option<usize> {
        (**self).context_len()
    }
}

/// Row putting all mass on `eos`.
pub(crate) fn eos_row<F: Real>(vocab_size: usize, eos: LabelId) -> Vec<F> {
    let mut row = vec![F::neg_infinity(); vocab_size];
    row[eos.index()] = F::zero();
    row
}
