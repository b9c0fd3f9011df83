use super::LabelScorer;
use crate::label_units::{LabelId, LabelVocab};
use crate::lm::{LmState, NGramLm};
use crate::num::{log10_to_ln, log_normalize, Real};
use crate::symbols::LM_EOS;

/// Label-level n-gram LM exposed as a scorer. The vocabulary's EOS label is
/// scored as the LM's sentence end; rows are renormalized over the label
/// vocabulary.
#[derive(Debug, Clone)]
pub struct LmLabelScorer<'a, F> {
    lm: &'a NGramLm<F>,
    tokens: Vec<String>,
}

impl<'a, F: Real> LmLabelScorer<'a, F> {
    pub fn new(lm: &'a NGramLm<F>, vocab: &LabelVocab) -> Self {
        let eos = vocab.eos();
        let tokens = vocab
            .labels()
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if LabelId::from(i) == eos {
                    LM_EOS.to_string()
                } else {
                    l.clone()
                }
            })
            .collect();
        Self { lm, tokens }
    }
}

impl<F: Real> LabelScorer<F> for LmLabelScorer<'_, F> {
    type State = LmState;

    fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    fn start(&self) -> LmState {
        self.lm.begin_state()
    }

    fn step(&self, state: &LmState, label: LabelId) -> LmState {
        self.lm.score(state, &self.tokens[label.index()]).1
    }

    fn log_dist(&self, state: &LmState) -> Vec<F> {
        let mut row: Vec<F> = self
            .tokens
            .iter()
            .map(|t| log10_to_ln(self.lm.score(state, t).0))
            .collect();
        log_normalize(&mut row);
        row
    }
}
