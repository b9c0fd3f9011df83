//! Backoff n-gram language models over words or labels.
//!
//! Probabilities are stored as base-10 logarithms, as in ARPA files.
//! Decoders convert to natural logs where scores are combined.

mod arpa;
mod lookahead;
mod train;

use std::collections::HashMap;

use thiserror::Error;

use crate::num::Real;
use crate::symbols::{LM_BOS, LM_EOS, LM_UNK};

pub use arpa::{parse_arpa, write_arpa};
pub use lookahead::lookahead_table;
pub use train::{train_ngram, TrainOptions};

/// Log10 probability returned for tokens the model cannot score at all.
pub const LOG10_FLOOR: f64 = -99.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("smoothing constant must be positive, got {0}")]
    BadSmoothing(f64),
    #[error("model order must be at least 1")]
    BadOrder,
    #[error("line {line}: {reason}")]
    Arpa { line: usize, reason: String },
    #[error("{order}-grams: header declares {declared}, body has {found}")]
    CountMismatch {
        order: usize,
        declared: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramEntry<F> {
    pub logprob: F,
    pub backoff: Option<F>,
}

/// Query history: at most `order - 1` token ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LmState {
    history: Vec<u32>,
}

impl LmState {
    pub fn history(&self) -> &[u32] {
        &self.history
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm<F> {
    order: usize,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    grams: Vec<HashMap<Vec<u32>, NGramEntry<F>>>,
    bos: Option<u32>,
    unk: Option<u32>,
}

impl<F: Real> NGramLm<F> {
    fn empty(order: usize) -> Self {
        Self {
            order,
            tokens: Vec::new(),
            index: HashMap::new(),
            grams: (0..order).map(|_| HashMap::new()).collect(),
            bos: None,
            unk: None,
        }
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        match token {
            LM_BOS => self.bos = Some(id),
            LM_UNK => self.unk = Some(id),
            _ => {}
        }
        id
    }

    fn insert(&mut self, ngram: &[&str], entry: NGramEntry<F>) {
        let key: Vec<u32> = ngram.iter().map(|t| self.intern(t)).collect();
        self.grams[key.len() - 1].insert(key, entry);
    }

    /// Unigram model giving every token the same probability.
    pub fn uniform<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut lm = Self::empty(1);
        let mut list: Vec<String> = tokens.into_iter().map(|t| t.as_ref().to_string()).collect();
        list.push(LM_EOS.to_string());
        list.sort();
        list.dedup();
        let logprob = F::of(-(list.len() as f64).log10());
        for t in &list {
            lm.insert(&[t.as_str()], NGramEntry { logprob, backoff: None });
        }
        lm
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Tokens in first-seen order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Number of stored n-grams of length `n` (1-based).
    pub fn ngram_count(&self, n: usize) -> usize {
        self.grams.get(n.wrapping_sub(1)).map_or(0, HashMap::len)
    }

    /// Stored n-grams of length `n` as token strings, sorted.
    pub fn entries(&self, n: usize) -> Vec<(Vec<&str>, NGramEntry<F>)> {
        let mut out: Vec<_> = self.grams[n - 1]
            .iter()
            .map(|(k, e)| (k.iter().map(|&t| self.tokens[t as usize].as_str()).collect(), *e))
            .collect();
        out.sort_by(|a: &(Vec<&str>, _), b| a.0.cmp(&b.0));
        out
    }

    /// Sentence-start state: `<s>` when the model has it and order > 1.
    pub fn begin_state(&self) -> LmState {
        match self.bos {
            Some(bos) if self.order > 1 => LmState { history: vec![bos] },
            _ => LmState::default(),
        }
    }

    pub fn null_state(&self) -> LmState {
        LmState::default()
    }

    /// State whose history is the given tokens (unknown tokens map to `<unk>`
    /// or are dropped if the model has none).
    pub fn state_from<S: AsRef<str>>(&self, history: &[S]) -> LmState {
        let ids: Vec<u32> = history
            .iter()
            .filter_map(|t| self.token_id(t.as_ref()).or(self.unk))
            .collect();
        let keep = self.order.saturating_sub(1);
        LmState {
            history: ids[ids.len().saturating_sub(keep)..].to_vec(),
        }
    }

    /// Log10 probability of `token` after `state`, and the successor state.
    pub fn score(&self, state: &LmState, token: &str) -> (F, LmState) {
        let id = self.token_id(token).or(self.unk);
        let logprob = match id {
            Some(id) => self.score_id(&state.history, id),
            None => F::of(LOG10_FLOOR),
        };
        let mut history = state.history.clone();
        if let Some(id) = id {
            history.push(id);
        }
        let keep = self.order.saturating_sub(1);
        let drop = history.len().saturating_sub(keep);
        history.drain(..drop);
        (logprob, LmState { history })
    }

    /// Context-free log10 probability of a token.
    pub fn unigram(&self, token: &str) -> F {
        self.score(&LmState::default(), token).0
    }

    fn score_id(&self, history: &[u32], token: u32) -> F {
        let max_ctx = history.len().min(self.order - 1);
        let mut acc = F::zero();
        let mut key = Vec::with_capacity(max_ctx + 1);
        for m in (0..=max_ctx).rev() {
            let ctx = &history[history.len() - m..];
            key.clear();
            key.extend_from_slice(ctx);
            key.push(token);
            if let Some(e) = self.grams[m].get(&key) {
                return acc + e.logprob;
            }
            if m > 0 {
                if let Some(b) = self.grams[m - 1].get(ctx).and_then(|e| e.backoff) {
                    acc += b;
                }
            }
        }
        acc + F::of(LOG10_FLOOR)
    }
}
