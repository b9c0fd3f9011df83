use std::collections::{BTreeMap, BTreeSet};

use super::{LmError, NGramEntry, NGramLm, LOG10_FLOOR};
use crate::num::Real;
use crate::symbols::{LM_BOS, LM_EOS, LM_UNK};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions<F> {
    pub order: usize,
    /// Add-k smoothing constant, `> 0`.
    pub add_k: F,
    /// Pad sentences with `<s>` / `</s>`.
    pub sentence_boundaries: bool,
    /// Reserve smoothed mass for `<unk>`.
    pub include_unk: bool,
    /// Tokens to include in the vocabulary even if unseen.
    pub extra_vocab: Vec<String>,
}

impl<F: Real> TrainOptions<F> {
    pub fn new(order: usize, add_k: F) -> Self {
        Self {
            order,
            add_k,
            sentence_boundaries: true,
            include_unk: true,
            extra_vocab: Vec::new(),
        }
    }
}

/// Trains an add-k smoothed backoff model.
///
/// For every history seen in training, seen continuations get
/// `(c(h,w) + k) / (c(h) + k|V|)`; the remaining mass is spread over unseen
/// continuations in proportion to the next-lower-order distribution through
/// the history's backoff weight, so each conditional sums to one.
pub fn train_ngram<F: Real, S: AsRef<str>>(
    corpus: &[Vec<S>],
    opts: &TrainOptions<F>,
) -> Result<NGramLm<F>, LmError> {
    if opts.order == 0 {
        return Err(LmError::BadOrder);
    }
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let k = opts.add_k.as_f64();
    if k.is_nan() || k <= 0.0 {
        return Err(LmError::BadSmoothing(k));
    }

    let padded: Vec<Vec<&str>> = corpus
        .iter()
        .map(|s| {
            let mut p: Vec<&str> = Vec::with_capacity(s.len() + 2);
            if opts.sentence_boundaries {
                p.push(LM_BOS);
            }
            p.extend(s.iter().map(AsRef::as_ref));
            if opts.sentence_boundaries {
                p.push(LM_EOS);
            }
            p
        })
        .collect();

    // Predictable tokens; `<s>` is only ever a context.
    let mut predictable: BTreeSet<&str> = padded.iter().flatten().copied().collect();
    predictable.extend(opts.extra_vocab.iter().map(String::as_str));
    if opts.include_unk {
        predictable.insert(LM_UNK);
    }
    if opts.sentence_boundaries {
        predictable.remove(LM_BOS);
    }
    let v = predictable.len() as f64;

    // counts[n-1][(context, target)]
    let mut counts: Vec<BTreeMap<Vec<&str>, u64>> = vec![BTreeMap::new(); opts.order];
    for sent in &padded {
        for n in 1..=opts.order {
            for w in sent.windows(n) {
                if w[n - 1] == LM_BOS {
                    continue;
                }
                *counts[n - 1].entry(w.to_vec()).or_insert(0) += 1;
            }
        }
    }

    let mut lm = NGramLm::empty(opts.order);
    let total: u64 = counts[0].values().sum();
    if total == 0 {
        return Err(LmError::EmptyCorpus);
    }
    let denom = total as f64 + k * v;
    for &w in &predictable {
        let c = counts[0].get(&vec![w]).copied().unwrap_or(0) as f64;
        lm.insert(
            &[w],
            NGramEntry {
                logprob: F::of(((c + k) / denom).log10()),
                backoff: None,
            },
        );
    }
    if opts.sentence_boundaries {
        lm.insert(
            &[LM_BOS],
            NGramEntry {
                logprob: F::of(LOG10_FLOOR),
                backoff: None,
            },
        );
    }

    for n in 2..=opts.order {
        let mut by_history: BTreeMap<&[&str], Vec<(&str, u64)>> = BTreeMap::new();
        for (gram, &c) in &counts[n - 1] {
            by_history
                .entry(&gram[..n - 1])
                .or_default()
                .push((gram[n - 1], c));
        }
        let mut new_entries = Vec::new();
        let mut backoffs = Vec::new();
        for (history, seen) in &by_history {
            let c_h: u64 = seen.iter().map(|(_, c)| c).sum();
            let denom = c_h as f64 + k * v;
            let lower = lm.state_from(&history[1..]);
            let mut seen_lower = 0.0;
            for &(w, c) in seen {
                new_entries.push((
                    [&history[..], &[w]].concat(),
                    ((c as f64 + k) / denom).log10(),
                ));
                seen_lower += 10f64.powf(lm.score(&lower, w).0.as_f64());
            }
            let reserved = k * (v - seen.len() as f64) / denom;
            let unseen_lower = 1.0 - seen_lower;
            let backoff = if reserved > 0.0 && unseen_lower > 0.0 {
                (reserved / unseen_lower).log10()
            } else {
                0.0
            };
            backoffs.push((history.to_vec(), backoff));
        }
        for (history, b) in backoffs {
            let key: Vec<u32> = history.iter().map(|t| lm.intern(t)).collect();
            if let Some(e) = lm.grams[n - 2].get_mut(&key) {
                e.backoff = Some(F::of(b));
            }
        }
        for (gram, p) in new_entries {
            lm.insert(
                &gram,
                NGramEntry {
                    logprob: F::of(p),
                    backoff: None,
                },
            );
        }
    }
    Ok(lm)
}
