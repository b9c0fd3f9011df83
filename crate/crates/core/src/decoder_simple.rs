//! Unrestricted label-level beam search.

use std::cmp::Ordering;
use std::fmt::Write;

use thiserror::Error;

use crate::label_units::{LabelId, LabelVocab};
use crate::num::Real;
use crate::scorer::LabelScorer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeConfigError {
    #[error("beam size must be at least 1")]
    ZeroBeam,
    #[error("max_len must be at least 1")]
    ZeroMaxLen,
    #[error("no max_len given and the scorer has no input length hint")]
    NoMaxLen,
}

/// `3 + 2 * context_len` when the scorer knows its input length.
pub fn default_max_len(context_len: Option<usize>) -> Option<usize> {
    context_len.map(|n| 3 + 2 * n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleDecoderConfig<F> {
    pub beam_size: usize,
    /// Maximum number of emitted labels, EOS included.
    pub max_len: usize,
    /// Rank hypotheses by `score / len^alpha` instead of the raw score.
    pub length_exponent: Option<F>,
}

impl<F> SimpleDecoderConfig<F> {
    pub fn new(beam_size: usize, max_len: usize) -> Self {
        Self {
            beam_size,
            max_len,
            length_exponent: None,
        }
    }

    fn validate(&self) -> Result<(), DecodeConfigError> {
        if self.beam_size == 0 {
            return Err(DecodeConfigError::ZeroBeam);
        }
        if self.max_len == 0 {
            return Err(DecodeConfigError::ZeroMaxLen);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Hypothesis<S, F> {
    /// Emitted labels, ending in EOS once `ended`.
    pub labels: Vec<LabelId>,
    pub score: F,
    pub state: S,
    pub ended: bool,
}

/// At most `beam_size` hypotheses, best first.
#[derive(Debug, Clone)]
pub struct Beam<S, F> {
    hyps: Vec<Hypothesis<S, F>>,
}

impl<S, F> Beam<S, F> {
    pub fn hyps(&self) -> &[Hypothesis<S, F>] {
        &self.hyps
    }

    pub fn into_hyps(self) -> Vec<Hypothesis<S, F>> {
        self.hyps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry<F> {
    /// Label sequence including the final EOS.
    pub labels: Vec<LabelId>,
    pub score: F,
}

/// A candidate extension: parent index plus label, or a carried ended parent.
struct Candidate<F> {
    parent: usize,
    label: Option<LabelId>,
    score: F,
    rank: F,
}

fn rank_score<F: Real>(score: F, len: usize, alpha: Option<F>) -> F {
    match alpha {
        Some(a) if len > 0 => score / F::of(len as f64).powf(a),
        _ => score,
    }
}

/// Descending by score; ties go to the lexicographically smaller sequence.
pub(crate) fn cmp_scored<F: Real>(a: F, a_seq: &[LabelId], b: F, b_seq: &[LabelId]) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal).then_with(|| a_seq.cmp(b_seq))
}

fn candidate_seq<'a, S, F>(beam: &'a [Hypothesis<S, F>], c: &Candidate<F>, buf: &'a mut Vec<LabelId>) -> &'a [LabelId] {
    let parent = &beam[c.parent].labels;
    match c.label {
        None => parent,
        Some(l) => {
            buf.clear();
            buf.extend_from_slice(parent);
            buf.push(l);
            buf
        }
    }
}

/// Synchronous beam search over all label sequences. Every live hypothesis
/// is expanded by every label, ended ones are carried unchanged, and at step
/// `max_len` only EOS is allowed. Returns the ended hypotheses of the final
/// beam, best first.
pub fn decode_simple<F: Real, S: LabelScorer<F>>(
    scorer: &S,
    eos: LabelId,
    cfg: &SimpleDecoderConfig<F>,
) -> Result<Vec<NBestEntry<F>>, DecodeConfigError> {
    Ok(decode_simple_beam(scorer, eos, cfg)?
        .into_hyps()
        .into_iter()
        .filter(|h| h.ended)
        .map(|h| NBestEntry {
            labels: h.labels,
            score: h.score,
        })
        .collect())
}

/// [`decode_simple`] returning the final beam with scorer states.
pub fn decode_simple_beam<F: Real, S: LabelScorer<F>>(
    scorer: &S,
    eos: LabelId,
    cfg: &SimpleDecoderConfig<F>,
) -> Result<Beam<S::State, F>, DecodeConfigError> {
    cfg.validate()?;
    let mut beam = vec![Hypothesis {
        labels: Vec::new(),
        score: F::zero(),
        state: scorer.start(),
        ended: false,
    }];
    for t in 1..=cfg.max_len {
        if beam.iter().all(|h| h.ended) {
            break;
        }
        let mut cands = Vec::new();
        for (i, h) in beam.iter().enumerate() {
            if h.ended {
                cands.push(Candidate {
                    parent: i,
                    label: None,
                    score: h.score,
                    rank: rank_score(h.score, h.labels.len(), cfg.length_exponent),
                });
                continue;
            }
            let dist = scorer.log_dist(&h.state);
            let mut push = |l: LabelId| {
                let score = h.score + dist[l.index()];
                cands.push(Candidate {
                    parent: i,
                    label: Some(l),
                    score,
                    rank: rank_score(score, h.labels.len() + 1, cfg.length_exponent),
                });
            };
            if t == cfg.max_len {
                push(eos);
            } else {
                (0..dist.len()).map(LabelId::from).for_each(&mut push);
            }
        }

        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        let mut cmp = |a: &Candidate<F>, b: &Candidate<F>| {
            let sa = candidate_seq(&beam, a, &mut ba);
            let sb = candidate_seq(&beam, b, &mut bb);
            cmp_scored(a.rank, sa, b.rank, sb)
        };
        if cands.len() > cfg.beam_size {
            cands.select_nth_unstable_by(cfg.beam_size - 1, &mut cmp);
            cands.truncate(cfg.beam_size);
        }
        cands.sort_by(&mut cmp);

        beam = cands
            .into_iter()
            .map(|c| {
                let parent = &beam[c.parent];
                match c.label {
                    None => parent.clone(),
                    Some(l) => {
                        let mut labels = parent.labels.clone();
                        labels.push(l);
                        let ended = l == eos;
                        Hypothesis {
                            labels,
                            score: c.score,
                            state: if ended {
                                parent.state.clone()
                            } else {
                                scorer.step(&parent.state, l)
                            },
                            ended,
                        }
                    }
                }
            })
            .collect();
    }
    Ok(Beam { hyps: beam })
}

/// N-best lines `utt_id<TAB>rank<TAB>score<TAB>labels`, rank from 1, labels
/// space-separated.
pub fn format_nbest<F: Real>(utt_id: &str, nbest: &[NBestEntry<F>], vocab: &LabelVocab) -> String {
    let mut out = String::new();
    for (i, e) in nbest.iter().enumerate() {
        let labels: Vec<&str> = e.labels.iter().map(|&l| vocab.label(l)).collect();
        let _ = writeln!(out, "{utt_id}\t{}\t{}\t{}", i + 1, e.score, labels.join(" "));
    }
    out
}
