use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use super::tree::{NodeId, PrefixTree};
use crate::decoder_simple::DecodeConfigError;
use crate::label_units::{LabelId, LabelVocab};
use crate::lm::{lookahead_table, LmState, NGramLm};
use crate::num::{log10_to_ln, Real};
use crate::scorer::LabelScorer;
use crate::symbols::LM_EOS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeDecodeError {
    #[error(transparent)]
    Config(#[from] DecodeConfigError),
    #[error("scorer has {scorer} labels but the tree was built for {tree}")]
    VocabMismatch { scorer: usize, tree: usize },
    #[error("LM weight must be finite and non-negative, got {0}")]
    BadWeight(f64),
    #[error("no hypothesis ended within max_len; best partial ({best_partial_score}): {}", best_partial_words.join(" "))]
    NoEndedHypothesis {
        best_partial_words: Vec<String>,
        best_partial_score: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDecoderConfig<F> {
    pub beam_size: usize,
    /// Maximum number of emitted labels, EOS included.
    pub max_len: usize,
    /// Word LM scale.
    pub lambda: F,
    pub lookahead: bool,
}

impl<F: Real> TreeDecoderConfig<F> {
    pub const DEFAULT_BEAM: usize = 12;
    pub const DEFAULT_LAMBDA: f64 = 0.3;

    pub fn new(beam_size: usize, max_len: usize) -> Self {
        Self {
            beam_size,
            max_len,
            lambda: F::of(Self::DEFAULT_LAMBDA),
            lookahead: false,
        }
    }

    fn validate(&self) -> Result<(), TreeDecodeError> {
        if self.beam_size == 0 {
            return Err(DecodeConfigError::ZeroBeam.into());
        }
        if self.max_len == 0 {
            return Err(DecodeConfigError::ZeroMaxLen.into());
        }
        let l = self.lambda.as_f64();
        if !(l.is_finite() && l >= 0.0) {
            return Err(TreeDecodeError::BadWeight(l));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDecodeResult<F> {
    pub words: Vec<String>,
    /// Emitted labels, ending in EOS.
    pub labels: Vec<LabelId>,
    /// For each word, the number of labels emitted when it ended.
    pub word_ends: Vec<usize>,
    /// `am_score + lambda * lm_score`.
    pub score: F,
    /// Sum of scorer log-probabilities.
    pub am_score: F,
    /// Natural-log word LM score of the words and the sentence end.
    pub lm_score: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Pos {
    Node(NodeId),
    /// Just past a word end in a tree whose words are separated by a label.
    AfterWord,
}

#[derive(Debug, Clone)]
struct Hyp<S, F> {
    pos: Pos,
    words: Vec<u32>,
    word_ends: Vec<usize>,
    labels: Vec<LabelId>,
    am: F,
    lm: F,
    /// Lookahead currently applied (natural log, unscaled).
    la: F,
    scorer_state: S,
    lm_state: LmState,
    ended: bool,
}

struct Cand<F> {
    parent: usize,
    label: Option<LabelId>,
    pos: Pos,
    word: Option<u32>,
    lm_next: Option<LmState>,
    am: F,
    lm: F,
    la: F,
    ended: bool,
    total: F,
}

/// Tree search over one prefix tree and word LM; reusable across
/// utterances.
#[derive(Debug, Clone)]
pub struct TreeSearch<'a, F> {
    tree: &'a PrefixTree,
    lm: &'a NGramLm<F>,
    cfg: TreeDecoderConfig<F>,
    /// Natural-log lookahead per node, zero when lookahead is off.
    lookahead: Vec<F>,
}

impl<'a, F: Real> TreeSearch<'a, F> {
    pub fn new(tree: &'a PrefixTree, lm: &'a NGramLm<F>, cfg: TreeDecoderConfig<F>) -> Result<Self, TreeDecodeError> {
        cfg.validate()?;
        let lookahead = if cfg.lookahead {
            lookahead_table(tree, lm).into_iter().map(log10_to_ln).collect()
        } else {
            vec![F::zero(); tree.len()]
        };
        Ok(Self {
            tree,
            lm,
            cfg,
            lookahead,
        })
    }

    pub fn config(&self) -> &TreeDecoderConfig<F> {
        &self.cfg
    }

    fn la(&self, pos: Pos) -> F {
        match pos {
            Pos::Node(n) => self.lookahead[n.index()],
            Pos::AfterWord => self.lookahead[PrefixTree::ROOT.index()],
        }
    }

    fn can_end<S>(&self, h: &Hyp<S, F>) -> bool {
        match h.pos {
            Pos::AfterWord => true,
            Pos::Node(n) => n == PrefixTree::ROOT && (self.tree.separator().is_none() || h.labels.is_empty()),
        }
    }

    fn lm_ln(&self, state: &LmState, token: &str) -> (F, LmState) {
        let (p, next) = self.lm.score(state, token);
        (log10_to_ln(p), next)
    }

    /// LM score of the sentence end; zero for models without `</s>`.
    fn sentence_end(&self, state: &LmState) -> F {
        if self.lm.contains(LM_EOS) {
            self.lm_ln(state, LM_EOS).0
        } else {
            F::zero()
        }
    }

    /// Best ended hypothesis.
    pub fn decode<S: LabelScorer<F>>(&self, scorer: &S) -> Result<TreeDecodeResult<F>, TreeDecodeError> {
        Ok(self.decode_nbest(scorer)?.swap_remove(0))
    }

    /// Ended hypotheses of the final beam, best first; never empty.
    pub fn decode_nbest<S: LabelScorer<F>>(&self, scorer: &S) -> Result<Vec<TreeDecodeResult<F>>, TreeDecodeError> {
        if scorer.vocab_size() != self.tree.vocab_size() {
            return Err(TreeDecodeError::VocabMismatch {
                scorer: scorer.vocab_size(),
                tree: self.tree.vocab_size(),
            });
        }
        let lambda = self.cfg.lambda;
        let eos = self.tree.eos();
        let root = Pos::Node(PrefixTree::ROOT);
        let after_word = if self.tree.separator().is_some() {
            Pos::AfterWord
        } else {
            root
        };
        let mut beam = vec![Hyp {
            pos: root,
            words: Vec::new(),
            word_ends: Vec::new(),
            labels: Vec::new(),
            am: F::zero(),
            lm: F::zero(),
            la: self.la(root),
            scorer_state: scorer.start(),
            lm_state: self.lm.begin_state(),
            ended: false,
        }];

        for t in 1..=self.cfg.max_len {
            if beam.iter().all(|h| h.ended) {
                break;
            }
            let last = t == self.cfg.max_len;
            let mut cands: Vec<Cand<F>> = Vec::new();
            for (i, h) in beam.iter().enumerate() {
                let mut push = |label, pos, word, lm_next, am: F, lm: F, la: F, ended| {
                    cands.push(Cand {
                        parent: i,
                        label,
                        pos,
                        word,
                        lm_next,
                        am,
                        lm,
                        la,
                        ended,
                        total: am + lambda * (lm + la),
                    });
                };
                if h.ended {
                    push(None, h.pos, None, None, h.am, h.lm, h.la, true);
                    continue;
                }
                let dist = scorer.log_dist(&h.scorer_state);
                if self.can_end(h) {
                    let p = self.sentence_end(&h.lm_state);
                    push(Some(eos), h.pos, None, None, h.am + dist[eos.index()], h.lm + p, F::zero(), true);
                }
                if last {
                    continue;
                }
                match h.pos {
                    Pos::AfterWord => {
                        let sep = self.tree.separator().expect("AfterWord only with a separator");
                        push(Some(sep), root, None, None, h.am + dist[sep.index()], h.lm, self.la(root), false);
                    }
                    Pos::Node(n) => {
                        for (&l, &c) in &self.tree.node(n).children {
                            let am = h.am + dist[l.index()];
                            let node = self.tree.node(c);
                            if !node.children.is_empty() {
                                push(Some(l), Pos::Node(c), None, None, am, h.lm, self.la(Pos::Node(c)), false);
                            }
                            for &w in &node.word_ends {
                                let (p, next) = self.lm_ln(&h.lm_state, self.tree.word(w));
                                push(Some(l), after_word, Some(w), Some(next), am, h.lm + p, self.la(after_word), false);
                            }
                        }
                    }
                }
            }
            if cands.is_empty() {
                break;
            }
            beam = self.prune(beam, cands, scorer);
        }

        let mut ended: Vec<TreeDecodeResult<F>> = beam
            .iter()
            .filter(|h| h.ended)
            .map(|h| self.result(h))
            .collect();
        if ended.is_empty() {
            let best = &beam[0];
            return Err(TreeDecodeError::NoEndedHypothesis {
                best_partial_words: best.words.iter().map(|&w| self.tree.word(w).to_string()).collect(),
                best_partial_score: (best.am + lambda * (best.lm + best.la)).as_f64(),
            });
        }
        ended.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.words.cmp(&b.words))
                .then_with(|| a.labels.cmp(&b.labels))
        });
        Ok(ended)
    }

    fn result<S>(&self, h: &Hyp<S, F>) -> TreeDecodeResult<F> {
        TreeDecodeResult {
            words: h.words.iter().map(|&w| self.tree.word(w).to_string()).collect(),
            labels: h.labels.clone(),
            word_ends: h.word_ends.clone(),
            score: h.am + self.cfg.lambda * h.lm,
            am_score: h.am,
            lm_score: h.lm,
        }
    }

    fn prune<S: LabelScorer<F>>(
        &self,
        beam: Vec<Hyp<S::State, F>>,
        mut cands: Vec<Cand<F>>,
        scorer: &S,
    ) -> Vec<Hyp<S::State, F>> {
        let cmp = |a: &Cand<F>, b: &Cand<F>| {
            let (pa, pb) = (&beam[a.parent], &beam[b.parent]);
            b.total
                .partial_cmp(&a.total)
                .unwrap_or(Ordering::Equal)
                .then_with(|| pa.words.iter().chain(&a.word).cmp(pb.words.iter().chain(&b.word)))
                .then_with(|| pa.labels.iter().chain(&a.label).cmp(pb.labels.iter().chain(&b.label)))
        };
        if cands.len() > self.cfg.beam_size {
            cands.select_nth_unstable_by(self.cfg.beam_size - 1, cmp);
            cands.truncate(self.cfg.beam_size);
        }
        cands.sort_by(cmp);

        let eos = self.tree.eos();
        let mut stepped: HashMap<(usize, LabelId), S::State> = HashMap::new();
        cands
            .into_iter()
            .map(|c| {
                let p = &beam[c.parent];
                let Some(label) = c.label else {
                    return p.clone();
                };
                let scorer_state = if label == eos {
                    p.scorer_state.clone()
                } else {
                    stepped
                        .entry((c.parent, label))
                        .or_insert_with(|| scorer.step(&p.scorer_state, label))
                        .clone()
                };
                let mut labels = p.labels.clone();
                labels.push(label);
                let mut words = p.words.clone();
                let mut word_ends = p.word_ends.clone();
                if let Some(w) = c.word {
                    words.push(w);
                    word_ends.push(labels.len());
                }
                Hyp {
                    pos: c.pos,
                    words,
                    word_ends,
                    labels,
                    am: c.am,
                    lm: c.lm,
                    la: c.la,
                    scorer_state,
                    lm_state: c.lm_next.unwrap_or_else(|| p.lm_state.clone()),
                    ended: c.ended,
                }
            })
            .collect()
    }
}

/// One-shot tree decode.
pub fn decode_tree<F: Real, S: LabelScorer<F>>(
    scorer: &S,
    tree: &PrefixTree,
    word_lm: &NGramLm<F>,
    cfg: TreeDecoderConfig<F>,
) -> Result<TreeDecodeResult<F>, TreeDecodeError> {
    TreeSearch::new(tree, word_lm, cfg)?.decode(scorer)
}

/// `utt_id<TAB>score<TAB>words`, plus with `trace` one line per word:
/// `utt_id<TAB>#<index><TAB>word<TAB>labels`.
pub fn format_tree_result<F: Real>(
    utt_id: &str,
    res: &TreeDecodeResult<F>,
    vocab: &LabelVocab,
    trace: bool,
) -> String {
    let mut out = format!("{utt_id}\t{}\t{}\n", res.score, res.words.join(" "));
    if trace {
        let mut start = 0;
        for (i, (w, &end)) in res.words.iter().zip(&res.word_ends).enumerate() {
            let labels: Vec<&str> = res.labels[start..end].iter().map(|&l| vocab.label(l)).collect();
            let _ = writeln!(out, "{utt_id}\t#{}\t{w}\t{}", i + 1, labels.join(" "));
            start = end;
        }
    }
    out
}
