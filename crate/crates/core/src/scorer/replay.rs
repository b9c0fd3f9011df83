use std::collections::HashMap;

use super::{eos_row, DumpRows, DumpUtterance, LabelScorer};
use crate::label_units::LabelId;
use crate::num::Real;

#[derive(Debug, Clone)]
struct TrieNode<F> {
    children: HashMap<LabelId, usize>,
    row: Option<Vec<F>>,
}

#[derive(Debug, Clone)]
enum Rows<F> {
    TimeMajor(Vec<Vec<F>>),
    Trie(Vec<TrieNode<F>>),
}

/// Replays the rows of one dumped utterance.
///
/// Past the last time-major row, or for a history the dump does not
/// contain, the scorer puts all mass on EOS.
#[derive(Debug, Clone)]
pub struct ReplayScorer<F> {
    rows: Rows<F>,
    vocab_size: usize,
    eos: LabelId,
}

impl<F: Real> ReplayScorer<F> {
    pub fn new(utt: &DumpUtterance, vocab_size: usize, eos: LabelId) -> Self {
        let convert = |row: &[f32]| row.iter().map(|&x| F::of(f64::from(x))).collect::<Vec<F>>();
        let rows = match &utt.rows {
            DumpRows::TimeMajor(rows) => Rows::TimeMajor(rows.iter().map(|r| convert(r)).collect()),
            DumpRows::History(rows) => {
                let mut nodes = vec![TrieNode {
                    children: HashMap::new(),
                    row: None,
                }];
                for (hist, row) in rows {
                    let mut cur = 0;
                    for &l in hist {
                        cur = match nodes[cur].children.get(&l) {
                            Some(&next) => next,
                            None => {
                                nodes.push(TrieNode {
                                    children: HashMap::new(),
                                    row: None,
                                });
                                let next = nodes.len() - 1;
                                nodes[cur].children.insert(l, next);
                                next
                            }
                        };
                    }
                    nodes[cur].row = Some(convert(row));
                }
                Rows::Trie(nodes)
            }
        };
        Self {
            rows,
            vocab_size,
            eos,
        }
    }
}

impl<F: Real> LabelScorer<F> for ReplayScorer<F> {
    /// Step index for time-major dumps, trie node otherwise; `None` once the
    /// history has left the trie.
    type State = Option<usize>;

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn start(&self) -> Option<usize> {
        Some(0)
    }

    fn step(&self, state: &Option<usize>, label: LabelId) -> Option<usize> {
        let s = (*state)?;
        match &self.rows {
            Rows::TimeMajor(_) => Some(s + 1),
            Rows::Trie(nodes) => nodes[s].children.get(&label).copied(),
        }
    }

    fn log_dist(&self, state: &Option<usize>) -> Vec<F> {
        let row = state.and_then(|s| match &self.rows {
            Rows::TimeMajor(rows) => rows.get(s),
            Rows::Trie(nodes) => nodes[s].row.as_ref(),
        });
        match row {
            Some(r) => r.clone(),
            None => eos_row(self.vocab_size, self.eos),
        }
    }

    fn context_len(&self) -> Option<usize> {
        match &self.rows {
            Rows::TimeMajor(rows) => Some(rows.len()),
            Rows::Trie(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ps: &[f32]) -> Vec<f32> {
        ps.iter().map(|p| p.ln()).collect()
    }

    #[test]
    fn history_rows_are_replayed_exactly() {
        let r0 = row(&[0.1, 0.6, 0.3]);
        let r1 = row(&[0.2, 0.2, 0.6]);
        let utt = DumpUtterance {
            utt_id: "u".into(),
            rows: DumpRows::History(vec![(vec![], r0.clone()), (vec![LabelId(1)], r1.clone())]),
        };
        let s: ReplayScorer<f32> = ReplayScorer::new(&utt, 3, LabelId(0));
        let st = s.start();
        assert_eq!(s.log_dist(&st), r0);
        let st1 = s.step(&st, LabelId(1));
        assert_eq!(s.log_dist(&st1), r1);
        let off = s.step(&st, LabelId(2));
        assert_eq!(s.log_dist(&off), eos_row::<f32>(3, LabelId(0)));
        assert_eq!(s.step(&off, LabelId(1)), None);
    }

    #[test]
    fn time_major_ignores_labels() {
        let r0 = row(&[0.5, 0.5]);
        let r1 = row(&[0.9, 0.1]);
        let utt = DumpUtterance {
            utt_id: "u".into(),
            rows: DumpRows::TimeMajor(vec![r0, r1.clone()]),
        };
        let s: ReplayScorer<f64> = ReplayScorer::new(&utt, 2, LabelId(0));
        let a = s.step(&s.start(), LabelId(0));
        let b = s.step(&s.start(), LabelId(1));
        assert_eq!(s.log_dist(&a), s.log_dist(&b));
        assert_eq!(s.log_dist(&a)[1], f64::from(r1[1]));
        assert_eq!(s.context_len(), Some(2));
        let past = s.step(&a, LabelId(1));
        assert_eq!(s.log_dist(&past)[0], 0.0);
    }
}
