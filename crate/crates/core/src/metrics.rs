//! Word error rate and OOV rate.

use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("empty reference with a non-empty hypothesis")]
    EmptyReference,
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WerBreakdown<F> {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_length: usize,
    /// `(S + I + D) / reference_length`, 0 for an empty pair.
    pub wer: F,
}

impl<F> WerBreakdown<F> {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match,
    Substitution,
    Deletion,
    Insertion,
}

/// Minimal unit-cost alignment. Among alignments with the fewest edits the
/// one with the fewest substitutions wins; remaining ties are traced back
/// preferring the diagonal, then deletion, then insertion.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<EditOp> {
    let (n, m) = (reference.len(), hypothesis.len());
    // (edits, substitutions), compared lexicographically.
    let mut d = vec![vec![(0usize, 0usize); m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = (i, 0);
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = (j, 0);
    }
    for i in 1..=n {
        for j in 1..=m {
            let same = reference[i - 1] == hypothesis[j - 1];
            let (e, s) = d[i - 1][j - 1];
            let diag = if same { (e, s) } else { (e + 1, s + 1) };
            let del = (d[i - 1][j].0 + 1, d[i - 1][j].1);
            let ins = (d[i][j - 1].0 + 1, d[i][j - 1].1);
            d[i][j] = diag.min(del).min(ins);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i][j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            let (e, s) = d[i - 1][j - 1];
            let diag = if same { (e, s) } else { (e + 1, s + 1) };
            if diag == here {
                ops.push(if same { EditOp::Match } else { EditOp::Substitution });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && (d[i - 1][j].0 + 1, d[i - 1][j].1) == here {
            ops.push(EditOp::Deletion);
            i -= 1;
        } else {
            ops.push(EditOp::Insertion);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

pub fn wer<F: Real, T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<WerBreakdown<F>, MetricsError> {
    if reference.is_empty() && !hypothesis.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let mut out = WerBreakdown {
        substitutions: 0,
        insertions: 0,
        deletions: 0,
        reference_length: reference.len(),
        wer: F::zero(),
    };
    for op in align(reference, hypothesis) {
        match op {
            EditOp::Match => {}
            EditOp::Substitution => out.substitutions += 1,
            EditOp::Deletion => out.deletions += 1,
            EditOp::Insertion => out.insertions += 1,
        }
    }
    if out.reference_length > 0 {
        out.wer = F::of(out.errors() as f64 / out.reference_length as f64);
    }
    Ok(out)
}

/// Error counts pooled over utterances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusWer {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_length: usize,
    pub utterances: usize,
}

impl CorpusWer {
    pub fn add<F>(&mut self, b: &WerBreakdown<F>) {
        self.substitutions += b.substitutions;
        self.insertions += b.insertions;
        self.deletions += b.deletions;
        self.reference_length += b.reference_length;
        self.utterances += 1;
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// Total errors over total reference words; 0 for an empty corpus.
    pub fn wer<F: Real>(&self) -> F {
        if self.reference_length == 0 {
            F::zero()
        } else {
            F::of(self.errors() as f64 / self.reference_length as f64)
        }
    }
}

/// Fraction of running word tokens missing from `lex`.
pub fn oov_rate<F: Real, S: AsRef<str>>(tokens: &[S], lex: &Lexicon) -> Result<F, MetricsError> {
    if tokens.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let oov = tokens.iter().filter(|t| !lex.contains(t.as_ref())).count();
    Ok(F::of(oov as f64 / tokens.len() as f64))
}
