//! Transcription ↔ label-sequence mapping and target-length filtering.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::label_units::{apply_bpe, char_bpe_units, BpeModel, LabelId, LabelVocab, UnitKind, UnitScheme};
use crate::lexicon::{Lexicon, WordEndVariant};
use crate::symbols::{self, EOW, SPACE, UNK};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("word `{0}` is out of vocabulary")]
    Oov(String),
    #[error("word `{0}` is out of vocabulary and the vocabulary has no `{UNK}` label")]
    NoUnkLabel(String),
    #[error("label `{0}` of the lexicon is missing from the vocabulary")]
    UnknownLabel(String),
    #[error("scheme `{0}` needs a lexicon")]
    MissingLexicon(UnitKind),
    #[error("scheme `{0}` needs a BPE model")]
    MissingBpe(UnitKind),
    #[error("word `{0}` has an empty label encoding")]
    EmptyEncoding(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: expected `utt_id<TAB>...`")]
    MissingTab { line: usize },
    #[error("line {line}: duplicate utterance id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: invalid label id `{text}`")]
    BadLabelId { line: usize, text: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("no lengths given")]
    Empty,
    #[error("drop fraction {0} outside [0, 1)")]
    BadFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    pub words: Vec<String>,
}

impl Utterance {
    pub fn new<S: Into<String>>(id: &str, words: impl IntoIterator<Item = S>) -> Self {
        Self {
            id: id.to_string(),
            words: words.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTarget {
    pub utt_id: String,
    pub labels: Vec<LabelId>,
}

/// What to do with words that cannot be encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovMode {
    #[default]
    Strict,
    /// Replace the word by a single UNK label.
    Lenient,
}

/// Everything needed to encode words into labels of one scheme and back.
#[derive(Debug, Clone)]
pub struct TargetCodec {
    scheme: UnitScheme,
    vocab: LabelVocab,
    lexicon: Option<Lexicon>,
    bpe: Option<BpeModel>,
    reverse: HashMap<Vec<String>, String>,
    max_pron_len: usize,
}

impl TargetCodec {
    /// `lexicon` must be the prepared lexicon for phone schemes; for other
    /// schemes it only supplies the word list used by tree search.
    pub fn new(
        scheme: UnitScheme,
        vocab: LabelVocab,
        lexicon: Option<Lexicon>,
        bpe: Option<BpeModel>,
    ) -> Result<Self, EncodeError> {
        if scheme.kind.is_phone() && lexicon.is_none() {
            return Err(EncodeError::MissingLexicon(scheme.kind));
        }
        if scheme.kind.is_bpe() && bpe.is_none() {
            return Err(EncodeError::MissingBpe(scheme.kind));
        }
        let mut reverse = HashMap::new();
        let mut max_pron_len = 0;
        if scheme.kind.is_phone() {
            // BTreeMap order: the smallest homophone wins the reverse entry.
            for (word, prons) in lexicon.iter().flat_map(|l| l.entries()) {
                let phones = prons[0].phones.clone();
                max_pron_len = max_pron_len.max(phones.len());
                reverse.entry(phones).or_insert_with(|| word.to_string());
            }
        }
        Ok(Self {
            scheme,
            vocab,
            lexicon,
            bpe,
            reverse,
            max_pron_len,
        })
    }

    pub fn scheme(&self) -> &UnitScheme {
        &self.scheme
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        self.lexicon.as_ref()
    }

    pub fn bpe(&self) -> Option<&BpeModel> {
        self.bpe.as_ref()
    }

    /// Label emitted between words, if the scheme has one.
    pub fn separator(&self) -> Option<LabelId> {
        match self.scheme.kind {
            UnitKind::SingleChar => self.vocab.id(SPACE),
            _ => None,
        }
    }

    fn ids(&self, word: &str, labels: &[String], phone_labels: bool) -> Result<Vec<LabelId>, EncodeError> {
        labels
            .iter()
            .map(|l| {
                self.vocab.id(l).ok_or_else(|| {
                    if phone_labels {
                        EncodeError::UnknownLabel(l.clone())
                    } else {
                        EncodeError::Oov(word.to_string())
                    }
                })
            })
            .collect()
    }

    /// Label sequence of one word, without any separator.
    pub fn word_labels(&self, word: &str) -> Result<Vec<LabelId>, EncodeError> {
        let oov = || EncodeError::Oov(word.to_string());
        let labels = match self.scheme.kind {
            UnitKind::SinglePhone | UnitKind::PhoneBpe => {
                let phones = self
                    .lexicon
                    .as_ref()
                    .and_then(|l| l.phones(word))
                    .ok_or_else(oov)?;
                let units = match &self.bpe {
                    Some(m) if self.scheme.kind == UnitKind::PhoneBpe => apply_bpe(m, phones),
                    _ => phones.to_vec(),
                };
                return self.ids(word, &units, true).and_then(|ids| self.non_empty(word, ids));
            }
            UnitKind::SingleChar => word.chars().map(String::from).collect(),
            UnitKind::CharBpe => {
                if word.contains(EOW) {
                    return Err(oov());
                }
                apply_bpe(self.bpe.as_ref().expect("checked in new"), &char_bpe_units(word))
            }
            UnitKind::WholeWord => vec![word.to_string()],
        };
        self.ids(word, &labels, false).and_then(|ids| self.non_empty(word, ids))
    }

    fn non_empty(&self, word: &str, ids: Vec<LabelId>) -> Result<Vec<LabelId>, EncodeError> {
        if ids.is_empty() {
            Err(EncodeError::EmptyEncoding(word.to_string()))
        } else {
            Ok(ids)
        }
    }

    /// Concatenated per-word label sequences; never contains EOS.
    pub fn encode(&self, utt: &Utterance, mode: OovMode) -> Result<EncodedTarget, EncodeError> {
        let sep = self.separator();
        let mut labels = Vec::new();
        for (i, word) in utt.words.iter().enumerate() {
            if i > 0 {
                labels.extend(sep);
            }
            match self.word_labels(word) {
                Ok(ids) => labels.extend(ids),
                Err(EncodeError::Oov(w)) if mode == OovMode::Lenient => {
                    labels.push(self.vocab.unk().ok_or(EncodeError::NoUnkLabel(w))?);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(EncodedTarget {
            utt_id: utt.id.clone(),
            labels,
        })
    }

    /// Maps a decoded label sequence (EOS already stripped) back to words.
    /// Spans that match no lexicon entry become the UNK word.
    pub fn decode_to_words(&self, labels: &[LabelId]) -> Vec<String> {
        let eos = self.vocab.eos();
        let unk = self.vocab.unk();
        let labels: Vec<LabelId> = labels.iter().copied().filter(|&l| l != eos).collect();
        match self.scheme.kind {
            UnitKind::WholeWord => labels
                .iter()
                .map(|&l| self.vocab.label(l).to_string())
                .collect(),
            UnitKind::SingleChar => self.decode_chars(&labels, unk),
            UnitKind::CharBpe => self.decode_char_bpe(&labels, unk),
            UnitKind::SinglePhone | UnitKind::PhoneBpe => self.decode_phones(&labels, unk),
        }
    }

    fn decode_chars(&self, labels: &[LabelId], unk: Option<LabelId>) -> Vec<String> {
        let sep = self.separator();
        let mut words = Vec::new();
        for chunk in labels.split(|&l| Some(l) == sep) {
            if chunk.is_empty() {
                continue;
            }
            if chunk.iter().any(|&l| Some(l) == unk) {
                words.push(UNK.to_string());
            } else {
                words.push(chunk.iter().map(|&l| self.vocab.label(l)).collect());
            }
        }
        words
    }

    fn decode_char_bpe(&self, labels: &[LabelId], unk: Option<LabelId>) -> Vec<String> {
        let mut words = Vec::new();
        let mut pending = String::new();
        for &l in labels {
            if Some(l) == unk {
                if !pending.is_empty() {
                    words.push(std::mem::take(&mut pending));
                }
                words.push(UNK.to_string());
                continue;
            }
            let text = self.vocab.label(l);
            match text.strip_suffix(EOW) {
                Some(stem) => {
                    pending.push_str(stem);
                    words.push(std::mem::take(&mut pending));
                }
                None => pending.push_str(text),
            }
        }
        if !pending.is_empty() {
            words.push(pending);
        }
        words
    }

    fn decode_phones(&self, labels: &[LabelId], unk: Option<LabelId>) -> Vec<String> {
        let joiner = self.bpe.as_ref().map(BpeModel::joiner).unwrap_or("");
        let mut words = Vec::new();
        let mut chunk: Vec<String> = Vec::new();
        let mut prev_word_end = false;
        for &l in labels {
            if Some(l) == unk {
                self.flush_phone_chunk(&mut chunk, &mut words);
                words.push(UNK.to_string());
                prev_word_end = false;
                continue;
            }
            let text = self.vocab.label(l);
            let phones: Vec<&str> = if self.scheme.kind == UnitKind::PhoneBpe && !joiner.is_empty() {
                text.split(joiner).collect()
            } else {
                vec![text]
            };
            for phone in phones {
                let disambig = symbols::is_disambig(phone);
                if prev_word_end && !disambig {
                    self.flush_phone_chunk(&mut chunk, &mut words);
                }
                prev_word_end = false;
                chunk.push(phone.to_string());
                match self.scheme.variant {
                    WordEndVariant::Eow if phone == EOW => {
                        self.flush_phone_chunk(&mut chunk, &mut words)
                    }
                    WordEndVariant::WordEndPhone
                        if symbols::is_word_end_phone(phone) || (disambig && !chunk.is_empty()) =>
                    {
                        // A word ends after `x#` and any `$k` that follows it.
                        prev_word_end = true;
                    }
                    WordEndVariant::None if disambig => {
                        self.flush_phone_chunk(&mut chunk, &mut words)
                    }
                    _ => {}
                }
            }
        }
        self.flush_phone_chunk(&mut chunk, &mut words);
        words
    }

    fn flush_phone_chunk(&self, chunk: &mut Vec<String>, words: &mut Vec<String>) {
        if chunk.is_empty() {
            return;
        }
        if let Some(w) = self.reverse.get(chunk.as_slice()) {
            words.push(w.clone());
        } else if self.scheme.variant == WordEndVariant::None {
            match self.segment(chunk) {
                Some(ws) => words.extend(ws),
                None => words.push(UNK.to_string()),
            }
        } else {
            words.push(UNK.to_string());
        }
        chunk.clear();
    }

    /// Splits an unmarked phone run into the fewest lexicon words; among
    /// equally short splits the one with the shortest first word wins.
    fn segment(&self, phones: &[String]) -> Option<Vec<String>> {
        let n = phones.len();
        // best[i]: fewest words covering phones[i..], with the chosen next cut.
        let mut best: Vec<Option<(usize, usize)>> = vec![None; n + 1];
        best[n] = Some((0, n));
        for i in (0..n).rev() {
            for j in i + 1..=n.min(i + self.max_pron_len) {
                if !self.reverse.contains_key(&phones[i..j]) {
                    continue;
                }
                if let Some((count, _)) = best[j] {
                    if best[i].is_none_or(|(c, _)| count + 1 < c) {
                        best[i] = Some((count + 1, j));
                    }
                }
            }
        }
        best[0]?;
        let mut words = Vec::new();
        let mut i = 0;
        while i < n {
            let (_, j) = best[i].expect("reachable");
            words.push(self.reverse[&phones[i..j]].clone());
            i = j;
        }
        Some(words)
    }
}

/// Smallest maximum length such that the fraction of lengths strictly above
/// it is at most `drop_fraction`.
pub fn length_filter_threshold(lengths: &[usize], drop_fraction: f64) -> Result<usize, FilterError> {
    if lengths.is_empty() {
        return Err(FilterError::Empty);
    }
    if !(0.0..1.0).contains(&drop_fraction) {
        return Err(FilterError::BadFraction(drop_fraction));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let allowed = ((drop_fraction * n as f64) + 1e-9).floor() as usize;
    Ok(sorted[n - 1 - allowed.min(n - 1)])
}

/// Parses `utt_id<TAB>word word ...` lines.
pub fn parse_corpus(text: &str) -> Result<Vec<Utterance>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line.split_once('\t').ok_or(CorpusError::MissingTab { line: i + 1 })?;
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateId {
                line: i + 1,
                id: id.to_string(),
            });
        }
        out.push(Utterance::new(id, rest.split_whitespace()));
    }
    Ok(out)
}

pub fn format_corpus(utts: &[Utterance]) -> String {
    utts.iter()
        .map(|u| format!("{}\t{}\n", u.id, u.words.join(" ")))
        .collect()
}

/// Writes `utt_id<TAB>id id ...` lines.
pub fn format_targets(targets: &[EncodedTarget]) -> String {
    targets
        .iter()
        .map(|t| {
            let ids: Vec<String> = t.labels.iter().map(|l| l.0.to_string()).collect();
            format!("{}\t{}\n", t.utt_id, ids.join(" "))
        })
        .collect()
}

pub fn parse_targets(text: &str) -> Result<Vec<EncodedTarget>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line.split_once('\t').ok_or(CorpusError::MissingTab { line: i + 1 })?;
        let labels = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map(LabelId).map_err(|_| CorpusError::BadLabelId {
                    line: i + 1,
                    text: t.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        out.push(EncodedTarget {
            utt_id: id.to_string(),
            labels,
        });
    }
    Ok(out)
}
