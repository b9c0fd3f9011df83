//! Label unit schemes and their vocabularies.

pub mod bpe;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bpe::{apply_bpe, train_bpe, BpeError, BpeModel};

use crate::lexicon::{Lexicon, WordEndVariant};
use crate::symbols::{EOS, EOW, PHONE_BPE_JOINER, SPACE, UNK};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("scheme `{0}` needs a pronunciation lexicon")]
    MissingLexicon(UnitKind),
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("vocabulary line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("vocabulary has no `{EOS}` label")]
    MissingEos,
    #[error("vocabulary line {line}: empty label")]
    EmptyLabel { line: usize },
}

/// Index into a [`LabelVocab`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for LabelId {
    fn from(i: usize) -> Self {
        Self(i as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitKind {
    SinglePhone,
    PhoneBpe,
    SingleChar,
    CharBpe,
    WholeWord,
}

impl UnitKind {
    pub fn is_phone(self) -> bool {
        matches!(self, Self::SinglePhone | Self::PhoneBpe)
    }

    pub fn is_bpe(self) -> bool {
        matches!(self, Self::PhoneBpe | Self::CharBpe)
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SinglePhone => "single-phone",
            Self::PhoneBpe => "phone-bpe",
            Self::SingleChar => "single-char",
            Self::CharBpe => "char-bpe",
            Self::WholeWord => "whole-word",
        })
    }
}

impl FromStr for UnitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.replace('_', "-").as_str() {
            "single-phone" => Self::SinglePhone,
            "phone-bpe" => Self::PhoneBpe,
            "single-char" => Self::SingleChar,
            "char-bpe" => Self::CharBpe,
            "whole-word" => Self::WholeWord,
            other => return Err(format!("unknown unit kind `{other}`")),
        })
    }
}

/// A label unit scheme: unit kind plus its phone-specific and BPE options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitScheme {
    pub kind: UnitKind,
    pub variant: WordEndVariant,
    pub disambig: bool,
    pub bpe_merges: Option<usize>,
}

impl UnitScheme {
    pub fn single_phone(variant: WordEndVariant, disambig: bool) -> Self {
        Self {
            kind: UnitKind::SinglePhone,
            variant,
            disambig,
            bpe_merges: None,
        }
    }

    pub fn phone_bpe(variant: WordEndVariant, disambig: bool, merges: usize) -> Self {
        Self {
            kind: UnitKind::PhoneBpe,
            variant,
            disambig,
            bpe_merges: Some(merges),
        }
    }

    pub fn single_char() -> Self {
        Self {
            kind: UnitKind::SingleChar,
            variant: WordEndVariant::None,
            disambig: false,
            bpe_merges: None,
        }
    }

    pub fn char_bpe(merges: usize) -> Self {
        Self {
            kind: UnitKind::CharBpe,
            bpe_merges: Some(merges),
            ..Self::single_char()
        }
    }

    pub fn whole_word() -> Self {
        Self {
            kind: UnitKind::WholeWord,
            ..Self::single_char()
        }
    }

    pub fn validate(&self) -> Result<(), UnitError> {
        if !self.kind.is_phone() && (self.variant != WordEndVariant::None || self.disambig) {
            return Err(UnitError::InvalidScheme(format!(
                "word-end variants and disambiguation apply to phone units only, not `{}`",
                self.kind
            )));
        }
        if self.kind.is_bpe() != self.bpe_merges.is_some() {
            return Err(UnitError::InvalidScheme(format!(
                "merge count must be given exactly for BPE units (kind `{}`)",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn has_unk(&self) -> bool {
        self.disambig || self.kind == UnitKind::WholeWord
    }

    /// Whether label sequences mark every word boundary, so that decoding a
    /// concatenation of words is unambiguous.
    pub fn marks_word_boundaries(&self) -> bool {
        match self.kind {
            UnitKind::SinglePhone | UnitKind::PhoneBpe => self.variant != WordEndVariant::None,
            _ => true,
        }
    }
}

impl fmt::Display for UnitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if self.kind.is_phone() {
            write!(f, "/{}", self.variant)?;
            if self.disambig {
                f.write_str("/disambig")?;
            }
        }
        if let Some(m) = self.bpe_merges {
            write!(f, "/{m}")?;
        }
        Ok(())
    }
}

/// Label inventory: special labels first, then the rest in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVocab {
    labels: Vec<String>,
    ids: HashMap<String, LabelId>,
    eos: LabelId,
    unk: Option<LabelId>,
}

impl LabelVocab {
    /// Builds `EOS [UNK] sorted(labels)`; duplicates and specials in `labels`
    /// are ignored.
    pub fn build<I, S>(labels: I, with_unk: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let rest: BTreeSet<String> = labels
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .filter(|s| s != EOS && s != UNK)
            .collect();
        let mut all = vec![EOS.to_string()];
        if with_unk {
            all.push(UNK.to_string());
        }
        all.extend(rest);
        Self::from_labels(all).expect("built labels are unique and contain EOS")
    }

    /// Uses `labels` in the given order, line index = id.
    pub fn from_labels(labels: Vec<String>) -> Result<Self, UnitError> {
        let mut ids = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(UnitError::EmptyLabel { line: i + 1 });
            }
            if ids.insert(l.clone(), LabelId::from(i)).is_some() {
                return Err(UnitError::DuplicateLabel {
                    line: i + 1,
                    label: l.clone(),
                });
            }
        }
        let eos = *ids.get(EOS).ok_or(UnitError::MissingEos)?;
        let unk = ids.get(UNK).copied();
        Ok(Self {
            labels,
            ids,
            eos,
            unk,
        })
    }

    /// Reads the one-label-per-line format.
    pub fn parse(text: &str) -> Result<Self, UnitError> {
        Self::from_labels(
            text.lines()
                .map(|l| l.trim_end_matches('\r').to_string())
                .collect(),
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.labels {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of [`Self::to_text`]; identifies the vocabulary in
    /// posterior dumps.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<LabelId> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: LabelId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn eos(&self) -> LabelId {
        self.eos
    }

    pub fn unk(&self) -> Option<LabelId> {
        self.unk
    }

    /// Number of labels other than EOS and UNK.
    pub fn non_special_len(&self) -> usize {
        self.len() - 1 - usize::from(self.unk.is_some())
    }
}

/// Running word counts of a transcript corpus.
pub type WordCounts = BTreeMap<String, u64>;

pub fn count_words<'a, I, W>(utterances: I) -> WordCounts
where
    I: IntoIterator<Item = W>,
    W: IntoIterator<Item = &'a String>,
{
    let mut counts = WordCounts::new();
    for utt in utterances {
        for w in utt {
            *counts.entry(w.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Character units of a word with the end-of-word marker fused onto the last
/// character, as used by character BPE.
pub fn char_bpe_units(word: &str) -> Vec<String> {
    let mut units: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = units.last_mut() {
        last.push_str(EOW);
    }
    units
}

/// BPE training units for a scheme: every lexicon word (phone kinds) or every
/// corpus and lexicon word (character kinds), weighted by corpus frequency.
pub fn bpe_training_units(
    scheme: &UnitScheme,
    lexicon: Option<&Lexicon>,
    corpus: &WordCounts,
) -> Result<Vec<(Vec<String>, u64)>, UnitError> {
    let freq = |w: &str| corpus.get(w).copied().unwrap_or(0);
    match scheme.kind {
        UnitKind::PhoneBpe | UnitKind::SinglePhone => {
            let lex = lexicon.ok_or(UnitError::MissingLexicon(scheme.kind))?;
            Ok(lex
                .entries()
                .map(|(w, p)| (p[0].phones.clone(), freq(w)))
                .collect())
        }
        _ => {
            let mut words: BTreeSet<&str> = corpus.keys().map(String::as_str).collect();
            if let Some(lex) = lexicon {
                words.extend(lex.words());
            }
            Ok(words
                .into_iter()
                .map(|w| (char_bpe_units(w), freq(w)))
                .collect())
        }
    }
}

pub fn bpe_joiner(kind: UnitKind) -> &'static str {
    if kind.is_phone() {
        PHONE_BPE_JOINER
    } else {
        ""
    }
}

/// Builds the label vocabulary of a scheme, training BPE when the scheme
/// calls for it.
///
/// Phone schemes take the prepared lexicon (see
/// [`crate::lexicon::prepare_lexicon`]); its inventory already holds any
/// EOW, `x#` and `$k` symbols.
pub fn build_vocab(
    scheme: &UnitScheme,
    lexicon: Option<&Lexicon>,
    corpus: &WordCounts,
) -> Result<(LabelVocab, Option<BpeModel>), UnitError> {
    scheme.validate()?;
    let model = match scheme.bpe_merges {
        Some(merges) => {
            let units = bpe_training_units(scheme, lexicon, corpus)?;
            Some(train_bpe(&units, merges, bpe_joiner(scheme.kind)))
        }
        None => None,
    };
    let vocab = vocab_with_model(scheme, lexicon, corpus, model.as_ref())?;
    Ok((vocab, model))
}

/// Vocabulary for a scheme given an already trained (or loaded) BPE model.
pub fn vocab_with_model(
    scheme: &UnitScheme,
    lexicon: Option<&Lexicon>,
    corpus: &WordCounts,
    model: Option<&BpeModel>,
) -> Result<LabelVocab, UnitError> {
    scheme.validate()?;
    let mut labels: BTreeSet<String> = BTreeSet::new();
    match scheme.kind {
        UnitKind::SinglePhone | UnitKind::PhoneBpe => {
            let lex = lexicon.ok_or(UnitError::MissingLexicon(scheme.kind))?;
            labels.extend(lex.inventory().iter().cloned());
        }
        UnitKind::SingleChar => {
            labels.insert(SPACE.to_string());
            let lex_words = lexicon.into_iter().flat_map(|l| l.words());
            for w in corpus.keys().map(String::as_str).chain(lex_words) {
                labels.extend(w.chars().map(String::from));
            }
        }
        UnitKind::CharBpe => {
            for (units, _) in bpe_training_units(scheme, lexicon, corpus)? {
                labels.extend(units);
            }
        }
        UnitKind::WholeWord => labels.extend(corpus.keys().cloned()),
    }
    if scheme.kind.is_bpe() {
        if let Some(m) = model {
            labels.extend(m.symbols());
        }
    }
    Ok(LabelVocab::build(labels, scheme.has_unk()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{prepare_lexicon, Pronunciation};

    fn lex(entries: &[(&str, &str)]) -> Lexicon {
        let mut l = Lexicon::new();
        for (w, p) in entries {
            l.insert(w, Pronunciation::new(p.split(' '), 1.0)).unwrap();
        }
        l
    }

    #[test]
    fn phone_vocab_with_eow_and_disambig() {
        let base = lex(&[("I", "ay"), ("eye", "ay"), ("cat", "k ae t")]);
        let scheme = UnitScheme::single_phone(WordEndVariant::Eow, true);
        let prepared = prepare_lexicon(&base, scheme.variant, scheme.disambig);
        let (v, bpe) = build_vocab(&scheme, Some(&prepared), &WordCounts::new()).unwrap();
        assert!(bpe.is_none());
        assert_eq!(v.len(), 9);
        for l in ["ay", "k", "ae", "t", "</w>", "$1", "$2", "</s>", "<UNK>"] {
            assert!(v.id(l).is_some(), "{l}");
        }
        assert_eq!(v.labels()[0], "</s>");
        assert_eq!(v.labels()[1], "<UNK>");
        assert_eq!(v.non_special_len(), 7);
    }

    #[test]
    fn whole_word_vocab() {
        let corpus: WordCounts = [("hello".to_string(), 2), ("world".to_string(), 1)].into();
        let (v, _) = build_vocab(&UnitScheme::whole_word(), None, &corpus).unwrap();
        assert_eq!(v.labels(), ["</s>", "<UNK>", "hello", "world"]);
    }

    #[test]
    fn table_four_word_end_phone_count() {
        // 47 base phones, 43 of which end some word.
        let phones: Vec<String> = (0..47).map(|i| format!("p{i:02}")).collect();
        let mut base = Lexicon::new();
        for (i, p) in phones.iter().enumerate() {
            let pron = if i < 43 {
                vec![phones[46].clone(), p.clone()]
            } else {
                vec![p.clone(), phones[0].clone()]
            };
            base.insert(&format!("w{i}"), Pronunciation::new(pron, 1.0)).unwrap();
        }
        let count = |variant| {
            let scheme = UnitScheme::single_phone(variant, false);
            let prepared = prepare_lexicon(&base, variant, false);
            build_vocab(&scheme, Some(&prepared), &WordCounts::new())
                .unwrap()
                .0
                .non_special_len()
        };
        assert_eq!(count(WordEndVariant::None), 47);
        assert_eq!(count(WordEndVariant::Eow), 48);
        assert_eq!(count(WordEndVariant::WordEndPhone), 90);
    }

    #[test]
    fn phone_scheme_requires_lexicon() {
        let s = UnitScheme::single_phone(WordEndVariant::None, false);
        assert_eq!(
            build_vocab(&s, None, &WordCounts::new()).unwrap_err(),
            UnitError::MissingLexicon(UnitKind::SinglePhone)
        );
    }

    #[test]
    fn scheme_validation() {
        let mut s = UnitScheme::single_char();
        s.disambig = true;
        assert!(s.validate().is_err());
        let mut s = UnitScheme::whole_word();
        s.bpe_merges = Some(3);
        assert!(s.validate().is_err());
        let mut s = UnitScheme::char_bpe(2);
        s.bpe_merges = None;
        assert!(s.validate().is_err());
        assert!(UnitScheme::phone_bpe(WordEndVariant::Eow, true, 10).validate().is_ok());
    }

    #[test]
    fn char_vocab_has_space() {
        let corpus: WordCounts = [("cat".to_string(), 1)].into();
        let (v, _) = build_vocab(&UnitScheme::single_char(), None, &corpus).unwrap();
        assert_eq!(v.labels(), ["</s>", "<space>", "a", "c", "t"]);
        assert_eq!(v.unk(), None);
    }

    #[test]
    fn char_bpe_vocab_contains_fused_symbols_and_merges() {
        let corpus: WordCounts = [("aa".to_string(), 3)].into();
        let (v, m) = build_vocab(&UnitScheme::char_bpe(1), None, &corpus).unwrap();
        let m = m.unwrap();
        assert_eq!(m.merges(), &[("a".to_string(), "a</w>".to_string())]);
        assert_eq!(v.labels(), ["</s>", "a", "a</w>", "aa</w>"]);
    }

    #[test]
    fn vocab_text_round_trip() {
        let corpus: WordCounts = [("hi".to_string(), 1)].into();
        let (v, _) = build_vocab(&UnitScheme::whole_word(), None, &corpus).unwrap();
        let back = LabelVocab::parse(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.digest(), v.digest());
        assert_eq!(
            LabelVocab::parse("a\nb\n").unwrap_err(),
            UnitError::MissingEos
        );
        assert!(matches!(
            LabelVocab::parse("</s>\na\na\n"),
            Err(UnitError::DuplicateLabel { line: 3, .. })
        ));
    }

    #[test]
    fn kind_and_scheme_spelling() {
        for k in ["single-phone", "phone-bpe", "single-char", "char-bpe", "whole-word"] {
            assert_eq!(k.parse::<UnitKind>().unwrap().to_string(), k);
        }
        assert_eq!(
            UnitScheme::phone_bpe(WordEndVariant::Eow, true, 100).to_string(),
            "phone-bpe/eow/disambig/100"
        );
    }
}
