//! Pronunciation lexica: parsing, single-pronunciation reduction, homophone
//! detection, disambiguation symbols and word-end variants.
//!
//! The on-disk format is one pronunciation per line,
//! `word <TAB> prob <TAB> phone phone ...`, with `#`-prefixed comment lines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::symbols::{self, EOS, EOW, PHONE_BPE_JOINER, SPACE, UNK};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexiconError {
    #[error("line {line}: malformed entry: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: probability {prob} outside (0, 1]")]
    ProbOutOfRange { line: usize, prob: f64 },
    #[error("line {line}: empty phone sequence")]
    EmptyPronunciation { line: usize },
    #[error("line {line}: `{symbol}` collides with a reserved symbol")]
    ReservedSymbol { line: usize, symbol: String },
    #[error("word `{word}` has {count} pronunciations, expected exactly one")]
    NotSinglePronunciation { word: String, count: usize },
    #[error("augmented sequences collide for words `{first}` and `{second}`")]
    NotInjective { first: String, second: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pronunciation {
    pub phones: Vec<String>,
    pub prob: f64,
}

impl Pronunciation {
    pub fn new<S: Into<String>>(phones: impl IntoIterator<Item = S>, prob: f64) -> Self {
        Self {
            phones: phones.into_iter().map(Into::into).collect(),
            prob,
        }
    }
}

/// Which symbols a lexicon line may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SymbolPolicy {
    /// Plain phones only.
    Base,
    /// Also `$k`, `x#` and the EOW symbol, as produced by [`prepare_lexicon`].
    Augmented,
}

/// Word → pronunciations, ordered by word, pronunciations in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Pronunciation>>,
    inventory: BTreeSet<String>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pronunciation after validating it as a base (non-augmented) entry.
    pub fn insert(&mut self, word: &str, pron: Pronunciation) -> Result<(), LexiconError> {
        validate_entry(0, word, &pron, SymbolPolicy::Base)?;
        self.push(word, pron);
        Ok(())
    }

    fn push(&mut self, word: &str, pron: Pronunciation) {
        self.inventory.extend(pron.phones.iter().cloned());
        self.entries.entry(word.to_string()).or_default().push(pron);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[Pronunciation])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// The phones of a word's first pronunciation. For a single-pronunciation
    /// lexicon this is the word's only label sequence.
    pub fn phones(&self, word: &str) -> Option<&[String]> {
        self.entries
            .get(word)
            .and_then(|p| p.first())
            .map(|p| p.phones.as_slice())
    }

    pub fn inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }

    pub fn is_single_pronunciation(&self) -> bool {
        self.entries.values().all(|p| p.len() == 1)
    }

    fn ensure_single(&self) -> Result<(), LexiconError> {
        match self.entries.iter().find(|(_, p)| p.len() != 1) {
            Some((word, p)) => Err(LexiconError::NotSinglePronunciation {
                word: word.clone(),
                count: p.len(),
            }),
            None => Ok(()),
        }
    }

    /// Serializes to the TSV format read by [`parse_lexicon`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, prons) in &self.entries {
            for p in prons {
                out.push_str(word);
                out.push('\t');
                out.push_str(&p.prob.to_string());
                out.push('\t');
                out.push_str(&p.phones.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

fn is_reserved_phone(phone: &str, policy: SymbolPolicy) -> bool {
    if phone == EOS || phone == UNK || phone == SPACE || phone.contains(PHONE_BPE_JOINER) {
        return true;
    }
    match policy {
        SymbolPolicy::Base => {
            phone == EOW
                || phone.starts_with(symbols::DISAMBIG_PREFIX)
                || phone.ends_with(symbols::WORD_END_MARK)
        }
        SymbolPolicy::Augmented => {
            (phone.starts_with(symbols::DISAMBIG_PREFIX) && !symbols::is_disambig(phone))
                || phone == "#"
        }
    }
}

fn validate_entry(
    line: usize,
    word: &str,
    pron: &Pronunciation,
    policy: SymbolPolicy,
) -> Result<(), LexiconError> {
    if word.is_empty() || word.chars().any(char::is_whitespace) {
        return Err(LexiconError::Malformed {
            line,
            reason: format!("invalid word `{word}`"),
        });
    }
    if word == UNK {
        return Err(LexiconError::ReservedSymbol {
            line,
            symbol: word.to_string(),
        });
    }
    if !(pron.prob > 0.0 && pron.prob <= 1.0) {
        return Err(LexiconError::ProbOutOfRange {
            line,
            prob: pron.prob,
        });
    }
    if pron.phones.is_empty() {
        return Err(LexiconError::EmptyPronunciation { line });
    }
    if let Some(bad) = pron.phones.iter().find(|p| is_reserved_phone(p, policy)) {
        return Err(LexiconError::ReservedSymbol {
            line,
            symbol: bad.clone(),
        });
    }
    Ok(())
}

fn parse_with(text: &str, policy: SymbolPolicy) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(LexiconError::Malformed {
                line,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let prob: f64 = fields[1].trim().parse().map_err(|_| LexiconError::Malformed {
            line,
            reason: format!("unparsable probability `{}`", fields[1]),
        })?;
        let pron = Pronunciation::new(fields[2].split_whitespace(), prob);
        let word = fields[0].trim();
        validate_entry(line, word, &pron, policy)?;
        lex.push(word, pron);
    }
    Ok(lex)
}

/// Parses a base lexicon. Phones colliding with reserved symbols are rejected.
pub fn parse_lexicon(text: &str) -> Result<Lexicon, LexiconError> {
    parse_with(text, SymbolPolicy::Base)
}

/// Parses a lexicon written by [`prepare_lexicon`] + [`Lexicon::to_tsv`],
/// which may contain `$k`, `x#` and EOW symbols.
pub fn parse_prepared_lexicon(text: &str) -> Result<Lexicon, LexiconError> {
    parse_with(text, SymbolPolicy::Augmented)
}

/// Keeps only the most probable pronunciation of every word; ties go to the
/// lexicographically smallest phone sequence.
pub fn reduce_single_pronunciation(lex: &Lexicon) -> Lexicon {
    let entries = lex
        .entries
        .iter()
        .map(|(word, prons)| {
            let best = prons
                .iter()
                .reduce(|best, p| {
                    if p.prob > best.prob || (p.prob == best.prob && p.phones < best.phones) {
                        p
                    } else {
                        best
                    }
                })
                .expect("every word has a pronunciation")
                .clone();
            (word.clone(), vec![best])
        })
        .collect();
    Lexicon {
        entries,
        inventory: lex.inventory.clone(),
    }
}

/// Phone sequence shared by two or more words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomophoneClass {
    pub phones: Vec<String>,
    pub words: Vec<String>,
}

/// Collects every phone sequence that maps to more than one word. Classes
/// are ordered by phone sequence, words within a class lexicographically
/// (case-sensitive).
pub fn find_homophone_classes(lex: &Lexicon) -> Result<Vec<HomophoneClass>, LexiconError> {
    lex.ensure_single()?;
    let mut by_phones: BTreeMap<&[String], Vec<String>> = BTreeMap::new();
    for (word, prons) in &lex.entries {
        by_phones
            .entry(prons[0].phones.as_slice())
            .or_default()
            .push(word.clone());
    }
    Ok(by_phones
        .into_iter()
        .filter(|(_, words)| words.len() >= 2)
        .map(|(phones, words)| HomophoneClass {
            phones: phones.to_vec(),
            words,
        })
        .collect())
}

/// A single-pronunciation lexicon plus a `$k` suffix for every homophone.
#[derive(Debug, Clone, PartialEq)]
pub struct DisambiguatedLexicon {
    base: Lexicon,
    suffixes: BTreeMap<String, String>,
    n_symbols: usize,
}

impl DisambiguatedLexicon {
    /// Builds from an explicit suffix assignment, checking that the augmented
    /// sequences are pairwise distinct.
    pub fn from_parts(
        base: Lexicon,
        suffixes: BTreeMap<String, String>,
    ) -> Result<Self, LexiconError> {
        base.ensure_single()?;
        let mut seen: HashMap<Vec<&str>, &str> = HashMap::new();
        for (word, prons) in &base.entries {
            let mut seq: Vec<&str> = prons[0].phones.iter().map(String::as_str).collect();
            if let Some(s) = suffixes.get(word) {
                seq.push(s);
            }
            if let Some(other) = seen.insert(seq, word) {
                return Err(LexiconError::NotInjective {
                    first: other.to_string(),
                    second: word.clone(),
                });
            }
        }
        let n_symbols = suffixes.values().collect::<BTreeSet<_>>().len();
        Ok(Self {
            base,
            suffixes,
            n_symbols,
        })
    }

    pub fn base(&self) -> &Lexicon {
        &self.base
    }

    pub fn suffix(&self, word: &str) -> Option<&str> {
        self.suffixes.get(word).map(String::as_str)
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    /// The augmented lexicon: every homophone's phones followed by its suffix;
    /// suffix symbols join the inventory.
    pub fn to_lexicon(&self) -> Lexicon {
        let mut out = Lexicon {
            entries: BTreeMap::new(),
            inventory: self.base.inventory.clone(),
        };
        for (word, prons) in &self.base.entries {
            let mut p = prons[0].clone();
            if let Some(s) = self.suffixes.get(word) {
                p.phones.push(s.clone());
            }
            out.push(word, p);
        }
        out
    }
}

/// Assigns `$1, $2, ...` consecutively over (class, word) pairs, classes in
/// [`find_homophone_classes`] order. Symbols are never reused.
pub fn add_disambiguation_symbols(lex: &Lexicon) -> Result<DisambiguatedLexicon, LexiconError> {
    let classes = find_homophone_classes(lex)?;
    let mut suffixes = BTreeMap::new();
    let mut next = 1;
    for class in &classes {
        for word in &class.words {
            suffixes.insert(word.clone(), symbols::disambig_symbol(next));
            next += 1;
        }
    }
    DisambiguatedLexicon::from_parts(lex.clone(), suffixes)
}

/// How word ends are marked in phone label sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum WordEndVariant {
    #[default]
    None,
    /// Append the EOW symbol.
    Eow,
    /// Replace the final phone `x` by `x#`.
    WordEndPhone,
}

impl fmt::Display for WordEndVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Eow => "eow",
            Self::WordEndPhone => "word-end-phone",
        })
    }
}

impl FromStr for WordEndVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "eow" => Ok(Self::Eow),
            "word-end-phone" | "word_end_phone" => Ok(Self::WordEndPhone),
            other => Err(format!("unknown word-end variant `{other}`")),
        }
    }
}

pub fn apply_word_end_variant(
    lex: &Lexicon,
    variant: WordEndVariant,
) -> Result<Lexicon, LexiconError> {
    lex.ensure_single()?;
    Ok(match variant {
        WordEndVariant::None => lex.clone(),
        WordEndVariant::Eow => map_pronunciations(lex, |phones| phones.push(EOW.to_string())),
        WordEndVariant::WordEndPhone => map_pronunciations(lex, |p| mark_last_phone(p)),
    })
}

fn mark_last_phone(phones: &mut [String]) {
    if let Some(last) = phones.last_mut() {
        *last = symbols::word_end_phone(last);
    }
}

fn map_pronunciations(lex: &Lexicon, f: impl Fn(&mut Vec<String>)) -> Lexicon {
    let mut out = Lexicon {
        entries: BTreeMap::new(),
        inventory: lex.inventory.clone(),
    };
    for (word, prons) in &lex.entries {
        for p in prons {
            let mut p = p.clone();
            f(&mut p.phones);
            out.push(word, p);
        }
    }
    out
}

/// Full preparation used for training targets and decoding: reduce to one
/// pronunciation, then mark word ends and append disambiguation symbols.
///
/// Sequence layout per word: `phones [$k] [</w>]` for EOW and
/// `phones-with-x# [$k]` for word-end phones.
pub fn prepare_lexicon(lex: &Lexicon, variant: WordEndVariant, disambig: bool) -> Lexicon {
    let single = reduce_single_pronunciation(lex);
    let mut out = match variant {
        WordEndVariant::WordEndPhone => map_pronunciations(&single, |p| mark_last_phone(p)),
        _ => single.clone(),
    };
    if disambig {
        let dis = add_disambiguation_symbols(&single).expect("reduced lexicon is single");
        let mut suffixed = Lexicon {
            entries: BTreeMap::new(),
            inventory: out.inventory.clone(),
        };
        for (word, prons) in &out.entries {
            let mut p = prons[0].clone();
            if let Some(s) = dis.suffix(word) {
                p.phones.push(s.to_string());
            }
            suffixed.push(word, p);
        }
        out = suffixed;
    }
    if variant == WordEndVariant::Eow {
        out = map_pronunciations(&out, |phones| phones.push(EOW.to_string()));
        out.inventory.insert(EOW.to_string());
    }
    out
}
