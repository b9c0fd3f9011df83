//! Shared argument groups and file helpers.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use lexdec::label_units::{count_words, BpeModel, LabelVocab, UnitKind, UnitScheme, WordCounts};
use lexdec::lexicon::{find_homophone_classes, parse_prepared_lexicon, Lexicon, WordEndVariant};
use lexdec::symbols::EOW;
use lexdec::target_encoding::{parse_corpus, parse_targets, EncodedTarget, OovMode, TargetCodec, Utterance};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, runtime, CliResult};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SchemeArgs {
    /// Unit kind: single-phone, phone-bpe, single-char, char-bpe or whole-word.
    #[arg(long)]
    pub units: Option<String>,
    /// Word-end marking for phone units: none, eow or word-end-phone.
    #[arg(long)]
    pub variant: Option<String>,
    /// Phone units carry homophone disambiguation symbols.
    #[arg(long)]
    pub disambig: bool,
    /// Number of BPE merges (BPE units only).
    #[arg(long)]
    pub merges: Option<usize>,
}

impl SchemeArgs {
    pub fn scheme(&self) -> CliResult<UnitScheme> {
        let kind: UnitKind = required(&self.units, "units")?.parse().map_err(invalid)?;
        let variant = parse_variant(self.variant.as_deref())?;
        let scheme = UnitScheme {
            kind,
            variant,
            disambig: self.disambig,
            bpe_merges: self.merges,
        };
        scheme.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(scheme)
    }
}

pub fn parse_variant(v: Option<&str>) -> CliResult<WordEndVariant> {
    v.map_or(Ok(WordEndVariant::None), |v| v.parse().map_err(invalid))
}

pub fn parse_oov(v: Option<&str>) -> CliResult<OovMode> {
    match v {
        None | Some("strict") => Ok(OovMode::Strict),
        Some("lenient") => Ok(OovMode::Lenient),
        Some(other) => Err(invalid(format!("unknown OOV mode `{other}` (strict or lenient)"))),
    }
}

pub fn required<'a, T>(v: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| invalid(format!("missing required option --{flag}")))
}

/// Fails validation when an input path does not exist.
pub fn existing<'a>(v: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    let p = required(v, flag)?;
    if !p.exists() {
        return Err(invalid(format!("--{flag}: {} does not exist", p.display())));
    }
    Ok(p)
}

pub fn existing_opt<'a>(v: &'a Option<PathBuf>, flag: &str) -> CliResult<Option<&'a Path>> {
    v.as_ref().map(|_| existing(v, flag)).transpose()
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn in_file<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> CliResult<T> {
    r.map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Reads a lexicon as written by `lexicon-prep` (base lexica parse too).
pub fn load_lexicon(path: &Path) -> CliResult<Lexicon> {
    in_file(path, parse_prepared_lexicon(&read_text(path)?))
}

pub fn load_corpus(path: &Path) -> CliResult<Vec<Utterance>> {
    in_file(path, parse_corpus(&read_text(path)?))
}

pub fn load_targets(path: &Path) -> CliResult<Vec<EncodedTarget>> {
    in_file(path, parse_targets(&read_text(path)?))
}

pub fn load_vocab(path: &Path) -> CliResult<LabelVocab> {
    in_file(path, LabelVocab::parse(&read_text(path)?))
}

pub fn load_bpe(path: &Path) -> CliResult<BpeModel> {
    in_file(path, BpeModel::parse(&read_text(path)?))
}

pub fn load_arpa(path: &Path) -> CliResult<lexdec::NGramLm> {
    in_file(path, lexdec::lm::parse_arpa(&read_text(path)?))
}

pub fn corpus_counts(corpus: &[Utterance]) -> WordCounts {
    count_words(corpus.iter().map(|u| &u.words))
}

/// Checks that a phone lexicon was prepared for `scheme` by `lexicon-prep`.
pub fn check_prepared(lex: &Lexicon, scheme: &UnitScheme, path: &Path) -> CliResult<()> {
    if !scheme.kind.is_phone() {
        return Ok(());
    }
    let mismatch = |what: &str| {
        invalid(format!(
            "--lexicon {}: not prepared for {scheme} ({what}); run lexicon-prep with the same --variant/--disambig",
            path.display()
        ))
    };
    let single = lex.is_single_pronunciation();
    if !single {
        return Err(mismatch("several pronunciations per word"));
    }
    let has_eow = lex.entries().all(|(_, p)| p[0].phones.last().is_some_and(|x| x == EOW));
    if (scheme.variant == lexdec::lexicon::WordEndVariant::Eow) != has_eow {
        return Err(mismatch("end-of-word symbols"));
    }
    let has_disambig = lex
        .inventory()
        .iter()
        .any(|p| lexdec::symbols::is_disambig(p));
    let homophones = find_homophone_classes(lex).map_err(|e| invalid(e.to_string()))?;
    if scheme.disambig && !homophones.is_empty() {
        return Err(mismatch("homophones without disambiguation symbols"));
    }
    if !scheme.disambig && has_disambig {
        return Err(mismatch("unexpected disambiguation symbols"));
    }
    Ok(())
}

/// Codec from a scheme and the on-disk artifacts of earlier commands.
pub fn load_codec(
    scheme: UnitScheme,
    lexicon: Option<&Path>,
    vocab: &Path,
    bpe: Option<&Path>,
) -> CliResult<TargetCodec> {
    let lex = match lexicon {
        Some(p) => {
            let lex = load_lexicon(p)?;
            check_prepared(&lex, &scheme, p)?;
            Some(lex)
        }
        None if scheme.kind.is_phone() => return Err(invalid(format!("--lexicon is required for {} units", scheme.kind))),
        None => None,
    };
    let bpe = match bpe {
        Some(p) => Some(load_bpe(p)?),
        None if scheme.kind.is_bpe() => return Err(invalid(format!("--bpe is required for {} units", scheme.kind))),
        None => None,
    };
    let vocab = load_vocab(vocab)?;
    TargetCodec::new(scheme, vocab, lex, bpe).map_err(|e| invalid(e.to_string()))
}
