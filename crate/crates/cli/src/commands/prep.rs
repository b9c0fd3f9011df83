//! Lexicon, unit and target preparation commands.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use lexdec::label_units::{bpe_joiner, bpe_training_units, build_vocab, train_bpe, vocab_with_model, UnitScheme};
use lexdec::lexicon::{find_homophone_classes, parse_lexicon, prepare_lexicon, reduce_single_pronunciation, WordEndVariant};
use lexdec::metrics::oov_rate;
use lexdec::target_encoding::{format_targets, length_filter_threshold};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{
    check_prepared, corpus_counts, existing, existing_opt, load_bpe, load_codec, load_corpus, load_lexicon,
    load_targets, parse_oov, parse_variant, read_text, required, write_text, SchemeArgs,
};
use crate::error::{invalid, runtime, CliResult};

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct LexiconPrepArgs {
    /// Base lexicon TSV (`word<TAB>prob<TAB>phones`).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Word-end marking: none, eow or word-end-phone.
    #[arg(long)]
    pub variant: Option<String>,
    /// Append `$k` disambiguation symbols to homophones.
    #[arg(long)]
    pub disambig: bool,
    /// Output TSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn lexicon_prep(a: &LexiconPrepArgs) -> CliResult<()> {
    let path = existing(&a.lexicon, "lexicon")?;
    let variant = parse_variant(a.variant.as_deref())?;
    let base = parse_lexicon(&read_text(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let reduced = reduce_single_pronunciation(&base);
    let classes = find_homophone_classes(&reduced).map_err(runtime)?;
    let prepared = prepare_lexicon(&base, variant, a.disambig);
    let disambiguators = prepared
        .inventory()
        .iter()
        .filter(|p| lexdec::symbols::is_disambig(p))
        .count();
    write_text(a.out.as_deref(), &prepared.to_tsv())?;
    if a.out.is_some() {
        println!(
            "{}",
            json!({
                "words": prepared.len(),
                "homophone_classes": classes.len(),
                "disambiguators": disambiguators,
                "phones": prepared.inventory().len(),
            })
        );
    }
    Ok(())
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrainBpeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scheme: SchemeArgs,
    /// Prepared lexicon (phone BPE) or extra word list (character BPE).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Training transcripts (`utt<TAB>words`) supplying word frequencies.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn train_bpe_cmd(a: &TrainBpeArgs) -> CliResult<()> {
    let scheme = a.scheme.scheme()?;
    let merges = scheme
        .bpe_merges
        .ok_or_else(|| invalid(format!("train-bpe needs BPE units, got {}", scheme.kind)))?;
    let corpus = match existing_opt(&a.corpus, "corpus")? {
        Some(p) => load_corpus(p)?,
        None => Vec::new(),
    };
    let lex = lexicon_for(&scheme, existing_opt(&a.lexicon, "lexicon")?)?;
    let units = bpe_training_units(&scheme, lex.as_ref(), &corpus_counts(&corpus)).map_err(|e| invalid(e.to_string()))?;
    let model = train_bpe(&units, merges, bpe_joiner(scheme.kind));
    write_text(a.out.as_deref(), &model.to_text())?;
    if a.out.is_some() {
        println!("{}", json!({ "merges": model.merges().len(), "symbols": model.symbols().len() }));
    }
    Ok(())
}

fn lexicon_for(scheme: &UnitScheme, path: Option<&std::path::Path>) -> CliResult<Option<lexdec::lexicon::Lexicon>> {
    match path {
        Some(p) => {
            let lex = load_lexicon(p)?;
            check_prepared(&lex, scheme, p)?;
            Ok(Some(lex))
        }
        None if scheme.kind.is_phone() => Err(invalid(format!("--lexicon is required for {} units", scheme.kind))),
        None => Ok(None),
    }
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BuildVocabArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scheme: SchemeArgs,
    /// Prepared lexicon (phone units) or word list.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Merges from `train-bpe`; trained from the inputs when omitted.
    #[arg(long)]
    pub bpe: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn build_vocab_cmd(a: &BuildVocabArgs) -> CliResult<()> {
    let scheme = a.scheme.scheme()?;
    let corpus = match existing_opt(&a.corpus, "corpus")? {
        Some(p) => load_corpus(p)?,
        None => Vec::new(),
    };
    let lex = lexicon_for(&scheme, existing_opt(&a.lexicon, "lexicon")?)?;
    let counts = corpus_counts(&corpus);
    let vocab = match existing_opt(&a.bpe, "bpe")? {
        Some(p) => {
            if !scheme.kind.is_bpe() {
                return Err(invalid(format!("--bpe given for non-BPE units {}", scheme.kind)));
            }
            let model = load_bpe(p)?;
            vocab_with_model(&scheme, lex.as_ref(), &counts, Some(&model))
        }
        None => build_vocab(&scheme, lex.as_ref(), &counts).map(|(v, _)| v),
    }
    .map_err(|e| invalid(e.to_string()))?;
    write_text(a.out.as_deref(), &vocab.to_text())?;
    if a.out.is_some() {
        println!(
            "{}",
            json!({ "scheme": scheme.to_string(), "size": vocab.len(), "sha256": vocab.digest() })
        );
    }
    Ok(())
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EncodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scheme: SchemeArgs,
    /// Prepared lexicon (phone units) or word list.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Label vocabulary from `build-vocab`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// BPE merges from `train-bpe` (BPE units only).
    #[arg(long)]
    pub bpe: Option<PathBuf>,
    /// Transcripts to encode.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// strict (fail on OOV words) or lenient (map them to UNK).
    #[arg(long)]
    pub oov: Option<String>,
    /// Targets TSV (`utt<TAB>label ids`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn encode(a: &EncodeArgs) -> CliResult<()> {
    let scheme = a.scheme.scheme()?;
    let mode = parse_oov(a.oov.as_deref())?;
    let codec = load_codec(
        scheme,
        existing_opt(&a.lexicon, "lexicon")?,
        existing(&a.vocab, "vocab")?,
        existing_opt(&a.bpe, "bpe")?,
    )?;
    let corpus = load_corpus(existing(&a.corpus, "corpus")?)?;
    let targets = corpus
        .iter()
        .map(|u| codec.encode(u, mode).map_err(|e| runtime(format!("utterance {}: {e}", u.id))))
        .collect::<CliResult<Vec<_>>>()?;
    write_text(a.out.as_deref(), &format_targets(&targets))
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FilterLengthsArgs {
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Largest share of utterances allowed above the threshold, in [0, 1).
    #[arg(long)]
    pub drop_fraction: Option<f64>,
    /// Kept utterance ids, one per line; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn filter_lengths(a: &FilterLengthsArgs) -> CliResult<()> {
    let fraction = *required(&a.drop_fraction, "drop-fraction")?;
    let targets = load_targets(existing(&a.targets, "targets")?)?;
    let lengths: Vec<usize> = targets.iter().map(|t| t.labels.len()).collect();
    let threshold = length_filter_threshold(&lengths, fraction).map_err(|e| invalid(e.to_string()))?;
    let kept: Vec<&str> = targets
        .iter()
        .filter(|t| t.labels.len() <= threshold)
        .map(|t| t.utt_id.as_str())
        .collect();
    let mut text = String::new();
    for id in &kept {
        text.push_str(id);
        text.push('\n');
    }
    write_text(a.out.as_deref(), &text)?;
    let summary = json!({ "threshold": threshold, "kept": kept.len(), "dropped": targets.len() - kept.len() });
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct StatsArgs {
    /// Base lexicon TSV.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Transcripts for the OOV rate and corpus-dependent vocabularies.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Also report the vocabulary size of this scheme.
    #[command(flatten)]
    #[serde(flatten)]
    pub scheme: SchemeArgs,
}

/// Vocabulary size of a scheme built from the base lexicon.
fn scheme_size(
    scheme: &UnitScheme,
    base: &lexdec::lexicon::Lexicon,
    counts: &lexdec::label_units::WordCounts,
) -> CliResult<usize> {
    let lex = if scheme.kind.is_phone() {
        prepare_lexicon(base, scheme.variant, scheme.disambig)
    } else {
        base.clone()
    };
    build_vocab(scheme, Some(&lex), counts)
        .map(|(v, _)| v.len())
        .map_err(|e| invalid(e.to_string()))
}

pub fn stats(a: &StatsArgs) -> CliResult<()> {
    let path = existing(&a.lexicon, "lexicon")?;
    let base = parse_lexicon(&read_text(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let corpus = match existing_opt(&a.corpus, "corpus")? {
        Some(p) => load_corpus(p)?,
        None => Vec::new(),
    };
    let counts = corpus_counts(&corpus);
    let reduced = reduce_single_pronunciation(&base);
    let classes = find_homophone_classes(&reduced).map_err(runtime)?;

    let mut sizes = BTreeMap::new();
    for variant in [WordEndVariant::None, WordEndVariant::Eow, WordEndVariant::WordEndPhone] {
        for disambig in [false, true] {
            let scheme = UnitScheme::single_phone(variant, disambig);
            sizes.insert(scheme.to_string(), scheme_size(&scheme, &base, &counts)?);
        }
    }
    let mut out = json!({
        "words": base.len(),
        "phones": base.inventory().len(),
        "homophone_classes": classes.len(),
        "homophone_words": classes.iter().map(|c| c.words.len()).sum::<usize>(),
        "single_phone_vocab_sizes": sizes,
    });
    if a.scheme.units.is_some() {
        let scheme = a.scheme.scheme()?;
        let none = UnitScheme {
            variant: WordEndVariant::None,
            ..scheme
        };
        out["scheme"] = json!(scheme.to_string());
        out["vocab_size"] = json!(scheme_size(&scheme, &base, &counts)?);
        if scheme.kind.is_phone() {
            out["vocab_size_without_word_ends"] = json!(scheme_size(&none, &base, &counts)?);
        }
    }
    if !corpus.is_empty() {
        let tokens: Vec<&String> = corpus.iter().flat_map(|u| &u.words).collect();
        if !tokens.is_empty() {
            out["oov_rate"] = json!(oov_rate::<f64, _>(&tokens, &base).map_err(runtime)?);
        }
        out["utterances"] = json!(corpus.len());
        out["running_words"] = json!(tokens.len());
    }
    println!("{out}");
    Ok(())
}
