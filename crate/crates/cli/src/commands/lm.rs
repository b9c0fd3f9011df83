//! Language model training and ARPA conversion.

use std::path::PathBuf;

use clap::Args;
use lexdec::lm::{train_ngram, write_arpa, TrainOptions};
use serde::{Deserialize, Serialize};

use crate::common::{existing, existing_opt, load_arpa, load_corpus, load_lexicon, load_targets, load_vocab, write_text};
use crate::error::{invalid, runtime, CliResult};

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrainLmArgs {
    /// Word transcripts; trains a word LM.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Encoded targets; trains a label LM over the `--vocab` labels.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Label vocabulary from `build-vocab`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Lexicon whose words join the word LM vocabulary even when unseen.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// N-gram order (default 3).
    #[arg(long)]
    pub order: Option<usize>,
    /// Add-k smoothing constant (default 0.5).
    #[arg(long)]
    pub add_k: Option<f64>,
    /// Do not pad sentences with `<s>` and `</s>`.
    #[arg(long)]
    pub no_sentence_boundaries: bool,
    /// Do not reserve probability mass for `<unk>`.
    #[arg(long)]
    pub no_unk: bool,
    /// ARPA output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn train_lm(a: &TrainLmArgs) -> CliResult<()> {
    let mut extra_vocab = Vec::new();
    let sentences: Vec<Vec<String>> = match (&a.corpus, &a.targets) {
        (Some(_), None) => {
            let corpus = load_corpus(existing(&a.corpus, "corpus")?)?;
            if let Some(p) = existing_opt(&a.lexicon, "lexicon")? {
                extra_vocab.extend(load_lexicon(p)?.words().map(String::from));
            }
            corpus.into_iter().map(|u| u.words).collect()
        }
        (None, Some(_)) => {
            let vocab = load_vocab(existing(&a.vocab, "vocab")?)?;
            let targets = load_targets(existing(&a.targets, "targets")?)?;
            let eos = vocab.eos();
            extra_vocab.extend(
                (0..vocab.len())
                    .map(lexdec::label_units::LabelId::from)
                    .filter(|&l| l != eos)
                    .map(|l| vocab.label(l).to_string()),
            );
            targets
                .iter()
                .map(|t| {
                    t.labels
                        .iter()
                        .map(|&l| {
                            if l.index() < vocab.len() {
                                Ok(vocab.label(l).to_string())
                            } else {
                                Err(runtime(format!("utterance {}: label id {} outside vocabulary", t.utt_id, l.0)))
                            }
                        })
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect::<CliResult<_>>()?
        }
        _ => return Err(invalid("give exactly one of --corpus (word LM) or --targets (label LM)")),
    };
    let opts = TrainOptions {
        sentence_boundaries: !a.no_sentence_boundaries,
        include_unk: !a.no_unk,
        extra_vocab,
        ..TrainOptions::new(a.order.unwrap_or(3), a.add_k.unwrap_or(0.5))
    };
    let lm: lexdec::NGramLm = train_ngram(&sentences, &opts).map_err(|e| invalid(e.to_string()))?;
    write_text(a.out.as_deref(), &write_arpa(&lm))
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ConvertArpaArgs {
    /// Input ARPA file.
    #[arg(long)]
    pub arpa: Option<PathBuf>,
    /// Canonical ARPA output (sorted entries); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn convert_arpa(a: &ConvertArpaArgs) -> CliResult<()> {
    let lm = load_arpa(existing(&a.arpa, "arpa")?)?;
    write_text(a.out.as_deref(), &write_arpa(&lm))
}
