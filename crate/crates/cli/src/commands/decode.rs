//! Decoding over posterior dumps or oracle scorers, and oracle dump export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use lexdec::decoder_advanced::{build_prefix_tree, format_tree_result, PrefixTree, TreeDecodeError, TreeDecoderConfig, TreeSearch};
use lexdec::decoder_simple::{decode_simple, default_max_len, format_nbest, SimpleDecoderConfig};
use lexdec::label_units::{LabelId, LabelVocab};
use lexdec::scorer::{check_vocab, combine_scorers, read_dump, write_dump, DumpHeader, DumpRows, DumpUtterance, LabelScorer, LmLabelScorer};
use lexdec::target_encoding::{format_corpus, EncodedTarget, TargetCodec, Utterance};
use lexdec::{NGramLm, OracleScorer, ReplayScorer};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{existing, existing_opt, load_arpa, load_codec, load_targets, load_vocab, required, write_text, SchemeArgs};
use crate::error::{invalid, runtime, CliResult};

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OracleArgs {
    /// Encoded reference targets; decode with an oracle scorer peaked on them.
    #[arg(long)]
    pub oracle_targets: Option<PathBuf>,
    /// Oracle probability of the reference label (default 0.9).
    #[arg(long)]
    pub peak: Option<f64>,
    /// Half-width of uniform log-probability noise (default 0).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Seed for the oracle noise (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl OracleArgs {
    /// Oracle for the `index`-th reference; the noise seed is derived from
    /// the run seed and the utterance index.
    fn scorer(&self, t: &EncodedTarget, index: usize, vocab: &LabelVocab) -> CliResult<OracleScorer> {
        let peak = self.peak.unwrap_or(0.9);
        let seed = self
            .seed
            .unwrap_or(0)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(index as u64);
        OracleScorer::new(t.labels.clone(), vocab.len(), vocab.eos(), peak)
            .and_then(|o| o.with_noise(seed, self.noise.unwrap_or(0.0)))
            .map_err(|e| invalid(format!("utterance {}: {e}", t.utt_id)))
    }
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DecodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scheme: SchemeArgs,
    /// Prepared lexicon; required for phone units and the advanced decoder.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Label vocabulary from `build-vocab`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// BPE merges from `train-bpe` (BPE units only).
    #[arg(long)]
    pub bpe: Option<PathBuf>,
    /// simple (label beam search) or advanced (lexical prefix tree).
    #[arg(long)]
    pub decoder: Option<String>,
    /// Posterior dump to replay.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
    /// Label-level ARPA LM fused into the simple decoder.
    #[arg(long)]
    pub label_lm: Option<PathBuf>,
    /// Label LM weight for the simple decoder (default 0.3).
    #[arg(long)]
    pub lm_weight: Option<f64>,
    /// Word-level ARPA LM for the advanced decoder; uniform over the lexicon
    /// when omitted.
    #[arg(long)]
    pub word_lm: Option<PathBuf>,
    /// Word LM scale for the advanced decoder (default 0.3).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Beam size (default 12).
    #[arg(long)]
    pub beam: Option<usize>,
    /// Maximum labels per hypothesis, EOS included; derived from the input
    /// length when omitted.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Unigram LM lookahead in the prefix tree (advanced only).
    #[arg(long)]
    pub lookahead: bool,
    /// Number of hypotheses written to `--nbest-out` (default 1).
    #[arg(long)]
    pub nbest: Option<usize>,
    /// N-best or word trace output.
    #[arg(long)]
    pub nbest_out: Option<PathBuf>,
    /// Include per-word label traces in `--nbest-out` (advanced only).
    #[arg(long)]
    pub trace: bool,
    /// 1-best word hypotheses (`utt<TAB>words`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Decoder {
    Simple,
    Advanced,
}

struct Run<'a> {
    codec: &'a TargetCodec,
    decoder: Decoder,
    beam: usize,
    max_len: Option<usize>,
    nbest: usize,
    trace: bool,
    label_lm: Option<(&'a NGramLm, f64)>,
    tree: Option<(&'a PrefixTree, &'a NGramLm, f64, bool)>,
}

struct Decoded {
    words: Vec<String>,
    detail: String,
    warning: Option<String>,
}

impl Run<'_> {
    fn max_len<S: LabelScorer<f64>>(&self, scorer: &S, utt: &str) -> CliResult<usize> {
        self.max_len
            .or_else(|| default_max_len(scorer.context_len()))
            .ok_or_else(|| invalid(format!("utterance {utt}: input length unknown, give --max-len")))
    }

    fn decode<S: LabelScorer<f64>>(&self, utt: &str, scorer: &S) -> CliResult<Decoded> {
        match self.label_lm {
            Some((lm, weight)) => {
                let lms = LmLabelScorer::new(lm, self.codec.vocab());
                let fused = combine_scorers(scorer, lms, weight).map_err(|e| invalid(e.to_string()))?;
                self.decode_with(utt, &fused, self.max_len(scorer, utt)?)
            }
            None => self.decode_with(utt, scorer, self.max_len(scorer, utt)?),
        }
    }

    fn decode_with<S: LabelScorer<f64>>(&self, utt: &str, scorer: &S, max_len: usize) -> CliResult<Decoded> {
        let vocab = self.codec.vocab();
        if scorer.vocab_size() != vocab.len() {
            return Err(invalid(format!(
                "utterance {utt}: scorer has {} labels, vocabulary {}",
                scorer.vocab_size(),
                vocab.len()
            )));
        }
        match (self.decoder, self.tree) {
            (Decoder::Advanced, Some((tree, lm, lambda, lookahead))) => {
                let cfg = TreeDecoderConfig {
                    lambda,
                    lookahead,
                    ..TreeDecoderConfig::new(self.beam, max_len)
                };
                let search = TreeSearch::new(tree, lm, cfg).map_err(|e| invalid(e.to_string()))?;
                match search.decode_nbest(scorer) {
                    Ok(list) => {
                        let detail = list
                            .iter()
                            .take(self.nbest)
                            .map(|r| format_tree_result(utt, r, vocab, self.trace))
                            .collect();
                        Ok(Decoded {
                            words: list[0].words.clone(),
                            detail,
                            warning: None,
                        })
                    }
                    Err(TreeDecodeError::NoEndedHypothesis {
                        best_partial_words,
                        best_partial_score,
                    }) => Ok(Decoded {
                        warning: Some(format!(
                            "no hypothesis ended within {max_len} labels; using best partial (score {best_partial_score})"
                        )),
                        words: best_partial_words,
                        detail: String::new(),
                    }),
                    Err(e) => Err(runtime(format!("utterance {utt}: {e}"))),
                }
            }
            _ => {
                let cfg = SimpleDecoderConfig::new(self.beam, max_len);
                let list = decode_simple(scorer, vocab.eos(), &cfg).map_err(|e| invalid(e.to_string()))?;
                let best = list
                    .first()
                    .ok_or_else(|| runtime(format!("utterance {utt}: beam holds no ended hypothesis")))?;
                let labels: Vec<LabelId> = best.labels.iter().copied().filter(|&l| l != vocab.eos()).collect();
                Ok(Decoded {
                    words: self.codec.decode_to_words(&labels),
                    detail: format_nbest(utt, &list[..list.len().min(self.nbest)], vocab),
                    warning: None,
                })
            }
        }
    }
}

fn load_dump(path: &Path, vocab: &LabelVocab) -> CliResult<Vec<DumpUtterance>> {
    let file = File::open(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let (header, utts) = read_dump(BufReader::new(file)).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    check_vocab(&header, vocab).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(utts)
}

pub fn decode(a: &DecodeArgs) -> CliResult<()> {
    let scheme = a.scheme.scheme()?;
    let decoder = match a.decoder.as_deref() {
        None | Some("simple") => Decoder::Simple,
        Some("advanced") => Decoder::Advanced,
        Some(other) => return Err(invalid(format!("unknown decoder `{other}` (simple or advanced)"))),
    };
    if decoder == Decoder::Simple {
        for (set, flag) in [
            (a.lookahead, "lookahead"),
            (a.word_lm.is_some(), "word-lm"),
            (a.lambda.is_some(), "lambda"),
            (a.trace, "trace"),
        ] {
            if set {
                return Err(invalid(format!("--{flag} requires --decoder advanced")));
            }
        }
    } else if a.label_lm.is_some() || a.lm_weight.is_some() {
        return Err(invalid("--label-lm and --lm-weight apply to the simple decoder only"));
    }
    if a.dump.is_some() == a.oracle.oracle_targets.is_some() {
        return Err(invalid("give exactly one of --dump or --oracle-targets"));
    }
    if decoder == Decoder::Advanced && a.lexicon.is_none() {
        return Err(invalid("--decoder advanced needs --lexicon"));
    }
    let beam = a.beam.unwrap_or(TreeDecoderConfig::<f64>::DEFAULT_BEAM);
    let nbest = a.nbest.unwrap_or(1);
    if beam == 0 || nbest == 0 || a.max_len == Some(0) {
        return Err(invalid("--beam, --nbest and --max-len must be positive"));
    }

    let codec = load_codec(
        scheme,
        existing_opt(&a.lexicon, "lexicon")?,
        existing(&a.vocab, "vocab")?,
        existing_opt(&a.bpe, "bpe")?,
    )?;
    let label_lm = existing_opt(&a.label_lm, "label-lm")?.map(load_arpa).transpose()?;
    let tree = match decoder {
        Decoder::Advanced => Some(build_prefix_tree(&codec).map_err(|e| invalid(e.to_string()))?),
        Decoder::Simple => None,
    };
    let word_lm = match (&tree, existing_opt(&a.word_lm, "word-lm")?) {
        (Some(_), Some(p)) => Some(load_arpa(p)?),
        (Some(t), None) => Some(NGramLm::uniform(t.words())),
        (None, _) => None,
    };
    let run = Run {
        codec: &codec,
        decoder,
        beam,
        max_len: a.max_len,
        nbest,
        trace: a.trace,
        label_lm: label_lm.as_ref().map(|lm| (lm, a.lm_weight.unwrap_or(0.3))),
        tree: tree.as_ref().zip(word_lm.as_ref()).map(|(t, lm)| {
            (
                t,
                lm,
                a.lambda.unwrap_or(TreeDecoderConfig::<f64>::DEFAULT_LAMBDA),
                a.lookahead,
            )
        }),
    };

    let vocab = codec.vocab();
    let mut results = Vec::new();
    if let Some(p) = existing_opt(&a.dump, "dump")? {
        for u in load_dump(p, vocab)? {
            let scorer = ReplayScorer::new(&u, vocab.len(), vocab.eos());
            results.push((u.utt_id.clone(), run.decode(&u.utt_id, &scorer)?));
        }
    } else {
        let targets = load_targets(existing(&a.oracle.oracle_targets, "oracle-targets")?)?;
        for (i, t) in targets.iter().enumerate() {
            let scorer = a.oracle.scorer(t, i, vocab)?;
            results.push((t.utt_id.clone(), run.decode(&t.utt_id, &scorer)?));
        }
    }

    let mut hyps = Vec::with_capacity(results.len());
    let mut detail = String::new();
    for (id, d) in results {
        if let Some(w) = d.warning {
            eprintln!("{}", json!({ "warning": w, "utterance": id }));
        }
        detail.push_str(&d.detail);
        hyps.push(Utterance::new(&id, d.words));
    }
    if let Some(p) = &a.nbest_out {
        write_text(Some(p), &detail)?;
    }
    write_text(a.out.as_deref(), &format_corpus(&hyps))
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OracleDumpArgs {
    /// Label vocabulary from `build-vocab`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
    /// Binary posterior dump to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Writes the oracle's rows as a time-major dump: one row per reference
/// label plus the EOS row.
pub fn oracle_dump(a: &OracleDumpArgs) -> CliResult<()> {
    let vocab_path = existing(&a.vocab, "vocab")?;
    let vocab = load_vocab(vocab_path)?;
    let targets = load_targets(existing(&a.oracle.oracle_targets, "oracle-targets")?)?;
    let out = required(&a.out, "out")?;
    let mut utts = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let scorer = a.oracle.scorer(t, i, &vocab)?;
        let rows = (0..=t.labels.len())
            .map(|step| scorer.log_dist(&step).into_iter().map(|x| x as f32).collect())
            .collect();
        utts.push(DumpUtterance {
            utt_id: t.utt_id.clone(),
            rows: DumpRows::TimeMajor(rows),
        });
    }
    let name = vocab_path
        .file_name()
        .map_or_else(|| "vocab".to_string(), |n| n.to_string_lossy().into_owned());
    let header = DumpHeader::for_vocab(&name, &vocab);
    let fail = |e: std::io::Error| runtime(format!("{}: {e}", out.display()));
    let mut w = BufWriter::new(File::create(out).map_err(fail)?);
    write_dump(&mut w, &header, &utts).map_err(fail)?;
    w.flush().map_err(fail)
}
