//! Word error rate report.

use std::collections::HashMap;
use std::fmt::Write;
use std::path::PathBuf;

use clap::Args;
use lexdec::metrics::{align, CorpusWer, EditOp, WerBreakdown};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{existing, load_corpus, write_text};
use crate::error::{invalid, CliResult};

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ScoreArgs {
    /// Reference transcripts (`utt<TAB>words`).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Hypotheses in the same format, e.g. the output of `decode`.
    #[arg(long)]
    pub hypothesis: Option<PathBuf>,
    /// Report TSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error counts of one utterance; unlike [`lexdec::metrics::wer`] this
/// accepts an empty reference.
fn breakdown(reference: &[String], hypothesis: &[String]) -> WerBreakdown<f64> {
    let mut b = WerBreakdown {
        substitutions: 0,
        insertions: 0,
        deletions: 0,
        reference_length: reference.len(),
        wer: f64::NAN,
    };
    for op in align(reference, hypothesis) {
        match op {
            EditOp::Substitution => b.substitutions += 1,
            EditOp::Insertion => b.insertions += 1,
            EditOp::Deletion => b.deletions += 1,
            EditOp::Match => {}
        }
    }
    if !reference.is_empty() {
        b.wer = b.errors() as f64 / reference.len() as f64;
    }
    b
}

fn fmt_wer(w: f64) -> String {
    if w.is_nan() {
        "-".to_string()
    } else {
        format!("{w:.6}")
    }
}

/// Writes `utt sub ins del ref_len wer` lines, then a `#`-prefixed pooled
/// summary block. Utterances missing from the hypotheses score as empty.
pub fn score(a: &ScoreArgs) -> CliResult<()> {
    let refs = load_corpus(existing(&a.reference, "reference")?)?;
    let hyps = load_corpus(existing(&a.hypothesis, "hypothesis")?)?;
    let mut by_id: HashMap<&str, &[String]> = hyps.iter().map(|u| (u.id.as_str(), u.words.as_slice())).collect();
    let mut report = String::from("utt\tsub\tins\tdel\tref_words\twer\n");
    let mut pooled = CorpusWer::default();
    let mut missing = 0usize;
    for r in &refs {
        let hyp = by_id.remove(r.id.as_str()).unwrap_or_else(|| {
            missing += 1;
            &[]
        });
        let b = breakdown(&r.words, hyp);
        let _ = writeln!(
            report,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            b.substitutions,
            b.insertions,
            b.deletions,
            b.reference_length,
            fmt_wer(b.wer)
        );
        pooled.add(&b);
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(invalid(format!("hypothesis utterance `{extra}` has no reference")));
    }
    let wer: f64 = pooled.wer();
    let _ = write!(
        report,
        "#\tutterances\t{}\n#\tmissing\t{missing}\n#\tsubstitutions\t{}\n#\tinsertions\t{}\n#\tdeletions\t{}\n#\treference_words\t{}\n#\twer\t{}\n",
        pooled.utterances,
        pooled.substitutions,
        pooled.insertions,
        pooled.deletions,
        pooled.reference_length,
        fmt_wer(wer)
    );
    write_text(a.out.as_deref(), &report)?;
    if a.out.is_some() {
        println!(
            "{}",
            json!({ "wer": wer, "errors": pooled.errors(), "reference_words": pooled.reference_length, "utterances": pooled.utterances, "missing": missing })
        );
    }
    Ok(())
}
