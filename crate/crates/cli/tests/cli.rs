use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TOY_LEXICON: &str = "I\t1\tay\neye\t1\tay\ncat\t1\tk ae t\ndog\t1\td ao g\n";

const LEXICON: &str = "\
I\t1\tay
eye\t1\tay
read\t1\tr eh d
red\t1\tr eh d
reed\t0.4\tr iy d
reed\t0.6\tr ih d
cat\t1\tk ae t
cab\t1\tk ae b
dog\t1\td ao g
dock\t1\td aa k
";

const CORPUS: &str = "\
u1\tI read red
u2\teye cat dog
u3\tred cab
u4\treed dock I
u5\tcat
u6\tdog red eye cab
";

fn lexdec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexdec"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs a command that must succeed and returns its stdout.
fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lexdec(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(stdout: &str) -> Value {
    serde_json::from_str(stdout.trim()).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("lex.tsv"), LEXICON).unwrap();
    fs::write(dir.path().join("corpus.tsv"), CORPUS).unwrap();
    dir
}

const PHONE: &[&str] = &["--units", "single-phone", "--variant", "eow", "--disambig"];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

fn prepare_phone(dir: &Path) {
    ok(dir, &["lexicon-prep", "--lexicon", "lex.tsv", "--variant", "eow", "--disambig", "--out", "prep.tsv"]);
    ok(dir, &with(&["build-vocab"], &with(PHONE, &["--lexicon", "prep.tsv", "--corpus", "corpus.tsv", "--out", "vocab.txt"])));
    ok(dir, &with(&["encode"], &with(PHONE, &["--lexicon", "prep.tsv", "--vocab", "vocab.txt", "--corpus", "corpus.tsv", "--out", "targets.tsv"])));
}

fn pooled_wer(report: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix("#\twer\t"))
        .expect("summary line")
        .to_string()
}

#[test]
fn version_stamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["--version"]);
    assert!(out.starts_with(&format!("lexdec {}", env!("CARGO_PKG_VERSION"))));
    assert!(out.contains("dump LPD1"));
}

#[test]
fn lexicon_prep_on_toy_lexicon_adds_two_disambiguators() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.tsv"), TOY_LEXICON).unwrap();
    let summary = json(&ok(dir.path(), &["lexicon-prep", "--lexicon", "toy.tsv", "--disambig", "--out", "prep.tsv"]));
    assert_eq!(summary["disambiguators"], 2);
    assert_eq!(summary["homophone_classes"], 1);
    let tsv = fs::read_to_string(dir.path().join("prep.tsv")).unwrap();
    assert_eq!(tsv, "I\t1\tay $1\ncat\t1\tk ae t\ndog\t1\td ao g\neye\t1\tay $2\n");
}

#[test]
fn stats_eow_adds_one_label() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.tsv"), TOY_LEXICON).unwrap();
    let s = json(&ok(dir.path(), &["stats", "--lexicon", "toy.tsv", "--units", "single-phone", "--variant", "eow"]));
    assert_eq!(s["vocab_size"].as_u64().unwrap(), s["vocab_size_without_word_ends"].as_u64().unwrap() + 1);
    let sizes = &s["single_phone_vocab_sizes"];
    assert_eq!(sizes["single-phone/eow"].as_u64().unwrap(), sizes["single-phone/none"].as_u64().unwrap() + 1);
    assert_eq!(s["homophone_classes"], 1);
}

#[test]
fn oracle_decoding_scores_zero_wer() {
    let dir = workspace();
    let d = dir.path();
    prepare_phone(d);
    for decoder in ["simple", "advanced"] {
        let out = format!("hyp_{decoder}.tsv");
        ok(
            d,
            &with(
                &["decode", "--decoder", decoder],
                &with(PHONE, &["--lexicon", "prep.tsv", "--vocab", "vocab.txt", "--oracle-targets", "targets.tsv", "--peak", "1", "--out", &out]),
            ),
        );
        let summary = json(&ok(d, &["score", "--reference", "corpus.tsv", "--hypothesis", &out, "--out", "report.tsv"]));
        assert_eq!(summary["wer"], 0.0, "{decoder}");
        let report = fs::read_to_string(d.join("report.tsv")).unwrap();
        assert_eq!(pooled_wer(&report), "0.000000");
    }
}

/// Every artifact of the phone-BPE pipeline, from lexicon to score report.
fn run_pipeline(d: &Path) -> Vec<PathBuf> {
    let bpe: &[&str] = &["--units", "phone-bpe", "--variant", "word-end-phone", "--disambig", "--merges", "6"];
    ok(d, &["lexicon-prep", "--lexicon", "lex.tsv", "--variant", "word-end-phone", "--disambig", "--out", "prep.tsv"]);
    ok(d, &with(&["train-bpe"], &with(bpe, &["--lexicon", "prep.tsv", "--corpus", "corpus.tsv", "--out", "bpe.txt"])));
    ok(d, &with(&["build-vocab"], &with(bpe, &["--lexicon", "prep.tsv", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", "vocab.txt"])));
    let art: &[&str] = &["--lexicon", "prep.tsv", "--vocab", "vocab.txt", "--bpe", "bpe.txt"];
    ok(d, &with(&["encode"], &with(bpe, &with(art, &["--corpus", "corpus.tsv", "--out", "targets.tsv"]))));
    ok(d, &["filter-lengths", "--targets", "targets.tsv", "--drop-fraction", "0.2", "--out", "kept.txt"]);
    ok(d, &["train-lm", "--corpus", "corpus.tsv", "--lexicon", "prep.tsv", "--order", "2", "--out", "word.arpa"]);
    ok(d, &["train-lm", "--targets", "targets.tsv", "--vocab", "vocab.txt", "--order", "3", "--out", "label.arpa"]);
    ok(d, &["convert-arpa", "--arpa", "word.arpa", "--out", "word.canon.arpa"]);
    ok(d, &["oracle-dump", "--vocab", "vocab.txt", "--oracle-targets", "targets.tsv", "--peak", "0.9", "--noise", "0.4", "--seed", "3", "--out", "post.lpd"]);
    ok(
        d,
        &with(
            &["decode", "--decoder", "advanced", "--lookahead", "--word-lm", "word.canon.arpa", "--lambda", "0.1", "--dump", "post.lpd"],
            &with(bpe, &with(art, &["--nbest", "3", "--trace", "--nbest-out", "adv.nbest", "--out", "adv.tsv"])),
        ),
    );
    ok(
        d,
        &with(
            &["decode", "--label-lm", "label.arpa", "--lm-weight", "0.2", "--dump", "post.lpd"],
            &with(bpe, &with(art, &["--nbest", "2", "--nbest-out", "simple.nbest", "--out", "simple.tsv"])),
        ),
    );
    ok(d, &["score", "--reference", "corpus.tsv", "--hypothesis", "adv.tsv", "--out", "adv.report"]);
    ok(d, &["score", "--reference", "corpus.tsv", "--hypothesis", "simple.tsv", "--out", "simple.report"]);
    [
        "prep.tsv", "bpe.txt", "vocab.txt", "targets.tsv", "kept.txt", "word.arpa", "label.arpa", "word.canon.arpa",
        "post.lpd", "adv.nbest", "adv.tsv", "simple.nbest", "simple.tsv", "adv.report", "simple.report",
    ]
    .iter()
    .map(|f| d.join(f))
    .collect()
}

#[test]
fn pipeline_closes_and_recovers_the_transcripts() {
    let dir = workspace();
    let files = run_pipeline(dir.path());
    for f in &files {
        assert!(fs::metadata(f).unwrap().len() > 0, "{} is empty", f.display());
    }
    let report = fs::read_to_string(dir.path().join("adv.report")).unwrap();
    assert_eq!(pooled_wer(&report), "0.000000", "{report}");
    let word = fs::read_to_string(dir.path().join("word.arpa")).unwrap();
    assert_eq!(word, fs::read_to_string(dir.path().join("word.canon.arpa")).unwrap());
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (workspace(), workspace());
    for (fa, fb) in run_pipeline(a.path()).iter().zip(run_pipeline(b.path())) {
        assert_eq!(fs::read(fa).unwrap(), fs::read(&fb).unwrap(), "{} differs", fa.display());
    }
}

#[test]
fn character_units_pipeline() {
    let dir = workspace();
    let d = dir.path();
    let chars: &[&str] = &["--units", "char-bpe", "--merges", "10"];
    ok(d, &with(&["train-bpe"], &with(chars, &["--lexicon", "lex.tsv", "--corpus", "corpus.tsv", "--out", "bpe.txt"])));
    ok(d, &with(&["build-vocab"], &with(chars, &["--lexicon", "lex.tsv", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", "vocab.txt"])));
    let art: &[&str] = &["--lexicon", "lex.tsv", "--vocab", "vocab.txt", "--bpe", "bpe.txt"];
    ok(d, &with(&["encode"], &with(chars, &with(art, &["--corpus", "corpus.tsv", "--out", "targets.tsv"]))));
    ok(d, &with(&["decode", "--decoder", "advanced", "--oracle-targets", "targets.tsv"], &with(chars, &with(art, &["--out", "hyp.tsv"]))));
    let s = json(&ok(d, &["score", "--reference", "corpus.tsv", "--hypothesis", "hyp.tsv", "--out", "r.tsv"]));
    assert_eq!(s["wer"], 0.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = workspace();
    let d = dir.path();
    prepare_phone(d);
    fs::write(
        d.join("run.toml"),
        "[decode]\nunits = \"single-phone\"\nvariant = \"eow\"\ndisambig = true\nlexicon = \"prep.tsv\"\nvocab = \"vocab.txt\"\ndecoder = \"advanced\"\nbeam = 4\npeak = 1.5\n",
    )
    .unwrap();
    // A peak above 1 fails validation; the flag overrides it.
    let out = lexdec(d, &["--config", "run.toml", "decode", "--oracle-targets", "targets.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    ok(d, &["--config", "run.toml", "decode", "--oracle-targets", "targets.tsv", "--peak", "0.95", "--out", "hyp.tsv"]);
    let s = json(&ok(d, &["score", "--reference", "corpus.tsv", "--hypothesis", "hyp.tsv", "--out", "r.tsv"]));
    assert_eq!(s["wer"], 0.0);
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = workspace();
    let d = dir.path();
    for args in [
        vec!["no-such-command"],
        vec!["score", "--reference", "missing.tsv", "--hypothesis", "corpus.tsv"],
        vec!["build-vocab", "--units", "single-char", "--variant", "eow"],
        vec!["decode", "--units", "single-char", "--vocab", "corpus.tsv", "--lookahead", "--dump", "x"],
        vec!["filter-lengths", "--targets", "corpus.tsv"],
    ] {
        let out = lexdec(d, &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(error_line(&out)["error"], "validation", "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("bad.tsv"), "word\tnot-a-number\tp\n").unwrap();
    let out = lexdec(d, &["lexicon-prep", "--lexicon", "bad.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["error"], "runtime");
    assert!(err["message"].as_str().unwrap().contains("line 1"));
}

#[test]
fn oov_words_follow_the_oov_mode() {
    let dir = workspace();
    let d = dir.path();
    prepare_phone(d);
    fs::write(d.join("oov.tsv"), "x1\tI zebra\n").unwrap();
    let base = with(&["encode"], &with(PHONE, &["--lexicon", "prep.tsv", "--vocab", "vocab.txt", "--corpus", "oov.tsv"]));
    assert_eq!(lexdec(d, &base).status.code(), Some(2));
    let lenient = ok(d, &with(&base, &["--oov", "lenient"]));
    assert!(lenient.starts_with("x1\t"));
}
