//! `lexdec`: batch pipeline from pronunciation lexica to decoded, scored
//! hypotheses.

mod commands;
mod common;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::commands::{decode, lm, prep, score};
use crate::config::ConfigFile;
use crate::error::CliResult;

/// Reproducibility stamp printed by `--version`: crate version, scalar
/// type and on-disk format tags.
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (scalar f64, dump LPD1, bpe #bpe-v1)");

#[derive(Debug, Parser)]
#[command(name = "lexdec", version = VERSION, about)]
struct Cli {
    /// TOML file with one table of defaults per command; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Reduce to one pronunciation per word, mark word ends and add
    /// disambiguation symbols.
    LexiconPrep(prep::LexiconPrepArgs),
    /// Learn BPE merges over phone or character units.
    TrainBpe(prep::TrainBpeArgs),
    /// Write the label vocabulary of a unit scheme.
    BuildVocab(prep::BuildVocabArgs),
    /// Encode transcripts into label id targets.
    Encode(prep::EncodeArgs),
    /// Compute the target length threshold and the kept utterance list.
    FilterLengths(prep::FilterLengthsArgs),
    /// Train an add-k smoothed n-gram LM over words or labels.
    TrainLm(lm::TrainLmArgs),
    /// Parse an ARPA file and rewrite it in canonical form.
    ConvertArpa(lm::ConvertArpaArgs),
    /// Decode posterior dumps or oracle scorers into word hypotheses.
    Decode(decode::DecodeArgs),
    /// Write an oracle scorer's rows as a posterior dump.
    OracleDump(decode::OracleDumpArgs),
    /// Word error rate report.
    Score(score::ScoreArgs),
    /// Lexicon, vocabulary and corpus statistics.
    Stats(prep::StatsArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::LexiconPrep(a) => prep::lexicon_prep(&cfg.merge("lexicon-prep", a)?),
        Command::TrainBpe(a) => prep::train_bpe_cmd(&cfg.merge("train-bpe", a)?),
        Command::BuildVocab(a) => prep::build_vocab_cmd(&cfg.merge("build-vocab", a)?),
        Command::Encode(a) => prep::encode(&cfg.merge("encode", a)?),
        Command::FilterLengths(a) => prep::filter_lengths(&cfg.merge("filter-lengths", a)?),
        Command::TrainLm(a) => lm::train_lm(&cfg.merge("train-lm", a)?),
        Command::ConvertArpa(a) => lm::convert_arpa(&cfg.merge("convert-arpa", a)?),
        Command::Decode(a) => decode::decode(&cfg.merge("decode", a)?),
        Command::OracleDump(a) => decode::oracle_dump(&cfg.merge("oracle-dump", a)?),
        Command::Score(a) => score::score(&cfg.merge("score", a)?),
        Command::Stats(a) => prep::stats(&cfg.merge("stats", a)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let err = error::invalid(first.trim_start_matches("error: "));
            eprintln!("{}", err.json_line());
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json_line());
            e.exit_code()
        }
    }
}
