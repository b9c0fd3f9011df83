//! Label units, target encoding and decoding for attention-based speech
//! recognition.
//!
//! The pipeline goes lexicon → label scheme → target encoding on the
//! training side, and scorer → beam search (label-level or prefix-tree) →
//! words → WER on the decoding side. Scoring types are generic over
//! [`num::Real`]; the aliases below fix them to `f64`.

pub mod decoder_advanced;
pub mod decoder_simple;
pub mod label_units;
pub mod lexicon;
pub mod lm;
pub mod metrics;
pub mod num;
pub mod scorer;
pub mod symbols;
pub mod target_encoding;

pub use num::Real;

pub type NGramLm = lm::NGramLm<f64>;
pub type OracleScorer = scorer::OracleScorer<f64>;
pub type ReplayScorer = scorer::ReplayScorer<f64>;
pub type LmLabelScorer<'a> = scorer::LmLabelScorer<'a, f64>;
pub type SimpleDecoderConfig = decoder_simple::SimpleDecoderConfig<f64>;
pub type NBestEntry = decoder_simple::NBestEntry<f64>;
pub type TreeDecoderConfig = decoder_advanced::TreeDecoderConfig<f64>;
pub type TreeDecodeResult = decoder_advanced::TreeDecodeResult<f64>;
pub type TreeSearch<'a> = decoder_advanced::TreeSearch<'a, f64>;
pub type WerBreakdown = metrics::WerBreakdown<f64>;
