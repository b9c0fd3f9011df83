//! Binary posterior dumps.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "LPD1" header_len header(UTF-8: "vocab=NAME\nsha256=HEX\ndim=N\n")
//! record*: utt_len utt_id kind:u8 key dim row:f32[dim]
//!   kind 0: key = step
//!   kind 1: key = n label_id[n]   (the history the row conditions on)
//! ```
//!
//! Records of one utterance are contiguous. Time-major utterances list steps
//! `0, 1, 2, ...` in order.

use std::collections::HashSet;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::label_units::{LabelId, LabelVocab};
use crate::num::log_sum_exp;

pub const DUMP_MAGIC: &[u8; 4] = b"LPD1";

/// Rows must satisfy `|logsumexp(row)| <= NORM_TOLERANCE`.
const NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a posterior dump (bad magic)")]
    BadMagic,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("utterance `{utt}`: row has {found} entries, header says {expected}")]
    DimMismatch { utt: String, expected: usize, found: usize },
    #[error("utterance `{utt}`: row is not normalized (logsumexp = {lse})")]
    NotNormalized { utt: String, lse: f64 },
    #[error("utterance `{0}`: records are not contiguous")]
    NotContiguous(String),
    #[error("utterance `{0}`: mixes step and history records")]
    MixedKinds(String),
    #[error("utterance `{utt}`: expected step {expected}, found {found}")]
    StepOrder { utt: String, expected: u32, found: u32 },
    #[error("utterance `{0}`: duplicate history")]
    DuplicateHistory(String),
    #[error("unknown record kind {0}")]
    BadKind(u8),
    #[error("utterance id is not UTF-8")]
    BadUttId,
    #[error("dump was written for vocabulary {found}, expected {expected}")]
    VocabMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpHeader {
    /// Name (usually the file name) of the label vocabulary.
    pub vocab_name: String,
    /// [`LabelVocab::digest`] of that vocabulary.
    pub vocab_sha256: String,
    pub dim: usize,
}

impl DumpHeader {
    pub fn for_vocab(name: &str, vocab: &LabelVocab) -> Self {
        Self {
            vocab_name: name.to_string(),
            vocab_sha256: vocab.digest(),
            dim: vocab.len(),
        }
    }

    fn to_text(&self) -> String {
        format!(
            "vocab={}\nsha256={}\ndim={}\n",
            self.vocab_name, self.vocab_sha256, self.dim
        )
    }

    fn parse(text: &str) -> Result<Self, DumpError> {
        let (mut name, mut sha, mut dim) = (None, None, None);
        for line in text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DumpError::BadHeader(format!("line `{line}`")))?;
            match k {
                "vocab" => name = Some(v.to_string()),
                "sha256" => sha = Some(v.to_string()),
                "dim" => {
                    dim = Some(
                        v.parse()
                            .map_err(|_| DumpError::BadHeader(format!("dim `{v}`")))?,
                    )
                }
                _ => return Err(DumpError::BadHeader(format!("unknown key `{k}`"))),
            }
        }
        match (name, sha, dim) {
            (Some(vocab_name), Some(vocab_sha256), Some(dim)) => Ok(Self {
                vocab_name,
                vocab_sha256,
                dim,
            }),
            _ => Err(DumpError::BadHeader("missing vocab, sha256 or dim".into())),
        }
    }
}

/// Verifies that a dump belongs to `vocab`.
pub fn check_vocab(header: &DumpHeader, vocab: &LabelVocab) -> Result<(), DumpError> {
    let digest = vocab.digest();
    if header.vocab_sha256 != digest {
        return Err(DumpError::VocabMismatch {
            expected: digest,
            found: header.vocab_sha256.clone(),
        });
    }
    if header.dim != vocab.len() {
        return Err(DumpError::BadHeader(format!(
            "dim {} but vocabulary has {} labels",
            header.dim,
            vocab.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpRows {
    /// Row `n` is the distribution at step `n` whatever the history.
    TimeMajor(Vec<Vec<f32>>),
    /// Rows keyed by the label history they condition on.
    History(Vec<(Vec<LabelId>, Vec<f32>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpUtterance {
    pub utt_id: String,
    pub rows: DumpRows,
}

fn put_u32(w: &mut impl Write, x: usize) -> io::Result<()> {
    let x = u32::try_from(x).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "value exceeds u32"))?;
    w.write_all(&x.to_le_bytes())
}

fn put_row(w: &mut impl Write, row: &[f32]) -> io::Result<()> {
    put_u32(w, row.len())?;
    for x in row {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn put_record_head(w: &mut impl Write, utt_id: &str, kind: u8) -> io::Result<()> {
    put_u32(w, utt_id.len())?;
    w.write_all(utt_id.as_bytes())?;
    w.write_all(&[kind])
}

pub fn write_dump(mut w: impl Write, header: &DumpHeader, utts: &[DumpUtterance]) -> io::Result<()> {
    w.write_all(DUMP_MAGIC)?;
    let text = header.to_text();
    put_u32(&mut w, text.len())?;
    w.write_all(text.as_bytes())?;
    for utt in utts {
        match &utt.rows {
            DumpRows::TimeMajor(rows) => {
                for (n, row) in rows.iter().enumerate() {
                    put_record_head(&mut w, &utt.utt_id, 0)?;
                    put_u32(&mut w, n)?;
                    put_row(&mut w, row)?;
                }
            }
            DumpRows::History(rows) => {
                for (hist, row) in rows {
                    put_record_head(&mut w, &utt.utt_id, 1)?;
                    put_u32(&mut w, hist.len())?;
                    for l in hist {
                        put_u32(&mut w, l.index())?;
                    }
                    put_row(&mut w, row)?;
                }
            }
        }
    }
    w.flush()
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> io::Result<u32> {
        let mut b = [0u8; 4];
        self.inner.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    /// Like [`Self::u32`] but returns `None` at a clean end of input.
    fn u32_or_eof(&mut self) -> io::Result<Option<u32>> {
        let mut b = [0u8; 4];
        let mut got = 0;
        while got < 4 {
            match self.inner.read(&mut b[got..])? {
                0 if got == 0 => return Ok(None),
                0 => return Err(io::ErrorKind::UnexpectedEof.into()),
                n => got += n,
            }
        }
        Ok(Some(u32::from_le_bytes(b)))
    }

    fn bytes(&mut self, n: usize) -> io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        (&mut self.inner).take(n as u64).read_to_end(&mut buf)?;
        if buf.len() != n {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        Ok(buf)
    }
}

enum Key {
    Step(u32),
    History(Vec<LabelId>),
}

fn check_row(utt: &str, row: &[f32], dim: usize) -> Result<(), DumpError> {
    if row.len() != dim {
        return Err(DumpError::DimMismatch {
            utt: utt.to_string(),
            expected: dim,
            found: row.len(),
        });
    }
    let wide: Vec<f64> = row.iter().map(|&x| f64::from(x)).collect();
    let lse = log_sum_exp(&wide);
    if lse.is_nan() || lse.abs() > NORM_TOLERANCE {
        return Err(DumpError::NotNormalized {
            utt: utt.to_string(),
            lse,
        });
    }
    Ok(())
}

/// Reads and validates a whole dump.
pub fn read_dump(r: impl Read) -> Result<(DumpHeader, Vec<DumpUtterance>), DumpError> {
    let mut rd = Reader { inner: r };
    let magic = rd.bytes(4).map_err(|_| DumpError::BadMagic)?;
    if magic != DUMP_MAGIC {
        return Err(DumpError::BadMagic);
    }
    let len = rd.u32()? as usize;
    let text = String::from_utf8(rd.bytes(len)?).map_err(|_| DumpError::BadHeader("not UTF-8".into()))?;
    let header = DumpHeader::parse(&text)?;

    let mut utts: Vec<DumpUtterance> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut histories: HashSet<Vec<LabelId>> = HashSet::new();
    while let Some(n) = rd.u32_or_eof()? {
        let utt_id = String::from_utf8(rd.bytes(n as usize)?).map_err(|_| DumpError::BadUttId)?;
        let kind = rd.bytes(1)?[0];
        let key = match kind {
            0 => Key::Step(rd.u32()?),
            1 => {
                let n = rd.u32()? as usize;
                let mut hist = Vec::with_capacity(n.min(1 << 16));
                for _ in 0..n {
                    hist.push(LabelId(rd.u32()?));
                }
                Key::History(hist)
            }
            k => return Err(DumpError::BadKind(k)),
        };
        let dim = rd.u32()? as usize;
        let raw = rd.bytes(dim.checked_mul(4).ok_or(DumpError::BadHeader("dim overflow".into()))?)?;
        let row: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        check_row(&utt_id, &row, header.dim)?;

        let continues = utts.last().is_some_and(|u| u.utt_id == utt_id);
        if !continues {
            if !seen.insert(utt_id.clone()) {
                return Err(DumpError::NotContiguous(utt_id));
            }
            histories.clear();
            utts.push(DumpUtterance {
                utt_id: utt_id.clone(),
                rows: match key {
                    Key::Step(_) => DumpRows::TimeMajor(Vec::new()),
                    Key::History(_) => DumpRows::History(Vec::new()),
                },
            });
        }
        let current = utts.last_mut().expect("pushed above");
        match (&mut current.rows, key) {
            (DumpRows::TimeMajor(rows), Key::Step(step)) => {
                if step as usize != rows.len() {
                    return Err(DumpError::StepOrder {
                        utt: utt_id,
                        expected: rows.len() as u32,
                        found: step,
                    });
                }
                rows.push(row);
            }
            (DumpRows::History(rows), Key::History(hist)) => {
                if !histories.insert(hist.clone()) {
                    return Err(DumpError::DuplicateHistory(utt_id));
                }
                if let Some(&bad) = hist.iter().find(|l| l.index() >= header.dim) {
                    return Err(DumpError::BadHeader(format!(
                        "history label {} outside dim {}",
                        bad.0, header.dim
                    )));
                }
                rows.push((hist, row));
            }
            _ => return Err(DumpError::MixedKinds(utt_id)),
        }
    }
    Ok((header, utts))
}
