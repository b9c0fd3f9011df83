//! Byte-pair encoding over arbitrary symbol sequences (phones or characters).
//!
//! Merges are learned and applied strictly inside word units. The merged
//! symbol of `(a, b)` is `a + joiner + b`; phones use a `+` joiner so that a
//! subword can be split back into phones, characters use the empty joiner.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

pub const HEADER: &str = "#bpe-v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpeError {
    #[error("missing `{HEADER}` header")]
    MissingHeader,
    #[error("line {line}: expected `left right`, got `{text}`")]
    MalformedMerge { line: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    joiner: String,
    base_symbols: BTreeSet<String>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    pub fn new(joiner: &str) -> Self {
        Self {
            joiner: joiner.to_string(),
            ..Self::default()
        }
    }

    /// Builds a model from an ordered merge list. Operands not produced by an
    /// earlier merge are taken as base symbols.
    pub fn from_merges(joiner: &str, merges: Vec<(String, String)>) -> Self {
        let mut model = Self::new(joiner);
        let mut produced = BTreeSet::new();
        for (a, b) in &merges {
            for op in [a, b] {
                if !produced.contains(op) {
                    model.base_symbols.insert(op.clone());
                }
            }
            produced.insert(model.merged(a, b));
        }
        for (rank, pair) in merges.iter().enumerate() {
            model.ranks.entry(pair.clone()).or_insert(rank);
        }
        model.merges = merges;
        model
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn joiner(&self) -> &str {
        &self.joiner
    }

    pub fn base_symbols(&self) -> &BTreeSet<String> {
        &self.base_symbols
    }

    pub fn merged(&self, a: &str, b: &str) -> String {
        format!("{a}{}{b}", self.joiner)
    }

    /// Every symbol the model can emit for in-alphabet input: base symbols
    /// plus all merge results.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = self.base_symbols.clone();
        out.extend(self.merges.iter().map(|(a, b)| self.merged(a, b)));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(HEADER);
        if !self.joiner.is_empty() {
            out.push_str(" joiner=");
            out.push_str(&self.joiner);
        }
        out.push('\n');
        for (a, b) in &self.merges {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(BpeError::MissingHeader)?;
        let rest = header
            .trim_end()
            .strip_prefix(HEADER)
            .ok_or(BpeError::MissingHeader)?;
        let joiner = match rest.trim() {
            "" => "",
            opt => opt.strip_prefix("joiner=").ok_or(BpeError::MissingHeader)?,
        };
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    merges.push((a.to_string(), b.to_string()))
                }
                _ => {
                    return Err(BpeError::MalformedMerge {
                        line: i + 2,
                        text: line.to_string(),
                    })
                }
            }
        }
        Ok(Self::from_merges(joiner, merges))
    }
}

/// Learns up to `num_merges` merges from word units with frequencies.
///
/// Each iteration merges the most frequent adjacent pair (frequency-weighted,
/// never across units); ties go to the lexicographically smallest pair.
/// Training stops early once no pair has a positive count.
pub fn train_bpe<S: AsRef<str>>(
    units: &[(Vec<S>, u64)],
    num_merges: usize,
    joiner: &str,
) -> BpeModel {
    let mut interner = Interner::default();
    let mut words: Vec<Vec<u32>> = units
        .iter()
        .map(|(syms, _)| syms.iter().map(|s| interner.intern(s.as_ref())).collect())
        .collect();
    let freqs: Vec<i64> = units.iter().map(|(_, f)| *f as i64).collect();
    let base_symbols: BTreeSet<String> = interner.names.iter().cloned().collect();

    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut occurs: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
    for (idx, w) in words.iter().enumerate() {
        add_pairs(w, freqs[idx], idx, &mut counts, &mut occurs);
    }

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let best = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| {
                    let ka = (interner.name(pa.0), interner.name(pa.1));
                    let kb = (interner.name(pb.0), interner.name(pb.1));
                    kb.cmp(&ka)
                })
            })
            .map(|(p, _)| *p);
        let Some((a, b)) = best else { break };
        let merged = format!("{}{joiner}{}", interner.name(a), interner.name(b));
        let m = interner.intern(&merged);
        merges.push((interner.name(a).to_string(), interner.name(b).to_string()));

        let affected = occurs.get(&(a, b)).cloned().unwrap_or_default();
        for idx in affected {
            remove_pairs(&words[idx], freqs[idx], idx, &mut counts, &mut occurs);
            merge_in_place(&mut words[idx], a, b, m);
            add_pairs(&words[idx], freqs[idx], idx, &mut counts, &mut occurs);
        }
    }

    let mut model = BpeModel::from_merges(joiner, merges);
    model.base_symbols.extend(base_symbols);
    model
}

/// Segments one word unit: merges are applied in training order, each
/// exhaustively left to right. Symbols unknown to the model pass through.
pub fn apply_bpe<S: AsRef<str>>(model: &BpeModel, seq: &[S]) -> Vec<String> {
    let mut syms: Vec<String> = seq.iter().map(|s| s.as_ref().to_string()).collect();
    if model.merges.is_empty() {
        return syms;
    }
    let mut key = (String::new(), String::new());
    loop {
        // Lowest-ranked pair present. Merging it only creates pairs of higher
        // rank, so this visits merges in training order.
        let mut best: Option<usize> = None;
        for w in syms.windows(2) {
            key.0.clone_from(&w[0]);
            key.1.clone_from(&w[1]);
            if let Some(&r) = model.ranks.get(&key) {
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        }
        let Some(rank) = best else { break };
        let (a, b) = &model.merges[rank];
        let merged = model.merged(a, b);
        let mut out = Vec::with_capacity(syms.len());
        let mut i = 0;
        while i < syms.len() {
            if i + 1 < syms.len() && &syms[i] == a && &syms[i + 1] == b {
                out.push(merged.clone());
                i += 2;
            } else {
                out.push(std::mem::take(&mut syms[i]));
                i += 1;
            }
        }
        syms = out;
    }
    syms
}

#[derive(Default)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

fn add_pairs(
    w: &[u32],
    freq: i64,
    idx: usize,
    counts: &mut HashMap<(u32, u32), i64>,
    occurs: &mut HashMap<(u32, u32), BTreeSet<usize>>,
) {
    for p in w.windows(2) {
        let pair = (p[0], p[1]);
        *counts.entry(pair).or_insert(0) += freq;
        occurs.entry(pair).or_default().insert(idx);
    }
}

fn remove_pairs(
    w: &[u32],
    freq: i64,
    idx: usize,
    counts: &mut HashMap<(u32, u32), i64>,
    occurs: &mut HashMap<(u32, u32), BTreeSet<usize>>,
) {
    for p in w.windows(2) {
        let pair = (p[0], p[1]);
        if let Some(c) = counts.get_mut(&pair) {
            *c -= freq;
        }
        if let Some(set) = occurs.get_mut(&pair) {
            set.remove(&idx);
            if set.is_empty() {
                occurs.remove(&pair);
                counts.remove(&pair);
            }
        }
    }
}

fn merge_in_place(w: &mut Vec<u32>, a: u32, b: u32, m: u32) {
    let mut out = Vec::with_capacity(w.len());
    let mut i = 0;
    while i < w.len() {
        if i + 1 < w.len() && w[i] == a && w[i + 1] == b {
            out.push(m);
            i += 2;
        } else {
            out.push(w[i]);
            i += 1;
        }
    }
    *w = out;
}
