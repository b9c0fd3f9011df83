#![allow(dead_code)]

use std::collections::BTreeSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use lexdec::label_units::{build_vocab, count_words, LabelId, UnitScheme};
use lexdec::lexicon::{prepare_lexicon, Lexicon, Pronunciation, WordEndVariant};
use lexdec::num::log_normalize;
use lexdec::scorer::LabelScorer;
use lexdec::target_encoding::{TargetCodec, Utterance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// History-dependent scorer whose rows are pseudo-random functions of
/// `(seed, history)`.
#[derive(Debug, Clone)]
pub struct HashedScorer {
    pub vocab_size: usize,
    pub seed: u64,
    /// Scale of the random logits; larger means peakier rows.
    pub spread: f64,
}

impl LabelScorer<f64> for HashedScorer {
    type State = u64;

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn start(&self) -> u64 {
        self.seed
    }

    fn step(&self, state: &u64, label: LabelId) -> u64 {
        let mut h = DefaultHasher::new();
        (state, label.0).hash(&mut h);
        h.finish()
    }

    fn log_dist(&self, state: &u64) -> Vec<f64> {
        let mut r = rng(*state);
        let mut row: Vec<f64> = (0..self.vocab_size).map(|_| r.gen_range(-self.spread..self.spread)).collect();
        log_normalize(&mut row);
        row
    }
}

/// Phone names `p0`, `p1`, ...
pub fn phones(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

fn random_pron(r: &mut impl Rng, inventory: &[String], max_len: usize) -> Vec<String> {
    let len = r.gen_range(1..=max_len);
    (0..len).map(|_| inventory.choose(r).unwrap().clone()).collect()
}

/// Random single-pronunciation lexicon of `n_words` words with `n_classes`
/// planted homophone classes of 2 to 4 words each. Word spellings mix case
/// so that homophone ordering is exercised.
pub fn random_lexicon(r: &mut impl Rng, n_words: usize, n_phones: usize, n_classes: usize) -> Lexicon {
    let inventory = phones(n_phones);
    let mut words: BTreeSet<String> = BTreeSet::new();
    while words.len() < n_words {
        let len = r.gen_range(1..=6);
        let w: String = (0..len)
            .map(|_| *b"abcdefgABC".choose(r).unwrap() as char)
            .collect();
        words.insert(w);
    }
    let mut words: Vec<String> = words.into_iter().collect();
    words.shuffle(r);
    let mut lex = Lexicon::new();
    let mut i = 0;
    for _ in 0..n_classes {
        let size = r.gen_range(2..=4);
        if i + size > words.len() {
            break;
        }
        let pron = random_pron(r, &inventory, 5);
        for w in &words[i..i + size] {
            lex.insert(w, Pronunciation::new(pron.clone(), 1.0)).unwrap();
        }
        i += size;
    }
    for w in &words[i..] {
        lex.insert(w, Pronunciation::new(random_pron(r, &inventory, 6), 1.0)).unwrap();
    }
    lex
}

/// Random utterances over the lexicon's words.
pub fn random_utterances(r: &mut impl Rng, lex: &Lexicon, n: usize, max_words: usize) -> Vec<Utterance> {
    let words: Vec<&str> = lex.words().collect();
    (0..n)
        .map(|i| {
            let len = r.gen_range(0..=max_words);
            Utterance::new(&format!("u{i}"), (0..len).map(|_| *words.choose(r).unwrap()))
        })
        .collect()
}

/// Codec for `scheme` over the base lexicon, with vocabulary (and BPE)
/// trained on `corpus`.
pub fn codec(scheme: &UnitScheme, base: &Lexicon, corpus: &[Utterance]) -> TargetCodec {
    let lex = if scheme.kind.is_phone() {
        prepare_lexicon(base, scheme.variant, scheme.disambig)
    } else {
        base.clone()
    };
    let counts = count_words(corpus.iter().map(|u| &u.words));
    let (vocab, bpe) = build_vocab(scheme, Some(&lex), &counts).unwrap();
    TargetCodec::new(*scheme, vocab, Some(lex), bpe).unwrap()
}

/// Every scheme whose labels mark each word boundary and map back to words
/// uniquely: phone schemes need a word-end marker and disambiguators.
pub fn boundary_schemes(merges: usize) -> Vec<UnitScheme> {
    let mut out = Vec::new();
    for variant in [WordEndVariant::Eow, WordEndVariant::WordEndPhone] {
        out.push(UnitScheme::single_phone(variant, true));
        out.push(UnitScheme::phone_bpe(variant, true, merges));
    }
    out.push(UnitScheme::single_char());
    out.push(UnitScheme::char_bpe(merges));
    out.push(UnitScheme::whole_word());
    out
}
