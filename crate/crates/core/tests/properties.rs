mod common;

use std::collections::{BTreeSet, HashMap};

use common::{boundary_schemes, codec, random_lexicon, random_utterances, rng};
use lexdec::decoder_advanced::build_prefix_tree;
use lexdec::label_units::{apply_bpe, char_bpe_units, train_bpe, UnitScheme};
use lexdec::lexicon::{
    add_disambiguation_symbols, find_homophone_classes, prepare_lexicon, WordEndVariant,
};
use lexdec::lm::{lookahead_table, parse_arpa, train_ngram, write_arpa, NGramLm, TrainOptions};
use lexdec::metrics::{align, wer, EditOp};
use lexdec::symbols::{LM_BOS, PHONE_BPE_JOINER};
use lexdec::target_encoding::{
    format_corpus, format_targets, length_filter_threshold, parse_corpus, parse_targets, OovMode,
};
use proptest::prelude::*;

fn token_seq(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disambiguated_lexicon_is_injective(seed in any::<u64>(), n_words in 2usize..60, n_phones in 2usize..8) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, n_words, n_phones, n_words / 4 + 1);
        let prepared = prepare_lexicon(&lex, WordEndVariant::None, true);
        let mut seen = BTreeSet::new();
        for (_, prons) in prepared.entries() {
            prop_assert!(seen.insert(prons[0].phones.clone()));
        }
        let classes = find_homophone_classes(&lex).unwrap();
        let dis = add_disambiguation_symbols(&lex).unwrap();
        let homophones: usize = classes.iter().map(|c| c.words.len()).sum();
        prop_assert_eq!(dis.n_symbols(), homophones);
    }

    #[test]
    fn homophone_classes_match_pairwise_grouping(seed in any::<u64>(), n_words in 2usize..40) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, n_words, 3, n_words / 3 + 1);
        let words: Vec<&str> = lex.words().collect();
        let mut expected: BTreeSet<BTreeSet<String>> = BTreeSet::new();
        for a in &words {
            let class: BTreeSet<String> = words
                .iter()
                .filter(|b| lex.phones(b) == lex.phones(a))
                .map(|b| b.to_string())
                .collect();
            if class.len() > 1 {
                expected.insert(class);
            }
        }
        let found: BTreeSet<BTreeSet<String>> = find_homophone_classes(&lex)
            .unwrap()
            .into_iter()
            .map(|c| c.words.into_iter().collect())
            .collect();
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn preparation_is_idempotent_for_single_pronunciations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, 20, 5, 3);
        let once = prepare_lexicon(&lex, WordEndVariant::None, false);
        prop_assert_eq!(prepare_lexicon(&once, WordEndVariant::None, false), once);
    }

    #[test]
    fn word_end_inventories(seed in any::<u64>(), disambig in any::<bool>()) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, 30, 6, 4);
        let none = prepare_lexicon(&lex, WordEndVariant::None, disambig);
        let eow = prepare_lexicon(&lex, WordEndVariant::Eow, disambig);
        let wep = prepare_lexicon(&lex, WordEndVariant::WordEndPhone, disambig);
        let finals: BTreeSet<&String> = lex.entries().map(|(_, p)| p[0].phones.last().unwrap()).collect();
        prop_assert_eq!(eow.inventory().len(), none.inventory().len() + 1);
        prop_assert_eq!(wep.inventory().len(), none.inventory().len() + finals.len());
    }

    #[test]
    fn bpe_segments_concatenate_to_input(
        words in prop::collection::vec(prop::collection::vec(0u8..5, 1..8), 1..30),
        merges in 0usize..40,
    ) {
        let units: Vec<(Vec<String>, u64)> = words
            .iter()
            .map(|w| (w.iter().map(|c| format!("p{c}")).collect(), 1))
            .collect();
        let model = train_bpe(&units, merges, PHONE_BPE_JOINER);
        prop_assert!(model.merges().len() <= merges);
        for (seq, _) in &units {
            let out = apply_bpe(&model, seq);
            prop_assert!(out.len() <= seq.len());
            let rejoined: Vec<&str> = out.iter().flat_map(|s| s.split(PHONE_BPE_JOINER)).collect();
            prop_assert_eq!(rejoined, seq.iter().map(String::as_str).collect::<Vec<_>>());
        }
        prop_assert_eq!(train_bpe(&units, merges, PHONE_BPE_JOINER), model);
    }

    #[test]
    fn char_bpe_segments_concatenate_to_word(words in prop::collection::vec("[a-e]{1,8}", 1..30), merges in 0usize..30) {
        let units: Vec<(Vec<String>, u64)> = words.iter().map(|w| (char_bpe_units(w), 2)).collect();
        let model = train_bpe(&units, merges, "");
        for (seq, _) in &units {
            prop_assert_eq!(apply_bpe(&model, seq).concat(), seq.concat());
        }
    }

    #[test]
    fn bpe_vocab_grows_with_merges(words in prop::collection::vec("[a-d]{1,6}", 1..20), merges in 0usize..20) {
        let units: Vec<(Vec<String>, u64)> = words.iter().map(|w| (char_bpe_units(w), 1)).collect();
        let small = train_bpe(&units, merges, "");
        let large = train_bpe(&units, merges + 1, "");
        prop_assert!(large.merges().starts_with(small.merges()));
        prop_assert!(small.symbols().is_subset(&large.symbols()));
    }

    #[test]
    fn length_threshold_is_tight(lengths in prop::collection::vec(0usize..300, 1..200), frac in 0.0f64..0.5) {
        let t = length_filter_threshold(&lengths, frac).unwrap();
        let allowed = (frac * lengths.len() as f64 + 1e-9).floor() as usize;
        let above = |x: usize| lengths.iter().filter(|&&l| l > x).count();
        prop_assert!(above(t) <= allowed);
        if t > 0 {
            prop_assert!(above(t - 1) > allowed);
        }
    }

    #[test]
    fn corpus_and_target_text_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, 15, 5, 2);
        let utts = random_utterances(&mut r, &lex, 10, 6);
        prop_assert_eq!(parse_corpus(&format_corpus(&utts)).unwrap(), utts.clone());
        let c = codec(&UnitScheme::single_char(), &lex, &utts);
        let targets: Vec<_> = utts.iter().map(|u| c.encode(u, OovMode::Strict).unwrap()).collect();
        prop_assert_eq!(parse_targets(&format_targets(&targets)).unwrap(), targets);
    }

    #[test]
    fn encodings_are_accepted_by_the_tree(seed in any::<u64>(), pick in 0usize..7) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, 25, 6, 4);
        let utts = random_utterances(&mut r, &lex, 8, 5);
        let scheme = boundary_schemes(15)[pick];
        let c = codec(&scheme, &lex, &utts);
        let tree = build_prefix_tree(&c).unwrap();
        for u in &utts {
            let enc = c.encode(u, OovMode::Strict).unwrap();
            prop_assert!(tree.accepts(&enc.labels));
            prop_assert_eq!(c.decode_to_words(&enc.labels), u.words.clone());
        }
    }

    #[test]
    fn lookahead_bounds_every_word_below(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lex = random_lexicon(&mut r, 30, 4, 5);
        let utts = random_utterances(&mut r, &lex, 40, 6);
        let c = codec(&UnitScheme::single_phone(WordEndVariant::Eow, true), &lex, &utts);
        let tree = build_prefix_tree(&c).unwrap();
        let corpus: Vec<Vec<String>> = utts.iter().map(|u| u.words.clone()).collect();
        let lm: NGramLm<f64> = train_ngram(&corpus, &TrainOptions::new(1, 0.5)).unwrap();
        let la = lookahead_table(&tree, &lm);
        for (w, word) in tree.words().iter().enumerate() {
            let labels = tree.labels_of(w as u32);
            let score = lm.unigram(word);
            for k in 0..=labels.len() {
                let node = tree.walk(&labels[..k]).unwrap();
                prop_assert!(la[node.index()] >= score);
            }
        }
        for (i, node) in tree.nodes().iter().enumerate() {
            for c in node.children.values() {
                prop_assert!(la[c.index()] <= la[i]);
            }
        }
    }

    #[test]
    fn wer_zero_on_identity(r in token_seq(12)) {
        prop_assume!(!r.is_empty());
        let b = wer::<f64, _>(&r, &r).unwrap();
        prop_assert_eq!(b.errors(), 0);
    }

    #[test]
    fn edit_distance_axioms(a in token_seq(8), b in token_seq(8), c in token_seq(8)) {
        let d = |x: &[u8], y: &[u8]| {
            align(x, y).iter().filter(|op| !matches!(op, EditOp::Match)).count()
        };
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert!(d(&a, &b) <= a.len().max(b.len()));
        prop_assert!(d(&a, &b) >= a.len().abs_diff(b.len()));
    }

    #[test]
    fn wer_is_invariant_under_relabeling(r in token_seq(10), h in token_seq(10), perm in Just([3u8, 0, 2, 1]).prop_shuffle()) {
        prop_assume!(!r.is_empty());
        let map = |s: &[u8]| s.iter().map(|&t| perm[t as usize]).collect::<Vec<_>>();
        let a = wer::<f64, _>(&r, &h).unwrap();
        let b = wer::<f64, _>(&map(&r), &map(&h)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn breakdown_is_consistent(r in token_seq(10), h in token_seq(10)) {
        prop_assume!(!r.is_empty());
        let b = wer::<f64, _>(&r, &h).unwrap();
        prop_assert_eq!(b.reference_length, r.len());
        prop_assert_eq!(r.len() - b.deletions + b.insertions, h.len());
        prop_assert!((b.wer - b.errors() as f64 / r.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn trained_lm_histories_normalize(
        corpus in prop::collection::vec(prop::collection::vec("[a-d]", 0..6), 1..12),
        order in 1usize..4,
        k in 0.01f64..2.0,
    ) {
        let lm: NGramLm<f64> = train_ngram(&corpus, &TrainOptions::new(order, k)).unwrap();
        let vocab: Vec<&str> = lm.tokens().iter().map(String::as_str).filter(|t| *t != LM_BOS).collect();
        let mut histories: Vec<Vec<&str>> = vec![vec![], vec![LM_BOS]];
        for s in &corpus {
            let mut padded = vec![LM_BOS];
            padded.extend(s.iter().map(String::as_str));
            for w in padded.windows(order.saturating_sub(1).max(1)) {
                histories.push(w.to_vec());
            }
        }
        histories.push(vec!["a", "a"]);
        for h in &histories {
            let st = lm.state_from(h);
            let total: f64 = vocab.iter().map(|w| 10f64.powf(lm.score(&st, w).0)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "{h:?}: {total}");
        }
        let back: NGramLm<f64> = parse_arpa(&write_arpa(&lm)).unwrap();
        for h in &histories {
            let (s1, s2) = (lm.state_from(h), back.state_from(h));
            for w in &vocab {
                prop_assert!((lm.score(&s1, w).0 - back.score(&s2, w).0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn oov_words_map_to_unk_only_when_allowed() {
    let mut r = rng(7);
    let lex = random_lexicon(&mut r, 10, 4, 2);
    let utts = random_utterances(&mut r, &lex, 5, 4);
    let scheme = UnitScheme::single_phone(WordEndVariant::Eow, true);
    let c = codec(&scheme, &lex, &utts);
    let oov = lexdec::target_encoding::Utterance::new("x", ["zzzz-not-a-word"]);
    assert!(c.encode(&oov, OovMode::Strict).is_err());
    let enc = c.encode(&oov, OovMode::Lenient).unwrap();
    assert!(enc.labels.contains(&c.vocab().unk().unwrap()));
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in c.vocab().labels() {
        *counts.entry(l).or_default() += 1;
    }
    assert!(counts.values().all(|&n| n == 1));
}
