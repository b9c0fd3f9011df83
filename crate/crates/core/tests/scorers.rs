mod common;

use common::{rng, HashedScorer};
use lexdec::label_units::{LabelId, LabelVocab};
use lexdec::lm::{train_ngram, NGramLm, TrainOptions};
use lexdec::num::log_sum_exp;
use lexdec::scorer::{
    combine_scorers, read_dump, write_dump, CombinedScorer, DumpHeader, DumpRows, DumpUtterance,
    LabelScorer, LmLabelScorer, Normalization, OracleScorer, ReplayScorer, ScorerError,
};
use rand::Rng;

const EOS: LabelId = LabelId(0);

/// Walks random label paths and checks the row length, normalization and
/// determinism of every distribution on the way.
fn check_contract<S: LabelScorer<f64>>(scorer: &S, seed: u64, paths: usize, depth: usize) {
    let v = scorer.vocab_size();
    let mut r = rng(seed);
    for _ in 0..paths {
        let mut state = scorer.start();
        let mut path = Vec::new();
        for _ in 0..depth {
            let row = scorer.log_dist(&state);
            assert_eq!(row.len(), v);
            assert!(row.iter().all(|x| !x.is_nan()));
            assert!(log_sum_exp(&row).abs() < 1e-5, "row after {path:?} sums to {}", log_sum_exp(&row).exp());
            assert_eq!(scorer.log_dist(&state), row);

            let mut again = scorer.start();
            for &l in &path {
                again = scorer.step(&again, l);
            }
            assert_eq!(scorer.log_dist(&again), row);

            let l = LabelId(r.gen_range(0..v as u32));
            path.push(l);
            state = scorer.step(&state, l);
        }
    }
}

fn vocab(n: usize) -> LabelVocab {
    LabelVocab::build((1..n).map(|i| format!("l{i}")), false)
}

fn label_lm(v: &LabelVocab) -> NGramLm<f64> {
    let mut r = rng(3);
    let labels: Vec<String> = v.labels()[1..].to_vec();
    let corpus: Vec<Vec<String>> = (0..30)
        .map(|_| (0..r.gen_range(1..6)).map(|_| labels[r.gen_range(0..labels.len())].clone()).collect())
        .collect();
    train_ngram(&corpus, &TrainOptions::new(3, 0.3)).unwrap()
}

#[test]
fn hashed_scorer_contract() {
    check_contract(&HashedScorer { vocab_size: 7, seed: 1, spread: 4.0 }, 1, 20, 6);
}

#[test]
fn oracle_contract_with_and_without_noise() {
    let reference = vec![LabelId(2), LabelId(3), LabelId(1)];
    let clean = OracleScorer::<f64>::new(reference.clone(), 5, EOS, 0.7).unwrap();
    check_contract(&clean, 2, 10, 6);
    let noisy = clean.clone().with_noise(9, 0.5).unwrap();
    check_contract(&noisy, 2, 10, 6);
    let noisy_again = OracleScorer::<f64>::new(reference, 5, EOS, 0.7).unwrap().with_noise(9, 0.5).unwrap();
    assert_eq!(noisy.log_dist(&1), noisy_again.log_dist(&1));
    assert_ne!(noisy.log_dist(&1), clean.log_dist(&1));
}

#[test]
fn oracle_rejects_bad_parameters() {
    assert!(matches!(
        OracleScorer::<f64>::new(vec![LabelId(1)], 4, EOS, 0.25),
        Err(ScorerError::PeakOutOfRange { .. })
    ));
    assert!(matches!(
        OracleScorer::<f64>::new(vec![LabelId(9)], 4, EOS, 0.9),
        Err(ScorerError::LabelOutOfRange { .. })
    ));
    let o = OracleScorer::<f64>::new(vec![LabelId(1)], 4, EOS, 0.9).unwrap();
    assert!(matches!(o.with_noise(0, -1.0), Err(ScorerError::BadNoise(_))));
}

#[test]
fn label_lm_contract() {
    let v = vocab(6);
    let lm = label_lm(&v);
    check_contract(&LmLabelScorer::new(&lm, &v), 4, 20, 6);
}

#[test]
fn combined_contract() {
    let v = vocab(6);
    let lm = label_lm(&v);
    let am = HashedScorer { vocab_size: 6, seed: 5, spread: 3.0 };
    let combined = combine_scorers(&am, LmLabelScorer::new(&lm, &v), 0.5).unwrap();
    check_contract(&combined, 5, 20, 5);
}

#[test]
fn combined_with_zero_weight_is_the_primary() {
    let v = vocab(6);
    let lm = label_lm(&v);
    let am = HashedScorer { vocab_size: 6, seed: 6, spread: 3.0 };
    let combined = combine_scorers(&am, LmLabelScorer::new(&lm, &v), 0.0).unwrap();
    let mut r = rng(6);
    let (mut s, mut a) = (combined.start(), am.start());
    for _ in 0..8 {
        assert_eq!(combined.log_dist(&s), am.log_dist(&a));
        let l = LabelId(r.gen_range(0..6));
        s = combined.step(&s, l);
        a = am.step(&a, l);
    }
}

#[test]
fn unnormalized_combination_is_the_weighted_sum() {
    let v = vocab(5);
    let lm = label_lm(&v);
    let am = HashedScorer { vocab_size: 5, seed: 8, spread: 2.0 };
    let lms = LmLabelScorer::new(&lm, &v);
    let c = CombinedScorer::new(&am, &lms, 0.4, Normalization::Unnormalized).unwrap();
    let row = c.log_dist(&c.start());
    let (pa, pl) = (am.log_dist(&am.start()), lms.log_dist(&lms.start()));
    for i in 0..5 {
        assert!((row[i] - (pa[i] + 0.4 * pl[i])).abs() < 1e-12);
    }
}

#[test]
fn combination_rejects_mismatch_and_bad_weight() {
    let a = HashedScorer { vocab_size: 5, seed: 1, spread: 1.0 };
    let b = HashedScorer { vocab_size: 6, seed: 1, spread: 1.0 };
    assert!(matches!(combine_scorers(&a, &b, 0.3), Err(ScorerError::VocabMismatch { .. })));
    assert!(matches!(combine_scorers(&a, &a, -1.0), Err(ScorerError::BadWeight(_))));
    assert!(matches!(combine_scorers(&a, &a, f64::NAN), Err(ScorerError::BadWeight(_))));
}

fn f32_row(row: &[f64]) -> Vec<f32> {
    row.iter().map(|&x| x as f32).collect()
}

#[test]
fn time_major_replay_is_bit_exact() {
    let v = vocab(6);
    let src = HashedScorer { vocab_size: 6, seed: 11, spread: 3.0 };
    let rows: Vec<Vec<f32>> = (0..5u64).map(|t| f32_row(&src.log_dist(&t))).collect();
    let utt = DumpUtterance { utt_id: "a".into(), rows: DumpRows::TimeMajor(rows.clone()) };
    let mut buf = Vec::new();
    write_dump(&mut buf, &DumpHeader::for_vocab("toy", &v), std::slice::from_ref(&utt)).unwrap();
    let (_, utts) = read_dump(buf.as_slice()).unwrap();
    assert_eq!(utts, vec![utt]);

    let replay = ReplayScorer::<f64>::new(&utts[0], 6, EOS);
    assert_eq!(replay.context_len(), Some(5));
    let mut s = replay.start();
    for row in &rows {
        let got = replay.log_dist(&s);
        for (g, &x) in got.iter().zip(row) {
            assert_eq!(g.to_bits(), f64::from(x).to_bits());
        }
        s = replay.step(&s, LabelId(3));
    }
    let past_end = replay.log_dist(&s);
    assert_eq!(past_end[0], 0.0);
}

#[test]
fn history_replay_is_bit_exact_and_normalized() {
    let src = HashedScorer { vocab_size: 4, seed: 12, spread: 3.0 };
    let mut rows = Vec::new();
    let mut frontier = vec![(Vec::new(), src.start())];
    for _ in 0..3 {
        let mut next = Vec::new();
        for (hist, st) in frontier {
            rows.push((hist.clone(), f32_row(&src.log_dist(&st))));
            for l in 1..4 {
                let mut h = hist.clone();
                h.push(LabelId(l));
                next.push((h, src.step(&st, LabelId(l))));
            }
        }
        frontier = next;
    }
    let utt = DumpUtterance { utt_id: "h".into(), rows: DumpRows::History(rows.clone()) };
    let replay = ReplayScorer::<f64>::new(&utt, 4, EOS);
    check_contract(&replay, 12, 20, 5);
    for (hist, row) in &rows {
        let mut s = replay.start();
        for &l in hist {
            s = replay.step(&s, l);
        }
        let got: Vec<u64> = replay.log_dist(&s).iter().map(|x| x.to_bits()).collect();
        let want: Vec<u64> = row.iter().map(|&x| f64::from(x).to_bits()).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn scorers_work_in_single_precision() {
    let o = OracleScorer::<f32>::new(vec![LabelId(1), LabelId(2)], 4, EOS, 0.8).unwrap();
    let row = o.log_dist(&0);
    assert!(log_sum_exp(&row).abs() < 1e-5);
}
