use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stimulex_core::eval::{
    Counts, ErrorType, MatchMode, classify_errors, match_spans, score, score_pair, score_spans,
};
use stimulex_core::{Dataset, LabelSeq, Sentence, Span, Tag, Token};

fn s(a: usize, b: usize) -> Span {
    Span { start: a, end: b }
}

fn admissible(mode: MatchMode, g: &Span, p: &Span) -> bool {
    let overlap = g.start.max(p.start) < g.end.min(p.end);
    match mode {
        MatchMode::Exact => g == p,
        MatchMode::Partial => overlap,
        MatchMode::Left => overlap && g.start == p.start,
        MatchMode::Right => overlap && g.end == p.end,
    }
}

// largest one-to-one admissible matching by exhaustive search
fn max_matching(gold: &[Span], pred: &[Span], used: &mut Vec<bool>, mode: MatchMode) -> usize {
    let Some((g, rest)) = gold.split_first() else {
        return 0;
    };
    let mut best = max_matching(rest, pred, used, mode);
    for j in 0..pred.len() {
        if !used[j] && admissible(mode, g, &pred[j]) {
            used[j] = true;
            best = best.max(1 + max_matching(rest, pred, used, mode));
            used[j] = false;
        }
    }
    best
}

fn random_spans(rng: &mut ChaCha8Rng, n: usize) -> Vec<Span> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.random_range(0..3) == 0 {
            let end = rng.random_range(i + 1..=n.min(i + 5));
            out.push(s(i, end));
            i = end;
        } else {
            i += 1;
        }
    }
    out
}

// Six sentences, tallied by hand:
//   1  gold [2,5)          pred [2,5)             every mode matches
//   2  gold [2,5)          pred [4,7)             partial only; late start, late stop
//   3  gold [2,5)          pred [0,5)             partial and right; early start
//   4  gold [3,9)          pred [1,11)            partial only; surrounding
//   5  gold [3,9)          pred [3,5) [7,9)       partial/left/right one each; consecutive
//   6  gold [0,2) [6,8)    pred [6,7) [10,12)     partial and left on [6,8); early stop
fn fixture() -> Vec<(Vec<Span>, Vec<Span>)> {
    vec![
        (vec![s(2, 5)], vec![s(2, 5)]),
        (vec![s(2, 5)], vec![s(4, 7)]),
        (vec![s(2, 5)], vec![s(0, 5)]),
        (vec![s(3, 9)], vec![s(1, 11)]),
        (vec![s(3, 9)], vec![s(3, 5), s(7, 9)]),
        (vec![s(0, 2), s(6, 8)], vec![s(6, 7), s(10, 12)]),
    ]
}

#[test]
fn six_sentence_fixture_counts() {
    let rows = fixture();
    let r = score_spans(rows.iter().map(|(g, p)| (&g[..], &p[..]))).unwrap();
    let c = |tp, fp, fn_| Counts { tp, fp, fn_ };
    assert_eq!(r.counts(MatchMode::Exact), c(1, 7, 6));
    assert_eq!(r.counts(MatchMode::Partial), c(6, 2, 1));
    assert_eq!(r.counts(MatchMode::Left), c(3, 5, 4));
    assert_eq!(r.counts(MatchMode::Right), c(3, 5, 4));
    for e in ErrorType::ALL {
        assert_eq!(r.errors.get(e), 1, "{}", e.as_str());
    }
    assert_eq!((r.sentences, r.gold_spans, r.pred_spans), (6, 7, 8));
    assert!(
        (r.f1(MatchMode::Partial) - 2.0 * 0.75 * (6.0 / 7.0) / (0.75 + 6.0 / 7.0)).abs() < 1e-15
    );
}

#[test]
fn fixture_through_corpus_layers() {
    let sentences: Vec<Sentence> = fixture()
        .into_iter()
        .enumerate()
        .map(|(i, (g, p))| {
            let toks = (0..12).map(|k| Token::bare(format!("w{k}"))).collect();
            let pred = stimulex_core::corpus::iob_from_spans(&p, 12).unwrap();
            Sentence::new(format!("s{i}"), toks)
                .unwrap()
                .with_gold_spans(&g)
                .unwrap()
                .with_pred(pred)
                .unwrap()
        })
        .collect();
    let d = Dataset::new("fixture", sentences).unwrap();
    let direct = score(&d).unwrap();
    let rows = fixture();
    let spans = score_spans(rows.iter().map(|(g, p)| (&g[..], &p[..]))).unwrap();
    assert_eq!(direct, spans);
    assert_eq!(score_pair(&d, &d).unwrap(), spans);
}

#[test]
fn lenient_predictions_expose_consecutive() {
    // O I O I over a gold span [1,4): lenient decoding yields two fragments
    let toks = (0..5).map(|k| Token::bare(format!("w{k}"))).collect();
    let d = Dataset::new(
        "x",
        vec![
            Sentence::new("a", toks)
                .unwrap()
                .with_gold_spans(&[s(1, 4)])
                .unwrap()
                .with_pred(LabelSeq::new(vec![Tag::O, Tag::I, Tag::O, Tag::I, Tag::O]))
                .unwrap(),
        ],
    )
    .unwrap();
    let r = score(&d).unwrap();
    assert_eq!(r.errors.get(ErrorType::Consecutive), 1);
    assert_eq!(r.pred_spans, 2);
}

#[test]
fn greedy_is_maximal_and_modes_dominate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..10_000 {
        let n = rng.random_range(1..14);
        let gold = random_spans(&mut rng, n);
        let pred = random_spans(&mut rng, n);
        let tp = |m| match_spans(&gold, &pred, m).unwrap().counts.tp;
        for m in MatchMode::ALL {
            let oracle = max_matching(&gold, &pred, &mut vec![false; pred.len()], m);
            assert_eq!(tp(m), oracle, "case {case} {m:?} {gold:?} {pred:?}");
        }
        let (e, l, r, p) = (
            tp(MatchMode::Exact),
            tp(MatchMode::Left),
            tp(MatchMode::Right),
            tp(MatchMode::Partial),
        );
        assert!(e <= l && e <= r && l <= p && r <= p);
        assert!(p <= gold.len().min(pred.len()));
    }
}

#[test]
fn score_is_order_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let mut rows: Vec<(Vec<Span>, Vec<Span>)> = (0..8)
            .map(|_| {
                let n = rng.random_range(1..10);
                (random_spans(&mut rng, n), random_spans(&mut rng, n))
            })
            .collect();
        let a = score_spans(rows.iter().map(|(g, p)| (&g[..], &p[..]))).unwrap();
        rows.shuffle(&mut rng);
        let b = score_spans(rows.iter().map(|(g, p)| (&g[..], &p[..]))).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #[test]
    fn no_errors_iff_exact_or_disjoint(gs in 0usize..10, gl in 1usize..6, ps in 0usize..10, pl in 1usize..6) {
        let g = s(gs, gs + gl);
        let p = s(ps, ps + pl);
        let errs = classify_errors(&[g], &[p]).unwrap();
        let disjoint = g.end <= p.start || p.end <= g.start;
        prop_assert_eq!(errs.is_empty(), g == p || disjoint);
        prop_assert!(!(errs.contains(&ErrorType::Surrounding)
            && (errs.contains(&ErrorType::EarlyStart) || errs.contains(&ErrorType::LateStop))));
    }

    #[test]
    fn f1_bounds(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
        let c = Counts { tp, fp, fn_ };
        let f = c.f1();
        prop_assert!((0.0..=1.0).contains(&f));
        let (p, r) = (c.precision(), c.recall());
        if p + r > 0.0 {
            prop_assert!((f - 2.0 * p * r / (p + r)).abs() < 1e-12);
        }
    }
}
