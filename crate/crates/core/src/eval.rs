//! Span-level evaluation: Exact / Partial / Left / Right matching and the
//! boundary error taxonomy.
//!
//! Matching is one-to-one: each gold span pairs with at most one predicted
//! span and vice versa. Pairs are formed greedily left to right (every gold
//! span takes the earliest still-free admissible prediction). For sorted,
//! disjoint spans this reaches the maximum matching size. Scores are
//! micro-averaged over sentences.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, Span, validate_spans};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("spans must be sorted and disjoint: {0}")]
    InvalidSpans(#[from] CorpusError),
    #[error("sentence `{0}` is missing from the prediction corpus")]
    MissingPrediction(String),
    #[error("sentence `{0}` is missing from the gold corpus")]
    MissingGold(String),
    #[error("sentence `{0}` has no gold layer")]
    NoGoldLayer(String),
    #[error("sentence `{0}` has no prediction layer")]
    NoPredLayer(String),
    #[error("sentence `{id}` has {gold} gold tokens but {pred} predicted tokens")]
    TokenMismatch {
        id: String,
        gold: usize,
        pred: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchMode {
    Exact,
    Partial,
    Left,
    Right,
}

impl MatchMode {
    pub const ALL: [MatchMode; 4] = [
        MatchMode::Exact,
        MatchMode::Partial,
        MatchMode::Left,
        MatchMode::Right,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Exact => "Exact",
            MatchMode::Partial => "Partial",
            MatchMode::Left => "Left",
            MatchMode::Right => "Right",
        }
    }

    /// Whether `pred` may be paired with `gold` under this mode.
    pub fn admissible(self, gold: &Span, pred: &Span) -> bool {
        match self {
            MatchMode::Exact => gold == pred,
            MatchMode::Partial => gold.overlaps(pred),
            MatchMode::Left => gold.overlaps(pred) && gold.start == pred.start,
            MatchMode::Right => gold.overlaps(pred) && gold.end == pred.end,
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Result of pairing gold and predicted spans in one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub counts: Counts,
    /// `(gold index, pred index)` pairs in gold order.
    pub pairs: Vec<(usize, usize)>,
}

pub fn match_spans(gold: &[Span], pred: &[Span], mode: MatchMode) -> Result<Matching, EvalError> {
    validate_spans(gold, usize::MAX)?;
    validate_spans(pred, usize::MAX)?;
    Ok(greedy_pairing(gold, pred, mode))
}

fn greedy_pairing(gold: &[Span], pred: &[Span], mode: MatchMode) -> Matching {
    let mut used = alloc::vec![false; pred.len()];
    let mut pairs = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        let hit = pred
            .iter()
            .enumerate()
            .find(|&(pi, p)| !used[pi] && mode.admissible(g, p));
        if let Some((pi, _)) = hit {
            used[pi] = true;
            pairs.push((gi, pi));
        }
    }
    let tp = pairs.len();
    Matching {
        counts: Counts {
            tp,
            fp: pred.len() - tp,
            fn_: gold.len() - tp,
        },
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorType {
    EarlyStart,
    LateStart,
    EarlyStop,
    LateStop,
    /// Early start and late stop together.
    Surrounding,
    /// One gold span covered by two or more predicted fragments.
    Consecutive,
}

impl ErrorType {
    pub const ALL: [ErrorType; 6] = [
        ErrorType::EarlyStart,
        ErrorType::LateStart,
        ErrorType::EarlyStop,
        ErrorType::LateStop,
        ErrorType::Surrounding,
        ErrorType::Consecutive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::EarlyStart => "EarlyStart",
            ErrorType::LateStart => "LateStart",
            ErrorType::EarlyStop => "EarlyStop",
            ErrorType::LateStop => "LateStop",
            ErrorType::Surrounding => "Surrounding",
            ErrorType::Consecutive => "Consecutive",
        }
    }
}

/// Boundary errors of a single gold/prediction pair that share a token.
pub fn pair_errors(gold: &Span, pred: &Span) -> Vec<ErrorType> {
    let mut out = Vec::new();
    if !gold.overlaps(pred) {
        return out;
    }
    let early_start = pred.start < gold.start;
    let late_stop = pred.end > gold.end;
    if early_start && late_stop {
        out.push(ErrorType::Surrounding);
        return out;
    }
    if early_start {
        out.push(ErrorType::EarlyStart);
    } else if pred.start > gold.start {
        out.push(ErrorType::LateStart);
    }
    if pred.end < gold.end {
        out.push(ErrorType::EarlyStop);
    } else if late_stop {
        out.push(ErrorType::LateStop);
    }
    out
}

/// Error types for one sentence. A gold span overlapped by two or more
/// predictions yields `Consecutive` alone; otherwise its Partial partner (if
/// any) is classified by boundary position.
pub fn classify_errors(gold: &[Span], pred: &[Span]) -> Result<Vec<ErrorType>, EvalError> {
    let matching = match_spans(gold, pred, MatchMode::Partial)?;
    let mut out = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        let overlapping = pred.iter().filter(|p| p.overlaps(g)).count();
        if overlapping >= 2 {
            out.push(ErrorType::Consecutive);
        } else if let Some(&(_, pi)) = matching.pairs.iter().find(|(i, _)| *i == gi) {
            out.extend(pair_errors(g, &pred[pi]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorHistogram([usize; 6]);

impl ErrorHistogram {
    pub fn add(&mut self, e: ErrorType) {
        self.0[e as usize] += 1;
    }

    pub fn get(&self, e: ErrorType) -> usize {
        self.0[e as usize]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ErrorType, usize)> + '_ {
        ErrorType::ALL.iter().map(|&e| (e, self.get(e)))
    }
}

/// Micro-averaged scores under all four modes plus the error histogram.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalReport {
    pub sentences: usize,
    pub gold_spans: usize,
    pub pred_spans: usize,
    counts: [Counts; 4],
    pub errors: ErrorHistogram,
}

impl EvalReport {
    pub fn counts(&self, mode: MatchMode) -> Counts {
        self.counts[mode as usize]
    }

    pub fn precision(&self, mode: MatchMode) -> f64 {
        self.counts(mode).precision()
    }

    pub fn recall(&self, mode: MatchMode) -> f64 {
        self.counts(mode).recall()
    }

    pub fn f1(&self, mode: MatchMode) -> f64 {
        self.counts(mode).f1()
    }

    /// Fold in one sentence.
    pub fn add_sentence(&mut self, gold: &[Span], pred: &[Span]) -> Result<(), EvalError> {
        validate_spans(gold, usize::MAX)?;
        validate_spans(pred, usize::MAX)?;
        for mode in MatchMode::ALL {
            self.counts[mode as usize].add(greedy_pairing(gold, pred, mode).counts);
        }
        for e in classify_errors(gold, pred)? {
            self.errors.add(e);
        }
        self.sentences += 1;
        self.gold_spans += gold.len();
        self.pred_spans += pred.len();
        Ok(())
    }
}

/// Score span lists sentence by sentence.
pub fn score_spans<'a, I>(pairs: I) -> Result<EvalReport, EvalError>
where
    I: IntoIterator<Item = (&'a [Span], &'a [Span])>,
{
    let mut report = EvalReport::default();
    for (g, p) in pairs {
        report.add_sentence(g, p)?;
    }
    Ok(report)
}

/// Score a corpus that carries both a gold and a prediction layer.
pub fn score(corpus: &Dataset) -> Result<EvalReport, EvalError> {
    let mut report = EvalReport::default();
    for s in corpus {
        let gold = s
            .gold_spans()
            .ok_or_else(|| EvalError::NoGoldLayer(s.id.clone()))?;
        let pred = s
            .pred_spans()
            .ok_or_else(|| EvalError::NoPredLayer(s.id.clone()))?;
        report.add_sentence(&gold, &pred)?;
    }
    Ok(report)
}

/// Score the gold layer of `gold` against the prediction layer of `pred`,
/// aligning sentences by id. Both corpora must hold the same id set.
pub fn score_pair(gold: &Dataset, pred: &Dataset) -> Result<EvalReport, EvalError> {
    let by_id: BTreeMap<&str, _> = pred.iter().map(|s| (s.id.as_str(), s)).collect();
    if let Some(extra) = pred.iter().find(|s| gold.get(&s.id).is_none()) {
        return Err(EvalError::MissingGold(extra.id.clone()));
    }
    let mut report = EvalReport::default();
    for g in gold {
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| EvalError::MissingPrediction(g.id.clone()))?;
        if p.len() != g.len() {
            return Err(EvalError::TokenMismatch {
                id: g.id.clone(),
                gold: g.len(),
                pred: p.len(),
            });
        }
        let gs = g
            .gold_spans()
            .ok_or_else(|| EvalError::NoGoldLayer(g.id.clone()))?;
        let ps = p
            .pred_spans()
            .ok_or_else(|| EvalError::NoPredLayer(p.id.clone()))?;
        report.add_sentence(&gs, &ps)?;
    }
    Ok(report)
}
