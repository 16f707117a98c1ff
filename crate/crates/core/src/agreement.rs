//! Inter-annotator agreement and two-annotator aggregation.
//!
//! Token-level F1 takes annotator A as the reference and B as the
//! hypothesis. B and I count as different labels in both the token κ and
//! the token F1.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, Emotion, LabelSeq, Sentence, Span, Tag, TriState};
use crate::eval::f1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot compute kappa on an empty label list")]
    Empty,
    #[error("expected agreement is 1 but observed agreement is not")]
    Degenerate,
    #[error("corpora are misaligned at sentence {index}: {reason}")]
    Misaligned { index: usize, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Cohen's κ for two parallel label lists: `(p_o - p_e) / (1 - p_e)`, with
/// `p_e` from each annotator's marginal label frequencies.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AgreementError::Empty);
    }
    let n = a.len() as f64;
    let mut marginals: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        marginals.entry(x).or_default().0 += 1;
        marginals.entry(y).or_default().1 += 1;
        if x == y {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return if agree == a.len() {
            Ok(1.0)
        } else {
            Err(AgreementError::Degenerate)
        };
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Token κ over the flattened three-label stream, and token F1 over non-O
/// labels (a token is a true positive when both sides carry the same
/// non-O label).
pub fn token_agreement(a: &[LabelSeq], b: &[LabelSeq]) -> Result<(f64, f64), AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    let mut flat_a = Vec::new();
    let mut flat_b = Vec::new();
    for (index, (x, y)) in a.iter().zip(b).enumerate() {
        if x.len() != y.len() {
            return Err(AgreementError::Misaligned {
                index,
                reason: format!("{} vs {} tokens", x.len(), y.len()),
            });
        }
        flat_a.extend_from_slice(x.tags());
        flat_b.extend_from_slice(y.tags());
    }
    let kappa = cohen_kappa(&flat_a, &flat_b)?;
    let (mut tp, mut ref_pos, mut hyp_pos) = (0usize, 0usize, 0usize);
    for (&x, &y) in flat_a.iter().zip(&flat_b) {
        if x != Tag::O {
            ref_pos += 1;
        }
        if y != Tag::O {
            hyp_pos += 1;
        }
        if x != Tag::O && x == y {
            tp += 1;
        }
    }
    Ok((kappa, prf(tp, hyp_pos, ref_pos)))
}

fn prf(tp: usize, hyp: usize, reference: usize) -> f64 {
    let p = if hyp == 0 {
        0.0
    } else {
        tp as f64 / hyp as f64
    };
    let r = if reference == 0 {
        0.0
    } else {
        tp as f64 / reference as f64
    };
    f1(p, r)
}

/// Micro-averaged F1 where a span only counts when the other side holds
/// the identical `[start, end)`.
pub fn exact_span_f1(a: &[Vec<Span>], b: &[Vec<Span>]) -> Result<f64, AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    let (mut matched, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        na += x.len();
        nb += y.len();
        matched += x.iter().filter(|s| y.contains(s)).count();
    }
    Ok(prf(matched, nb, na))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictLayer {
    Emotion,
    Stimulus,
}

impl ConflictLayer {
    pub fn as_str(self) -> &'static str {
        match self {
            ConflictLayer::Emotion => "emotion",
            ConflictLayer::Stimulus => "stimulus",
        }
    }
}

/// A disagreement left for human adjudication. `a` and `b` hold each
/// annotator's annotation in text form; `-` means none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub id: String,
    pub layer: ConflictLayer,
    pub a: String,
    pub b: String,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.id,
            self.layer.as_str(),
            self.a,
            self.b
        )
    }
}

/// Conflict between two span layers of one sentence, id filled in by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanConflict {
    OnlyA(Span),
    OnlyB(Span),
}

/// Intersect each span of A with the union of the B spans it overlaps,
/// splitting the result into maximal runs. Spans without any overlap on the
/// other side become conflicts instead of gold.
pub fn aggregate_spans(a: &[Span], b: &[Span]) -> (Vec<Span>, Vec<SpanConflict>) {
    let mut gold = Vec::new();
    let mut conflicts = Vec::new();
    for sa in a {
        let mut runs: Vec<Span> = Vec::new();
        for sb in b.iter().filter(|sb| sb.overlaps(sa)) {
            let Some(cut) = sa.intersection(sb) else {
                continue;
            };
            match runs.last_mut() {
                Some(last) if last.end == cut.start => last.end = cut.end,
                _ => runs.push(cut),
            }
        }
        if runs.is_empty() {
            conflicts.push(SpanConflict::OnlyA(*sa));
        }
        gold.extend(runs);
    }
    for sb in b {
        if !a.iter().any(|sa| sa.overlaps(sb)) {
            conflicts.push(SpanConflict::OnlyB(*sb));
        }
    }
    (gold, conflicts)
}

/// Agreement battery mirroring the rows of an annotation-agreement table.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub sentences: usize,
    pub stimulus_sentences: usize,
    pub kappa_cue: f64,
    pub kappa_exp: f64,
    pub kappa_emotion: f64,
    pub kappa_stimulus_token: f64,
    pub f1_stimulus_token: f64,
    pub f1_stimulus_span: f64,
    /// One-vs-rest κ per emotion class, only where it is defined.
    pub kappa_per_emotion: Vec<(Emotion, f64)>,
}

impl AgreementReport {
    /// Which annotator served as the F1 reference.
    pub const REFERENCE: &'static str = "A";
}

fn check_aligned(a: &Dataset, b: &Dataset) -> Result<(), AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::Misaligned {
            index: a.len().min(b.len()),
            reason: format!("{} vs {} sentences", a.len(), b.len()),
        });
    }
    for (index, (x, y)) in a.iter().zip(b).enumerate() {
        if x.id != y.id {
            return Err(AgreementError::Misaligned {
                index,
                reason: format!("id `{}` vs `{}`", x.id, y.id),
            });
        }
        if !x.surfaces().eq(y.surfaces()) {
            return Err(AgreementError::Misaligned {
                index,
                reason: format!("token grids of `{}` differ", x.id),
            });
        }
    }
    Ok(())
}

fn said_yes(t: TriState) -> bool {
    t == TriState::Yes
}

fn emotion_or_none(s: &Sentence) -> Emotion {
    s.meta.emotion.unwrap_or(Emotion::NoEmotion)
}

/// Compute the agreement battery for two annotations of the same corpus.
/// Unmarked cue/experiencer judgements count as "no"; a missing emotion
/// counts as `no_emotion`. Stimulus metrics use sentences that carry a gold
/// layer in both files.
pub fn agreement_report(a: &Dataset, b: &Dataset) -> Result<AgreementReport, AgreementError> {
    check_aligned(a, b)?;
    let pairs: Vec<(&Sentence, &Sentence)> = a.iter().zip(b).collect();
    let cue = |s: &&Sentence| said_yes(s.meta.cue);
    let exp = |s: &&Sentence| said_yes(s.meta.experiencer);

    let cue_a: Vec<bool> = pairs.iter().map(|p| cue(&p.0)).collect();
    let cue_b: Vec<bool> = pairs.iter().map(|p| cue(&p.1)).collect();
    let exp_a: Vec<bool> = pairs.iter().map(|p| exp(&p.0)).collect();
    let exp_b: Vec<bool> = pairs.iter().map(|p| exp(&p.1)).collect();
    let emo_a: Vec<Emotion> = pairs.iter().map(|p| emotion_or_none(p.0)).collect();
    let emo_b: Vec<Emotion> = pairs.iter().map(|p| emotion_or_none(p.1)).collect();

    let mut per_emotion = Vec::new();
    for &e in Emotion::ALL.iter().filter(|e| e.is_emotion()) {
        let xa: Vec<bool> = emo_a.iter().map(|&x| x == e).collect();
        let xb: Vec<bool> = emo_b.iter().map(|&x| x == e).collect();
        if xa.iter().chain(&xb).any(|&v| v) {
            if let Ok(k) = cohen_kappa(&xa, &xb) {
                per_emotion.push((e, k));
            }
        }
    }

    let annotated: Vec<(&LabelSeq, &LabelSeq)> = pairs
        .iter()
        .filter_map(|(x, y)| Some((x.gold()?, y.gold()?)))
        .collect();
    let (tok_a, tok_b): (Vec<LabelSeq>, Vec<LabelSeq>) = annotated
        .iter()
        .map(|(x, y)| ((*x).clone(), (*y).clone()))
        .unzip();
    let (kappa_tok, f1_tok) = if tok_a.is_empty() {
        (0.0, 0.0)
    } else {
        token_agreement(&tok_a, &tok_b)?
    };
    let spans_a: Vec<Vec<Span>> = tok_a
        .iter()
        .map(|t| t.spans(crate::IobMode::Strict))
        .collect::<Result<_, _>>()?;
    let spans_b: Vec<Vec<Span>> = tok_b
        .iter()
        .map(|t| t.spans(crate::IobMode::Strict))
        .collect::<Result<_, _>>()?;

    let empty_ok = |r: Result<f64, AgreementError>| match r {
        Err(AgreementError::Empty) => Ok(0.0),
        other => other,
    };
    Ok(AgreementReport {
        sentences: pairs.len(),
        stimulus_sentences: annotated.len(),
        kappa_cue: empty_ok(cohen_kappa(&cue_a, &cue_b))?,
        kappa_exp: empty_ok(cohen_kappa(&exp_a, &exp_b))?,
        kappa_emotion: empty_ok(cohen_kappa(&emo_a, &emo_b))?,
        kappa_stimulus_token: kappa_tok,
        f1_stimulus_token: f1_tok,
        f1_stimulus_span: exact_span_f1(&spans_a, &spans_b)?,
        kappa_per_emotion: per_emotion,
    })
}

fn merge_flag(x: TriState, y: TriState) -> TriState {
    match (x, y) {
        (TriState::Yes, _) | (_, TriState::Yes) => TriState::Yes,
        (TriState::No, _) | (_, TriState::No) => TriState::No,
        _ => TriState::Unmarked,
    }
}

/// Merge two annotations into a gold corpus plus the conflicts that need
/// discussion. Cue and experiencer are accepted when either annotator said
/// yes; differing emotions are left unset and reported; stimulus spans are
/// merged with [`aggregate_spans`].
pub fn aggregate(a: &Dataset, b: &Dataset) -> Result<(Dataset, Vec<Conflict>), AgreementError> {
    check_aligned(a, b)?;
    let mut out = Vec::with_capacity(a.len());
    let mut conflicts = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let mut s = Sentence::new(x.id.clone(), x.tokens().to_vec())?;
        s.meta = x.meta.clone();
        s.meta.cue = merge_flag(x.meta.cue, y.meta.cue);
        s.meta.experiencer = merge_flag(x.meta.experiencer, y.meta.experiencer);
        if x.meta.emotion != y.meta.emotion {
            s.meta.emotion = None;
            let show = |e: Option<Emotion>| e.map_or_else(|| "-".to_string(), |e| e.to_string());
            conflicts.push(Conflict {
                id: x.id.clone(),
                layer: ConflictLayer::Emotion,
                a: show(x.meta.emotion),
                b: show(y.meta.emotion),
            });
        }
        if let (Some(ga), Some(gb)) = (x.gold_spans(), y.gold_spans()) {
            let (gold, span_conflicts) = aggregate_spans(&ga, &gb);
            s = s.with_gold_spans(&gold)?;
            for c in span_conflicts {
                let (ca, cb) = match c {
                    SpanConflict::OnlyA(sp) => (sp.to_string(), "-".to_string()),
                    SpanConflict::OnlyB(sp) => ("-".to_string(), sp.to_string()),
                };
                conflicts.push(Conflict {
                    id: x.id.clone(),
                    layer: ConflictLayer::Stimulus,
                    a: ca,
                    b: cb,
                });
            }
        }
        out.push(s);
    }
    let provenance = format!("aggregate({}, {})", a.provenance, b.provenance);
    Ok((Dataset::new(provenance, out)?, conflicts))
}
