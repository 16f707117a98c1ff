//! Canonical corpus types: tokens, sentences, IOB label sequences and spans.
//!
//! Spans are half-open token intervals `[start, end)`. A gold layer is always
//! stored in strict IOB form; a prediction layer is stored verbatim and may
//! contain invalid transitions (neural taggers produce them), which are
//! decoded with [`IobMode::Lenient`].

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("token {index}: surface must be non-empty and free of tabs and newlines")]
    InvalidSurface { index: usize },
    #[error("{layer} layer has {found} tags but the sentence has {expected} tokens")]
    LengthMismatch {
        layer: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid IOB sequence: I at index {index} does not continue a span")]
    InvalidIob { index: usize },
    #[error("span [{start}, {end}) is empty or exceeds sentence length {len}")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("spans [{0}, {1}) and [{2}, {3}) overlap or are unsorted")]
    SpanOverlap(usize, usize, usize, usize),
    #[error("duplicate sentence id `{0}`")]
    DuplicateId(String),
}

/// One IOB tag. The declaration order `B < I < O` is the tie-break order
/// used by Viterbi decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    B,
    I,
    O,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::B, Tag::I, Tag::O];
    pub const COUNT: usize = 3;

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn from_index(i: usize) -> Tag {
        match i {
            0 => Tag::B,
            1 => Tag::I,
            _ => Tag::O,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Tag::B => "B",
            Tag::I => "I",
            Tag::O => "O",
        }
    }
}

impl FromStr for Tag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "B" => Ok(Tag::B),
            "I" => Ok(Tag::I),
            "O" => Ok(Tag::O),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How to read an `I` that does not continue a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IobMode {
    /// Reject the sequence.
    Strict,
    /// Read the offending `I` as `B`.
    Lenient,
}

/// Per-token IOB tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LabelSeq(Vec<Tag>);

impl LabelSeq {
    pub fn new(tags: Vec<Tag>) -> Self {
        LabelSeq(tags)
    }

    pub fn all_outside(n: usize) -> Self {
        LabelSeq(alloc::vec![Tag::O; n])
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the first `I` that starts the sequence or follows `O`.
    pub fn first_violation(&self) -> Option<usize> {
        first_violation(&self.0)
    }

    pub fn is_strict(&self) -> bool {
        self.first_violation().is_none()
    }

    /// Apply the lenient repair rule, promoting every dangling `I` to `B`.
    pub fn repaired(&self) -> LabelSeq {
        let mut tags = self.0.clone();
        let mut prev = Tag::O;
        for t in tags.iter_mut() {
            if *t == Tag::I && prev == Tag::O {
                *t = Tag::B;
            }
            prev = *t;
        }
        LabelSeq(tags)
    }

    pub fn spans(&self, mode: IobMode) -> Result<Vec<Span>, CorpusError> {
        spans_from_iob(&self.0, mode)
    }

    pub fn into_inner(self) -> Vec<Tag> {
        self.0
    }
}

impl From<Vec<Tag>> for LabelSeq {
    fn from(tags: Vec<Tag>) -> Self {
        LabelSeq(tags)
    }
}

fn first_violation(tags: &[Tag]) -> Option<usize> {
    let mut prev = Tag::O;
    for (i, &t) in tags.iter().enumerate() {
        if t == Tag::I && prev == Tag::O {
            return Some(i);
        }
        prev = t;
    }
    None
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Returns `None` for empty or reversed intervals.
    pub fn new(start: usize, end: usize) -> Option<Span> {
        (start < end).then_some(Span { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    /// True when at least one token is shared.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn intersection(&self, other: &Span) -> Option<Span> {
        Span::new(self.start.max(other.start), self.end.min(other.end))
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// Decode IOB tags into spans. Every `B` starts a new span; in lenient mode
/// a sequence-initial `I` or an `I` after `O` also starts one.
pub fn spans_from_iob(tags: &[Tag], mode: IobMode) -> Result<Vec<Span>, CorpusError> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &t) in tags.iter().enumerate() {
        match t {
            Tag::B => {
                if let Some(s) = open.take() {
                    spans.push(Span { start: s, end: i });
                }
                open = Some(i);
            }
            Tag::I => {
                if open.is_none() {
                    if mode == IobMode::Strict {
                        return Err(CorpusError::InvalidIob { index: i });
                    }
                    open = Some(i);
                }
            }
            Tag::O => {
                if let Some(s) = open.take() {
                    spans.push(Span { start: s, end: i });
                }
            }
        }
    }
    if let Some(s) = open {
        spans.push(Span {
            start: s,
            end: tags.len(),
        });
    }
    Ok(spans)
}

/// Check that spans are non-empty, sorted, pairwise disjoint and within `[0, n)`.
pub fn validate_spans(spans: &[Span], n: usize) -> Result<(), CorpusError> {
    let mut prev: Option<&Span> = None;
    for s in spans {
        if s.start >= s.end || s.end > n {
            return Err(CorpusError::SpanOutOfRange {
                start: s.start,
                end: s.end,
                len: n,
            });
        }
        if let Some(p) = prev {
            if s.start < p.end {
                return Err(CorpusError::SpanOverlap(p.start, p.end, s.start, s.end));
            }
        }
        prev = Some(s);
    }
    Ok(())
}

/// Encode spans as strict IOB tags over `n` tokens.
pub fn iob_from_spans(spans: &[Span], n: usize) -> Result<LabelSeq, CorpusError> {
    validate_spans(spans, n)?;
    let mut tags = alloc::vec![Tag::O; n];
    for s in spans {
        tags[s.start] = Tag::B;
        for t in &mut tags[s.start + 1..s.end] {
            *t = Tag::I;
        }
    }
    Ok(LabelSeq(tags))
}

macro_rules! string_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub const fn as_str(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl FromStr for $name {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $($s => Ok($name::$variant),)+ _ => Err(()) }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum! {
    /// Universal coarse POS tags, plus `Unk` for tokens without a tag.
    Pos {
        Adj => "ADJ", Adp => "ADP", Adv => "ADV", Aux => "AUX", Cconj => "CCONJ",
        Det => "DET", Intj => "INTJ", Noun => "NOUN", Num => "NUM", Part => "PART",
        Pron => "PRON", Propn => "PROPN", Punct => "PUNCT", Sconj => "SCONJ",
        Sym => "SYM", Verb => "VERB", X => "X", Unk => "UNK",
    }
}

impl Pos {
    /// The 17 real tags, without `Unk`.
    pub fn tagset() -> &'static [Pos] {
        &Pos::ALL[..17]
    }
}

string_enum! {
    /// The single dominant emotion of a headline.
    Emotion {
        Happiness => "happiness", Sadness => "sadness", Fear => "fear",
        Disgust => "disgust", Anger => "anger",
        PositiveSurprise => "positive_surprise", NegativeSurprise => "negative_surprise",
        Shame => "shame", Hope => "hope", Other => "other", NoEmotion => "no_emotion",
    }
}

impl Emotion {
    pub fn is_emotion(self) -> bool {
        self != Emotion::NoEmotion
    }
}

string_enum! {
    /// Yes/no judgement that may be missing.
    TriState { Yes => "yes", No => "no", Unmarked => "unmarked" }
}

impl Default for TriState {
    fn default() -> Self {
        TriState::Unmarked
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: Pos,
    pub dep: String,
    pub ner: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: Pos) -> Token {
        Token {
            surface: surface.into(),
            pos,
            dep: String::new(),
            ner: String::new(),
        }
    }

    /// A token with only a surface form.
    pub fn bare(surface: impl Into<String>) -> Token {
        Token::new(surface, Pos::Unk)
    }

    pub fn with_dep(mut self, dep: impl Into<String>) -> Token {
        self.dep = dep.into();
        self
    }

    pub fn with_ner(mut self, ner: impl Into<String>) -> Token {
        self.ner = ner.into();
        self
    }

    pub fn is_punct(&self) -> bool {
        self.pos == Pos::Punct || crate::text::is_punct_token(&self.surface)
    }

    fn surface_ok(&self) -> bool {
        !self.surface.is_empty() && !self.surface.contains(['\t', '\n', '\r'])
    }
}

/// Per-headline metadata carried in the corpus header lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metadata {
    pub source: Option<String>,
    pub emotion: Option<Emotion>,
    pub cue: TriState,
    pub experiencer: TriState,
    pub lang: Option<String>,
    pub url: Option<String>,
    pub date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub meta: Metadata,
    tokens: Vec<Token>,
    gold: Option<LabelSeq>,
    pred: Option<LabelSeq>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<Sentence, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        if let Some(index) = tokens.iter().position(|t| !t.surface_ok()) {
            return Err(CorpusError::InvalidSurface { index });
        }
        Ok(Sentence {
            id: id.into(),
            meta: Metadata::default(),
            tokens,
            gold: None,
            pred: None,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn gold(&self) -> Option<&LabelSeq> {
        self.gold.as_ref()
    }

    pub fn pred(&self) -> Option<&LabelSeq> {
        self.pred.as_ref()
    }

    /// Set the gold layer. Gold must be strict IOB of the right length.
    pub fn set_gold(&mut self, gold: Option<LabelSeq>) -> Result<(), CorpusError> {
        if let Some(g) = &gold {
            self.check_len("gold", g)?;
            if let Some(index) = g.first_violation() {
                return Err(CorpusError::InvalidIob { index });
            }
        }
        self.gold = gold;
        Ok(())
    }

    pub fn with_gold(mut self, gold: LabelSeq) -> Result<Sentence, CorpusError> {
        self.set_gold(Some(gold))?;
        Ok(self)
    }

    pub fn with_gold_spans(self, spans: &[Span]) -> Result<Sentence, CorpusError> {
        let n = self.len();
        self.with_gold(iob_from_spans(spans, n)?)
    }

    /// Set the prediction layer. Invalid IOB is accepted here.
    pub fn set_pred(&mut self, pred: Option<LabelSeq>) -> Result<(), CorpusError> {
        if let Some(p) = &pred {
            self.check_len("pred", p)?;
        }
        self.pred = pred;
        Ok(())
    }

    pub fn with_pred(mut self, pred: LabelSeq) -> Result<Sentence, CorpusError> {
        self.set_pred(Some(pred))?;
        Ok(self)
    }

    pub fn gold_spans(&self) -> Option<Vec<Span>> {
        self.gold.as_ref().map(|g| {
            // gold is strict by construction
            spans_from_iob(g.tags(), IobMode::Lenient).unwrap_or_default()
        })
    }

    /// Prediction spans, decoded leniently.
    pub fn pred_spans(&self) -> Option<Vec<Span>> {
        self.pred
            .as_ref()
            .map(|p| spans_from_iob(p.tags(), IobMode::Lenient).unwrap_or_default())
    }

    pub fn has_stimulus(&self) -> bool {
        self.gold
            .as_ref()
            .is_some_and(|g| g.tags().iter().any(|&t| t != Tag::O))
    }

    fn check_len(&self, layer: &'static str, seq: &LabelSeq) -> Result<(), CorpusError> {
        if seq.len() != self.tokens.len() {
            return Err(CorpusError::LengthMismatch {
                layer,
                expected: self.tokens.len(),
                found: seq.len(),
            });
        }
        Ok(())
    }
}

/// An ordered list of sentences with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub provenance: String,
    sentences: Vec<Sentence>,
}

impl Dataset {
    pub fn new(
        provenance: impl Into<String>,
        sentences: Vec<Sentence>,
    ) -> Result<Dataset, CorpusError> {
        let mut seen = BTreeSet::new();
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Dataset {
            provenance: provenance.into(),
            sentences,
        })
    }

    pub fn empty(provenance: impl Into<String>) -> Dataset {
        Dataset {
            provenance: provenance.into(),
            sentences: Vec::new(),
        }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentences_mut(&mut self) -> &mut [Sentence] {
        &mut self.sentences
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    /// Concatenate datasets; ids must stay unique.
    pub fn concat(
        provenance: impl Into<String>,
        parts: impl IntoIterator<Item = Dataset>,
    ) -> Result<Dataset, CorpusError> {
        let sentences = parts.into_iter().flat_map(|d| d.sentences).collect();
        Dataset::new(provenance, sentences)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Sentence;
    type IntoIter = core::slice::Iter<'a, Sentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}
