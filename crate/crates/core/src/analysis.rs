//! Corpus statistics: per-emotion counts, POS context of stimulus spans and
//! where in the headline stimuli sit.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use thiserror::Error;

use crate::corpus::{Dataset, Emotion, Pos, Sentence, Span, TriState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("sentence `{id}` token {index} has no POS tag")]
    MissingPos { id: String, index: usize },
}

/// Counts for one emotion class (or the whole corpus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmotionRow {
    pub instances: usize,
    pub with_cue: usize,
    pub with_experiencer: usize,
    pub with_stimulus: usize,
    pub stimulus_spans: usize,
    pub stimulus_tokens: usize,
}

impl EmotionRow {
    /// Mean stimulus length in tokens, averaged over spans.
    pub fn mean_stimulus_len(&self) -> Option<f64> {
        (self.stimulus_spans > 0).then(|| self.stimulus_tokens as f64 / self.stimulus_spans as f64)
    }

    fn add(&mut self, o: &EmotionRow) {
        self.instances += o.instances;
        self.with_cue += o.with_cue;
        self.with_experiencer += o.with_experiencer;
        self.with_stimulus += o.with_stimulus;
        self.stimulus_spans += o.stimulus_spans;
        self.stimulus_tokens += o.stimulus_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    /// Keyed by emotion; `None` collects sentences without an emotion label.
    pub per_emotion: BTreeMap<Option<Emotion>, EmotionRow>,
    pub all: EmotionRow,
    pub tokens: usize,
    pub unique_tokens: usize,
    pub min_len: Option<usize>,
    pub max_len: Option<usize>,
    pub mean_len: Option<f64>,
    pub ends_with_stimulus: Option<f64>,
    pub begins_with_stimulus: Option<f64>,
    /// Sentence count per news source, for each emotion.
    pub sources: BTreeMap<Option<Emotion>, BTreeMap<String, usize>>,
}

pub fn corpus_stats(d: &Dataset) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut vocab = BTreeSet::new();
    for s in d {
        let spans = s.gold_spans().unwrap_or_default();
        let row = EmotionRow {
            instances: 1,
            with_cue: usize::from(s.meta.cue == TriState::Yes),
            with_experiencer: usize::from(s.meta.experiencer == TriState::Yes),
            with_stimulus: usize::from(!spans.is_empty()),
            stimulus_spans: spans.len(),
            stimulus_tokens: spans.iter().map(Span::len).sum(),
        };
        stats
            .per_emotion
            .entry(s.meta.emotion)
            .or_default()
            .add(&row);
        stats.all.add(&row);
        if let Some(src) = &s.meta.source {
            *stats
                .sources
                .entry(s.meta.emotion)
                .or_default()
                .entry(src.clone())
                .or_default() += 1;
        }
        stats.tokens += s.len();
        stats.min_len = Some(stats.min_len.map_or(s.len(), |m| m.min(s.len())));
        stats.max_len = Some(stats.max_len.map_or(s.len(), |m| m.max(s.len())));
        vocab.extend(s.surfaces());
    }
    stats.unique_tokens = vocab.len();
    if !d.is_empty() {
        stats.mean_len = Some(stats.tokens as f64 / d.len() as f64);
    }
    let (ends, begins) = position_stats(d);
    stats.ends_with_stimulus = ends;
    stats.begins_with_stimulus = begins;
    stats
}

/// Fractions of stimulus-bearing sentences whose last (first) non-punctuation
/// token lies inside a gold span. `None` when no sentence has a stimulus.
pub fn position_stats(d: &Dataset) -> (Option<f64>, Option<f64>) {
    let (mut bearing, mut ends, mut begins) = (0usize, 0usize, 0usize);
    for s in d {
        let spans = s.gold_spans().unwrap_or_default();
        if spans.is_empty() {
            continue;
        }
        bearing += 1;
        let inside = |i: usize| spans.iter().any(|sp| sp.contains(i));
        let toks = s.tokens();
        if let Some(last) = toks.iter().rposition(|t| !t.is_punct()) {
            ends += usize::from(inside(last));
        }
        if let Some(first) = toks.iter().position(|t| !t.is_punct()) {
            begins += usize::from(inside(first));
        }
    }
    if bearing == 0 {
        return (None, None);
    }
    let b = bearing as f64;
    (Some(ends as f64 / b), Some(begins as f64 / b))
}

/// Column of the POS context table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Context {
    All,
    Inside,
    Before1,
    After1,
}

impl Context {
    pub const ALL: [Context; 4] = [
        Context::All,
        Context::Inside,
        Context::Before1,
        Context::After1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Context::All => "All",
            Context::Inside => "Inside",
            Context::Before1 => "Before@1",
            Context::After1 => "After@1",
        }
    }
}

/// POS tag frequencies over all tokens, inside stimulus spans, and directly
/// before and after them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PosContextTable {
    counts: BTreeMap<Pos, [usize; 4]>,
    totals: [usize; 4],
}

impl PosContextTable {
    pub fn count(&self, tag: Pos, col: Context) -> usize {
        self.counts.get(&tag).map_or(0, |c| c[col as usize])
    }

    pub fn total(&self, col: Context) -> usize {
        self.totals[col as usize]
    }

    /// Relative frequency of `tag` within a column; 0 for an empty column.
    pub fn freq(&self, tag: Pos, col: Context) -> f64 {
        let total = self.total(col);
        if total == 0 {
            0.0
        } else {
            self.count(tag, col) as f64 / total as f64
        }
    }

    /// Context frequency divided by the overall frequency of the tag.
    pub fn ratio(&self, tag: Pos, col: Context) -> f64 {
        let all = self.freq(tag, Context::All);
        if all == 0.0 {
            0.0
        } else {
            self.freq(tag, col) / all
        }
    }

    /// Tags present in the corpus, most frequent first (ties by tag order).
    pub fn tags_by_frequency(&self) -> alloc::vec::Vec<Pos> {
        let mut tags: alloc::vec::Vec<Pos> = self.counts.keys().copied().collect();
        tags.sort_by_key(|&t| (core::cmp::Reverse(self.count(t, Context::All)), t));
        tags
    }

    fn bump(&mut self, tag: Pos, col: Context) {
        self.counts.entry(tag).or_default()[col as usize] += 1;
        self.totals[col as usize] += 1;
    }
}

pub fn pos_context_stats(d: &Dataset) -> Result<PosContextTable, AnalysisError> {
    let mut table = PosContextTable::default();
    for s in d {
        check_pos(s)?;
        let toks = s.tokens();
        for t in toks {
            table.bump(t.pos, Context::All);
        }
        for sp in s.gold_spans().unwrap_or_default() {
            for t in &toks[sp.start..sp.end] {
                table.bump(t.pos, Context::Inside);
            }
            if sp.start > 0 {
                table.bump(toks[sp.start - 1].pos, Context::Before1);
            }
            if sp.end < toks.len() {
                table.bump(toks[sp.end].pos, Context::After1);
            }
        }
    }
    Ok(table)
}

fn check_pos(s: &Sentence) -> Result<(), AnalysisError> {
    match s.tokens().iter().position(|t| t.pos == Pos::Unk) {
        Some(index) => Err(AnalysisError::MissingPos {
            id: s.id.clone(),
            index,
        }),
        None => Ok(()),
    }
}
