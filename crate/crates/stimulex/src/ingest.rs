//! Headline filtering: generic marker removal, then rejection of short,
//! keyword-led, dated and emotion-free headlines, then de-duplication.

use std::collections::BTreeSet;
use std::fmt;

use regex::Regex;
use stimulex_core::align::tokenize;
use stimulex_core::{Dataset, EmotionLexicon, Sentence, Token};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("line {0}: expected TEXT<TAB>SOURCE<TAB>DATE")]
    RawColumns(usize),
    #[error("line {0}: headline text is empty")]
    EmptyText(usize),
    #[error("line {0}: expected TERM<TAB>EMOTION")]
    LexiconColumns(usize),
    #[error("line {0}: lexicon term must be a single word")]
    LexiconTerm(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHeadline {
    pub text: String,
    pub source: String,
    pub fetched_at: String,
}

/// Read line-delimited `TEXT<TAB>SOURCE<TAB>DATE` records. Blank lines are
/// skipped.
pub fn read_raw(text: &str) -> Result<Vec<RawHeadline>, InputError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [t, s, d] = cols[..] else {
            return Err(InputError::RawColumns(i + 1));
        };
        if t.trim().is_empty() {
            return Err(InputError::EmptyText(i + 1));
        }
        out.push(RawHeadline {
            text: t.to_string(),
            source: s.trim().to_string(),
            fetched_at: d.trim().to_string(),
        });
    }
    Ok(out)
}

/// Read a `term<TAB>emotion` lexicon. Blank lines and `#` comments are
/// skipped.
pub fn read_lexicon(text: &str) -> Result<EmotionLexicon, InputError> {
    let mut lex = EmotionLexicon::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (term, emotion) = line
            .split_once('\t')
            .ok_or(InputError::LexiconColumns(i + 1))?;
        let term = term.trim();
        if term.is_empty() || term.contains(char::is_whitespace) {
            return Err(InputError::LexiconTerm(i + 1));
        }
        lex.insert(term, emotion.trim());
    }
    Ok(lex)
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub min_words: usize,
    /// Case-sensitive first words that disqualify a headline; a trailing
    /// colon on the headline's first word is ignored.
    pub keywords: Vec<String>,
    pub markers: Vec<Regex>,
    pub date: Regex,
}

pub const DEFAULT_KEYWORDS: [&str; 7] = [
    "Interview",
    "Kommentare",
    "Liveblog",
    "Exklusive",
    "Video",
    "TV",
    "Pop",
];

pub const DEFAULT_MARKERS: [&str; 3] = [r"\+\+\+[^+]*\+\+\+", r"\+\+[^+]*\+\+", r"^\s*News-"];

/// `DD.MM.YYYY`, `DD.MM.` and a bare two-digit `DD.MM`.
pub const DEFAULT_DATE: &str = r"\b(0?[1-9]|[12][0-9]|3[01])\.(0?[1-9]|1[0-2])\.([0-9]{4}\b)?|\b(0[1-9]|[12][0-9]|3[01])\.(0[1-9]|1[0-2])\b";

impl IngestConfig {
    pub fn new(
        min_words: usize,
        keywords: Vec<String>,
        markers: &[String],
        date: &str,
    ) -> Result<Self, regex::Error> {
        Ok(IngestConfig {
            min_words,
            keywords,
            markers: markers
                .iter()
                .map(|m| Regex::new(m))
                .collect::<Result<_, _>>()?,
            date: Regex::new(date)?,
        })
    }
}

impl Default for IngestConfig {
    fn default() -> Self {
        let markers: Vec<String> = DEFAULT_MARKERS.iter().map(|m| m.to_string()).collect();
        IngestConfig::new(
            5,
            DEFAULT_KEYWORDS.iter().map(|k| k.to_string()).collect(),
            &markers,
            DEFAULT_DATE,
        )
        .expect("default patterns compile")
    }
}

/// Remove the configured marker patterns and collapse whitespace.
pub fn strip_generic_markers(text: &str, cfg: &IngestConfig) -> String {
    let mut s = text.to_string();
    for re in &cfg.markers {
        s = re.replace_all(&s, " ").into_owned();
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Marker,
    Short,
    Keyword,
    Date,
    Lexicon,
    Duplicate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accepted",
            Verdict::Marker => "rejected_marker",
            Verdict::Short => "rejected_short",
            Verdict::Keyword => "rejected_keyword",
            Verdict::Date => "rejected_date",
            Verdict::Lexicon => "rejected_lexicon",
            Verdict::Duplicate => "rejected_duplicate",
        }
    }
}

/// Apply the four content filters, in order, to a marker-free headline.
pub fn passes_filters(text: &str, lexicon: &EmotionLexicon, cfg: &IngestConfig) -> Verdict {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() < cfg.min_words {
        return Verdict::Short;
    }
    let first = words[0].strip_suffix(':').unwrap_or(words[0]);
    if cfg.keywords.iter().any(|k| k == first) {
        return Verdict::Keyword;
    }
    if cfg.date.is_match(text) {
        return Verdict::Date;
    }
    let hit = tokenize(text).iter().any(|t| lexicon.contains(t));
    if !hit {
        return Verdict::Lexicon;
    }
    Verdict::Accept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterReport {
    pub input: usize,
    pub accepted: usize,
    pub rejected_marker: usize,
    pub rejected_short: usize,
    pub rejected_keyword: usize,
    pub rejected_date: usize,
    pub rejected_lexicon: usize,
    pub rejected_duplicate: usize,
}

impl FilterReport {
    fn add(&mut self, v: Verdict) {
        *match v {
            Verdict::Accept => &mut self.accepted,
            Verdict::Marker => &mut self.rejected_marker,
            Verdict::Short => &mut self.rejected_short,
            Verdict::Keyword => &mut self.rejected_keyword,
            Verdict::Date => &mut self.rejected_date,
            Verdict::Lexicon => &mut self.rejected_lexicon,
            Verdict::Duplicate => &mut self.rejected_duplicate,
        } += 1;
    }

    pub fn rejected(&self) -> usize {
        self.rejected_marker
            + self.rejected_short
            + self.rejected_keyword
            + self.rejected_date
            + self.rejected_lexicon
            + self.rejected_duplicate
    }

    pub fn rows(&self) -> [(&'static str, usize); 8] {
        [
            ("input", self.input),
            ("accepted", self.accepted),
            ("rejected_marker", self.rejected_marker),
            ("rejected_short", self.rejected_short),
            ("rejected_keyword", self.rejected_keyword),
            ("rejected_date", self.rejected_date),
            ("rejected_lexicon", self.rejected_lexicon),
            ("rejected_duplicate", self.rejected_duplicate),
        ]
    }
}

impl fmt::Display for FilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.rows() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Filter raw headlines into an unannotated dataset. Sentence ids are
/// `h<n>` with `n` the 1-based position in `items`.
pub fn run_pipeline(
    items: &[RawHeadline],
    lexicon: &EmotionLexicon,
    cfg: &IngestConfig,
) -> (Dataset, FilterReport) {
    let mut report = FilterReport {
        input: items.len(),
        ..Default::default()
    };
    let mut seen = BTreeSet::new();
    let mut sentences = Vec::new();
    for (n, h) in items.iter().enumerate() {
        let text = strip_generic_markers(&h.text, cfg);
        let mut verdict = if text.is_empty() {
            Verdict::Marker
        } else {
            passes_filters(&text, lexicon, cfg)
        };
        if verdict == Verdict::Accept && !seen.insert(text.clone()) {
            verdict = Verdict::Duplicate;
        }
        report.add(verdict);
        if verdict != Verdict::Accept {
            continue;
        }
        let tokens = tokenize(&text).into_iter().map(Token::bare).collect();
        let mut s = Sentence::new(format!("h{}", n + 1), tokens).expect("accepted text has words");
        s.meta.source = (!h.source.is_empty()).then(|| h.source.clone());
        s.meta.date = (!h.fetched_at.is_empty()).then(|| h.fetched_at.clone());
        s.meta.lang = Some("de".into());
        sentences.push(s);
    }
    let d = Dataset::new("ingest", sentences).expect("ids are positional");
    (d, report)
}
