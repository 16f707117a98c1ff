//! The tab-separated corpus file format.
//!
//! ```text
//! # id=h1
//! # emotion=anger
//! Hallo	INTJ			O
//! Welt	NOUN			B
//! ```
//!
//! Each sentence is a run of `# key=value` header lines followed by one line
//! per token with the columns SURFACE, POS, DEP, NER, GOLD and an optional
//! PRED. A GOLD column of `_` on every token marks a sentence without a gold
//! layer. Sentences are separated by a blank line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use stimulex_core::corpus::{CorpusError, IobMode};
use stimulex_core::{Dataset, Emotion, LabelSeq, Metadata, Pos, Sentence, Tag, Token, TriState};
use thiserror::Error;

const KEYS: [&str; 8] = [
    "id",
    "source",
    "emotion",
    "cue",
    "experiencer",
    "lang",
    "url",
    "date",
];
const NO_LAYER: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatErrorKind {
    #[error("expected 5 or 6 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("tag `{0}` is not one of B, I, O")]
    BadTag(String),
    #[error("unknown POS tag `{0}`")]
    BadPos(String),
    #[error("header line must look like `# key=value`")]
    BadHeader,
    #[error("unknown header key `{0}`")]
    UnknownKey(String),
    #[error("header key `{0}` given twice")]
    RepeatedKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("sentence has no `id` header")]
    MissingId,
    #[error("duplicate sentence id `{0}` (first seen on line {1})")]
    DuplicateId(String, usize),
    #[error("header line inside a token block")]
    HeaderAfterTokens,
    #[error("sentence has headers but no tokens")]
    NoTokens,
    #[error("{0} column mixes tags and `_`")]
    MixedLayer(&'static str),
    #[error("token lines disagree on the number of columns")]
    MixedColumns,
    #[error("gold I does not continue a span")]
    InvalidGold,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct FormatError {
    pub line: usize,
    pub kind: FormatErrorKind,
}

fn err(line: usize, kind: FormatErrorKind) -> FormatError {
    FormatError { line, kind }
}

struct Block<'a> {
    headers: Vec<(usize, &'a str, &'a str)>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

/// Parse a corpus file. In [`IobMode::Strict`] an invalid gold column is an
/// error; in [`IobMode::Lenient`] it is repaired. Prediction columns are kept
/// verbatim in both modes.
pub fn parse_corpus(text: &str, provenance: &str, mode: IobMode) -> Result<Dataset, FormatError> {
    let mut sentences = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut block = Block {
        headers: Vec::new(),
        rows: Vec::new(),
    };
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines = if body.is_empty() {
        None
    } else {
        Some(body.split('\n'))
    };
    for (i, line) in lines.into_iter().flatten().enumerate() {
        let no = i + 1;
        if line.is_empty() {
            flush(&mut block, &mut sentences, &mut seen, mode)?;
        } else if let Some(h) = line.strip_prefix('#').filter(|_| !line.contains('\t')) {
            if !block.rows.is_empty() {
                return Err(err(no, FormatErrorKind::HeaderAfterTokens));
            }
            let (k, v) = h
                .trim_start()
                .split_once('=')
                .ok_or(err(no, FormatErrorKind::BadHeader))?;
            block.headers.push((no, k.trim(), v.trim()));
        } else {
            let cols: Vec<&str> = line.split('\t').collect();
            if !(5..=6).contains(&cols.len()) {
                return Err(err(no, FormatErrorKind::ColumnCount(cols.len())));
            }
            block.rows.push((no, cols));
        }
    }
    flush(&mut block, &mut sentences, &mut seen, mode)?;
    // ids were checked while flushing
    Ok(Dataset::new(provenance, sentences).expect("ids are unique"))
}

fn parse_tag(line: usize, s: &str) -> Result<Option<Tag>, FormatError> {
    if s == NO_LAYER {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| err(line, FormatErrorKind::BadTag(s.to_string())))
}

fn layer(
    rows: &[(usize, Vec<&str>)],
    col: usize,
    name: &'static str,
) -> Result<Option<Vec<Tag>>, FormatError> {
    let tags = rows
        .iter()
        .map(|(no, c)| parse_tag(*no, c[col]))
        .collect::<Result<Vec<_>, _>>()?;
    if tags.iter().all(Option::is_none) {
        return Ok(None);
    }
    match tags.iter().position(Option::is_none) {
        Some(i) => Err(err(rows[i].0, FormatErrorKind::MixedLayer(name))),
        None => Ok(Some(tags.into_iter().flatten().collect())),
    }
}

fn flush(
    block: &mut Block<'_>,
    out: &mut Vec<Sentence>,
    seen: &mut BTreeMap<String, usize>,
    mode: IobMode,
) -> Result<(), FormatError> {
    let headers = std::mem::take(&mut block.headers);
    let rows = std::mem::take(&mut block.rows);
    if headers.is_empty() && rows.is_empty() {
        return Ok(());
    }
    let first_line = headers.first().map_or_else(|| rows[0].0, |h| h.0);
    if rows.is_empty() {
        return Err(err(first_line, FormatErrorKind::NoTokens));
    }
    let mut id = None;
    let mut meta = Metadata::default();
    let mut given: BTreeMap<&str, usize> = BTreeMap::new();
    for &(no, key, value) in &headers {
        if !KEYS.contains(&key) {
            return Err(err(no, FormatErrorKind::UnknownKey(key.to_string())));
        }
        if given.insert(key, no).is_some() {
            return Err(err(no, FormatErrorKind::RepeatedKey(key.to_string())));
        }
        let bad = || {
            err(
                no,
                FormatErrorKind::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                },
            )
        };
        let text = (!value.is_empty()).then(|| value.to_string());
        match key {
            "id" => {
                if value.is_empty() || value.contains(char::is_whitespace) {
                    return Err(bad());
                }
                if let Some(&prev) = seen.get(value) {
                    return Err(err(
                        no,
                        FormatErrorKind::DuplicateId(value.to_string(), prev),
                    ));
                }
                seen.insert(value.to_string(), no);
                id = Some(value.to_string());
            }
            "emotion" if !value.is_empty() => {
                meta.emotion = Some(value.parse().map_err(|_| bad())?)
            }
            "emotion" => {}
            "cue" => meta.cue = tri_state(value).ok_or_else(bad)?,
            "experiencer" => meta.experiencer = tri_state(value).ok_or_else(bad)?,
            "source" => meta.source = text,
            "lang" => meta.lang = text,
            "url" => meta.url = text,
            "date" => meta.date = text,
            _ => unreachable!("key list checked above"),
        }
    }
    let id = id.ok_or(err(first_line, FormatErrorKind::MissingId))?;
    let width = rows[0].1.len();
    if let Some((no, _)) = rows.iter().find(|(_, c)| c.len() != width) {
        return Err(err(*no, FormatErrorKind::MixedColumns));
    }
    let mut tokens = Vec::with_capacity(rows.len());
    for (no, c) in &rows {
        let pos = match c[1] {
            "" => Pos::Unk,
            p => p
                .parse()
                .map_err(|_| err(*no, FormatErrorKind::BadPos(p.to_string())))?,
        };
        tokens.push(Token::new(c[0], pos).with_dep(c[2]).with_ner(c[3]));
    }
    let token_line = |i: usize| rows[i.min(rows.len() - 1)].0;
    let mut s = Sentence::new(id, tokens).map_err(|e| match e {
        CorpusError::InvalidSurface { index } => err(token_line(index), e.into()),
        e => err(first_line, e.into()),
    })?;
    s.meta = meta;
    if let Some(gold) = layer(&rows, 4, "GOLD")? {
        let mut gold = LabelSeq::new(gold);
        if let Some(i) = gold.first_violation() {
            match mode {
                IobMode::Strict => return Err(err(token_line(i), FormatErrorKind::InvalidGold)),
                IobMode::Lenient => gold = gold.repaired(),
            }
        }
        s.set_gold(Some(gold))
            .map_err(|e| err(first_line, e.into()))?;
    }
    if width == 6 {
        if let Some(pred) = layer(&rows, 5, "PRED")? {
            s.set_pred(Some(LabelSeq::new(pred)))
                .map_err(|e| err(first_line, e.into()))?;
        }
    }
    out.push(s);
    Ok(())
}

fn tri_state(v: &str) -> Option<TriState> {
    if v.is_empty() {
        return Some(TriState::Unmarked);
    }
    v.parse().ok()
}

fn tags_or_blank(layer: Option<&LabelSeq>, i: usize) -> &'static str {
    layer.map_or(NO_LAYER, |l| l.tags()[i].as_str())
}

/// Serialize in canonical form: headers in a fixed key order, absent values
/// and `unmarked` flags omitted, a PRED column only when a prediction layer
/// exists. Header values are trimmed; tabs and line breaks in them become
/// spaces.
pub fn write_corpus(d: &Dataset) -> String {
    let mut out = String::new();
    for (k, s) in d.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        write_headers(&mut out, s);
        let (gold, pred) = (s.gold(), s.pred());
        for (i, t) in s.tokens().iter().enumerate() {
            let pos = if t.pos == Pos::Unk {
                ""
            } else {
                t.pos.as_str()
            };
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                t.surface,
                pos,
                t.dep,
                t.ner,
                tags_or_blank(gold, i)
            );
            if pred.is_some() {
                out.push('\t');
                out.push_str(tags_or_blank(pred, i));
            }
            out.push('\n');
        }
    }
    out
}

fn write_headers(out: &mut String, s: &Sentence) {
    let m = &s.meta;
    let _ = writeln!(out, "# id={}", s.id);
    let mut opt = |k: &str, v: Option<&str>| {
        let v = v
            .map(|v| v.replace(['\t', '\n', '\r'], " "))
            .unwrap_or_default();
        if !v.trim().is_empty() {
            let _ = writeln!(out, "# {k}={}", v.trim());
        }
    };
    opt("source", m.source.as_deref());
    opt("emotion", m.emotion.map(Emotion::as_str));
    opt("cue", (m.cue != TriState::Unmarked).then(|| m.cue.as_str()));
    opt(
        "experiencer",
        (m.experiencer != TriState::Unmarked).then(|| m.experiencer.as_str()),
    );
    opt("lang", m.lang.as_deref());
    opt("url", m.url.as_deref());
    opt("date", m.date.as_deref());
}
