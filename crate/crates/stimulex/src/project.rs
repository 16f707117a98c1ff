//! Annotation projection: translate each source sentence and each of its
//! stimulus phrases, then locate the translated phrase in the translated
//! sentence.

use serde::Serialize;
use stimulex_core::align::{AlignConfig, Alignment, align_stimulus, tokenize};
use stimulex_core::{Dataset, Sentence, Span, Token};

use crate::translate::Client;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoMatch,
    Dropped,
}

/// One line of the projection log, one per source span.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionRecord {
    pub id: String,
    pub span_index: usize,
    pub source_span: (usize, usize),
    pub t_en: String,
    pub stim_en: Vec<String>,
    pub t_de: Option<String>,
    pub stim_de: Option<String>,
    pub projected: Option<(usize, usize)>,
    pub fuzzy: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ProjectionRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProjectionSummary {
    pub sentences: usize,
    pub projected: usize,
    pub dropped: usize,
    /// Source sentences without a gold span; nothing to project.
    pub skipped: usize,
    pub spans_ok: usize,
    pub spans_fuzzy: usize,
    pub spans_no_match: usize,
    pub spans_dropped: usize,
}

/// Merge overlapping spans of a sorted-by-start list.
fn merge(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort();
    let mut out: Vec<Span> = Vec::new();
    for s in spans {
        match out.last_mut() {
            Some(last) if s.start < last.end => last.end = last.end.max(s.end),
            _ => out.push(s),
        }
    }
    out
}

/// Project every gold span of `src`. Sentences where no span aligns are
/// reported as dropped and left out of the returned dataset. Translation
/// failures never abort the batch.
pub fn project_dataset(
    src: &Dataset,
    client: &mut Client,
    cfg: &AlignConfig,
) -> (Dataset, Vec<ProjectionRecord>, ProjectionSummary) {
    let mut log = Vec::new();
    let mut out = Vec::new();
    let mut sum = ProjectionSummary {
        sentences: src.len(),
        ..Default::default()
    };
    let target_lang = client.target_lang.clone();
    for s in src {
        let spans = s.gold_spans().unwrap_or_default();
        if spans.is_empty() {
            sum.skipped += 1;
            continue;
        }
        let surfaces: Vec<&str> = s.surfaces().collect();
        let t_en = surfaces.join(" ");
        let record = |k: usize, sp: &Span| ProjectionRecord {
            id: s.id.clone(),
            span_index: k,
            source_span: (sp.start, sp.end),
            t_en: t_en.clone(),
            stim_en: surfaces[sp.start..sp.end]
                .iter()
                .map(|w| w.to_string())
                .collect(),
            t_de: None,
            stim_de: None,
            projected: None,
            fuzzy: false,
            status: Status::Dropped,
            error: None,
        };
        let t_de = match client.translate(&t_en) {
            Ok(t) => t,
            Err(e) => {
                for (k, sp) in spans.iter().enumerate() {
                    log.push(ProjectionRecord {
                        error: Some(e.to_string()),
                        ..record(k, sp)
                    });
                    sum.spans_dropped += 1;
                }
                sum.dropped += 1;
                continue;
            }
        };
        let sent_de = tokenize(&t_de);
        let mut found = Vec::new();
        for (k, sp) in spans.iter().enumerate() {
            let mut rec = record(k, sp);
            rec.t_de = Some(t_de.clone());
            match client.translate(&rec.stim_en.join(" ")) {
                Err(e) => {
                    rec.error = Some(e.to_string());
                    sum.spans_dropped += 1;
                }
                Ok(stim_de) => {
                    let stim_toks = tokenize(&stim_de);
                    rec.stim_de = Some(stim_de);
                    match align_stimulus(&sent_de, &stim_toks, cfg) {
                        Alignment::Matched { span, fuzzy } => {
                            rec.projected = Some((span.start, span.end));
                            rec.fuzzy = fuzzy;
                            rec.status = Status::Ok;
                            sum.spans_ok += 1;
                            sum.spans_fuzzy += usize::from(fuzzy);
                            found.push(span);
                        }
                        Alignment::NoMatch => {
                            rec.status = Status::NoMatch;
                            sum.spans_no_match += 1;
                        }
                    }
                }
            }
            log.push(rec);
        }
        if found.is_empty() || sent_de.is_empty() {
            sum.dropped += 1;
            continue;
        }
        let tokens = sent_de.into_iter().map(Token::bare).collect();
        let mut t = Sentence::new(s.id.clone(), tokens).expect("tokenizer yields non-empty tokens");
        t.meta = s.meta.clone();
        t.meta.lang = Some(target_lang.clone());
        let t = t
            .with_gold_spans(&merge(found))
            .expect("aligned spans lie inside the sentence");
        out.push(t);
        sum.projected += 1;
    }
    let d = Dataset::new(format!("projected:{}", src.provenance), out)
        .expect("ids come from a dataset");
    (d, log, sum)
}
