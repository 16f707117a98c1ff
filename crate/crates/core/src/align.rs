//! Phrase alignment for annotation projection.
//!
//! Given the tokens of a translated sentence and of the separately
//! translated stimulus phrase, find the consecutive window of the sentence
//! that best covers the phrase. Matching tokens may be scattered; the window
//! always runs from the first to the last matched sentence token, so gaps
//! are filled in.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::Span;
use crate::text::{is_punct_char, is_punct_token, normalize};

/// Whitespace tokenization that splits leading and trailing punctuation
/// characters into tokens of their own (`"Bayern:"` becomes `Bayern`, `:`).
/// A word made only of punctuation stays whole.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        if is_punct_token(word) {
            out.push(word.to_string());
            continue;
        }
        let core_start = word
            .char_indices()
            .find(|&(_, c)| !is_punct_char(c))
            .map_or(0, |(i, _)| i);
        let core_end = word
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_punct_char(c))
            .map_or(word.len(), |(i, c)| i + c.len_utf8());
        out.extend(word[..core_start].chars().map(|c| c.to_string()));
        out.push(word[core_start..core_end].to_string());
        out.extend(word[core_end..].chars().map(|c| c.to_string()));
    }
    out
}

/// Character-level Levenshtein distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(up).min(row[j])
            };
            diag = up;
        }
    }
    row[b.len()]
}

/// `1 - edit_distance / max_len`, in `[0, 1]`.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / max as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    /// Minimum similarity for a fuzzy token match.
    pub fuzzy_threshold: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            fuzzy_threshold: 0.75,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    Matched { span: Span, fuzzy: bool },
    NoMatch,
}

impl Alignment {
    pub fn span(&self) -> Option<Span> {
        match self {
            Alignment::Matched { span, .. } => Some(*span),
            Alignment::NoMatch => None,
        }
    }
}

/// Align a stimulus phrase to a window of the sentence.
///
/// Tokens are compared after [`normalize`]. The window with the most
/// matched stimulus tokens (one-to-one) wins; ties go to the shorter window,
/// then the earlier start. At least half of the stimulus tokens (rounded up)
/// must match exactly, otherwise the search is repeated with fuzzy matching,
/// and if that also misses the quorum the result is [`Alignment::NoMatch`].
pub fn align_stimulus<S: AsRef<str>>(
    sentence: &[S],
    stimulus: &[S],
    cfg: &AlignConfig,
) -> Alignment {
    let sent: Vec<String> = sentence.iter().map(|t| normalize(t.as_ref())).collect();
    let stim: Vec<String> = stimulus
        .iter()
        .map(|t| normalize(t.as_ref()))
        .filter(|t| !t.is_empty())
        .collect();
    if stim.is_empty() || sent.is_empty() {
        return Alignment::NoMatch;
    }
    let quorum = stim.len().div_ceil(2);

    let exact = |x: &str, y: &str| x == y;
    if let Some(span) = best_window(&sent, &stim, quorum, exact) {
        return Alignment::Matched { span, fuzzy: false };
    }
    let threshold = cfg.fuzzy_threshold;
    let fuzzy = |x: &str, y: &str| x == y || similarity(x, y) >= threshold;
    match best_window(&sent, &stim, quorum, fuzzy) {
        Some(span) => Alignment::Matched { span, fuzzy: true },
        None => Alignment::NoMatch,
    }
}

fn best_window<F>(sent: &[String], stim: &[String], quorum: usize, matches: F) -> Option<Span>
where
    F: Fn(&str, &str) -> bool,
{
    // adjacency: sentence position -> stimulus positions it can match
    let adj: Vec<Vec<usize>> = sent
        .iter()
        .map(|w| {
            if w.is_empty() {
                return Vec::new();
            }
            stim.iter()
                .enumerate()
                .filter(|(_, s)| matches(w, s))
                .map(|(k, _)| k)
                .collect()
        })
        .collect();

    // (count, len, start) ordered by: more matches, shorter, earlier
    let mut best: Option<(usize, usize, usize)> = None;
    for start in (0..sent.len()).filter(|&i| !adj[i].is_empty()) {
        let mut owner: Vec<Option<usize>> = alloc::vec![None; stim.len()];
        let mut count = 0;
        for end in start..sent.len() {
            if adj[end].is_empty() {
                continue;
            }
            let mut seen = alloc::vec![false; stim.len()];
            if augment(end, &adj, &mut owner, &mut seen) {
                count += 1;
            }
            let len = end - start + 1;
            let better = match best {
                None => true,
                Some((c, l, s)) => {
                    (count, core::cmp::Reverse(len), core::cmp::Reverse(start))
                        > (c, core::cmp::Reverse(l), core::cmp::Reverse(s))
                }
            };
            if better {
                best = Some((count, len, start));
            }
        }
    }
    let (count, len, start) = best?;
    (count >= quorum).then(|| Span {
        start,
        end: start + len,
    })
}

// Kuhn's augmenting path from sentence position `u`.
fn augment(u: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &k in &adj[u] {
        if seen[k] {
            continue;
        }
        seen[k] = true;
        if owner[k].is_none_or(|v| augment(v, adj, owner, seen)) {
            owner[k] = Some(u);
            return true;
        }
    }
    false
}
