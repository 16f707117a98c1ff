//! Feature templates for the stimulus CRF.
//!
//! Every token gets binary string features from up to three families:
//!
//! - corpus: frequency bucket, position in the headline, casing, number and
//!   punctuation flags, membership in the top-k most frequent words
//! - linguistic: POS tag, dependency relation, stopword flag, NER label
//! - lexicon: emotion-lexicon membership and the entry's emotions
//!
//! The own features of the left and right neighbour are copied with a
//! `prev:` / `next:` prefix, and the first and last token carry `BOS` /
//! `EOS`. Each family owns a distinct set of feature keys, so switching a
//! family off removes exactly its features and nothing else.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{Dataset, Pos, Sentence};
use crate::lexicon::EmotionLexicon;
use crate::text;

use super::CrfError;

/// Version tag of the shipped stopword list.
pub const STOPWORDS_VERSION: &str = "de-v1";
const STOPWORDS_DE: &str = include_str!("../../data/stopwords_de_v1.txt");

/// The shipped German stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS_DE
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(ToString::to_string)
        .collect()
}

/// Which feature families are active. The context window is fixed at one
/// token on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub corpus: bool,
    pub linguistic: bool,
    pub lexicon: bool,
    pub top_k: usize,
}

impl FeatureConfig {
    pub const WINDOW: usize = 1;

    pub fn all() -> Self {
        FeatureConfig {
            corpus: true,
            linguistic: true,
            lexicon: true,
            top_k: 50,
        }
    }

    pub fn corpus() -> Self {
        FeatureConfig {
            linguistic: false,
            lexicon: false,
            ..Self::all()
        }
    }

    pub fn linguistic() -> Self {
        FeatureConfig {
            corpus: false,
            lexicon: false,
            ..Self::all()
        }
    }

    pub fn corpus_linguistic() -> Self {
        FeatureConfig {
            lexicon: false,
            ..Self::all()
        }
    }

    /// Parse a family list such as `all`, `corpus`, `corpus+linguistic`
    /// or `linguistic+lexicon`.
    pub fn from_families(spec: &str) -> Option<Self> {
        let mut cfg = FeatureConfig {
            corpus: false,
            linguistic: false,
            lexicon: false,
            top_k: 50,
        };
        for part in spec.split(['+', ',']).map(str::trim) {
            match part {
                "all" => {
                    cfg = FeatureConfig {
                        top_k: cfg.top_k,
                        ..Self::all()
                    }
                }
                "corpus" => cfg.corpus = true,
                "linguistic" => cfg.linguistic = true,
                "lexicon" => cfg.lexicon = true,
                _ => return None,
            }
        }
        cfg.validate().ok().map(|_| cfg)
    }

    /// Canonical family list, the inverse of [`FeatureConfig::from_families`].
    pub fn families(&self) -> String {
        let mut parts = Vec::new();
        if self.corpus {
            parts.push("corpus");
        }
        if self.linguistic {
            parts.push("linguistic");
        }
        if self.lexicon {
            parts.push("lexicon");
        }
        parts.join("+")
    }

    pub fn validate(&self) -> Result<(), CrfError> {
        if self.corpus || self.linguistic || self.lexicon {
            Ok(())
        } else {
            Err(CrfError::NoFeatureFamily)
        }
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::all()
    }
}

/// Word statistics of the training split.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusStatistics {
    word_freq: BTreeMap<String, usize>,
    top_k: BTreeSet<String>,
}

impl CorpusStatistics {
    /// Count lowercased surfaces. The top-k list ranks non-punctuation words
    /// by frequency, ties broken alphabetically.
    pub fn from_dataset(d: &Dataset, k: usize) -> Self {
        let mut word_freq: BTreeMap<String, usize> = BTreeMap::new();
        for s in d {
            for w in s.surfaces() {
                *word_freq.entry(w.to_lowercase()).or_default() += 1;
            }
        }
        Self::from_counts(word_freq, k)
    }

    pub fn from_counts(word_freq: BTreeMap<String, usize>, k: usize) -> Self {
        let mut ranked: Vec<(&String, &usize)> = word_freq
            .iter()
            .filter(|(w, _)| !text::is_punct_token(w))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let top_k = ranked.into_iter().take(k).map(|(w, _)| w.clone()).collect();
        CorpusStatistics { word_freq, top_k }
    }

    pub fn frequency(&self, surface: &str) -> usize {
        self.word_freq
            .get(&surface.to_lowercase())
            .copied()
            .unwrap_or(0)
    }

    pub fn in_top_k(&self, surface: &str) -> bool {
        self.top_k.contains(&surface.to_lowercase())
    }

    pub fn word_freq(&self) -> &BTreeMap<String, usize> {
        &self.word_freq
    }

    pub fn top_k(&self) -> &BTreeSet<String> {
        &self.top_k
    }
}

/// Everything besides the sentence that feature extraction reads.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureContext {
    pub stats: CorpusStatistics,
    pub lexicon: EmotionLexicon,
    pub stopwords: BTreeSet<String>,
}

/// Per-token feature names, each list sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSeq(Vec<Vec<String>>);

impl FeatureSeq {
    pub fn new(mut tokens: Vec<Vec<String>>) -> Self {
        for t in &mut tokens {
            t.sort();
            t.dedup();
        }
        FeatureSeq(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn token(&self, i: usize) -> &[String] {
        &self.0[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[String]> {
        self.0.iter().map(Vec::as_slice)
    }

    pub fn contains(&self, i: usize, name: &str) -> bool {
        self.0[i].binary_search_by(|f| f.as_str().cmp(name)).is_ok()
    }
}

/// Frequency bucket name: `0`, `1`, `2-4`, `5-9` or `10+`.
pub fn freq_bucket(count: usize) -> &'static str {
    match count {
        0 => "0",
        1 => "1",
        2..=4 => "2-4",
        5..=9 => "5-9",
        _ => "10+",
    }
}

fn own_features(
    s: &Sentence,
    i: usize,
    ctx: &FeatureContext,
    cfg: &FeatureConfig,
) -> Result<Vec<String>, CrfError> {
    let tok = &s.tokens()[i];
    let w = tok.surface.as_str();
    let n = s.len();
    let mut f = Vec::new();
    if cfg.corpus {
        f.push(format!("freq={}", freq_bucket(ctx.stats.frequency(w))));
        let position = if i == 0 {
            "begin"
        } else if i + 1 == n {
            "end"
        } else {
            "middle"
        };
        f.push(format!("position={position}"));
        for (flag, on) in [
            ("is_title", text::is_capitalized(w)),
            ("is_upper", text::is_all_upper(w)),
            ("is_lower", text::is_all_lower(w)),
            ("is_number", text::is_number(w)),
            ("has_digit", text::has_digit(w)),
            ("is_punct", text::is_punct_token(w)),
            ("top_k", ctx.stats.in_top_k(w)),
        ] {
            if on {
                f.push(flag.to_string());
            }
        }
    }
    if cfg.linguistic {
        if tok.pos == Pos::Unk {
            return Err(CrfError::MissingPos {
                id: s.id.clone(),
                index: i,
            });
        }
        f.push(format!("pos={}", tok.pos));
        if !tok.dep.is_empty() {
            f.push(format!("dep={}", tok.dep));
        }
        if ctx.stopwords.contains(&w.to_lowercase()) {
            f.push("is_stop".to_string());
        }
        if !tok.ner.is_empty() && tok.ner != "O" {
            f.push("has_ner".to_string());
            f.push(format!("ner={}", tok.ner));
        }
    }
    if cfg.lexicon {
        if let Some(emotions) = ctx.lexicon.lookup(w) {
            f.push("in_lexicon".to_string());
            f.extend(emotions.iter().map(|e| format!("lex_emotion={e}")));
        }
    }
    Ok(f)
}

/// Build the feature sequence of one sentence.
pub fn extract_features(
    s: &Sentence,
    ctx: &FeatureContext,
    cfg: &FeatureConfig,
) -> Result<FeatureSeq, CrfError> {
    cfg.validate()?;
    let own: Vec<Vec<String>> = (0..s.len())
        .map(|i| own_features(s, i, ctx, cfg))
        .collect::<Result<_, _>>()?;
    let n = own.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = Vec::with_capacity(3 * own[i].len() + 3);
        f.push("bias".to_string());
        f.extend(own[i].iter().cloned());
        if i > 0 {
            f.extend(own[i - 1].iter().map(|x| format!("prev:{x}")));
        } else {
            f.push("BOS".to_string());
        }
        if i + 1 < n {
            f.extend(own[i + 1].iter().map(|x| format!("next:{x}")));
        } else {
            f.push("EOS".to_string());
        }
        out.push(f);
    }
    Ok(FeatureSeq::new(out))
}
