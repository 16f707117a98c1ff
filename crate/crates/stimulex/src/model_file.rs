//! Versioned plain-text persistence for [`CrfModel`].
//!
//! ```text
//! stimulex-crf 1
//! [config]
//! families=corpus+linguistic+lexicon
//! ...
//! [stopwords] <count>
//! [lexicon] <count>
//! [frequencies] <count>
//! [features] <count>
//! [weights] <count>
//! end
//! ```
//!
//! Weights are written with Rust's shortest round-trip float formatting, so
//! a loaded model reproduces the saved one bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use stimulex_core::EmotionLexicon;
use stimulex_core::crf::features::STOPWORDS_VERSION;
use stimulex_core::crf::model::weight_count;
use stimulex_core::crf::{
    CorpusStatistics, CrfError, CrfModel, FeatureConfig, FeatureContext, FeatureIndex, TrainConfig,
};
use thiserror::Error;

pub const MAGIC: &str = "stimulex-crf 1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelFileError {
    #[error("not a stimulex model file (missing `{MAGIC}` header)")]
    BadMagic,
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("unexpected end of file, expected {0}")]
    Truncated(String),
    #[error(transparent)]
    Model(#[from] CrfError),
}

pub fn save_model(m: &CrfModel) -> String {
    let mut out = String::new();
    let t = &m.train_config;
    let _ = writeln!(out, "{MAGIC}");
    out.push_str("[config]\n");
    let _ = writeln!(out, "families={}", m.features.families());
    let _ = writeln!(out, "top_k={}", m.features.top_k);
    let _ = writeln!(out, "window={}", FeatureConfig::WINDOW);
    let _ = writeln!(out, "l2_sigma={:?}", t.l2_sigma);
    let _ = writeln!(out, "max_iterations={}", t.max_iterations);
    let _ = writeln!(out, "tolerance={:?}", t.tolerance);
    let _ = writeln!(out, "seed={}", t.seed);
    let _ = writeln!(out, "max_features={}", t.max_features);
    let _ = writeln!(out, "memory={}", t.memory);
    let _ = writeln!(out, "stopwords_version={STOPWORDS_VERSION}");
    let ctx = &m.context;
    let _ = writeln!(out, "[stopwords] {}", ctx.stopwords.len());
    for w in &ctx.stopwords {
        let _ = writeln!(out, "{w}");
    }
    let pairs: Vec<(&str, &str)> = ctx
        .lexicon
        .iter()
        .flat_map(|(term, emos)| emos.iter().map(move |e| (term, e.as_str())))
        .collect();
    let _ = writeln!(out, "[lexicon] {}", pairs.len());
    for (term, e) in pairs {
        let _ = writeln!(out, "{term}\t{e}");
    }
    let freq = ctx.stats.word_freq();
    let _ = writeln!(out, "[frequencies] {}", freq.len());
    for (w, c) in freq {
        let _ = writeln!(out, "{w}\t{c}");
    }
    let _ = writeln!(out, "[features] {}", m.index().len());
    for n in m.index().names() {
        let _ = writeln!(out, "{n}");
    }
    let _ = writeln!(out, "[weights] {}", m.weights().len());
    for w in m.weights() {
        let _ = writeln!(out, "{w:?}");
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ModelFileError> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| ModelFileError::Truncated(what.to_string()))
    }

    fn section(&mut self, name: &str) -> Result<(usize, usize), ModelFileError> {
        let (no, line) = self.next(&format!("[{name}]"))?;
        let count = line
            .strip_prefix(&format!("[{name}] "))
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| ModelFileError::Syntax(no, format!("expected `[{name}] <count>`")))?;
        Ok((no, count))
    }

    fn block(&mut self, name: &str) -> Result<Vec<(usize, &'a str)>, ModelFileError> {
        let (_, count) = self.section(name)?;
        (0..count).map(|_| self.next(name)).collect()
    }
}

fn parse_num<T: std::str::FromStr>(no: usize, key: &str, v: &str) -> Result<T, ModelFileError> {
    v.parse()
        .map_err(|_| ModelFileError::Syntax(no, format!("invalid value `{v}` for {key}")))
}

pub fn load_model(text: &str) -> Result<CrfModel, ModelFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    if lines.next("header")?.1 != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let (no, l) = lines.next("[config]")?;
    if l != "[config]" {
        return Err(ModelFileError::Syntax(no, "expected `[config]`".into()));
    }
    let mut cfg: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut peek = lines.inner.clone();
    while let Some((i, l)) = peek.next() {
        if l.starts_with('[') {
            break;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| ModelFileError::Syntax(i + 1, "expected key=value".into()))?;
        cfg.insert(k, (i + 1, v));
        lines.inner.next();
    }
    let get = |k: &str| {
        cfg.get(k)
            .copied()
            .ok_or_else(|| ModelFileError::Truncated(format!("config key `{k}`")))
    };
    let (no, fam) = get("families")?;
    let mut features = FeatureConfig::from_families(fam)
        .ok_or_else(|| ModelFileError::Syntax(no, format!("bad feature families `{fam}`")))?;
    let (no, v) = get("top_k")?;
    features.top_k = parse_num(no, "top_k", v)?;
    let mut train = TrainConfig::default();
    let (no, v) = get("l2_sigma")?;
    train.l2_sigma = parse_num(no, "l2_sigma", v)?;
    let (no, v) = get("max_iterations")?;
    train.max_iterations = parse_num(no, "max_iterations", v)?;
    let (no, v) = get("tolerance")?;
    train.tolerance = parse_num(no, "tolerance", v)?;
    let (no, v) = get("seed")?;
    train.seed = parse_num(no, "seed", v)?;
    let (no, v) = get("max_features")?;
    train.max_features = parse_num(no, "max_features", v)?;
    let (no, v) = get("memory")?;
    train.memory = parse_num(no, "memory", v)?;

    let stopwords: BTreeSet<String> = lines
        .block("stopwords")?
        .into_iter()
        .map(|(_, l)| l.to_string())
        .collect();
    let mut lexicon = EmotionLexicon::default();
    for (no, l) in lines.block("lexicon")? {
        let (term, e) = l
            .split_once('\t')
            .ok_or_else(|| ModelFileError::Syntax(no, "expected term<TAB>emotion".into()))?;
        lexicon.insert(term, e);
    }
    let mut freq = BTreeMap::new();
    for (no, l) in lines.block("frequencies")? {
        let (w, c) = l
            .rsplit_once('\t')
            .ok_or_else(|| ModelFileError::Syntax(no, "expected word<TAB>count".into()))?;
        freq.insert(w.to_string(), parse_num(no, "frequency", c)?);
    }
    let names: Vec<String> = lines
        .block("features")?
        .into_iter()
        .map(|(_, l)| l.to_string())
        .collect();
    let index = FeatureIndex::from_names(names)?;
    let (no, count) = lines.section("weights")?;
    if count != weight_count(index.len()) {
        return Err(ModelFileError::Syntax(
            no,
            format!("{count} weights for {} features", index.len()),
        ));
    }
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let (no, l) = lines.next("weight")?;
        weights.push(parse_num::<f64>(no, "weight", l)?);
    }
    let (no, l) = lines.next("end")?;
    if l != "end" {
        return Err(ModelFileError::Syntax(no, "expected `end`".into()));
    }
    let context = FeatureContext {
        stats: CorpusStatistics::from_counts(freq, features.top_k),
        lexicon,
        stopwords,
    };
    Ok(CrfModel::new(index, weights, features, context, train)?)
}
