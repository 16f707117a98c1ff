//! Emotion word lexicon keyed by lowercased surface form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmotionLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl EmotionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `term` with `emotion`. Terms are lowercased; terms containing
    /// whitespace are skipped since they can never match a single token.
    pub fn insert(&mut self, term: &str, emotion: &str) -> bool {
        let key = term.trim().to_lowercase();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return false;
        }
        self.entries
            .entry(key)
            .or_default()
            .insert(emotion.trim().to_string());
        true
    }

    /// Emotions of `surface`, matched case-insensitively.
    pub fn lookup(&self, surface: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(&surface.to_lowercase())
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.lookup(surface).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for EmotionLexicon {
    fn from_iter<T: IntoIterator<Item = (&'a str, &'a str)>>(iter: T) -> Self {
        let mut lex = EmotionLexicon::new();
        for (term, emo) in iter {
            lex.insert(term, emo);
        }
        lex
    }
}
