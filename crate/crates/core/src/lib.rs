//! # stimulex-core
//!
//! Algorithms for emotion-stimulus span extraction over pretokenized news
//! headlines: IOB span encoding, a linear-chain CRF (feature templates,
//! forward-backward, constrained Viterbi, L-BFGS training), span-match
//! evaluation with an error taxonomy, inter-annotator agreement, corpus
//! statistics and the phrase-alignment step of annotation projection.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the network live in the `stimulex` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agreement;
pub mod align;
pub mod analysis;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod lexicon;
pub mod text;

pub use corpus::{
    Dataset, Emotion, IobMode, LabelSeq, Metadata, Pos, Sentence, Span, Tag, Token, TriState,
};
pub use lexicon::EmotionLexicon;
