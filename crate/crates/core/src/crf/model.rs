use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{LabelSeq, Sentence, Tag};

use super::features::{FeatureConfig, FeatureContext, FeatureSeq, extract_features};
use super::inference::{Potentials, viterbi};
use super::{CrfError, TrainConfig};

const L: usize = Tag::COUNT;

/// Attribute ids per token, the interned form of a [`FeatureSeq`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttrSeq(pub Vec<Vec<u32>>);

impl AttrSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dictionary from feature name to attribute id. Ids are dense and assigned
/// in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureIndex {
    ids: BTreeMap<String, u32>,
    names: Vec<String>,
}

impl FeatureIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild from names in id order; fails on duplicates.
    pub fn from_names(names: Vec<String>) -> Result<Self, CrfError> {
        let mut ids = BTreeMap::new();
        for (i, n) in names.iter().enumerate() {
            if ids.insert(n.clone(), i as u32).is_some() {
                return Err(CrfError::DuplicateFeature(n.clone()));
            }
        }
        Ok(FeatureIndex { ids, names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(String::from(name), id);
        self.names.push(String::from(name));
        id
    }

    /// Map names to ids, dropping names not in the index.
    pub fn lookup(&self, f: &FeatureSeq) -> AttrSeq {
        AttrSeq(
            f.iter()
                .map(|tok| tok.iter().filter_map(|n| self.get(n)).collect())
                .collect(),
        )
    }
}

/// Position of the weight for (attribute, label) in the weight vector.
pub fn state_weight_id(attr: u32, label: Tag) -> usize {
    attr as usize * L + label.index()
}

/// Position of the transition weight `from -> to`, after all state weights.
pub fn transition_weight_id(num_attrs: usize, from: Tag, to: Tag) -> usize {
    num_attrs * L + from.index() * L + to.index()
}

pub fn weight_count(num_attrs: usize) -> usize {
    num_attrs * L + L * L
}

/// Build chain potentials from a weight vector laid out as
/// `[attr x label state weights | 3x3 transitions]`.
pub fn potentials(weights: &[f64], num_attrs: usize, x: &AttrSeq) -> Potentials {
    let emit =
        x.0.iter()
            .map(|attrs| {
                let mut e = [0.0; L];
                for &a in attrs {
                    let base = a as usize * L;
                    for (y, v) in e.iter_mut().enumerate() {
                        *v += weights[base + y];
                    }
                }
                e
            })
            .collect();
    let t0 = num_attrs * L;
    let trans = core::array::from_fn(|a| core::array::from_fn(|b| weights[t0 + a * L + b]));
    Potentials { emit, trans }
}

/// A trained linear-chain CRF together with everything needed to
/// recompute features at tagging time.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    index: FeatureIndex,
    weights: Vec<f64>,
    pub features: FeatureConfig,
    pub context: FeatureContext,
    pub train_config: TrainConfig,
}

impl CrfModel {
    pub fn new(
        index: FeatureIndex,
        weights: Vec<f64>,
        features: FeatureConfig,
        context: FeatureContext,
        train_config: TrainConfig,
    ) -> Result<Self, CrfError> {
        let expected = weight_count(index.len());
        if weights.len() != expected {
            return Err(CrfError::WeightCount {
                expected,
                found: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(CrfError::NonFiniteWeight(i));
        }
        Ok(CrfModel {
            index,
            weights,
            features,
            context,
            train_config,
        })
    }

    pub fn index(&self) -> &FeatureIndex {
        &self.index
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_attrs(&self) -> usize {
        self.index.len()
    }

    pub fn state_weight(&self, feature: &str, label: Tag) -> Option<f64> {
        self.index
            .get(feature)
            .map(|a| self.weights[state_weight_id(a, label)])
    }

    pub fn transition(&self, from: Tag, to: Tag) -> f64 {
        self.weights[transition_weight_id(self.num_attrs(), from, to)]
    }

    /// Potentials for a feature sequence; unseen feature names contribute nothing.
    pub fn potentials(&self, f: &FeatureSeq) -> Potentials {
        potentials(&self.weights, self.num_attrs(), &self.index.lookup(f))
    }

    pub fn extract(&self, s: &Sentence) -> Result<FeatureSeq, CrfError> {
        extract_features(s, &self.context, &self.features)
    }

    pub fn log_partition(&self, f: &FeatureSeq) -> f64 {
        super::inference::log_partition(&self.potentials(f))
    }

    pub fn viterbi_decode(&self, f: &FeatureSeq, constrained: bool) -> LabelSeq {
        LabelSeq::new(viterbi(&self.potentials(f), constrained).0)
    }

    /// Extract features and decode one sentence.
    pub fn tag(&self, s: &Sentence, constrained: bool) -> Result<LabelSeq, CrfError> {
        Ok(self.viterbi_decode(&self.extract(s)?, constrained))
    }
}
