//! Regularized maximum-likelihood training.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Dataset, LabelSeq, Tag};
use crate::lexicon::EmotionLexicon;

use super::CrfError;
use super::features::{
    CorpusStatistics, FeatureConfig, FeatureContext, FeatureSeq, extract_features,
};
use super::inference::{Potentials, forward_backward};
use super::lbfgs::{self, LbfgsParams, Termination};
use super::model::{
    AttrSeq, CrfModel, FeatureIndex, potentials, state_weight_id, transition_weight_id,
    weight_count,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Gaussian prior width; the penalty is `|w|^2 / (2 sigma^2)`.
    pub l2_sigma: f64,
    pub max_iterations: usize,
    /// Gradient max-norm at which training stops.
    pub tolerance: f64,
    /// Recorded with the model. Full-batch optimization has no random
    /// component, so the result does not depend on it.
    pub seed: u64,
    /// Upper bound on distinct feature names.
    pub max_features: usize,
    pub memory: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_sigma: 10.0,
            max_iterations: 500,
            tolerance: 1e-4,
            seed: 0,
            max_features: 2_000_000,
            memory: 6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CrfError> {
        if !(self.l2_sigma > 0.0 && self.l2_sigma.is_finite()) {
            return Err(CrfError::InvalidConfig("l2_sigma must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(CrfError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(CrfError::InvalidConfig("tolerance must be positive"));
        }
        if self.memory < 1 {
            return Err(CrfError::InvalidConfig("memory must be at least 1"));
        }
        Ok(())
    }
}

/// Negative log-likelihood plus L2 penalty over interned instances.
#[derive(Debug, Clone)]
pub struct Objective {
    num_attrs: usize,
    instances: Vec<(AttrSeq, Vec<Tag>)>,
    sigma: f64,
}

impl Objective {
    pub fn new(
        num_attrs: usize,
        instances: Vec<(AttrSeq, Vec<Tag>)>,
        sigma: f64,
    ) -> Result<Self, CrfError> {
        for (i, (x, y)) in instances.iter().enumerate() {
            if x.len() != y.len() {
                return Err(CrfError::InstanceLength(i));
            }
            if let Some(index) = LabelSeq::new(y.clone()).first_violation() {
                return Err(CrfError::InvalidGold { instance: i, index });
            }
        }
        Ok(Objective {
            num_attrs,
            instances,
            sigma,
        })
    }

    pub fn dimension(&self) -> usize {
        weight_count(self.num_attrs)
    }

    /// Data term only: `sum_i (log Z_i - score_i(gold))`, with its gradient
    /// (expected minus observed feature counts) added into `grad`.
    fn data_term(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let mut loss = 0.0;
        for (x, y) in &self.instances {
            let p: Potentials = potentials(w, self.num_attrs, x);
            let m = forward_backward(&p);
            loss += m.log_z - p.score(y);
            for (t, attrs) in x.0.iter().enumerate() {
                for &a in attrs {
                    for (label, prob) in Tag::ALL.iter().zip(m.node[t]) {
                        grad[state_weight_id(a, *label)] += prob;
                    }
                    grad[state_weight_id(a, y[t])] -= 1.0;
                }
                if t > 0 {
                    for from in Tag::ALL {
                        for to in Tag::ALL {
                            grad[transition_weight_id(self.num_attrs, from, to)] +=
                                m.edge[t][from.index()][to.index()];
                        }
                    }
                    grad[transition_weight_id(self.num_attrs, y[t - 1], y[t])] -= 1.0;
                }
            }
        }
        loss
    }

    pub fn evaluate(&self, w: &[f64]) -> Result<(f64, Vec<f64>), CrfError> {
        let mut grad = alloc::vec![0.0; w.len()];
        let data = self.data_term(w, &mut grad);
        let inv_var = 1.0 / (self.sigma * self.sigma);
        let mut penalty = 0.0;
        for (g, wi) in grad.iter_mut().zip(w) {
            penalty += wi * wi;
            *g += wi * inv_var;
        }
        let loss = data + 0.5 * penalty * inv_var;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(CrfError::NonFiniteLoss {
                loss,
                max_weight: w.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            });
        }
        Ok((loss, grad))
    }
}

/// Loss and gradient of `model`'s weights on a batch, with unseen feature
/// names ignored.
pub fn nll_and_gradient(
    model: &CrfModel,
    batch: &[(FeatureSeq, LabelSeq)],
    l2_sigma: f64,
) -> Result<(f64, Vec<f64>), CrfError> {
    let instances = batch
        .iter()
        .map(|(f, y)| (model.index().lookup(f), y.tags().to_vec()))
        .collect();
    Objective::new(model.num_attrs(), instances, l2_sigma)?.evaluate(model.weights())
}

/// Lexicon and stopwords fed into feature extraction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Resources {
    pub lexicon: EmotionLexicon,
    pub stopwords: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub instances: usize,
    pub features: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub final_loss: f64,
    pub grad_max_norm: f64,
    pub loss_trace: Vec<f64>,
}

/// Train a CRF on every sentence of `data`. Corpus statistics (word
/// frequencies, top-k list) are taken from `data` itself.
pub fn train(
    data: &Dataset,
    features: &FeatureConfig,
    config: &TrainConfig,
    resources: Resources,
) -> Result<(CrfModel, TrainReport), CrfError> {
    features.validate()?;
    config.validate()?;
    if data.is_empty() {
        return Err(CrfError::EmptyDataset);
    }
    let context = FeatureContext {
        stats: CorpusStatistics::from_dataset(data, features.top_k),
        lexicon: resources.lexicon,
        stopwords: resources.stopwords,
    };
    let mut index = FeatureIndex::new();
    let mut instances = Vec::with_capacity(data.len());
    for s in data {
        let gold = s
            .gold()
            .ok_or_else(|| CrfError::MissingGold(s.id.clone()))?;
        let f = extract_features(s, &context, features)?;
        let mut attrs = Vec::with_capacity(f.len());
        for tok in f.iter() {
            let ids: Vec<u32> = tok.iter().map(|n| index.intern(n)).collect();
            if index.len() > config.max_features {
                return Err(CrfError::TooManyFeatures {
                    limit: config.max_features,
                });
            }
            attrs.push(ids);
        }
        instances.push((AttrSeq(attrs), gold.tags().to_vec()));
    }
    let n_instances = instances.len();
    let objective = Objective::new(index.len(), instances, config.l2_sigma)?;
    let params = LbfgsParams {
        memory: config.memory,
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        ..LbfgsParams::default()
    };
    let out = lbfgs::minimize(
        |w| objective.evaluate(w),
        alloc::vec![0.0; objective.dimension()],
        &params,
    )?;
    let report = TrainReport {
        instances: n_instances,
        features: index.len(),
        iterations: out.iterations,
        termination: out.termination,
        final_loss: out.loss,
        grad_max_norm: out.grad_max_norm,
        loss_trace: out.trace,
    };
    let model = CrfModel::new(index, out.x, *features, context, *config)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::inference::log_partition;
    use crate::{Pos, Sentence, Span, Token};
    use alloc::format;
    use alloc::vec;

    #[test]
    fn zero_weights_single_token() {
        let obj = Objective::new(1, vec![(AttrSeq(vec![vec![0]]), vec![Tag::O])], 10.0).unwrap();
        let (loss, _) = obj.evaluate(&vec![0.0; obj.dimension()]).unwrap();
        assert!((loss - libm::log(3.0)).abs() < 1e-12);
    }

    #[test]
    fn duplicated_instance_doubles_data_term() {
        let inst = (
            AttrSeq(vec![vec![0, 1], vec![1], vec![0]]),
            vec![Tag::B, Tag::I, Tag::O],
        );
        let w: Vec<f64> = (0..weight_count(2))
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        let sigma = 1e9; // penalty vanishes
        let one = Objective::new(2, vec![inst.clone()], sigma)
            .unwrap()
            .evaluate(&w)
            .unwrap();
        let two = Objective::new(2, vec![inst.clone(), inst], sigma)
            .unwrap()
            .evaluate(&w)
            .unwrap();
        assert!((two.0 - 2.0 * one.0).abs() < 1e-9);
        for (a, b) in one.1.iter().zip(&two.1) {
            assert!((b - 2.0 * a).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_gold() {
        let inst = (AttrSeq(vec![vec![0], vec![0]]), vec![Tag::O, Tag::I]);
        assert_eq!(
            Objective::new(1, vec![inst], 1.0).unwrap_err(),
            CrfError::InvalidGold {
                instance: 0,
                index: 1
            }
        );
    }

    #[test]
    fn log_z_dominates_gold_score() {
        let inst = (AttrSeq(vec![vec![0], vec![1]]), vec![Tag::B, Tag::I]);
        let w: Vec<f64> = (0..weight_count(2)).map(|i| i as f64 * 0.1 - 0.5).collect();
        let p = potentials(&w, 2, &inst.0);
        assert!(log_partition(&p) >= p.score(&inst.1));
    }

    fn sentence(id: &str, words: &[&str], span: (usize, usize)) -> Sentence {
        let toks = words
            .iter()
            .map(|w| Token::new(*w, if *w == "über" { Pos::Adp } else { Pos::Noun }))
            .collect();
        Sentence::new(id, toks)
            .unwrap()
            .with_gold_spans(&[Span::from(span)])
            .unwrap()
    }

    #[test]
    fn memorizes_repeated_sentence() {
        let words = ["Ärger", "in", "Berlin", "wegen", "Mietpreisen", "Anstieg"];
        let data = Dataset::new(
            "t",
            (0..20)
                .map(|i| sentence(&format!("s{i}"), &words, (4, 6)))
                .collect(),
        )
        .unwrap();
        let (model, report) = train(
            &data,
            &FeatureConfig::all(),
            &TrainConfig::default(),
            Resources::default(),
        )
        .unwrap();
        assert!(report.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        let tags = model.tag(&data.sentences()[0], true).unwrap();
        assert_eq!(Some(&tags), data.sentences()[0].gold());
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert_eq!(
            train(
                &Dataset::empty("x"),
                &FeatureConfig::all(),
                &TrainConfig::default(),
                Resources::default()
            )
            .unwrap_err(),
            CrfError::EmptyDataset
        );
    }

    #[test]
    fn feature_cap() {
        let data = Dataset::new("t", vec![sentence("a", &["x", "y"], (0, 1))]).unwrap();
        let cfg = TrainConfig {
            max_features: 3,
            ..Default::default()
        };
        assert!(matches!(
            train(&data, &FeatureConfig::all(), &cfg, Resources::default()),
            Err(CrfError::TooManyFeatures { limit: 3 })
        ));
    }

    #[test]
    fn invalid_config() {
        let bad = TrainConfig {
            l2_sigma: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
