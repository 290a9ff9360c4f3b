//! Weighted averaging of per-model probability vectors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::candidates::CandidateExample;
use crate::corpus::RelationTuple;
use crate::label::{RelationLabel, NUM_LABELS};

pub type ProbVector = [f64; NUM_LABELS];

/// Sums within this distance of 1 are renormalized; anything further is
/// rejected.
pub const SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("model `{model_id}`, example `{example_id}`: expected {NUM_LABELS} probabilities, found {found}")]
    WrongLength { model_id: String, example_id: String, found: usize },
    #[error("model `{model_id}`, example `{example_id}`: entry {index} is {value}, probabilities must be finite and non-negative")]
    InvalidEntry { model_id: String, example_id: String, index: usize, value: f64 },
    #[error("model `{model_id}`, example `{example_id}`: probabilities sum to {sum}, outside 1 ± {SUM_TOLERANCE}")]
    BadSum { model_id: String, example_id: String, sum: f64 },
    #[error("duplicate prediction for model `{model_id}`, example `{example_id}`")]
    Duplicate { model_id: String, example_id: String },
    #[error("ensemble config has no model with a positive weight")]
    EmptyConfig,
    #[error("model `{model_id}`: weight {weight} must be finite and non-negative")]
    InvalidWeight { model_id: String, weight: f64 },
    #[error("weights line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("missing predictions for {} (model, example) pairs, first: {:?}", .0.len(), .0.first())]
    Missing(Vec<(String, String)>),
    #[error("prediction for unknown example `{0}`")]
    UnknownExample(String),
}

/// One model's distribution over the 14 labels for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPrediction {
    pub model_id: String,
    pub example_id: String,
    pub probs: ProbVector,
}

impl ModelPrediction {
    /// Validates a raw vector and renormalizes it to sum 1.
    pub fn new(model_id: impl Into<String>, example_id: impl Into<String>, raw: &[f64]) -> Result<Self, EnsembleError> {
        let (model_id, example_id) = (model_id.into(), example_id.into());
        let Ok(mut probs) = <ProbVector>::try_from(raw) else {
            return Err(EnsembleError::WrongLength { model_id, example_id, found: raw.len() });
        };
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(EnsembleError::InvalidEntry { model_id, example_id, index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(EnsembleError::BadSum { model_id, example_id, sum });
        }
        // Leave vectors that only carry summation rounding untouched.
        if (sum - 1.0).abs() > 4.0 * f64::EPSILON {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(ModelPrediction { model_id, example_id, probs })
    }

    /// A one-hot vector, used for models that emit labels rather than
    /// distributions (decoded text-to-text answers).
    pub fn one_hot(model_id: impl Into<String>, example_id: impl Into<String>, label: RelationLabel) -> Self {
        let mut probs = [0.0; NUM_LABELS];
        probs[label.index()] = 1.0;
        ModelPrediction { model_id: model_id.into(), example_id: example_id.into(), probs }
    }

    /// Fails on the first repeated (model_id, example_id) key.
    pub fn check_unique(predictions: &[ModelPrediction]) -> Result<(), EnsembleError> {
        let mut seen = BTreeSet::new();
        for p in predictions {
            if !seen.insert((p.model_id.as_str(), p.example_id.as_str())) {
                return Err(EnsembleError::Duplicate { model_id: p.model_id.clone(), example_id: p.example_id.clone() });
            }
        }
        Ok(())
    }
}

/// Model weights, renormalized to sum 1. Models with weight 0 are kept but
/// do not take part in the average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    weights: BTreeMap<String, f64>,
}

impl EnsembleConfig {
    pub fn new<I, S>(raw: I) -> Result<Self, EnsembleError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut weights = BTreeMap::new();
        for (model_id, weight) in raw {
            let model_id = model_id.into();
            if !weight.is_finite() || weight < 0.0 {
                return Err(EnsembleError::InvalidWeight { model_id, weight });
            }
            weights.insert(model_id, weight);
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(EnsembleError::EmptyConfig);
        }
        weights.values_mut().for_each(|w| *w /= total);
        Ok(EnsembleConfig { weights })
    }

    /// Equal weights over `models`.
    pub fn uniform<I, S>(models: I) -> Result<Self, EnsembleError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(models.into_iter().map(|m| (m, 1.0)))
    }

    /// Parses a weights file: one `model_id weight` (or `model_id=weight`)
    /// per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EnsembleError> {
        let mut raw: Vec<(String, f64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| EnsembleError::ConfigSyntax { line: i + 1, message: message.into() };
            let (model, weight) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| syntax("expected `model_id weight`"))?;
            let (model, weight) = (model.trim(), weight.trim());
            if model.is_empty() {
                return Err(syntax("empty model id"));
            }
            if raw.iter().any(|(m, _)| m == model) {
                return Err(syntax("model listed twice"));
            }
            let weight: f64 = weight.parse().map_err(|_| syntax("weight is not a number"))?;
            raw.push((model.into(), weight));
        }
        Self::new(raw)
    }

    pub fn weight(&self, model_id: &str) -> Option<f64> {
        self.weights.get(model_id).copied()
    }

    /// (model_id, normalized weight) in model-id order.
    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(m, w)| (m.as_str(), *w))
    }

    fn active(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights().filter(|(_, w)| *w > 0.0)
    }
}

/// Ensemble decision for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPrediction {
    pub example_id: String,
    pub probs: ProbVector,
    pub label: RelationLabel,
    /// Top-1 minus top-2 probability.
    pub margin: f64,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(probs: &ProbVector) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

fn margin(probs: &ProbVector, best: usize) -> f64 {
    let runner_up = probs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    probs[best] - runner_up
}

impl FinalPrediction {
    pub fn from_probs(example_id: String, probs: ProbVector) -> Self {
        let best = argmax(&probs);
        FinalPrediction {
            example_id,
            label: RelationLabel::from_index(best).unwrap_or(RelationLabel::NoRelation),
            margin: margin(&probs, best),
            probs,
        }
    }
}

/// Weighted average of every positively weighted model's vector per
/// example, sorted by example id. Predictions from models outside the
/// config are ignored. Models are summed in model-id order, so the input
/// order never changes the result.
pub fn combine(predictions: &[ModelPrediction], config: &EnsembleConfig) -> Result<Vec<FinalPrediction>, EnsembleError> {
    ModelPrediction::check_unique(predictions)?;
    let mut grouped: BTreeMap<&str, BTreeMap<&str, &ProbVector>> = BTreeMap::new();
    for p in predictions {
        if config.weight(&p.model_id).is_some_and(|w| w > 0.0) {
            grouped.entry(p.example_id.as_str()).or_default().insert(p.model_id.as_str(), &p.probs);
        }
    }

    let missing: Vec<(String, String)> = grouped
        .iter()
        .flat_map(|(example, models)| {
            config.active().filter(|(m, _)| !models.contains_key(m)).map(|(m, _)| (String::from(m), String::from(*example)))
        })
        .collect();
    if !missing.is_empty() {
        return Err(EnsembleError::Missing(missing));
    }

    Ok(grouped
        .into_iter()
        .map(|(example_id, models)| {
            let mut probs = [0.0; NUM_LABELS];
            for (model, weight) in config.active() {
                for (acc, p) in probs.iter_mut().zip(models[model].iter()) {
                    *acc += weight * p;
                }
            }
            FinalPrediction::from_probs(example_id.into(), probs)
        })
        .collect())
}

/// Positive final predictions as submission tuples, deduplicated and
/// sorted.
pub fn predictions_to_submission(
    finals: &[FinalPrediction],
    candidates: &[CandidateExample],
) -> Result<Vec<RelationTuple>, EnsembleError> {
    let by_id: BTreeMap<&str, &CandidateExample> = candidates.iter().map(|c| (c.example_id.as_str(), c)).collect();
    let mut rows = BTreeSet::new();
    for f in finals {
        let c = by_id.get(f.example_id.as_str()).ok_or_else(|| EnsembleError::UnknownExample(f.example_id.clone()))?;
        if f.label.is_positive() {
            rows.insert(RelationTuple { doc_id: c.doc_id.clone(), label: f.label, arg1: c.chem.id.clone(), arg2: c.gene.id.clone() });
        }
    }
    Ok(rows.into_iter().collect())
}
