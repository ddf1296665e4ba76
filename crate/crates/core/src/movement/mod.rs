//! Moving/stationary classification: per-second logistic regression,
//! HMM smoothing, and majority vote over 5 s blocks.

mod features;
mod hmm;
mod logreg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    extract_features, percentile, samples_per_second, Feature, FeatureVector, DEFAULT_FEATURES, LONG_WINDOW_S,
};
pub use hmm::{viterbi, HmmParams};
pub use logreg::{
    fit, label_for, predict_sequence, sigmoid, stratified_folds, train_logreg, CvReport, LogRegConfig, LogRegModel,
};

use crate::ingest::{GravityEstimate, SensorStream, NANOS_PER_SEC};
use crate::trajectory::{Primitive, Symbol};

pub const BLOCK_SECONDS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum MovementError {
    #[error("insufficient data: {samples} samples, need at least {needed}")]
    InsufficientData { samples: usize, needed: usize },
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("model is not trained")]
    UntrainedModel,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("stream rate {0} Hz is not a whole number of samples per second")]
    InvalidRate(f64),
    #[error("invalid HMM parameters: {0}")]
    InvalidHmm(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Movement {
    #[serde(rename = "M")]
    Moving,
    #[serde(rename = "S")]
    Stationary,
}

impl Movement {
    pub fn symbol(self) -> Symbol {
        match self {
            Movement::Moving => Symbol::M,
            Movement::Stationary => Symbol::S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementLabel {
    /// Start of the labelled second.
    pub t_ns: i64,
    pub label: Movement,
}

/// Majority vote over consecutive blocks of five labels; the trailing
/// partial block votes over its own length. Ties go to `M`.
pub fn aggregate_5s(labels: &[MovementLabel]) -> Vec<Primitive> {
    labels
        .chunks(BLOCK_SECONDS)
        .map(|block| {
            let moving = block.iter().filter(|l| l.label == Movement::Moving).count();
            let symbol = if 2 * moving >= block.len() { Symbol::M } else { Symbol::S };
            Primitive { symbol, t_ns: block[0].t_ns }
        })
        .collect()
}

/// Attach timestamps at 1 s spacing starting from `t0_ns`.
pub fn label_seconds(t0_ns: i64, labels: &[Movement]) -> Vec<MovementLabel> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &label)| MovementLabel { t_ns: t0_ns + i as i64 * NANOS_PER_SEC, label })
        .collect()
}

/// Trained classifier plus the feature list it expects and the smoother.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementClassifier {
    pub features: Vec<Feature>,
    pub model: LogRegModel,
    #[serde(default)]
    pub hmm: HmmParams,
}

impl MovementClassifier {
    pub fn new(features: Vec<Feature>, model: LogRegModel, hmm: HmmParams) -> Result<Self, MovementError> {
        if features.len() != model.dim() {
            return Err(MovementError::LengthMismatch { left: features.len(), right: model.dim() });
        }
        let names: Vec<&str> = features.iter().map(|f| f.name()).collect();
        if names != model.feature_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(MovementError::InvalidConfig("feature names differ from the model's".into()));
        }
        hmm.validate()?;
        Ok(MovementClassifier { features, model, hmm })
    }

    /// Unsmoothed per-second labels.
    pub fn raw_labels(&self, stream: &SensorStream, gravity: &GravityEstimate) -> Result<Vec<MovementLabel>, MovementError> {
        let fv = extract_features(stream, gravity, &self.features)?;
        fv.iter()
            .map(|v| Ok(MovementLabel { t_ns: v.t_ns, label: self.model.predict(&v.values)? }))
            .collect()
    }

    /// Per-second labels after Viterbi smoothing.
    pub fn classify(&self, stream: &SensorStream, gravity: &GravityEstimate) -> Result<Vec<MovementLabel>, MovementError> {
        let raw = self.raw_labels(stream, gravity)?;
        Ok(smooth(&raw, &self.hmm))
    }
}

pub fn smooth(raw: &[MovementLabel], hmm: &HmmParams) -> Vec<MovementLabel> {
    let obs: Vec<Movement> = raw.iter().map(|l| l.label).collect();
    viterbi(&obs, hmm)
        .into_iter()
        .zip(raw)
        .map(|(label, r)| MovementLabel { t_ns: r.t_ns, label })
        .collect()
}
