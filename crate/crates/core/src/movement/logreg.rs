//! Logistic regression with input-noise regularisation and stratified
//! k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Movement, MovementError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    /// Std of the Gaussian noise added to standardised inputs, i.e. a
    /// multiple of each feature's std.
    pub noise_level: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { noise_level: 0.1, epochs: 400, learning_rate: 0.5, folds: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub noise_level: f64,
    pub trained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub accuracy: f64,
    /// Fraction of `M` rows predicted `M`.
    pub m_recall: f64,
    /// Fraction of `S` rows predicted `S`.
    pub s_recall: f64,
    pub fold_accuracy: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogRegModel {
    /// An untrained model with zero weights.
    pub fn untrained(feature_names: Vec<String>) -> Self {
        let d = feature_names.len();
        LogRegModel {
            feature_names,
            mean: vec![0.0; d],
            scale: vec![1.0; d],
            weights: vec![0.0; d],
            bias: 0.0,
            noise_level: 0.0,
            trained: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check(&self, x: &[f64]) -> Result<(), MovementError> {
        if !self.trained {
            return Err(MovementError::UntrainedModel);
        }
        if x.len() != self.dim() {
            return Err(MovementError::LengthMismatch { left: x.len(), right: self.dim() });
        }
        Ok(())
    }

    fn logit_standardized(&self, z: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    /// Probability of `M`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, MovementError> {
        self.check(x)?;
        Ok(sigmoid(self.logit_standardized(&self.standardize(x))))
    }

    /// `M` when the probability is at least one half.
    pub fn predict(&self, x: &[f64]) -> Result<Movement, MovementError> {
        Ok(label_for(self.predict_proba(x)?))
    }

    /// Share of absolute standardised weight per feature.
    pub fn weight_shares(&self) -> Vec<(String, f64)> {
        let total: f64 = self.weights.iter().map(|w| w.abs()).sum();
        self.feature_names
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| (n.clone(), if total > 0.0 { w.abs() / total } else { 0.0 }))
            .collect()
    }
}

pub fn label_for(p: f64) -> Movement {
    if p >= 0.5 {
        Movement::Moving
    } else {
        Movement::Stationary
    }
}

pub fn predict_sequence(model: &LogRegModel, rows: &[Vec<f64>]) -> Result<Vec<Movement>, MovementError> {
    if !model.trained {
        return Err(MovementError::UntrainedModel);
    }
    rows.iter().map(|r| model.predict(r)).collect()
}

fn validate(x: &[Vec<f64>], y: &[Movement]) -> Result<usize, MovementError> {
    if x.len() != y.len() {
        return Err(MovementError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let has_m = y.contains(&Movement::Moving);
    let has_s = y.contains(&Movement::Stationary);
    if !(has_m && has_s) {
        return Err(MovementError::DegenerateLabels);
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(MovementError::LengthMismatch { left: r.len(), right: d });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MovementError::NonFiniteFeature);
    }
    Ok(d)
}

/// Fit on all rows, without cross-validation.
pub fn fit(
    x: &[Vec<f64>],
    y: &[Movement],
    feature_names: Vec<String>,
    cfg: &LogRegConfig,
    seed: u64,
) -> Result<LogRegModel, MovementError> {
    let d = validate(x, y)?;
    if feature_names.len() != d {
        return Err(MovementError::LengthMismatch { left: feature_names.len(), right: d });
    }
    let n = x.len() as f64;
    let mut mean = vec![0.0; d];
    for r in x {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for r in x {
        for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let mut model = LogRegModel {
        feature_names,
        mean,
        scale,
        weights: vec![0.0; d],
        bias: 0.0,
        noise_level: cfg.noise_level,
        trained: true,
    };
    let z: Vec<Vec<f64>> = x.iter().map(|r| model.standardize(r)).collect();
    let target: Vec<f64> = y.iter().map(|l| if *l == Movement::Moving { 1.0 } else { 0.0 }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise_level.max(0.0)).map_err(|_| MovementError::InvalidConfig("noise level".into()))?;
    let mut row = vec![0.0; d];
    for _ in 0..cfg.epochs {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (zr, t) in z.iter().zip(&target) {
            for (r, v) in row.iter_mut().zip(zr) {
                *r = if cfg.noise_level > 0.0 { v + noise.sample(&mut rng) } else { *v };
            }
            let err = sigmoid(model.logit_standardized(&row)) - t;
            for (g, v) in gw.iter_mut().zip(&row) {
                *g += err * v;
            }
            gb += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g / n;
        }
        model.bias -= cfg.learning_rate * gb / n;
    }
    Ok(model)
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(y: &[Movement], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0usize; y.len()];
    for class in [Movement::Moving, Movement::Stationary] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            fold[i] = j % k;
        }
    }
    fold
}

/// Cross-validate, then fit the returned model on every row.
pub fn train_logreg(
    x: &[Vec<f64>],
    y: &[Movement],
    feature_names: Vec<String>,
    cfg: &LogRegConfig,
) -> Result<(LogRegModel, CvReport), MovementError> {
    validate(x, y)?;
    if cfg.folds < 2 {
        return Err(MovementError::InvalidConfig("need at least two folds".into()));
    }
    let fold = stratified_folds(y, cfg.folds, cfg.seed);
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    let mut fold_accuracy = Vec::new();
    for f in 0..cfg.folds {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| fold[i] != f);
        if test.is_empty() {
            continue;
        }
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<Movement> = train.iter().map(|&i| y[i]).collect();
        let model = match fit(&tx, &ty, feature_names.clone(), cfg, cfg.seed.wrapping_add(1 + f as u64)) {
            Ok(m) => m,
            Err(MovementError::DegenerateLabels) => continue,
            Err(e) => return Err(e),
        };
        let mut correct = 0;
        for &i in &test {
            let p = model.predict(&x[i])?;
            match y[i] {
                Movement::Moving => {
                    pos += 1;
                    tp += (p == Movement::Moving) as usize;
                }
                Movement::Stationary => {
                    neg += 1;
                    tn += (p == Movement::Stationary) as usize;
                }
            }
            correct += (p == y[i]) as usize;
        }
        fold_accuracy.push(correct as f64 / test.len() as f64);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let report = CvReport {
        accuracy: ratio(tp + tn, pos + neg),
        m_recall: ratio(tp, pos),
        s_recall: ratio(tn, neg),
        fold_accuracy,
    };
    let model = fit(x, y, feature_names, cfg, cfg.seed)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn separable_toy_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..200 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            if (a + b).abs() < 0.1 {
                continue;
            }
            x.push(vec![a, b]);
            y.push(if a + b > 0.0 { Movement::Moving } else { Movement::Stationary });
        }
        let (model, cv) = train_logreg(&x, &y, names(2), &LogRegConfig::default()).unwrap();
        assert!(cv.accuracy >= 0.95, "{cv:?}");
        assert_eq!(cv.fold_accuracy.len(), 5);
        assert!(model.weights[0] > 0.0 && model.weights[1] > 0.0);
    }

    #[test]
    fn no_signal_is_a_coin_flip() {
        let x = vec![vec![1.0, 1.0]; 100];
        let y: Vec<Movement> = (0..100).map(|i| if i % 2 == 0 { Movement::Moving } else { Movement::Stationary }).collect();
        let (_, cv) = train_logreg(&x, &y, names(2), &LogRegConfig::default()).unwrap();
        assert!((cv.accuracy - 0.5).abs() < 0.1, "{cv:?}");
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0]; 10];
        let y = vec![Movement::Moving; 10];
        assert_eq!(
            train_logreg(&x, &y, names(1), &LogRegConfig::default()).unwrap_err(),
            MovementError::DegenerateLabels
        );
    }

    #[test]
    fn tie_goes_to_moving() {
        assert_eq!(label_for(0.5), Movement::Moving);
        assert_eq!(label_for(0.4999), Movement::Stationary);
        let mut m = LogRegModel::untrained(names(1));
        m.trained = true;
        assert_eq!(m.predict_proba(&[3.0]).unwrap(), 0.5);
        assert_eq!(m.predict(&[3.0]).unwrap(), Movement::Moving);
    }

    #[test]
    fn untrained_model_refuses() {
        let m = LogRegModel::untrained(names(1));
        assert_eq!(predict_sequence(&m, &[vec![0.0]]).unwrap_err(), MovementError::UntrainedModel);
        let mut t = m.clone();
        t.trained = true;
        assert!(predict_sequence(&t, &[]).unwrap().is_empty());
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<Movement> = (0..53).map(|i| if i < 30 { Movement::Moving } else { Movement::Stationary }).collect();
        let f = stratified_folds(&y, 5, 1);
        for k in 0..5 {
            let m = (0..53).filter(|&i| f[i] == k && y[i] == Movement::Moving).count();
            let s = (0..53).filter(|&i| f[i] == k && y[i] == Movement::Stationary).count();
            assert_eq!(m, 6);
            assert!((4..=5).contains(&s));
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn training_is_seeded() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<Movement> = (0..40).map(|i| if i >= 20 { Movement::Moving } else { Movement::Stationary }).collect();
        let cfg = LogRegConfig::default();
        let a = train_logreg(&x, &y, names(2), &cfg).unwrap();
        let b = train_logreg(&x, &y, names(2), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
