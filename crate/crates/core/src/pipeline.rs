//! Raw recording to primitive sequence, and the default movement model.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::Result;
use crate::ingest::{estimate_gravity, resample, SensorStream};
use crate::movement::{
    aggregate_5s, extract_features, train_logreg, CvReport, Feature, MovementClassifier, MovementLabel,
};
use crate::path_model::imu_sim::{simulate_recording, ImuSimConfig};
use crate::path_model::Leg;
use crate::protocol::{verify_proximity, GateDecision, RecordedPath, SimClock};
use crate::repository::Repository;
use crate::trajectory::{merge_streams, Primitive, PrimitiveSequence};
use crate::turns::{turns_from_stream, TurnEvent};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub stream: SensorStream,
    pub labels: Vec<MovementLabel>,
    pub blocks: Vec<Primitive>,
    pub turns: Vec<TurnEvent>,
    pub sequence: PrimitiveSequence,
}

/// Resample, estimate gravity, detect turns and classify movement, then
/// merge both streams into one sequence.
pub fn run_pipeline(raw: &SensorStream, classifier: &MovementClassifier, cfg: &Config) -> Result<PipelineOutput> {
    let stream = resample(raw, cfg.ingest.rate_hz)?;
    let gravity = estimate_gravity(&stream, &cfg.ingest.gravity)?;
    let turns = turns_from_stream(&stream, &gravity, &cfg.turns)?;
    let labels = classifier.classify(&stream, &gravity)?;
    let blocks = aggregate_5s(&labels);
    let sequence = merge_streams(&blocks, &turns);
    Ok(PipelineOutput { stream, labels, blocks, turns, sequence })
}

/// Run the trajectory gate once per attempt on a finished sequence, with
/// the clock starting at its last primitive.
pub fn gate_sequence(repo: &Repository, verifier_id: &str, seq: &PrimitiveSequence, cfg: &Config) -> Result<GateDecision> {
    let mut clock = SimClock { now_ns: seq.last_t_ns().unwrap_or(0) };
    let mut source = RecordedPath(seq.clone());
    Ok(verify_proximity(repo, verifier_id, &mut source, &mut clock, &cfg.gate, &cfg.scoring)?)
}

/// Rides with frequent stops, so both classes are well represented.
pub fn training_legs<R: Rng>(rng: &mut R, minutes: f64) -> Vec<Leg> {
    let mut legs = vec![Leg::Stop { secs: 10.0 }];
    let mut total = 10.0;
    while total < minutes * 60.0 {
        let secs = rng.random_range(15.0..60.0f64).round();
        legs.push(Leg::Move { secs });
        total += secs;
        let next = if rng.random_bool(0.4) {
            Leg::Stop { secs: rng.random_range(10.0..40.0f64).round() }
        } else {
            let angle = rng.random_range(30.0..180.0f64).round() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Leg::Turn { angle_deg: angle, secs: (angle.abs() / 30.0 + rng.random_range(1.0..2.5)).round() }
        };
        total += next.secs();
        legs.push(next);
    }
    legs
}

/// Feature rows and true labels for one simulated recording.
pub fn labelled_rows(
    legs: &[Leg],
    sim: &ImuSimConfig,
    features: &[Feature],
    cfg: &Config,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<crate::movement::Movement>)> {
    let rec = simulate_recording(legs, sim, seed);
    let stream = resample(&rec.stream, cfg.ingest.rate_hz)?;
    let gravity = estimate_gravity(&stream, &cfg.ingest.gravity)?;
    let truth: HashMap<i64, _> = rec.labels.iter().map(|l| (l.t_ns, l.label)).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for fv in extract_features(&stream, &gravity, features)? {
        if let Some(&label) = truth.get(&fv.t_ns) {
            x.push(fv.values);
            y.push(label);
        }
    }
    Ok((x, y))
}

/// Train the movement classifier on simulated rides.
pub fn train_default_classifier(cfg: &Config, seed: u64) -> Result<(MovementClassifier, CvReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = cfg.movement.features.clone();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for k in 0..4u64 {
        let legs = training_legs(&mut rng, 6.0);
        let (rx, ry) = labelled_rows(&legs, &cfg.simulator, &features, cfg, seed.wrapping_add(k))?;
        x.extend(rx);
        y.extend(ry);
    }
    let names = features.iter().map(|f| f.name().to_string()).collect();
    let lr = crate::movement::LogRegConfig { seed, ..cfg.movement.logreg };
    let (model, report) = train_logreg(&x, &y, names, &lr)?;
    Ok((MovementClassifier::new(features, model, cfg.movement.hmm)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::movement::Movement;
    use crate::path_model::{quantize_legs, random_route};
    use crate::repository::RepositoryConfig;
    use crate::trajectory::Symbol;

    #[test]
    fn default_classifier_recalls_both_classes() {
        let cfg = Config::default();
        let (clf, cv) = train_default_classifier(&cfg, 1).unwrap();
        assert!(cv.m_recall >= 0.95, "{cv:?}");
        assert!(cv.s_recall >= 0.90, "{cv:?}");
        // Held-out ride.
        let legs = training_legs(&mut ChaCha8Rng::seed_from_u64(99), 4.0);
        let (x, y) = labelled_rows(&legs, &cfg.simulator, &clf.features, &cfg, 99).unwrap();
        let correct = x.iter().zip(&y).filter(|(r, l)| clf.model.predict(r).unwrap() == **l).count();
        assert!(correct as f64 / y.len() as f64 > 0.9);
    }

    #[test]
    fn simulated_ride_becomes_its_ideal_sequence() {
        let cfg = Config::default();
        let (clf, _) = train_default_classifier(&cfg, 1).unwrap();
        let legs = vec![
            Leg::Stop { secs: 20.0 },
            Leg::Move { secs: 40.0 },
            Leg::Turn { angle_deg: 90.0, secs: 5.0 },
            Leg::Move { secs: 35.0 },
            Leg::Turn { angle_deg: -90.0, secs: 5.0 },
            Leg::Move { secs: 30.0 },
            Leg::Stop { secs: 25.0 },
        ];
        let rec = simulate_recording(&legs, &cfg.simulator, 5);
        let out = run_pipeline(&rec.stream, &clf, &cfg).unwrap();
        let counts: Vec<(Symbol, u32)> = out.turns.iter().map(|t| (t.direction.symbol(), t.count)).collect();
        assert_eq!(counts, vec![(Symbol::R, 6), (Symbol::L, 6)]);
        let ideal = quantize_legs(&legs, &[]);
        let moving = out.labels.iter().filter(|l| l.label == Movement::Moving).count();
        assert!((moving as i64 - 115).abs() <= 6, "{moving}");
        let score = crate::alignment::nw_score(&ideal.symbols(), &out.sequence.symbols(), &cfg.scoring);
        assert!(score >= ideal.len() as i32 - 6, "{} vs {}", out.sequence.word(), ideal.word());
    }

    #[test]
    fn pipeline_then_gate_is_deterministic() {
        let cfg = Config::default();
        let (clf, _) = train_default_classifier(&cfg, 3).unwrap();
        let legs = random_route(&mut ChaCha8Rng::seed_from_u64(8), 3.0);
        let rec = simulate_recording(&legs, &cfg.simulator, 8);
        let a = run_pipeline(&rec.stream, &clf, &cfg).unwrap();
        let b = run_pipeline(&rec.stream, &clf, &cfg).unwrap();
        assert_eq!(a.sequence.to_text(), b.sequence.to_text());
        let mut repo = Repository::new();
        repo.enroll("v", &quantize_legs(&legs, &[]), 2.0, &RepositoryConfig::default()).unwrap();
        assert_eq!(gate_sequence(&repo, "v", &a.sequence, &cfg).unwrap(), gate_sequence(&repo, "v", &b.sequence, &cfg).unwrap());
    }
}
