//! Synthetic routes and noisy instances standing in for recorded data.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PathModelError;
use crate::alignment::{nw_score, ScoringScheme};
use crate::ingest::NANOS_PER_SEC;
use crate::movement::{aggregate_5s, label_seconds, Movement};
use crate::threshold::{initial_threshold, DEFAULT_ALPHA};
use crate::trajectory::{merge_streams, prepare_candidate, Primitive, PrimitiveSequence, Symbol};
use crate::turns::{TurnDirection, TurnEvent};

/// Extra time a detected turn stays open after the rotation stops.
pub const DETECTOR_LAG_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Leg {
    Move { secs: f64 },
    Turn { angle_deg: f64, secs: f64 },
    Stop { secs: f64 },
}

impl Leg {
    pub fn secs(&self) -> f64 {
        match *self {
            Leg::Move { secs } | Leg::Turn { secs, .. } | Leg::Stop { secs } => secs,
        }
    }

    pub fn is_moving(&self) -> bool {
        !matches!(self, Leg::Stop { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub p_drop: f64,
    pub p_insert: f64,
    pub turn_jitter_deg: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p_drop: 0.05, p_insert: 0.03, turn_jitter_deg: 5.0 }
    }
}

impl NoiseModel {
    pub fn zero() -> Self {
        NoiseModel { p_drop: 0.0, p_insert: 0.0, turn_jitter_deg: 0.0 }
    }

    pub fn validate(&self) -> Result<(), PathModelError> {
        let p = |x: f64| (0.0..1.0).contains(&x);
        if !p(self.p_drop) || !p(self.p_insert) || !(self.turn_jitter_deg >= 0.0) {
            return Err(PathModelError::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_routes: usize,
    pub instances_per_route: usize,
    pub route_length_min: f64,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Ground truths trimmed to this many minutes must score below the
    /// initial threshold for that length.
    pub distinct_length_min: f64,
    pub max_attempts: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_routes: 20,
            instances_per_route: 8,
            route_length_min: 8.0,
            noise: NoiseModel::default(),
            seed: 42,
            distinct_length_min: 2.0,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRoute {
    pub id: usize,
    pub legs: Vec<Leg>,
    pub ground_truth: PrimitiveSequence,
    pub instances: Vec<PrimitiveSequence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub config: CorpusConfig,
    pub routes: Vec<SyntheticRoute>,
}

const TURN_ANGLES: [(f64, f64); 6] = [(90.0, 0.5), (45.0, 0.15), (30.0, 0.1), (135.0, 0.1), (60.0, 0.1), (180.0, 0.05)];

/// Random legs totalling at least `length_min` minutes. Every route starts
/// with a short stop so sensor filters can settle.
pub fn random_route<R: Rng>(rng: &mut R, length_min: f64) -> Vec<Leg> {
    let target = length_min * 60.0;
    let mut legs = vec![Leg::Stop { secs: 10.0 }];
    let mut total = 10.0;
    while total < target {
        let secs = rng.random_range(8.0..45.0f64).round();
        legs.push(Leg::Move { secs });
        total += secs;
        if total >= target {
            break;
        }
        let leg = if rng.random_bool(0.15) {
            Leg::Stop { secs: rng.random_range(6.0..30.0f64).round() }
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut angle = 90.0;
            for (a, p) in TURN_ANGLES {
                acc += p;
                if u < acc {
                    angle = a;
                    break;
                }
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let secs = (angle / 30.0 + rng.random_range(1.0..2.5f64)).round();
            Leg::Turn { angle_deg: sign * angle, secs }
        };
        total += leg.secs();
        legs.push(leg);
    }
    legs
}

fn to_ns(s: f64) -> i64 {
    (s * NANOS_PER_SEC as f64).round() as i64
}

/// Ideal primitives for a list of legs, with each turn angle perturbed by
/// `jitter` (in order) before quantisation.
pub fn quantize_legs(legs: &[Leg], jitter: &[f64]) -> PrimitiveSequence {
    let total: f64 = legs.iter().map(Leg::secs).sum();
    let seconds = total.floor() as usize;
    let mut labels = Vec::with_capacity(seconds);
    let mut turns = Vec::new();
    let mut start = 0.0;
    let mut bounds = Vec::with_capacity(legs.len());
    let mut k = 0;
    for leg in legs {
        bounds.push((start, start + leg.secs(), leg.is_moving()));
        if let Leg::Turn { angle_deg, secs } = *leg {
            let d = angle_deg + jitter.get(k).copied().unwrap_or(0.0);
            k += 1;
            let count = (d / 15.0).round().abs() as u32;
            if count > 0 {
                turns.push(TurnEvent {
                    t_begin_ns: to_ns(start),
                    t_end_ns: to_ns(start + secs + DETECTOR_LAG_S),
                    angle_deg: d,
                    direction: if d > 0.0 { TurnDirection::Right } else { TurnDirection::Left },
                    count,
                });
            }
        }
        start += leg.secs();
    }
    for s in 0..seconds {
        let mid = s as f64 + 0.5;
        let moving = bounds.iter().find(|b| mid >= b.0 && mid < b.1).is_none_or(|b| b.2);
        labels.push(if moving { Movement::Moving } else { Movement::Stationary });
    }
    let blocks = aggregate_5s(&label_seconds(0, &labels));
    merge_streams(&blocks, &turns)
}

fn turn_count(legs: &[Leg]) -> usize {
    legs.iter().filter(|l| matches!(l, Leg::Turn { .. })).count()
}

/// One noisy observation of a route.
pub fn noisy_instance<R: Rng>(legs: &[Leg], noise: &NoiseModel, rng: &mut R) -> PrimitiveSequence {
    let jitter: Vec<f64> = if noise.turn_jitter_deg > 0.0 {
        let n = Normal::new(0.0, noise.turn_jitter_deg).expect("finite jitter");
        (0..turn_count(legs)).map(|_| n.sample(rng)).collect()
    } else {
        Vec::new()
    };
    let base = quantize_legs(legs, &jitter);
    let p = base.primitives();
    let mut out: Vec<Primitive> = Vec::with_capacity(p.len() + 4);
    for i in 0..=p.len() {
        if noise.p_insert > 0.0 && rng.random_bool(noise.p_insert) {
            let t = out.last().map(|q| q.t_ns).or(p.get(i).map(|q| q.t_ns)).unwrap_or(0);
            let symbol = [Symbol::M, Symbol::L, Symbol::R][rng.random_range(0..3)];
            out.push(Primitive::new(symbol, t));
        }
        if let Some(&q) = p.get(i) {
            if !(noise.p_drop > 0.0 && rng.random_bool(noise.p_drop)) {
                out.push(q);
            }
        }
    }
    PrimitiveSequence::new(out).expect("insertions keep time order")
}

fn route_rng(seed: u64, route: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(route as u64);
    rng
}

fn instance_rng(seed: u64, route: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_1457_a9ce);
    rng.set_stream(route as u64);
    rng
}

/// Generate routes one at a time, rejecting any whose trimmed ground truth
/// is too similar to an accepted one, then perturb instances in parallel.
pub fn synthesize_corpus(cfg: &CorpusConfig) -> Result<Corpus, PathModelError> {
    cfg.noise.validate()?;
    if cfg.n_routes == 0 || cfg.instances_per_route == 0 || !(cfg.route_length_min > 0.0) {
        return Err(PathModelError::InvalidParameter("counts and length must be positive".into()));
    }
    let scheme = ScoringScheme::default();
    let limit = initial_threshold(cfg.distinct_length_min, DEFAULT_ALPHA)
        .map_err(|e| PathModelError::InvalidParameter(e.to_string()))?;
    let mut accepted: Vec<(Vec<Leg>, PrimitiveSequence, Vec<Symbol>)> = Vec::new();
    let mut attempts = 0;
    for k in 0..cfg.n_routes {
        let mut rng = route_rng(cfg.seed, k);
        loop {
            attempts += 1;
            if attempts > cfg.max_attempts {
                return Err(PathModelError::RejectionExhausted { wanted: cfg.n_routes, attempts: cfg.max_attempts });
            }
            let legs = random_route(&mut rng, cfg.route_length_min);
            let truth = quantize_legs(&legs, &[]);
            let key = prepare_candidate(&truth, cfg.distinct_length_min).symbols();
            if accepted.iter().all(|(_, _, other)| nw_score(&key, other, &scheme) < limit) {
                accepted.push((legs, truth, key));
                break;
            }
        }
    }
    let routes = accepted
        .into_par_iter()
        .enumerate()
        .map(|(id, (legs, ground_truth, _))| {
            let mut rng = instance_rng(cfg.seed, id);
            let instances = (0..cfg.instances_per_route).map(|_| noisy_instance(&legs, &cfg.noise, &mut rng)).collect();
            SyntheticRoute { id, legs, ground_truth, instances }
        })
        .collect();
    Ok(Corpus { config: *cfg, routes })
}

impl Corpus {
    pub const MANIFEST: &'static str = "corpus.json";

    /// Writes `corpus.json` plus one text file per sequence.
    pub fn save_dir(&self, dir: &Path) -> Result<(), PathModelError> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| PathModelError::Corpus(e.to_string()))?;
        std::fs::write(dir.join(Self::MANIFEST), json)?;
        for r in &self.routes {
            let rd = dir.join(format!("route_{:03}", r.id));
            std::fs::create_dir_all(&rd)?;
            r.ground_truth.save(&rd.join("truth.seq"))?;
            for (i, inst) in r.instances.iter().enumerate() {
                inst.save(&rd.join(format!("instance_{i:03}.seq")))?;
            }
        }
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self, PathModelError> {
        let text = std::fs::read_to_string(dir.join(Self::MANIFEST))?;
        serde_json::from_str(&text).map_err(|e| PathModelError::Corpus(e.to_string()))
    }
}
