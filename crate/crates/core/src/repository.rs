//! Enrolled reference paths per verifier, with medoid selection and
//! threshold updates on confirmation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::alignment::{nw_score, pairwise_matrix, ScoringScheme};
use crate::path_model::{fit_markov, sample_path, MarkovChain, PathModelError};
use crate::threshold::{initial_threshold, local_threshold, ThresholdError, ThresholdState, DEFAULT_ALPHA};
use crate::trajectory::{prepare_candidate, PrimitiveSequence, Symbol};

pub const REPOSITORY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("sequence is empty after trimming and removing stationary symbols")]
    EmptySequence,
    #[error("no reference path for verifier `{0}`")]
    NoReferencePath(String),
    #[error("repository version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt repository file: {0}")]
    CorruptFile(String),
    #[error("reference path index {index} out of range for `{verifier_id}`")]
    BadIndex { verifier_id: String, index: usize },
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    PathModel(#[from] PathModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepositoryConfig {
    pub alpha: f64,
    /// Markov-generated impostor paths per local threshold update.
    pub between_samples: usize,
    pub scheme: ScoringScheme,
}

impl Default for RepositoryConfig {
    fn default() -> Self {
        RepositoryConfig { alpha: DEFAULT_ALPHA, between_samples: 200, scheme: ScoringScheme::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    pub verifier_id: String,
    pub length_min: f64,
    /// Stored trimmed and without `S`.
    pub instances: Vec<PrimitiveSequence>,
    pub medoid_index: usize,
    pub threshold: ThresholdState,
}

impl ReferencePath {
    pub fn medoid(&self) -> &PrimitiveSequence {
        &self.instances[self.medoid_index]
    }

    pub fn n(&self) -> usize {
        self.instances.len()
    }

    /// Score a raw candidate against the medoid after trimming it to this
    /// path's length and removing `S`.
    pub fn score(&self, candidate: &PrimitiveSequence, scheme: &ScoringScheme) -> i32 {
        let c = prepare_candidate(candidate, self.length_min);
        nw_score(&self.medoid().symbols(), &c.symbols(), scheme)
    }

    pub fn accepts(&self, candidate: &PrimitiveSequence, scheme: &ScoringScheme) -> (i32, bool) {
        let s = self.score(candidate, scheme);
        (s, self.threshold.accepts(s))
    }
}

/// Row with the largest off-diagonal sum; the lowest index wins ties.
pub fn select_medoid(matrix: &[Vec<i32>]) -> usize {
    let mut best = 0;
    let mut best_sum = i64::MIN;
    for (i, row) in matrix.iter().enumerate() {
        let s: i64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v as i64).sum();
        if s > best_sum {
            best = i;
            best_sum = s;
        }
    }
    best
}

/// Seed for the impostor sample of one update, stable across platforms.
pub fn update_seed(verifier_id: &str, path_index: usize, n: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(verifier_id.as_bytes());
    h.update((path_index as u64).to_le_bytes());
    h.update((n as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Within-class scores (all instance pairs) and medoid, from a matrix.
fn within_scores(matrix: &[Vec<i32>]) -> Vec<i32> {
    let n = matrix.len();
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| matrix[i][j]).collect()
}

/// Append a candidate, reselect the medoid and refresh the thresholds.
///
/// Impostor scores compare the medoid with `between_samples` paths drawn
/// from `chain`, each as long as the medoid.
pub fn confirm_and_update(
    path: &ReferencePath,
    path_index: usize,
    candidate: &PrimitiveSequence,
    chain: &MarkovChain,
    cfg: &RepositoryConfig,
) -> Result<ReferencePath, RepositoryError> {
    let prepared = prepare_candidate(candidate, path.length_min);
    if prepared.is_empty() {
        return Err(RepositoryError::EmptySequence);
    }
    let mut instances = path.instances.clone();
    instances.push(prepared);
    rebuild(&path.verifier_id, path.length_min, path.threshold.d_i, instances, path_index, chain, cfg)
}

fn rebuild(
    verifier_id: &str,
    length_min: f64,
    d_i: f64,
    instances: Vec<PrimitiveSequence>,
    path_index: usize,
    chain: &MarkovChain,
    cfg: &RepositoryConfig,
) -> Result<ReferencePath, RepositoryError> {
    let symbols: Vec<Vec<Symbol>> = instances.iter().map(|s| s.symbols()).collect();
    let matrix = pairwise_matrix(&symbols, &cfg.scheme);
    let medoid_index = select_medoid(&matrix);
    let n = instances.len();
    let threshold = if n < 2 {
        ThresholdState::initial(d_i)
    } else {
        let within = within_scores(&matrix);
        let medoid = &symbols[medoid_index];
        let seed = update_seed(verifier_id, path_index, n);
        let between: Vec<i32> = (0..cfg.between_samples.max(1) as u64)
            .map(|k| nw_score(medoid, &sample_path(chain, medoid.len(), seed.wrapping_add(k)), &cfg.scheme))
            .collect();
        let d_l = local_threshold(&within, &between, cfg.alpha)? as f64;
        ThresholdState::with(d_i, Some(d_l), n as u64)?
    };
    Ok(ReferencePath { verifier_id: verifier_id.to_string(), length_min, instances, medoid_index, threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repository {
    pub version: u32,
    pub paths: BTreeMap<String, Vec<ReferencePath>>,
}

impl Default for Repository {
    fn default() -> Self {
        Repository { version: REPOSITORY_VERSION, paths: BTreeMap::new() }
    }
}

impl Repository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn paths_for(&self, verifier_id: &str) -> &[ReferencePath] {
        self.paths.get(verifier_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every stored instance, for fitting the impostor model.
    pub fn all_instances(&self) -> Vec<Vec<Symbol>> {
        self.paths.values().flatten().flat_map(|p| p.instances.iter().map(|s| s.symbols())).collect()
    }

    fn chain_with(&self, extra: &PrimitiveSequence) -> Result<MarkovChain, RepositoryError> {
        let mut all = self.all_instances();
        all.push(extra.symbols());
        Ok(fit_markov(&all)?)
    }

    /// Best-scoring reference path of `length_min` for a raw candidate.
    pub fn best_match(
        &self,
        verifier_id: &str,
        candidate: &PrimitiveSequence,
        scheme: &ScoringScheme,
    ) -> Option<(usize, i32, bool)> {
        self.paths_for(verifier_id)
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (s, ok) = p.accepts(candidate, scheme);
                (i, s, ok)
            })
            .fold(None, |best, cur| match best {
                Some(b) if (b.2, b.1) >= (cur.2, cur.1) => Some(b),
                _ => Some(cur),
            })
    }

    /// Enroll a sequence for a verifier. If it passes an existing path of the
    /// same length it becomes another instance of that path; otherwise it
    /// starts a new path with the initial threshold. Returns the path index.
    pub fn enroll(
        &mut self,
        verifier_id: &str,
        sequence: &PrimitiveSequence,
        length_min: f64,
        cfg: &RepositoryConfig,
    ) -> Result<usize, RepositoryError> {
        let prepared = prepare_candidate(sequence, length_min);
        if prepared.is_empty() {
            return Err(RepositoryError::EmptySequence);
        }
        let passing = self
            .paths_for(verifier_id)
            .iter()
            .enumerate()
            .filter(|(_, p)| p.length_min == length_min)
            .map(|(i, p)| (i, p.accepts(&prepared, &cfg.scheme)))
            .filter(|(_, (_, ok))| *ok)
            .max_by_key(|&(i, (s, _))| (s, std::cmp::Reverse(i)));
        if let Some((idx, _)) = passing {
            self.confirm(verifier_id, idx, &prepared, cfg)?;
            return Ok(idx);
        }
        let d_i = initial_threshold(length_min, cfg.alpha)? as f64;
        let path = ReferencePath {
            verifier_id: verifier_id.to_string(),
            length_min,
            instances: vec![prepared],
            medoid_index: 0,
            threshold: ThresholdState::initial(d_i),
        };
        let list = self.paths.entry(verifier_id.to_string()).or_default();
        list.push(path);
        Ok(list.len() - 1)
    }

    /// Add a confirmed candidate to one reference path.
    pub fn confirm(
        &mut self,
        verifier_id: &str,
        index: usize,
        candidate: &PrimitiveSequence,
        cfg: &RepositoryConfig,
    ) -> Result<&ReferencePath, RepositoryError> {
        let path = self
            .paths_for(verifier_id)
            .get(index)
            .ok_or_else(|| RepositoryError::BadIndex { verifier_id: verifier_id.to_string(), index })?;
        let prepared = prepare_candidate(candidate, path.length_min);
        let chain = self.chain_with(&prepared)?;
        let updated = confirm_and_update(path, index, &prepared, &chain, cfg)?;
        let slot = &mut self.paths.get_mut(verifier_id).expect("checked above")[index];
        *slot = updated;
        Ok(slot)
    }

    /// Confirm a candidate against the best-matching path, or enroll it as a
    /// new path when the verifier has none of this length.
    pub fn confirm_best(
        &mut self,
        verifier_id: &str,
        candidate: &PrimitiveSequence,
        length_min: f64,
        cfg: &RepositoryConfig,
    ) -> Result<usize, RepositoryError> {
        let best = self
            .paths_for(verifier_id)
            .iter()
            .enumerate()
            .filter(|(_, p)| p.length_min == length_min)
            .map(|(i, p)| (i, p.score(candidate, &cfg.scheme)))
            .max_by_key(|&(i, s)| (s, std::cmp::Reverse(i)));
        match best {
            Some((i, _)) => {
                self.confirm(verifier_id, i, candidate, cfg)?;
                Ok(i)
            }
            None => self.enroll(verifier_id, candidate, length_min, cfg),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("repository serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, RepositoryError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RepositoryError::CorruptFile(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| RepositoryError::CorruptFile("missing version".into()))?;
        if version != REPOSITORY_VERSION as u64 {
            return Err(RepositoryError::VersionMismatch { found: version as u32, expected: REPOSITORY_VERSION });
        }
        serde_json::from_value(value).map_err(|e| RepositoryError::CorruptFile(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), RepositoryError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RepositoryError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Load, or start empty when the file does not exist.
    pub fn load_or_default(path: &Path) -> Result<Self, RepositoryError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::NANOS_PER_SEC;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(word: &str) -> PrimitiveSequence {
        PrimitiveSequence::from_symbols(&Symbol::parse_word(word).unwrap(), 0, NANOS_PER_SEC)
    }

    fn long_route(seed: u64) -> PrimitiveSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: String = (0..40).map(|_| ['M', 'M', 'L', 'R', 'S'][rng.random_range(0..5)]).collect();
        seq(&w)
    }

    fn brute_medoid(m: &[Vec<i32>]) -> usize {
        let sums: Vec<i64> = (0..m.len()).map(|i| (0..m.len()).filter(|&j| j != i).map(|j| m[i][j] as i64).sum()).collect();
        let max = *sums.iter().max().unwrap();
        sums.iter().position(|&s| s == max).unwrap()
    }

    #[test]
    fn medoid_examples() {
        assert_eq!(select_medoid(&[vec![5]]), 0);
        let m = vec![vec![9, 6, 1], vec![6, 9, 6], vec![1, 6, 9]];
        assert_eq!(select_medoid(&m), 1);
        assert_eq!(select_medoid(&vec![vec![4; 4]; 4]), 0);
    }

    #[test]
    fn first_enrollment() {
        let mut repo = Repository::new();
        let cfg = RepositoryConfig::default();
        let i = repo.enroll("door", &long_route(1), 2.0, &cfg).unwrap();
        let p = &repo.paths_for("door")[i];
        assert_eq!(p.n(), 1);
        assert_eq!(p.threshold.lambda, 0.0);
        assert_eq!(p.threshold.d, 18.0);
        assert_eq!(p.threshold.d_i, 18.0);
        assert!(matches!(repo.enroll("door", &seq("SSS"), 2.0, &cfg), Err(RepositoryError::EmptySequence)));
    }

    #[test]
    fn enrolling_the_same_route_twice() {
        let mut repo = Repository::new();
        let cfg = RepositoryConfig::default();
        let r = long_route(2);
        repo.enroll("door", &r, 2.0, &cfg).unwrap();
        repo.enroll("door", &r, 2.0, &cfg).unwrap();
        let p = &repo.paths_for("door")[0];
        assert_eq!(repo.paths_for("door").len(), 1);
        assert_eq!(p.n(), 2);
        let len = p.instances[0].len() as i32;
        assert_eq!(nw_score(&p.instances[0].symbols(), &p.instances[1].symbols(), &cfg.scheme), len);
    }

    #[test]
    fn confirmations_track_lambda() {
        let mut repo = Repository::new();
        let cfg = RepositoryConfig::default();
        repo.enroll("gate", &long_route(3), 2.0, &cfg).unwrap();
        for k in 0..4 {
            let before = repo.paths_for("gate")[0].n();
            let p = repo.confirm("gate", 0, &long_route(10 + k), &cfg).unwrap();
            assert_eq!(p.n(), before + 1);
            let t = &p.threshold;
            let d_l = t.d_l.unwrap();
            assert!(t.d >= t.d_i.min(d_l) && t.d <= t.d_i.max(d_l));
        }
        assert_eq!(repo.paths_for("gate")[0].threshold.lambda, 0.8);
    }

    #[test]
    fn replay_reproduces_state() {
        let cfg = RepositoryConfig::default();
        let build = || {
            let mut repo = Repository::new();
            repo.enroll("v", &long_route(4), 2.0, &cfg).unwrap();
            for k in 0..3 {
                repo.confirm("v", 0, &long_route(20 + k), &cfg).unwrap();
            }
            repo
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn persistence() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("repo.json");
        let empty = Repository::new();
        empty.save(&f).unwrap();
        assert_eq!(Repository::load(&f).unwrap(), empty);

        let mut repo = Repository::new();
        let cfg = RepositoryConfig::default();
        repo.enroll("a", &long_route(5), 2.0, &cfg).unwrap();
        repo.confirm("a", 0, &long_route(6), &cfg).unwrap();
        repo.enroll("b", &long_route(7), 1.0, &cfg).unwrap();
        repo.save(&f).unwrap();
        assert_eq!(Repository::load(&f).unwrap(), repo);

        let text = repo.to_json();
        assert!(matches!(Repository::from_json(&text[..text.len() / 2]), Err(RepositoryError::CorruptFile(_))));
        let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(Repository::from_json(&bumped), Err(RepositoryError::VersionMismatch { found: 99, .. })));
    }

    #[test]
    fn medoid_only_scoring() {
        let mut repo = Repository::new();
        let cfg = RepositoryConfig::default();
        let r = long_route(8);
        repo.enroll("v", &r, 2.0, &cfg).unwrap();
        let p = &repo.paths_for("v")[0];
        let (score, ok) = p.accepts(&r, &cfg.scheme);
        assert_eq!(score, p.medoid().len() as i32);
        assert!(ok);
        let (score, ok) = p.accepts(&PrimitiveSequence::empty(), &cfg.scheme);
        assert_eq!(score, -(p.medoid().len() as i32));
        assert!(!ok);
    }

    proptest! {
        #[test]
        fn medoid_matches_brute_force(n in 1usize..=10, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = vec![vec![0i32; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.random_range(-5..6);
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
            prop_assert_eq!(select_medoid(&m), brute_medoid(&m));
        }
    }
}
