//! First-order Markov chain over `M`/`L`/`R`, plus synthetic corpora.

mod corpus;
pub mod imu_sim;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{
    noisy_instance, quantize_legs, random_route, synthesize_corpus, Corpus, CorpusConfig, Leg, NoiseModel, SyntheticRoute,
    DETECTOR_LAG_S,
};

use crate::trajectory::Symbol;

#[derive(Debug, Error)]
pub enum PathModelError {
    #[error("no non-empty sequence to fit")]
    EmptyCorpus,
    #[error("could not find {wanted} distinct routes after {attempts} attempts")]
    RejectionExhausted { wanted: usize, attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("corpus file: {0}")]
    Corpus(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trajectory(#[from] crate::trajectory::TrajectoryError),
}

pub const STATES: [Symbol; 3] = [Symbol::M, Symbol::L, Symbol::R];

fn state_index(s: Symbol) -> Option<usize> {
    STATES.iter().position(|&x| x == s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    /// `transition[from][to]` over `STATES`.
    pub transition: [[f64; 3]; 3],
    pub initial: [f64; 3],
}

impl MarkovChain {
    pub fn new(transition: [[f64; 3]; 3], initial: [f64; 3]) -> Result<Self, PathModelError> {
        let ok = |row: &[f64; 3]| row.iter().all(|p| (0.0..=1.0).contains(p)) && (row.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if !transition.iter().all(ok) || !ok(&initial) {
            return Err(PathModelError::InvalidParameter("rows must be distributions".into()));
        }
        Ok(MarkovChain { transition, initial })
    }

    pub fn probability(&self, from: Symbol, to: Symbol) -> f64 {
        match (state_index(from), state_index(to)) {
            (Some(i), Some(j)) => self.transition[i][j],
            _ => 0.0,
        }
    }

    /// Stationary distribution by power iteration.
    pub fn stationary(&self) -> [f64; 3] {
        let mut p = [1.0 / 3.0; 3];
        for _ in 0..10_000 {
            let mut next = [0.0; 3];
            for (i, pi) in p.iter().enumerate() {
                for (j, n) in next.iter_mut().enumerate() {
                    *n += pi * self.transition[i][j];
                }
            }
            let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
            p = next;
            if delta < 1e-15 {
                break;
            }
        }
        p
    }
}

/// Add-one smoothed transition and start counts. `S` symbols are ignored.
pub fn fit_markov<S: AsRef<[Symbol]>>(sequences: &[S]) -> Result<MarkovChain, PathModelError> {
    let mut trans = [[1.0f64; 3]; 3];
    let mut init = [1.0f64; 3];
    let mut any = false;
    for seq in sequences {
        let idx: Vec<usize> = seq.as_ref().iter().filter_map(|&s| state_index(s)).collect();
        let Some(&first) = idx.first() else {
            continue;
        };
        any = true;
        init[first] += 1.0;
        for w in idx.windows(2) {
            trans[w[0]][w[1]] += 1.0;
        }
    }
    if !any {
        return Err(PathModelError::EmptyCorpus);
    }
    for row in trans.iter_mut() {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    let total: f64 = init.iter().sum();
    init.iter_mut().for_each(|p| *p /= total);
    Ok(MarkovChain { transition: trans, initial: init })
}

fn draw<R: Rng>(rng: &mut R, dist: &[f64; 3]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn sample_path_with<R: Rng>(chain: &MarkovChain, length: usize, rng: &mut R) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut s = draw(rng, &chain.initial);
    out.push(STATES[s]);
    for _ in 1..length {
        s = draw(rng, &chain.transition[s]);
        out.push(STATES[s]);
    }
    out
}

pub fn sample_path(chain: &MarkovChain, length: usize, seed: u64) -> Vec<Symbol> {
    sample_path_with(chain, length, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn known_chain() -> MarkovChain {
        MarkovChain::new([[0.7, 0.1, 0.2], [0.5, 0.4, 0.1], [0.3, 0.1, 0.6]], [0.6, 0.2, 0.2]).unwrap()
    }

    #[test]
    fn hand_counted_fit() {
        let c = fit_markov(&[Symbol::parse_word("MMMM").unwrap()]).unwrap();
        assert!((c.probability(Symbol::M, Symbol::M) - 4.0 / 6.0).abs() < 1e-12);
        assert!(c.probability(Symbol::M, Symbol::L) > 0.0);
        assert!(c.probability(Symbol::L, Symbol::R) > 0.0);
        assert!(matches!(fit_markov::<Vec<Symbol>>(&[vec![]]), Err(PathModelError::EmptyCorpus)));
        assert!(matches!(fit_markov::<Vec<Symbol>>(&[]), Err(PathModelError::EmptyCorpus)));
    }

    #[test]
    fn absorbing_chain() {
        let c = MarkovChain::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(sample_path(&c, 50, 9), vec![Symbol::M; 50]);
        assert!(sample_path(&c, 0, 9).is_empty());
    }

    #[test]
    fn seeded_sampling() {
        let c = known_chain();
        assert_eq!(sample_path(&c, 100, 3), sample_path(&c, 100, 3));
        assert_ne!(sample_path(&c, 100, 3), sample_path(&c, 100, 4));
    }

    #[test]
    fn empirical_transitions_converge() {
        let c = known_chain();
        let path = sample_path(&c, 10_000, 21);
        let mut counts = [[0.0f64; 3]; 3];
        for w in path.windows(2) {
            counts[state_index(w[0]).unwrap()][state_index(w[1]).unwrap()] += 1.0;
        }
        for i in 0..3 {
            let total: f64 = counts[i].iter().sum();
            for j in 0..3 {
                assert!((counts[i][j] / total - c.transition[i][j]).abs() < 0.02);
            }
        }
        let pi = c.stationary();
        for (k, s) in STATES.iter().enumerate() {
            let f = path.iter().filter(|&&x| x == *s).count() as f64 / path.len() as f64;
            assert!((f - pi[k]).abs() < 0.02);
        }
    }

    #[test]
    fn fit_recovers_chain() {
        let c = known_chain();
        let fitted = fit_markov(&[sample_path(&c, 50_000, 8)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((fitted.transition[i][j] - c.transition[i][j]).abs() < 0.02);
            }
        }
    }

    proptest! {
        #[test]
        fn rows_are_distributions(words in prop::collection::vec("[MSLR]{0,40}", 1..8)) {
            let seqs: Vec<Vec<Symbol>> = words.iter().map(|w| Symbol::parse_word(w).unwrap()).collect();
            if let Ok(c) = fit_markov(&seqs) {
                for row in c.transition.iter().chain(std::iter::once(&c.initial)) {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    prop_assert!(row.iter().all(|&p| p > 0.0));
                }
            } else {
                prop_assert!(seqs.iter().all(|s| s.iter().all(|&x| x == Symbol::S)));
            }
        }
    }
}
