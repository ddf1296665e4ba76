//! Global Needleman-Wunsch similarity over primitive symbols.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trajectory::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringScheme {
    #[serde(rename = "match")]
    pub match_score: i32,
    pub mismatch: i32,
    pub gap: i32,
}

impl Default for ScoringScheme {
    fn default() -> Self {
        ScoringScheme { match_score: 1, mismatch: -2, gap: -1 }
    }
}

impl ScoringScheme {
    pub fn pair(&self, a: Symbol, b: Symbol) -> i32 {
        if a == b {
            self.match_score
        } else {
            self.mismatch
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: i32,
    pub len_a: usize,
    pub len_b: usize,
}

/// Optimal global alignment score in `O(|a||b|)` time and `O(min)` space.
pub fn needleman_wunsch(a: &[Symbol], b: &[Symbol], scheme: &ScoringScheme) -> SimilarityScore {
    SimilarityScore { value: nw_score(a, b, scheme), len_a: a.len(), len_b: b.len() }
}

pub fn nw_score(a: &[Symbol], b: &[Symbol], scheme: &ScoringScheme) -> i32 {
    // Keep the shorter sequence along the row.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let gap = scheme.gap;
    let mut row: Vec<i32> = (0..=short.len() as i32).map(|j| j * gap).collect();
    for (i, &x) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = (i as i32 + 1) * gap;
        for (j, &y) in short.iter().enumerate() {
            let up = row[j + 1];
            let best = (diag + scheme.pair(x, y)).max(up + gap).max(row[j] + gap);
            diag = up;
            row[j + 1] = best;
        }
    }
    row[short.len()]
}

/// Symmetric matrix of pairwise scores, computed in parallel.
pub fn pairwise_matrix(seqs: &[Vec<Symbol>], scheme: &ScoringScheme) -> Vec<Vec<i32>> {
    let n = seqs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let scores: Vec<i32> = pairs
        .par_iter()
        .map(|&(i, j)| nw_score(&seqs[i], &seqs[j], scheme))
        .collect();
    let mut m = vec![vec![0; n]; n];
    for (&(i, j), &s) in pairs.iter().zip(&scores) {
        m[i][j] = s;
        m[j][i] = s;
    }
    m
}
