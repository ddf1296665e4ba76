//! Decision thresholds: initial (affine in path length), local (fitted to
//! observed scores) and mixed (confidence-weighted blend of the two).
//!
//! A candidate is accepted only when its score is strictly greater than
//! the threshold.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("alpha {0} is outside the tabulated range")]
    UnknownAlpha(f64),
    #[error("path length must be positive, got {0}")]
    InvalidLength(f64),
    #[error("score set is empty")]
    EmptyScores,
    #[error("instance count must be at least 1")]
    InvalidCount,
    #[error("bad threshold table: {0}")]
    BadTable(String),
}

pub const DEFAULT_ALPHA: f64 = 0.5;

const TABLE_CSV: &str = include_str!("../data/initial_thresholds.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineRow {
    pub alpha: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl AffineRow {
    pub fn at(&self, length_min: f64) -> f64 {
        self.slope * length_min + self.intercept
    }
}

/// Affine initial-threshold coefficients per alpha, sorted by alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialThresholdTable {
    rows: Vec<AffineRow>,
}

impl Default for InitialThresholdTable {
    fn default() -> Self {
        Self::from_csv(TABLE_CSV).expect("built-in threshold table parses")
    }
}

impl InitialThresholdTable {
    pub fn new(mut rows: Vec<AffineRow>) -> Result<Self, ThresholdError> {
        if rows.is_empty() {
            return Err(ThresholdError::BadTable("no rows".into()));
        }
        if rows.iter().any(|r| !(r.alpha.is_finite() && r.slope.is_finite() && r.intercept.is_finite())) {
            return Err(ThresholdError::BadTable("non-finite entry".into()));
        }
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        if rows.windows(2).any(|w| w[0].alpha == w[1].alpha) {
            return Err(ThresholdError::BadTable("duplicate alpha".into()));
        }
        Ok(InitialThresholdTable { rows })
    }

    pub fn from_csv(text: &str) -> Result<Self, ThresholdError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<AffineRow>, _>>()
            .map_err(|e| ThresholdError::BadTable(e.to_string()))?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[AffineRow] {
        &self.rows
    }

    /// Coefficients at `alpha`, linearly interpolated between rows.
    pub fn row(&self, alpha: f64) -> Result<AffineRow, ThresholdError> {
        let rows = &self.rows;
        if let Some(r) = rows.iter().find(|r| r.alpha == alpha) {
            return Ok(*r);
        }
        let hi = rows.iter().position(|r| r.alpha > alpha).ok_or(ThresholdError::UnknownAlpha(alpha))?;
        if hi == 0 || !alpha.is_finite() {
            return Err(ThresholdError::UnknownAlpha(alpha));
        }
        let (a, b) = (rows[hi - 1], rows[hi]);
        let w = (alpha - a.alpha) / (b.alpha - a.alpha);
        Ok(AffineRow {
            alpha,
            slope: a.slope + w * (b.slope - a.slope),
            intercept: a.intercept + w * (b.intercept - a.intercept),
        })
    }

    /// `round(slope * L + intercept)` for a path of `length_min` minutes.
    pub fn initial_threshold(&self, length_min: f64, alpha: f64) -> Result<i32, ThresholdError> {
        if !(length_min > 0.0) || !length_min.is_finite() {
            return Err(ThresholdError::InvalidLength(length_min));
        }
        Ok(self.row(alpha)?.at(length_min).round() as i32)
    }
}

/// Initial threshold from the built-in table.
pub fn initial_threshold(length_min: f64, alpha: f64) -> Result<i32, ThresholdError> {
    InitialThresholdTable::default().initial_threshold(length_min, alpha)
}

/// Fraction of between-scores accepted (`> t`) and of within-scores
/// rejected (`<= t`).
pub fn error_rates(within: &[i32], between: &[i32], t: f64) -> (f64, f64) {
    let far = between.iter().filter(|&&s| s as f64 > t).count() as f64 / between.len() as f64;
    let frr = within.iter().filter(|&&s| s as f64 <= t).count() as f64 / within.len() as f64;
    (far, frr)
}

pub fn combined_error(within: &[i32], between: &[i32], t: f64, alpha: f64) -> f64 {
    let (far, frr) = error_rates(within, between, t);
    alpha * frr + (1.0 - alpha) * far
}

/// Integer threshold minimising `alpha * FRR + (1 - alpha) * FAR`.
///
/// Candidates run from one below the smallest score to the largest score;
/// outside that range both rates are constant. Among minimisers the longest
/// contiguous run wins (lowest run on ties) and its midpoint, rounded
/// down, is returned.
pub fn local_threshold(within: &[i32], between: &[i32], alpha: f64) -> Result<i32, ThresholdError> {
    if within.is_empty() || between.is_empty() {
        return Err(ThresholdError::EmptyScores);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ThresholdError::UnknownAlpha(alpha));
    }
    let all = within.iter().chain(between);
    let lo = all.clone().min().copied().unwrap_or(0) - 1;
    let hi = all.max().copied().unwrap_or(0);
    let costs: Vec<(i32, f64)> = (lo..=hi).map(|t| (t, combined_error(within, between, t as f64, alpha))).collect();
    let best = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-12;

    let mut best_run: Option<(i32, i32)> = None;
    let mut run: Option<(i32, i32)> = None;
    for &(t, c) in &costs {
        if c <= best + tol {
            run = Some(match run {
                Some((s, _)) => (s, t),
                None => (t, t),
            });
        } else {
            run = None;
        }
        if let Some((s, e)) = run {
            if best_run.map_or(true, |(bs, be)| e - s > be - bs) {
                best_run = Some((s, e));
            }
        }
    }
    let (s, e) = best_run.expect("scan range is non-empty");
    Ok((s + e).div_euclid(2))
}

/// Confidence factor `(n - 1) / n`.
pub fn confidence_factor(n: u64) -> Result<f64, ThresholdError> {
    let r = confidence_ratio(n)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

/// Exact confidence factor.
pub fn confidence_ratio(n: u64) -> Result<Ratio<u64>, ThresholdError> {
    if n < 1 {
        return Err(ThresholdError::InvalidCount);
    }
    Ok(Ratio::new(n - 1, n))
}

/// `lambda * d_l + (1 - lambda) * d_i`, or `d_i` without a local threshold.
/// The result stays real-valued.
pub fn mixed_threshold(d_i: f64, d_l: Option<f64>, n: u64) -> Result<f64, ThresholdError> {
    let lambda = confidence_factor(n)?;
    let Some(d_l) = d_l else {
        return Ok(d_i);
    };
    let d = lambda * d_l + (1.0 - lambda) * d_i;
    // Guard against rounding outside the convex hull.
    Ok(d.clamp(d_i.min(d_l), d_i.max(d_l)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub d_i: f64,
    pub d_l: Option<f64>,
    pub n: u64,
    pub lambda: f64,
    pub d: f64,
}

impl ThresholdState {
    pub fn initial(d_i: f64) -> Self {
        ThresholdState { d_i, d_l: None, n: 1, lambda: 0.0, d: d_i }
    }

    pub fn with(d_i: f64, d_l: Option<f64>, n: u64) -> Result<Self, ThresholdError> {
        Ok(ThresholdState { d_i, d_l, n, lambda: confidence_factor(n)?, d: mixed_threshold(d_i, d_l, n)? })
    }

    pub fn accepts(&self, score: i32) -> bool {
        score as f64 > self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdScheme {
    Initial,
    Local,
    Mixed,
}

impl std::str::FromStr for ThresholdScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "initial" => Ok(ThresholdScheme::Initial),
            "local" => Ok(ThresholdScheme::Local),
            "mixed" => Ok(ThresholdScheme::Mixed),
            _ => Err(format!("unknown threshold scheme `{s}`")),
        }
    }
}

impl std::fmt::Display for ThresholdScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThresholdScheme::Initial => "initial",
            ThresholdScheme::Local => "local",
            ThresholdScheme::Mixed => "mixed",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Scan every integer in a wide range and return the centre of the
    /// widest run of exact minimisers.
    fn scan_oracle(within: &[i32], between: &[i32], alpha: f64) -> i32 {
        let ts: Vec<i32> = (-200..=200).collect();
        let cost = |t: i32| {
            let fa = between.iter().filter(|&&s| s > t).count() as f64 / between.len() as f64;
            let fr = within.iter().filter(|&&s| s <= t).count() as f64 / within.len() as f64;
            alpha * fr + (1.0 - alpha) * fa
        };
        let min = ts.iter().map(|&t| cost(t)).fold(f64::INFINITY, f64::min);
        let mut runs: Vec<(i32, i32)> = Vec::new();
        for &t in &ts {
            if (cost(t) - min).abs() <= 1e-12 {
                match runs.last_mut() {
                    Some((_, e)) if *e == t - 1 => *e = t,
                    _ => runs.push((t, t)),
                }
            }
        }
        // Runs touching the scan edge extend forever; clip them to the data.
        let lo = within.iter().chain(between).min().unwrap() - 1;
        let hi = *within.iter().chain(between).max().unwrap();
        let clipped: Vec<(i32, i32)> =
            runs.into_iter().map(|(s, e)| (s.max(lo), e.min(hi))).filter(|(s, e)| s <= e).collect();
        let best = clipped.iter().fold(None::<(i32, i32)>, |acc, &r| match acc {
            Some(a) if a.1 - a.0 >= r.1 - r.0 => Some(a),
            _ => Some(r),
        });
        let (s, e) = best.unwrap();
        (s + e).div_euclid(2)
    }

    #[test]
    fn table_rows() {
        let t = InitialThresholdTable::default();
        assert_eq!(t.rows().len(), 9);
        let r = t.row(0.5).unwrap();
        assert_eq!((r.slope, r.intercept), (9.686, -1.4));
        let mid = t.row(0.45).unwrap();
        assert!((mid.slope - (9.543 + 9.686) / 2.0).abs() < 1e-9);
        assert!(matches!(t.row(0.95), Err(ThresholdError::UnknownAlpha(_))));
        assert!(matches!(t.row(0.05), Err(ThresholdError::UnknownAlpha(_))));
    }

    #[test]
    fn initial_values() {
        assert_eq!(initial_threshold(1.0, 0.5), Ok(8));
        assert_eq!(initial_threshold(2.0, 0.5), Ok(18));
        assert_eq!(initial_threshold(5.0, 0.5), Ok(47));
        assert!(matches!(initial_threshold(0.0, 0.5), Err(ThresholdError::InvalidLength(_))));
        assert!(matches!(initial_threshold(2.0, 1.5), Err(ThresholdError::UnknownAlpha(_))));
    }

    #[test]
    fn local_examples() {
        assert_eq!(local_threshold(&[20, 21, 22], &[5, 6, 7], 0.5), Ok(13));
        assert_eq!(scan_oracle(&[20, 21, 22], &[5, 6, 7], 0.5), 13);
        let w = [18, 19, 21];
        let b = [17, 18, 20];
        assert_eq!(local_threshold(&w, &b, 0.5).unwrap(), scan_oracle(&w, &b, 0.5));
        let same = [10, 12, 15];
        let t = local_threshold(&same, &same, 0.5).unwrap();
        assert!(combined_error(&same, &same, t as f64, 0.5) >= 0.5 - 1e-12);
        assert_eq!(t, scan_oracle(&same, &same, 0.5));
        assert_eq!(local_threshold(&[], &[1], 0.5), Err(ThresholdError::EmptyScores));
    }

    #[test]
    fn confidence_examples() {
        assert_eq!(confidence_factor(1), Ok(0.0));
        assert_eq!(confidence_factor(2), Ok(0.5));
        assert_eq!(confidence_factor(5), Ok(0.8));
        assert_eq!(confidence_factor(0), Err(ThresholdError::InvalidCount));
        for n in 1..=1000u64 {
            let one = Ratio::from_integer(1u64);
            assert_eq!(one - confidence_ratio(2 * n).unwrap(), (one - confidence_ratio(n).unwrap()) / 2);
        }
    }

    #[test]
    fn mixed_examples() {
        assert_eq!(mixed_threshold(18.0, Some(30.0), 1), Ok(18.0));
        assert_eq!(mixed_threshold(18.0, None, 4), Ok(18.0));
        assert_eq!(mixed_threshold(18.0, Some(14.0), 2), Ok(16.0));
        assert!((mixed_threshold(18.0, Some(22.0), 5).unwrap() - 21.2).abs() < 1e-12);
        let s = ThresholdState::with(18.0, Some(14.0), 2).unwrap();
        assert!(s.accepts(17) && !s.accepts(16));
    }

    #[test]
    fn scheme_names() {
        for s in [ThresholdScheme::Initial, ThresholdScheme::Local, ThresholdScheme::Mixed] {
            assert_eq!(s.to_string().parse::<ThresholdScheme>().unwrap(), s);
        }
    }

    fn scores() -> impl Strategy<Value = Vec<i32>> {
        prop::collection::vec(-30i32..60, 1..25)
    }

    proptest! {
        #[test]
        fn local_matches_scan(w in scores(), b in scores(), a in 1u32..10) {
            let alpha = a as f64 / 10.0;
            prop_assert_eq!(local_threshold(&w, &b, alpha).unwrap(), scan_oracle(&w, &b, alpha));
        }

        #[test]
        fn local_ignores_order(mut w in scores(), mut b in scores()) {
            let t = local_threshold(&w, &b, 0.5).unwrap();
            w.reverse();
            b.sort();
            prop_assert_eq!(local_threshold(&w, &b, 0.5).unwrap(), t);
        }

        #[test]
        fn mixed_is_convex(d_i in -50.0f64..80.0, d_l in -50.0f64..80.0, n in 1u64..500) {
            let d = mixed_threshold(d_i, Some(d_l), n).unwrap();
            prop_assert!(d >= d_i.min(d_l) && d <= d_i.max(d_l));
        }

        #[test]
        fn higher_within_never_raises_frr(w in scores(), b in scores(), extra in 0i32..40) {
            let t = local_threshold(&w, &b, 0.5).unwrap();
            let (_, before) = error_rates(&w, &b, t as f64);
            let mut w2 = w.clone();
            w2.push(t + 1 + extra);
            let (_, after) = error_rates(&w2, &b, t as f64);
            prop_assert!(after <= before);
        }
    }
}
