//! FAR/FRR statistics over synthetic corpora: leave-one-route-out initial
//! thresholds, sweeps over length, instance count, alpha and scheme.

mod report;

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{emit_report, read_rows, read_summary, summary_path, ReportRow, SummaryRow};

use crate::alignment::{nw_score, pairwise_matrix, ScoringScheme};
use crate::path_model::{fit_markov, sample_path, Corpus, MarkovChain, PathModelError};
use crate::repository::select_medoid;
use crate::threshold::{local_threshold, mixed_threshold, AffineRow, ThresholdError, ThresholdScheme};
use crate::trajectory::{prepare_candidate, Symbol};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("score set is empty")]
    EmptyScores,
    #[error("need at least 2 routes, got {0}")]
    TooFewRoutes(usize),
    #[error("sweep needs {needed} instances per route, corpus has {have}")]
    InsufficientInstances { needed: usize, have: usize },
    #[error("regression needs at least two distinct lengths")]
    DegenerateDesign,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    PathModel(#[from] PathModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reference path lengths used to fit initial thresholds, in minutes.
pub const FIT_LENGTHS: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
pub const ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Fraction of between-scores above `threshold` and of within-scores at
/// or below it.
pub fn far_frr(within: &[i32], between: &[i32], threshold: f64) -> Result<(f64, f64), EvalError> {
    if within.is_empty() || between.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    Ok(crate::threshold::error_rates(within, between, threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerPoint {
    pub threshold: i32,
    pub far: f64,
    pub frr: f64,
}

impl EerPoint {
    pub fn rate(&self) -> f64 {
        (self.far + self.frr) / 2.0
    }
}

/// Integer threshold with the smallest `|FAR - FRR|`, lowest on ties.
pub fn equal_error(within: &[i32], between: &[i32]) -> Result<EerPoint, EvalError> {
    if within.is_empty() || between.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let all = within.iter().chain(between);
    let lo = all.clone().min().copied().unwrap_or(0) - 1;
    let hi = all.max().copied().unwrap_or(0);
    let mut best: Option<EerPoint> = None;
    for t in lo..=hi {
        let (far, frr) = crate::threshold::error_rates(within, between, t as f64);
        if best.is_none_or(|b| (far - frr).abs() < (b.far - b.frr).abs()) {
            best = Some(EerPoint { threshold: t, far, frr });
        }
    }
    Ok(best.expect("range is non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; 0 when either variable is constant.
    pub r: f64,
}

impl LineFit {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit, EvalError> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(EvalError::DegenerateDesign);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * n {
        return Err(EvalError::DegenerateDesign);
    }
    let slope = sxy / sxx;
    let r = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept: my - slope * mx, r })
}

/// Within and between scores pooled over several routes at one length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PooledScores {
    pub length_min: f64,
    pub within: Vec<i32>,
    pub between: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    pub alpha: f64,
    pub fit: LineFit,
    /// `(L, d_L)` pairs the line was fit to.
    pub points: Vec<(f64, i32)>,
}

impl CoefficientFit {
    pub fn row(&self) -> AffineRow {
        AffineRow { alpha: self.alpha, slope: self.fit.slope, intercept: self.fit.intercept }
    }
}

/// For each alpha, the combined-error minimiser at every length, then a
/// line through those points.
pub fn fit_initial_coefficients(pooled: &[PooledScores], alphas: &[f64]) -> Result<Vec<CoefficientFit>, EvalError> {
    let mut lengths: Vec<f64> = pooled.iter().map(|p| p.length_min).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    if lengths.len() < 2 {
        return Err(EvalError::DegenerateDesign);
    }
    alphas
        .iter()
        .map(|&alpha| {
            let points = pooled
                .iter()
                .map(|p| Ok((p.length_min, local_threshold(&p.within, &p.between, alpha)?)))
                .collect::<Result<Vec<_>, ThresholdError>>()?;
            let xy: Vec<(f64, f64)> = points.iter().map(|&(l, d)| (l, d as f64)).collect();
            Ok(CoefficientFit { alpha, fit: fit_line(&xy)?, points })
        })
        .collect()
}

/// All corpus instances prepared at one length, with their pairwise scores.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub length_min: f64,
    /// Route index of each instance.
    pub owner: Vec<usize>,
    pub sequences: Vec<Vec<Symbol>>,
    pub matrix: Vec<Vec<i32>>,
    ranges: Vec<std::ops::Range<usize>>,
}

impl ScoreTable {
    pub fn new(corpus: &Corpus, length_min: f64, scheme: &ScoringScheme) -> Self {
        let mut owner = Vec::new();
        let mut sequences = Vec::new();
        let mut ranges = Vec::new();
        for (r, route) in corpus.routes.iter().enumerate() {
            let start = sequences.len();
            for inst in &route.instances {
                owner.push(r);
                sequences.push(prepare_candidate(inst, length_min).symbols());
            }
            ranges.push(start..sequences.len());
        }
        let matrix = pairwise_matrix(&sequences, scheme);
        ScoreTable { length_min, owner, sequences, matrix, ranges }
    }

    pub fn n_routes(&self) -> usize {
        self.ranges.len()
    }

    pub fn instances_of(&self, route: usize) -> std::ops::Range<usize> {
        self.ranges[route].clone()
    }

    /// Scores of all unordered pairs of the route's instances.
    pub fn within(&self, route: usize) -> Vec<i32> {
        let r = self.instances_of(route);
        r.clone().flat_map(|i| (i + 1..r.end).map(move |j| (i, j))).map(|(i, j)| self.matrix[i][j]).collect()
    }

    /// Scores of the route's instances against every other route's.
    pub fn between(&self, route: usize) -> Vec<i32> {
        self.instances_of(route)
            .flat_map(|i| (0..self.owner.len()).filter(move |&j| self.owner[j] != route).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[i][j])
            .collect()
    }

    /// Pooled raw scores over a set of routes: within pairs of each route
    /// and between pairs whose routes are both in the set.
    pub fn pooled(&self, routes: &[usize]) -> PooledScores {
        let mut member = vec![false; self.n_routes()];
        for &r in routes {
            member[r] = true;
        }
        let mut within = Vec::new();
        let mut between = Vec::new();
        for i in 0..self.owner.len() {
            if !member[self.owner[i]] {
                continue;
            }
            for j in i + 1..self.owner.len() {
                if !member[self.owner[j]] {
                    continue;
                }
                if self.owner[i] == self.owner[j] {
                    within.push(self.matrix[i][j]);
                } else {
                    between.push(self.matrix[i][j]);
                }
            }
        }
        PooledScores { length_min: self.length_min, within, between }
    }

    pub fn pooled_all(&self) -> PooledScores {
        self.pooled(&(0..self.n_routes()).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RouteRates {
    pub route: usize,
    pub false_accepts: usize,
    pub impostor_trials: usize,
    pub false_rejects: usize,
    pub genuine_trials: usize,
}

impl RouteRates {
    pub fn far(&self) -> f64 {
        ratio(self.false_accepts, self.impostor_trials)
    }

    pub fn frr(&self) -> f64 {
        ratio(self.false_rejects, self.genuine_trials)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Initial threshold for one held-out route, fit on the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteFit {
    pub route: usize,
    pub fit: CoefficientFit,
    pub threshold: i32,
    pub rates: RouteRates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Length,
    NInstances,
    Alpha,
    Scheme,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length" => Ok(SweepAxis::Length),
            "instances" | "n_instances" => Ok(SweepAxis::NInstances),
            "alpha" => Ok(SweepAxis::Alpha),
            "scheme" => Ok(SweepAxis::Scheme),
            _ => Err(format!("unknown sweep axis `{s}`")),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Length => "length",
            SweepAxis::NInstances => "n_instances",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Scheme => "scheme",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: f64,
    pub length_min: f64,
    /// Instance count for the scheme axis.
    pub n_instances: usize,
    /// Largest instance count for the instance axis; defaults to all but one.
    pub max_instances: Option<usize>,
    pub max_combinations: usize,
    pub between_samples: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alpha: 0.5,
            length_min: 2.0,
            n_instances: 5,
            max_instances: None,
            max_combinations: 500,
            between_samples: 200,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_far: f64,
    pub std_far: f64,
    pub median_far: f64,
    pub mean_frr: f64,
    pub std_frr: f64,
    pub median_frr: f64,
}

impl Summary {
    pub fn of(routes: &[RouteRates]) -> Self {
        let far: Vec<f64> = routes.iter().map(RouteRates::far).collect();
        let frr: Vec<f64> = routes.iter().map(RouteRates::frr).collect();
        Summary {
            mean_far: mean(&far),
            std_far: sample_std(&far),
            median_far: median(&far),
            mean_frr: mean(&frr),
            std_frr: sample_std(&frr),
            median_frr: median(&frr),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub axis: SweepAxis,
    pub length_min: f64,
    pub n_instances: usize,
    pub alpha: f64,
    pub scheme: ThresholdScheme,
    pub routes: Vec<RouteRates>,
    pub pooled_far: f64,
    pub pooled_frr: f64,
    /// Equal error rate of the pooled raw scores at this length.
    pub eer: f64,
    pub summary: Summary,
}

impl EvalReport {
    fn new(
        axis: SweepAxis,
        length_min: f64,
        n_instances: usize,
        alpha: f64,
        scheme: ThresholdScheme,
        routes: Vec<RouteRates>,
        eer: f64,
    ) -> Self {
        let sum = |f: fn(&RouteRates) -> usize| routes.iter().map(f).sum::<usize>();
        let pooled_far = ratio(sum(|r| r.false_accepts), sum(|r| r.impostor_trials));
        let pooled_frr = ratio(sum(|r| r.false_rejects), sum(|r| r.genuine_trials));
        let summary = Summary::of(&routes);
        EvalReport { axis, length_min, n_instances, alpha, scheme, routes, pooled_far, pooled_frr, eer, summary }
    }
}

/// Score tables for every length an evaluation needs, built once.
pub struct Evaluator<'a> {
    corpus: &'a Corpus,
    scheme: ScoringScheme,
    tables: Vec<ScoreTable>,
}

impl<'a> Evaluator<'a> {
    pub fn new(corpus: &'a Corpus, scheme: ScoringScheme) -> Result<Self, EvalError> {
        if corpus.routes.len() < 2 {
            return Err(EvalError::TooFewRoutes(corpus.routes.len()));
        }
        let tables = FIT_LENGTHS.iter().map(|&l| ScoreTable::new(corpus, l, &scheme)).collect();
        Ok(Evaluator { corpus, scheme, tables })
    }

    pub fn table(&mut self, length_min: f64) -> &ScoreTable {
        let idx = match self.tables.iter().position(|t| t.length_min == length_min) {
            Some(i) => i,
            None => {
                self.tables.push(ScoreTable::new(self.corpus, length_min, &self.scheme));
                self.tables.len() - 1
            }
        };
        &self.tables[idx]
    }

    fn table_ref(&self, length_min: f64) -> &ScoreTable {
        self.tables.iter().find(|t| t.length_min == length_min).expect("table prepared")
    }

    fn fit_tables(&self) -> &[ScoreTable] {
        &self.tables[..FIT_LENGTHS.len()]
    }

    fn instances_per_route(&self) -> usize {
        self.corpus.routes.iter().map(|r| r.instances.len()).min().unwrap_or(0)
    }

    /// Fit the initial threshold line on all routes but `held_out`.
    pub fn fit_without(&self, held_out: usize, alpha: f64) -> Result<CoefficientFit, EvalError> {
        let train: Vec<usize> = (0..self.corpus.routes.len()).filter(|&r| r != held_out).collect();
        let pooled: Vec<PooledScores> = self.fit_tables().iter().map(|t| t.pooled(&train)).collect();
        Ok(fit_initial_coefficients(&pooled, &[alpha])?.remove(0))
    }

    /// Held-out initial thresholds at `length_min`, with single-instance
    /// test rates for each route.
    pub fn leave_one_route_out(&mut self, alpha: f64, length_min: f64) -> Result<Vec<RouteFit>, EvalError> {
        self.table(length_min);
        let this = &*self;
        (0..this.corpus.routes.len())
            .into_par_iter()
            .map(|h| {
                let fit = this.fit_without(h, alpha)?;
                let threshold = fit.fit.at(length_min).round() as i32;
                let t = this.table_ref(length_min);
                let within = t.within(h);
                let between = t.between(h);
                let rates = RouteRates {
                    route: h,
                    false_accepts: between.iter().filter(|&&s| s > threshold).count(),
                    impostor_trials: between.len(),
                    false_rejects: within.iter().filter(|&&s| s <= threshold).count(),
                    genuine_trials: within.len(),
                };
                Ok(RouteFit { route: h, fit, threshold, rates })
            })
            .collect()
    }

    fn pooled_eer(&mut self, length_min: f64) -> Result<f64, EvalError> {
        let p = self.table(length_min).pooled_all();
        Ok(equal_error(&p.within, &p.between)?.rate())
    }

    /// Rates with `n` reference instances per route under one scheme.
    ///
    /// Reference sets are all `n`-subsets of a route's instances, or a
    /// seeded sample of `max_combinations` of them. The medoid of each set
    /// is scored against the remaining instances (genuine) and against
    /// every other route's instances (impostor).
    pub fn instance_rates(
        &mut self,
        n: usize,
        scheme: ThresholdScheme,
        cfg: &SweepConfig,
    ) -> Result<Vec<RouteRates>, EvalError> {
        let have = self.instances_per_route();
        if n == 0 || n >= have {
            return Err(EvalError::InsufficientInstances { needed: n + 1, have });
        }
        let d_i: Vec<f64> = self
            .leave_one_route_out(cfg.alpha, cfg.length_min)?
            .iter()
            .map(|f| f.threshold as f64)
            .collect();
        let this = &*self;
        let t = this.table_ref(cfg.length_min);
        (0..t.n_routes())
            .into_par_iter()
            .map(|h| this.route_instance_rates(t, h, n, scheme, d_i[h], cfg))
            .collect()
    }

    fn route_instance_rates(
        &self,
        t: &ScoreTable,
        h: usize,
        n: usize,
        scheme: ThresholdScheme,
        d_i: f64,
        cfg: &SweepConfig,
    ) -> Result<RouteRates, EvalError> {
        let own: Vec<usize> = t.instances_of(h).collect();
        let others: Vec<usize> = (0..t.owner.len()).filter(|&j| t.owner[j] != h).collect();
        let combos = reference_sets(own.len(), n, cfg.max_combinations, mix(cfg.seed, h as u64, n as u64));
        let needs_local = n >= 2 && scheme != ThresholdScheme::Initial;
        let chain = if needs_local {
            let seqs: Vec<&Vec<Symbol>> = others.iter().map(|&j| &t.sequences[j]).collect();
            Some(fit_markov(&seqs)?)
        } else {
            None
        };
        let mut between_cache: HashMap<usize, Vec<i32>> = HashMap::new();
        let mut rates = RouteRates { route: h, ..Default::default() };
        for combo in combos {
            let train: Vec<usize> = combo.iter().map(|&k| own[k]).collect();
            let sub: Vec<Vec<i32>> = train.iter().map(|&a| train.iter().map(|&b| t.matrix[a][b]).collect()).collect();
            let medoid = train[select_medoid(&sub)];
            let d_l = match &chain {
                Some(chain) => {
                    let within: Vec<i32> = (0..train.len())
                        .flat_map(|a| (a + 1..train.len()).map(move |b| (a, b)))
                        .map(|(a, b)| sub[a][b])
                        .collect();
                    let between = between_cache.entry(medoid).or_insert_with(|| {
                        markov_between(chain, &t.sequences[medoid], cfg.between_samples, mix(cfg.seed, h as u64, medoid as u64), &self.scheme)
                    });
                    Some(local_threshold(&within, between, cfg.alpha)? as f64)
                }
                None => None,
            };
            let d = match scheme {
                ThresholdScheme::Initial => d_i,
                ThresholdScheme::Local => d_l.unwrap_or(d_i),
                ThresholdScheme::Mixed => mixed_threshold(d_i, d_l, n as u64)?,
            };
            for &c in own.iter().filter(|c| !train.contains(c)) {
                rates.genuine_trials += 1;
                if t.matrix[medoid][c] as f64 <= d {
                    rates.false_rejects += 1;
                }
            }
            for &o in &others {
                rates.impostor_trials += 1;
                if t.matrix[medoid][o] as f64 > d {
                    rates.false_accepts += 1;
                }
            }
        }
        Ok(rates)
    }

    /// One report per value of the chosen axis.
    pub fn sweep(&mut self, axis: SweepAxis, cfg: &SweepConfig) -> Result<Vec<EvalReport>, EvalError> {
        let single = |fits: Vec<RouteFit>| fits.into_iter().map(|f| f.rates).collect::<Vec<_>>();
        let mut out = Vec::new();
        match axis {
            SweepAxis::Length => {
                for &l in &FIT_LENGTHS {
                    let routes = single(self.leave_one_route_out(cfg.alpha, l)?);
                    let eer = self.pooled_eer(l)?;
                    out.push(EvalReport::new(axis, l, 1, cfg.alpha, ThresholdScheme::Initial, routes, eer));
                }
            }
            SweepAxis::Alpha => {
                let eer = self.pooled_eer(cfg.length_min)?;
                for &a in &ALPHAS {
                    let routes = single(self.leave_one_route_out(a, cfg.length_min)?);
                    out.push(EvalReport::new(axis, cfg.length_min, 1, a, ThresholdScheme::Initial, routes, eer));
                }
            }
            SweepAxis::NInstances => {
                let have = self.instances_per_route();
                let max = cfg.max_instances.unwrap_or(have.saturating_sub(1));
                if max == 0 || max >= have {
                    return Err(EvalError::InsufficientInstances { needed: max + 1, have });
                }
                let eer = self.pooled_eer(cfg.length_min)?;
                for n in 1..=max {
                    for scheme in [ThresholdScheme::Initial, ThresholdScheme::Local, ThresholdScheme::Mixed] {
                        let routes = self.instance_rates(n, scheme, cfg)?;
                        out.push(EvalReport::new(axis, cfg.length_min, n, cfg.alpha, scheme, routes, eer));
                    }
                }
            }
            SweepAxis::Scheme => {
                let eer = self.pooled_eer(cfg.length_min)?;
                for scheme in [ThresholdScheme::Initial, ThresholdScheme::Local, ThresholdScheme::Mixed] {
                    let routes = self.instance_rates(cfg.n_instances, scheme, cfg)?;
                    out.push(EvalReport::new(axis, cfg.length_min, cfg.n_instances, cfg.alpha, scheme, routes, eer));
                }
            }
        }
        Ok(out)
    }
}

/// Leave-one-route-out initial thresholds at the default 2-minute length.
pub fn leave_one_route_out(corpus: &Corpus, alpha: f64) -> Result<Vec<RouteFit>, EvalError> {
    Evaluator::new(corpus, ScoringScheme::default())?.leave_one_route_out(alpha, 2.0)
}

pub fn sweep(corpus: &Corpus, axis: SweepAxis, cfg: &SweepConfig) -> Result<Vec<EvalReport>, EvalError> {
    Evaluator::new(corpus, ScoringScheme::default())?.sweep(axis, cfg)
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in lexicographic order, or `cap` seeded random
/// ones when there are more than `cap`.
fn reference_sets(n: usize, k: usize, cap: usize, seed: u64) -> Vec<Vec<usize>> {
    if binomial(n, k) > cap as u128 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return (0..cap)
            .map(|_| {
                let mut s = sample(&mut rng, n, k).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn markov_between(chain: &MarkovChain, medoid: &[Symbol], samples: usize, seed: u64, scheme: &ScoringScheme) -> Vec<i32> {
    (0..samples as u64)
        .map(|k| nw_score(medoid, &sample_path(chain, medoid.len(), seed.wrapping_add(k)), scheme))
        .collect()
}
