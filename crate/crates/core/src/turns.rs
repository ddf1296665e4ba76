//! Turn primitives from gyroscope and gravity.
//!
//! The gyroscope is projected onto the gravity direction to get a yaw rate,
//! low rates are attenuated to suppress drift, and the rate is integrated to
//! a heading. A turn is open while the trailing standard deviation of the
//! heading exceeds `sigma1`; its edges are pushed out to where the
//! deviation falls back under `sigma2`. Each turn contributes
//! `|round(d / granularity)|` copies of `R` (d > 0) or `L` (d < 0).
//!
//! Sign convention: a positive rate about the measured gravity vector (the
//! accelerometer's "up") is a right turn.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{GravityEstimate, SensorStream, NANOS_PER_SEC};
use crate::trajectory::Symbol;
use crate::vec3::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum TurnError {
    #[error("stream length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("stream is empty")]
    EmptyStream,
    #[error("invalid turn detector config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurnDetectorConfig {
    /// Heading deviation that opens a turn (degrees).
    pub sigma1_deg: f64,
    /// Heading deviation that bounds a turn's edges (degrees).
    pub sigma2_deg: f64,
    /// Trailing window for the heading deviation.
    pub window_s: f64,
    pub granularity_deg: f64,
    /// Rates below this are attenuated (degrees/s).
    pub highpass_floor_dps: f64,
    /// Per-axis deviation under which the gyroscope counts as stationary (rad/s).
    pub flatten_std: f64,
    pub flatten_window_s: f64,
    /// Drop turns that overlap samples with an unsettled gravity estimate.
    pub stability_gate: bool,
}

impl Default for TurnDetectorConfig {
    fn default() -> Self {
        TurnDetectorConfig {
            sigma1_deg: 3.0,
            sigma2_deg: 1.0,
            window_s: 2.0,
            granularity_deg: 15.0,
            highpass_floor_dps: 8.6,
            flatten_std: 0.01,
            flatten_window_s: 1.0,
            stability_gate: true,
        }
    }
}

impl TurnDetectorConfig {
    pub fn validate(&self) -> Result<(), TurnError> {
        let bad = |m: &str| Err(TurnError::InvalidConfig(m.to_string()));
        if !(self.sigma2_deg < self.sigma1_deg) {
            return bad("sigma2 must be smaller than sigma1");
        }
        if !(self.sigma2_deg >= 0.0) {
            return bad("sigma2 must be non-negative");
        }
        if !(self.granularity_deg > 0.0) {
            return bad("granularity must be positive");
        }
        if !(self.window_s > 0.0 && self.flatten_window_s > 0.0) {
            return bad("windows must be positive");
        }
        if !(self.highpass_floor_dps > 0.0) {
            return bad("high-pass floor must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnDirection {
    Left,
    Right,
}

impl TurnDirection {
    pub fn symbol(self) -> Symbol {
        match self {
            TurnDirection::Left => Symbol::L,
            TurnDirection::Right => Symbol::R,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEvent {
    pub t_begin_ns: i64,
    pub t_end_ns: i64,
    pub angle_deg: f64,
    pub direction: TurnDirection,
    pub count: u32,
}

impl TurnEvent {
    pub fn symbols(&self) -> Vec<Symbol> {
        vec![self.direction.symbol(); self.count as usize]
    }
}

/// Yaw rate in degrees/s with a per-sample reliability flag.
#[derive(Debug, Clone, PartialEq)]
pub struct YawRate {
    pub t_ns: Vec<i64>,
    pub rate_dps: Vec<f64>,
    pub reliable: Vec<bool>,
}

impl YawRate {
    pub fn new(t_ns: Vec<i64>, rate_dps: Vec<f64>) -> Result<Self, TurnError> {
        if t_ns.len() != rate_dps.len() {
            return Err(TurnError::LengthMismatch { left: t_ns.len(), right: rate_dps.len() });
        }
        let reliable = vec![true; t_ns.len()];
        Ok(YawRate { t_ns, rate_dps, reliable })
    }

    pub fn len(&self) -> usize {
        self.t_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_ns.is_empty()
    }

    pub fn negated(&self) -> YawRate {
        YawRate {
            t_ns: self.t_ns.clone(),
            rate_dps: self.rate_dps.iter().map(|r| -r).collect(),
            reliable: self.reliable.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadingTrace {
    pub t_ns: Vec<i64>,
    pub alpha_deg: Vec<f64>,
    pub rolling_std_deg: Vec<f64>,
    pub reliable: Vec<bool>,
}

impl HeadingTrace {
    pub fn len(&self) -> usize {
        self.t_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_ns.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.t_ns.first(), self.t_ns.last()) {
            (Some(a), Some(b)) => (b - a) as f64 / NANOS_PER_SEC as f64,
            _ => 0.0,
        }
    }
}

/// Mean and population standard deviation over the trailing window
/// `(t_i - window, t_i]` for every sample.
fn trailing_stats(t_ns: &[i64], values: &[f64], window_s: f64) -> Vec<(f64, f64)> {
    let window_ns = (window_s * NANOS_PER_SEC as f64).round() as i64;
    let mut start = 0usize;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        while t_ns[start] <= t_ns[i] - window_ns {
            start += 1;
        }
        let w = &values[start..=i];
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        out.push((mean, var.sqrt()));
    }
    out
}

/// True where a signal is quiet (trailing std under `std_thr`) and slow
/// (trailing mean under `mean_thr` in magnitude).
fn stationary_mask(t_ns: &[i64], values: &[f64], window_s: f64, std_thr: f64, mean_thr: f64) -> Vec<bool> {
    trailing_stats(t_ns, values, window_s)
        .into_iter()
        .map(|(mean, std)| std < std_thr && mean.abs() < mean_thr)
        .collect()
}

/// Zero each raw gyroscope axis (rad/s) wherever that axis is stationary.
pub fn flatten_stationary_axes(stream: &SensorStream, cfg: &TurnDetectorConfig) -> Vec<Vec3> {
    let t = stream.timestamps();
    let gyro: Vec<Vec3> = stream.gyro().collect();
    let floor_rad = cfg.highpass_floor_dps.to_radians();
    let axis = |f: fn(&Vec3) -> f64| {
        let v: Vec<f64> = gyro.iter().map(f).collect();
        stationary_mask(&t, &v, cfg.flatten_window_s, cfg.flatten_std, floor_rad)
    };
    let (mx, my, mz) = (axis(|v| v.x), axis(|v| v.y), axis(|v| v.z));
    gyro.iter()
        .enumerate()
        .map(|(i, g)| {
            Vec3::new(
                if mx[i] { 0.0 } else { g.x },
                if my[i] { 0.0 } else { g.y },
                if mz[i] { 0.0 } else { g.z },
            )
        })
        .collect()
}

/// Yaw rate = gyro · unit(gravity), converted to degrees/s. Samples whose
/// gravity estimate is unsettled are marked unreliable.
pub fn project_to_ground(
    t_ns: &[i64],
    gyro: &[Vec3],
    gravity: &GravityEstimate,
) -> Result<YawRate, TurnError> {
    if gyro.len() != gravity.len() {
        return Err(TurnError::LengthMismatch { left: gyro.len(), right: gravity.len() });
    }
    if t_ns.len() != gyro.len() {
        return Err(TurnError::LengthMismatch { left: t_ns.len(), right: gyro.len() });
    }
    let mut rate = Vec::with_capacity(gyro.len());
    let mut reliable = Vec::with_capacity(gyro.len());
    for ((g, up), &stable) in gyro.iter().zip(&gravity.gravity).zip(&gravity.stable) {
        match up.normalized() {
            Some(u) => {
                rate.push(g.dot(u).to_degrees());
                reliable.push(stable);
            }
            None => {
                rate.push(0.0);
                reliable.push(false);
            }
        }
    }
    Ok(YawRate { t_ns: t_ns.to_vec(), rate_dps: rate, reliable })
}

/// Soft high-pass: rates under the floor are scaled by
/// `exp(|r| / floor - 1)`, which is 1 at the floor and `1/e` at zero.
pub fn attenuate(rate_dps: f64, floor_dps: f64) -> f64 {
    let m = rate_dps.abs();
    if m >= floor_dps {
        rate_dps
    } else {
        rate_dps * (m / floor_dps - 1.0).exp()
    }
}

/// Attenuate slow rates, zero stationary stretches (where the yaw rate is
/// both quiet and slow) and unreliable samples.
pub fn condition_gyro(yaw: &YawRate, cfg: &TurnDetectorConfig) -> YawRate {
    let rad: Vec<f64> = yaw.rate_dps.iter().map(|r| r.to_radians()).collect();
    let still = stationary_mask(
        &yaw.t_ns,
        &rad,
        cfg.flatten_window_s,
        cfg.flatten_std,
        cfg.highpass_floor_dps.to_radians(),
    );
    let rate_dps = yaw
        .rate_dps
        .iter()
        .zip(&still)
        .zip(&yaw.reliable)
        .map(|((&r, &s), &ok)| if s || !ok { 0.0 } else { attenuate(r, cfg.highpass_floor_dps) })
        .collect();
    YawRate { t_ns: yaw.t_ns.clone(), rate_dps, reliable: yaw.reliable.clone() }
}

/// Rectangle-rule integration starting from a zero heading; unreliable
/// samples contribute nothing.
pub fn integrate_heading(yaw: &YawRate, cfg: &TurnDetectorConfig) -> Result<HeadingTrace, TurnError> {
    if yaw.is_empty() {
        return Err(TurnError::EmptyStream);
    }
    let mut alpha = Vec::with_capacity(yaw.len());
    alpha.push(0.0);
    for i in 1..yaw.len() {
        let dt = (yaw.t_ns[i] - yaw.t_ns[i - 1]) as f64 / NANOS_PER_SEC as f64;
        let r = if yaw.reliable[i] { yaw.rate_dps[i] } else { 0.0 };
        alpha.push(alpha[i - 1] + r * dt);
    }
    let rolling_std_deg = trailing_stats(&yaw.t_ns, &alpha, cfg.window_s)
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    Ok(HeadingTrace {
        t_ns: yaw.t_ns.clone(),
        alpha_deg: alpha,
        rolling_std_deg,
        reliable: yaw.reliable.clone(),
    })
}

/// Maximal index runs where `pred` holds.
fn runs(len: usize, pred: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < len {
        if pred(i) {
            let start = i;
            while i + 1 < len && pred(i + 1) {
                i += 1;
            }
            out.push((start, i));
        }
        i += 1;
    }
    out
}

pub fn detect_turns(trace: &HeadingTrace, cfg: &TurnDetectorConfig) -> Vec<TurnEvent> {
    let n = trace.len();
    if n < 2 || trace.duration_s() < cfg.window_s {
        return Vec::new();
    }
    let std = &trace.rolling_std_deg;
    let cores = runs(n, |i| std[i] > cfg.sigma1_deg);
    let edges = runs(n, |i| std[i] > cfg.sigma2_deg);

    // Index intervals [begin, end], one per core.
    let mut intervals: Vec<(usize, usize)> = Vec::new();
    for &(lo, hi) in &edges {
        let inner: Vec<(usize, usize)> =
            cores.iter().copied().filter(|&(a, _)| a >= lo && a <= hi).collect();
        if inner.is_empty() {
            continue;
        }
        // Outer edges sit on the first quiet sample on either side.
        let mut begin = lo.saturating_sub(1);
        for k in 0..inner.len() {
            let end = if k + 1 < inner.len() {
                // Adjacent turns share a deviation run: cut at its minimum.
                let (from, to) = (inner[k].1, inner[k + 1].0);
                (from..=to)
                    .min_by(|&a, &b| std[a].total_cmp(&std[b]))
                    .unwrap_or(from)
            } else {
                (hi + 1).min(n - 1)
            };
            intervals.push((begin, end));
            begin = end;
        }
    }

    intervals
        .into_iter()
        .filter(|&(b, e)| b < e)
        .filter(|&(b, e)| !cfg.stability_gate || trace.reliable[b..=e].iter().all(|&r| r))
        .filter_map(|(b, e)| {
            let d = trace.alpha_deg[e] - trace.alpha_deg[b];
            let count = (d / cfg.granularity_deg).round().abs() as u32;
            if count == 0 {
                return None;
            }
            Some(TurnEvent {
                t_begin_ns: trace.t_ns[b],
                t_end_ns: trace.t_ns[e],
                angle_deg: d,
                direction: if d > 0.0 { TurnDirection::Right } else { TurnDirection::Left },
                count,
            })
        })
        .collect()
}

/// Condition, integrate and detect on an already-projected yaw rate.
pub fn turns_from_yaw(yaw: &YawRate, cfg: &TurnDetectorConfig) -> Result<Vec<TurnEvent>, TurnError> {
    cfg.validate()?;
    let conditioned = condition_gyro(yaw, cfg);
    let trace = integrate_heading(&conditioned, cfg)?;
    Ok(detect_turns(&trace, cfg))
}

/// Full turn pipeline on a resampled stream and its gravity estimate.
pub fn turns_from_stream(
    stream: &SensorStream,
    gravity: &GravityEstimate,
    cfg: &TurnDetectorConfig,
) -> Result<Vec<TurnEvent>, TurnError> {
    if stream.is_empty() {
        return Ok(Vec::new());
    }
    let gyro = flatten_stationary_axes(stream, cfg);
    let yaw = project_to_ground(&stream.timestamps(), &gyro, gravity)?;
    turns_from_yaw(&yaw, cfg)
}
