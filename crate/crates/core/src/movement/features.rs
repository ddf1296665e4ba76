//! Per-second feature vectors over trailing 1 s and 5 s windows.
//!
//! All features use the magnitude of the 3-vectors unless the name says
//! otherwise. Second `k` covers samples `[k*r, (k+1)*r)` at rate `r`; the
//! long window is the five seconds ending with it, clipped at the start of
//! the stream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MovementError;
use crate::ingest::{GravityEstimate, SensorStream};

macro_rules! features {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Feature {
            $($variant),*
        }

        impl Feature {
            pub const ALL: &'static [Feature] = &[$(Feature::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name),*
                }
            }
        }

        impl FromStr for Feature {
            type Err = MovementError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Feature::$variant),)*
                    _ => Err(MovementError::UnknownFeature(s.to_string())),
                }
            }
        }
    };
}

features! {
    AcTime => "AC_time",
    AcVal => "AC_val",
    AccVar => "ACC_var",
    AccP90 => "ACC_p90",
    AccVarLong => "ACC_var_long",
    AccP90Long => "ACC_p90_long",
    GyroVar => "GYRO_var",
    GyroP90 => "GYRO_p90",
    GyroVarLong => "GYRO_var_long",
    GyroP90Long => "GYRO_p90_long",
    GravStdLong => "GRAV_std_long",
    AccMedian => "ACC_median",
    AccMeanLong => "ACC_mean_long",
    GyroMedian => "GYRO_median",
    GyroMeanLong => "GYRO_mean_long",
    GyroP10 => "GYRO_p10",
    GyroP10Long => "GYRO_p10_long",
    AccP10 => "ACC_p10",
    AccP10Long => "ACC_p10_long",
    GyroMin => "GYRO_min",
    GyroMax => "GYRO_max",
    GyroMinLong => "GYRO_min_long",
    GyroMaxLong => "GYRO_max_long",
    GyroPeakToPeak => "GYRO_peak_to_peak",
    GyroPeakToPeakLong => "GYRO_peak_to_peak_long",
    GravMinLong => "GRAV_min_long",
    GravMaxLong => "GRAV_max_long",
    GravPeakToPeakLong => "GRAV_peak_to_peak_long",
    GravP5Long => "GRAV_p5_long",
    GravP95Long => "GRAV_p95_long",
    GravInterpercentileRangeLong => "GRAV_interpercentile_range_long",
    AccStdDiff => "ACC_std_diff",
    AccStdDiffLong => "ACC_std_diff_long",
    Acc3StdDiff => "ACC_3_std_diff",
    Acc3StdDiffLong => "ACC_3_std_diff_long",
    AccPeakToPeak => "ACC_peak_to_peak",
    AccPeakToPeakLong => "ACC_peak_to_peak_long",
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Default ten-feature set for the logistic model.
pub const DEFAULT_FEATURES: [Feature; 10] = [
    Feature::Acc3StdDiffLong,
    Feature::Acc3StdDiff,
    Feature::GyroPeakToPeakLong,
    Feature::GyroPeakToPeak,
    Feature::AccStdDiffLong,
    Feature::GyroMaxLong,
    Feature::GyroMax,
    Feature::AcTime,
    Feature::AccP90Long,
    Feature::AccMeanLong,
];

pub const LONG_WINDOW_S: usize = 5;
const AC_MIN_LAG_S: f64 = 0.1;
const AC_MAX_LAG_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Start of the second this vector describes.
    pub t_ns: i64,
    pub values: Vec<f64>,
}

/// Magnitude and differenced signals for one stream.
struct Signals {
    acc: Vec<f64>,
    gyro: Vec<f64>,
    grav: Vec<f64>,
    /// Per-axis accelerometer values, for the summed-difference feature.
    acc_axes: Vec<[f64; 3]>,
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

fn std(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

fn min(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn peak_to_peak(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        max(x) - min(x)
    }
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(x: &[f64], p: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn summed_axis_diff(x: &[[f64; 3]]) -> Vec<f64> {
    x.windows(2)
        .map(|w| (w[1][0] - w[0][0]) + (w[1][1] - w[0][1]) + (w[1][2] - w[0][2]))
        .collect()
}

/// Lag (seconds) and value of the strongest normalised autocorrelation
/// with lag in [0.1, 2] s. Both are zero for a flat window.
fn autocorrelation_peak(x: &[f64], rate_hz: f64) -> (f64, f64) {
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if denom <= f64::EPSILON * x.len() as f64 {
        return (0.0, 0.0);
    }
    let lo = ((AC_MIN_LAG_S * rate_hz).round() as usize).max(1);
    let hi = (AC_MAX_LAG_S * rate_hz).round() as usize;
    let mut best = (0.0, 0.0);
    let mut found = false;
    for lag in lo..=hi.min(x.len().saturating_sub(1)) {
        let num: f64 = (0..x.len() - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum();
        // Per-pair normalisation, so short lags are not favoured by overlap.
        let r = num / (x.len() - lag) as f64 / (denom / x.len() as f64);
        if !found || r > best.1 {
            best = (lag as f64 / rate_hz, r);
            found = true;
        }
    }
    best
}

impl Signals {
    fn new(stream: &SensorStream, gravity: &GravityEstimate) -> Self {
        Signals {
            acc: stream.accel().map(|a| a.norm()).collect(),
            gyro: stream.gyro().map(|g| g.norm()).collect(),
            grav: gravity.magnitudes(),
            acc_axes: stream.accel().map(|a| a.to_array()).collect(),
        }
    }

    fn value(&self, f: Feature, short: std::ops::Range<usize>, long: std::ops::Range<usize>, rate_hz: f64) -> f64 {
        use Feature::*;
        let (a, al) = (&self.acc[short.clone()], &self.acc[long.clone()]);
        let (g, gl) = (&self.gyro[short.clone()], &self.gyro[long.clone()]);
        let grl = &self.grav[long.clone()];
        match f {
            AcTime => autocorrelation_peak(al, rate_hz).0,
            AcVal => autocorrelation_peak(al, rate_hz).1,
            AccVar => variance(a),
            AccP90 => percentile(a, 90.0),
            AccVarLong => variance(al),
            AccP90Long => percentile(al, 90.0),
            GyroVar => variance(g),
            GyroP90 => percentile(g, 90.0),
            GyroVarLong => variance(gl),
            GyroP90Long => percentile(gl, 90.0),
            GravStdLong => std(grl),
            AccMedian => percentile(a, 50.0),
            AccMeanLong => mean(al),
            GyroMedian => percentile(g, 50.0),
            GyroMeanLong => mean(gl),
            GyroP10 => percentile(g, 10.0),
            GyroP10Long => percentile(gl, 10.0),
            AccP10 => percentile(a, 10.0),
            AccP10Long => percentile(al, 10.0),
            GyroMin => min(g),
            GyroMax => max(g),
            GyroMinLong => min(gl),
            GyroMaxLong => max(gl),
            GyroPeakToPeak => peak_to_peak(g),
            GyroPeakToPeakLong => peak_to_peak(gl),
            GravMinLong => min(grl),
            GravMaxLong => max(grl),
            GravPeakToPeakLong => peak_to_peak(grl),
            GravP5Long => percentile(grl, 5.0),
            GravP95Long => percentile(grl, 95.0),
            GravInterpercentileRangeLong => percentile(grl, 95.0) - percentile(grl, 5.0),
            AccStdDiff => std(&diff(a)),
            AccStdDiffLong => std(&diff(al)),
            Acc3StdDiff => std(&summed_axis_diff(&self.acc_axes[short])),
            Acc3StdDiffLong => std(&summed_axis_diff(&self.acc_axes[long])),
            AccPeakToPeak => peak_to_peak(a),
            AccPeakToPeakLong => peak_to_peak(al),
        }
    }
}

/// Samples per second for a resampled stream.
pub fn samples_per_second(rate_hz: f64) -> Result<usize, MovementError> {
    let r = rate_hz.round();
    if !(r >= 1.0) || (rate_hz - r).abs() > 1e-9 {
        return Err(MovementError::InvalidRate(rate_hz));
    }
    Ok(r as usize)
}

/// One feature vector per complete second of the stream.
pub fn extract_features(
    stream: &SensorStream,
    gravity: &GravityEstimate,
    features: &[Feature],
) -> Result<Vec<FeatureVector>, MovementError> {
    if gravity.len() != stream.len() {
        return Err(MovementError::LengthMismatch { left: stream.len(), right: gravity.len() });
    }
    let sps = samples_per_second(stream.rate_hz())?;
    let seconds = stream.len() / sps;
    if seconds == 0 {
        return Err(MovementError::InsufficientData { samples: stream.len(), needed: sps });
    }
    let signals = Signals::new(stream, gravity);
    let samples = stream.samples();
    let rate = stream.rate_hz();
    let out = (0..seconds)
        .map(|k| {
            let end = (k + 1) * sps;
            let short = k * sps..end;
            let long = end.saturating_sub(LONG_WINDOW_S * sps)..end;
            FeatureVector {
                t_ns: samples[k * sps].t_ns,
                values: features
                    .iter()
                    .map(|&f| signals.value(f, short.clone(), long.clone(), rate))
                    .collect(),
            }
        })
        .collect();
    Ok(out)
}
