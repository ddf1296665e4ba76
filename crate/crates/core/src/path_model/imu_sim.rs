//! Raw accelerometer/gyroscope recordings simulated from route legs.
//!
//! The device is rigidly mounted with a fixed tilt, so gravity is constant
//! in the device frame and a turn is a rotation about it. Riding adds
//! broadband vibration and a pedalling oscillation; stops are quiet apart
//! from a small gyroscope bias.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::corpus::Leg;
use crate::ingest::{ImuSample, SensorStream, NANOS_PER_SEC};
use crate::movement::{Movement, MovementLabel};
use crate::turns::{TurnDirection, TurnEvent};
use crate::vec3::Vec3;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuSimConfig {
    pub rate_hz: f64,
    pub t0_ns: i64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    /// Per-axis std while moving (m/s², rad/s).
    pub moving_accel_noise: f64,
    pub moving_gyro_noise: f64,
    pub still_accel_noise: f64,
    pub still_gyro_noise: f64,
    pub gyro_bias: f64,
    pub pedal_hz: f64,
    pub pedal_amplitude: f64,
}

impl Default for ImuSimConfig {
    fn default() -> Self {
        ImuSimConfig {
            rate_hz: 200.0,
            t0_ns: 0,
            roll_deg: 12.0,
            pitch_deg: -20.0,
            moving_accel_noise: 0.8,
            moving_gyro_noise: 0.03,
            still_accel_noise: 0.02,
            still_gyro_noise: 0.002,
            gyro_bias: 0.0015,
            pedal_hz: 1.4,
            pedal_amplitude: 0.6,
        }
    }
}

impl ImuSimConfig {
    /// Unit "up" vector in the device frame.
    pub fn up(&self) -> Vec3 {
        let (r, p) = (self.roll_deg.to_radians(), self.pitch_deg.to_radians());
        Vec3::new(-p.sin(), r.sin() * p.cos(), r.cos() * p.cos())
    }

    /// A unit vector orthogonal to `up`, used as the riding direction.
    pub fn forward(&self) -> Vec3 {
        let up = self.up();
        let x = Vec3::new(1.0, 0.0, 0.0);
        (x - up * x.dot(up)).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRecording {
    pub stream: SensorStream,
    /// True state of each whole second, from the start of the recording.
    pub labels: Vec<MovementLabel>,
    /// True turns, without detector lag.
    pub turns: Vec<TurnEvent>,
}

/// Yaw rate (rad/s) `t` seconds into a raised-cosine turn.
pub fn turn_rate(angle_deg: f64, secs: f64, t: f64) -> f64 {
    if !(0.0..secs).contains(&t) {
        return 0.0;
    }
    angle_deg.to_radians() / secs * (1.0 - (2.0 * PI * t / secs).cos())
}

pub fn simulate_recording(legs: &[Leg], cfg: &ImuSimConfig, seed: u64) -> SimulatedRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut gauss = |s: f64| s * std_normal.sample(&mut rng);
    let up = cfg.up();
    let fwd = cfg.forward();
    let bias = Vec3::new(cfg.gyro_bias, -cfg.gyro_bias, 0.5 * cfg.gyro_bias);
    let dt_ns = (NANOS_PER_SEC as f64 / cfg.rate_hz).round() as i64;

    let mut starts = Vec::with_capacity(legs.len());
    let mut acc = 0.0;
    for l in legs {
        starts.push(acc);
        acc += l.secs();
    }
    let total = acc;
    let n = (total * cfg.rate_hz).floor() as usize;
    let mut samples = Vec::with_capacity(n);
    let mut leg_idx = 0;
    for i in 0..n {
        let t = i as f64 / cfg.rate_hz;
        while leg_idx + 1 < legs.len() && t >= starts[leg_idx + 1] {
            leg_idx += 1;
        }
        let leg = legs[leg_idx];
        let local = t - starts[leg_idx];
        let (an, gn) = if leg.is_moving() {
            (cfg.moving_accel_noise, cfg.moving_gyro_noise)
        } else {
            (cfg.still_accel_noise, cfg.still_gyro_noise)
        };
        let mut accel = up * GRAVITY + Vec3::new(gauss(an), gauss(an), gauss(an));
        let mut gyro = bias + Vec3::new(gauss(gn), gauss(gn), gauss(gn));
        if leg.is_moving() {
            accel = accel + fwd * (cfg.pedal_amplitude * (2.0 * PI * cfg.pedal_hz * t).sin());
        }
        if let Leg::Turn { angle_deg, secs } = leg {
            gyro = gyro + up * turn_rate(angle_deg, secs, local);
        }
        samples.push(ImuSample { t_ns: cfg.t0_ns + i as i64 * dt_ns, accel, gyro });
    }

    let labels = (0..total.floor() as usize)
        .map(|s| {
            let mid = s as f64 + 0.5;
            let k = starts.iter().rposition(|&st| st <= mid).unwrap_or(0);
            let label = if legs[k].is_moving() { Movement::Moving } else { Movement::Stationary };
            MovementLabel { t_ns: cfg.t0_ns + s as i64 * NANOS_PER_SEC, label }
        })
        .collect();
    let turns = legs
        .iter()
        .zip(&starts)
        .filter_map(|(l, &st)| match *l {
            Leg::Turn { angle_deg, secs } => Some(TurnEvent {
                t_begin_ns: cfg.t0_ns + (st * NANOS_PER_SEC as f64).round() as i64,
                t_end_ns: cfg.t0_ns + ((st + secs) * NANOS_PER_SEC as f64).round() as i64,
                angle_deg,
                direction: if angle_deg > 0.0 { TurnDirection::Right } else { TurnDirection::Left },
                count: (angle_deg / 15.0).round().abs() as u32,
            }),
            _ => None,
        })
        .collect();
    SimulatedRecording {
        stream: SensorStream::new(samples).expect("simulated samples are ordered and finite"),
        labels,
        turns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raised_cosine_integrates_to_angle() {
        let (angle, secs) = (90.0, 3.0);
        let steps = 30_000;
        let dt = secs / steps as f64;
        let sum: f64 = (0..steps).map(|i| turn_rate(angle, secs, (i as f64 + 0.5) * dt) * dt).sum();
        assert!((sum.to_degrees() - angle).abs() < 1e-6);
        assert_eq!(turn_rate(angle, secs, -0.1), 0.0);
        assert_eq!(turn_rate(angle, secs, 3.0), 0.0);
    }

    #[test]
    fn frame_vectors() {
        let cfg = ImuSimConfig::default();
        assert!((cfg.up().norm() - 1.0).abs() < 1e-12);
        assert!(cfg.up().dot(cfg.forward()).abs() < 1e-12);
    }

    #[test]
    fn recording_shape() {
        let legs = [Leg::Stop { secs: 3.0 }, Leg::Move { secs: 4.0 }, Leg::Turn { angle_deg: -45.0, secs: 3.0 }];
        let rec = simulate_recording(&legs, &ImuSimConfig::default(), 1);
        assert_eq!(rec.stream.len(), 2000);
        assert_eq!(rec.labels.len(), 10);
        assert_eq!(rec.labels[0].label, Movement::Stationary);
        assert_eq!(rec.labels[5].label, Movement::Moving);
        assert_eq!(rec.turns.len(), 1);
        assert_eq!(rec.turns[0].direction, TurnDirection::Left);
        assert_eq!(rec.turns[0].count, 3);
        assert_eq!(simulate_recording(&legs, &ImuSimConfig::default(), 1), rec);
    }
}
