//! Software gravity sensor: a first-order low-pass over the raw
//! accelerometer, plus a stability flag that is cleared while the estimate
//! is still catching up with an orientation change.

use serde::{Deserialize, Serialize};

use super::{IngestError, SensorStream, NANOS_PER_SEC};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravityConfig {
    /// Low-pass time constant of the gravity estimate.
    pub time_constant_s: f64,
    /// Time the estimate is flagged unstable after an orientation change.
    pub settle_window_s: f64,
    /// Time constant of the fast reference filter used to spot orientation changes.
    pub fast_time_constant_s: f64,
    /// Disagreement between the fast and slow filters that counts as an orientation change.
    pub step_angle_deg: f64,
}

impl Default for GravityConfig {
    fn default() -> Self {
        GravityConfig {
            time_constant_s: 1.0,
            settle_window_s: 3.0,
            fast_time_constant_s: 0.2,
            step_angle_deg: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravityEstimate {
    pub gravity: Vec<Vec3>,
    pub stable: Vec<bool>,
}

impl GravityEstimate {
    pub fn len(&self) -> usize {
        self.gravity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gravity.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.gravity.iter().map(|g| g.norm()).collect()
    }
}

/// Exponential smoothing with a per-step coefficient derived from the
/// actual sample spacing, so irregular input is handled too.
fn smoothing(dt_s: f64, tau_s: f64) -> f64 {
    if tau_s <= 0.0 {
        1.0
    } else {
        1.0 - (-dt_s / tau_s).exp()
    }
}

pub fn estimate_gravity(
    stream: &SensorStream,
    cfg: &GravityConfig,
) -> Result<GravityEstimate, IngestError> {
    let samples = stream.samples();
    let first = samples.first().ok_or(IngestError::EmptyStream)?;
    let mut slow = first.accel;
    let mut fast = first.accel;
    let mut last_step: Option<i64> = None;
    let settle_ns = (cfg.settle_window_s * NANOS_PER_SEC as f64).round() as i64;
    let step_rad = cfg.step_angle_deg.to_radians();

    let mut gravity = Vec::with_capacity(samples.len());
    let mut stable = Vec::with_capacity(samples.len());
    let mut prev_t = first.t_ns;
    for s in samples {
        let dt = (s.t_ns - prev_t) as f64 / NANOS_PER_SEC as f64;
        prev_t = s.t_ns;
        slow = slow.lerp(s.accel, smoothing(dt, cfg.time_constant_s));
        fast = fast.lerp(s.accel, smoothing(dt, cfg.fast_time_constant_s));
        if fast.angle_to(slow) > step_rad {
            last_step = Some(s.t_ns);
        }
        let ok = match last_step {
            Some(t) => s.t_ns - t > settle_ns,
            None => true,
        };
        gravity.push(slow);
        stable.push(ok);
    }
    Ok(GravityEstimate { gravity, stable })
}

/// Element-wise `accel - gravity`.
pub fn linear_acceleration(
    stream: &SensorStream,
    gravity: &GravityEstimate,
) -> Result<Vec<Vec3>, IngestError> {
    if stream.len() != gravity.len() {
        return Err(IngestError::LengthMismatch { left: stream.len(), right: gravity.len() });
    }
    Ok(stream
        .accel()
        .zip(&gravity.gravity)
        .map(|(a, g)| a - *g)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ImuSample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const RATE: f64 = 20.0;

    fn stream_from(n: usize, f: impl Fn(usize, f64) -> Vec3) -> SensorStream {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / RATE;
                ImuSample::new(i as i64 * 50_000_000, f(i, t), Vec3::ZERO)
            })
            .collect();
        SensorStream::new(samples).unwrap()
    }

    #[test]
    fn stationary_device_converges_to_static_accel() {
        let s = stream_from(200, |_, _| Vec3::new(0.0, 0.0, 9.81));
        let g = estimate_gravity(&s, &GravityConfig::default()).unwrap();
        for (i, v) in g.gravity.iter().enumerate().skip(60) {
            assert!((v.norm() - 9.81).abs() < 0.0981, "sample {i}");
        }
        assert!(g.stable.iter().all(|&x| x));
    }

    #[test]
    fn noisy_stationary_magnitude_settles_within_tenth() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let n = 400;
        let values: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(
                    noise.sample(&mut rng),
                    noise.sample(&mut rng),
                    9.81 + noise.sample(&mut rng),
                )
            })
            .collect();
        let s = stream_from(n, |i, _| values[i]);
        let g = estimate_gravity(&s, &GravityConfig::default()).unwrap();
        // After 5 s (100 samples) at 20 Hz.
        for v in &g.gravity[100..] {
            assert!((v.norm() - 9.81).abs() < 0.1);
            assert!((9.0..=10.6).contains(&v.norm()));
        }
    }

    #[test]
    fn ninety_degree_step_clears_stability_for_settle_window() {
        let cfg = GravityConfig::default();
        let step_at = 200usize;
        let s = stream_from(600, |i, _| {
            if i < step_at {
                Vec3::new(0.0, 0.0, 9.81)
            } else {
                Vec3::new(9.81, 0.0, 0.0)
            }
        });
        let g = estimate_gravity(&s, &cfg).unwrap();
        let settle_samples = (cfg.settle_window_s * RATE) as usize;
        assert!(g.stable[..step_at].iter().all(|&x| x));
        // Unstable for at least the settle window after the step...
        assert!(g.stable[step_at + 1..step_at + 1 + settle_samples].iter().all(|&x| !x));
        // ...and stable again once the estimate has converged.
        assert!(g.stable[step_at + 200..].iter().all(|&x| x));
        let last = g.gravity.last().unwrap();
        assert!((*last - Vec3::new(9.81, 0.0, 0.0)).norm() < 0.01);
    }

    #[test]
    fn linear_acceleration_of_pure_gravity_is_zero() {
        let s = stream_from(100, |_, _| Vec3::new(1.0, 2.0, 9.5));
        let g = estimate_gravity(&s, &GravityConfig::default()).unwrap();
        let lin = linear_acceleration(&s, &g).unwrap();
        assert!(lin.iter().all(|v| v.norm() < 1e-12));
        let same = GravityEstimate { gravity: s.accel().collect(), stable: vec![true; s.len()] };
        let lin = linear_acceleration(&s, &same).unwrap();
        assert!(lin.iter().all(|v| *v == Vec3::ZERO));
    }

    #[test]
    fn linear_acceleration_length_mismatch() {
        let s = stream_from(10, |_, _| Vec3::ZERO);
        let g = GravityEstimate { gravity: vec![Vec3::ZERO; 9], stable: vec![true; 9] };
        assert!(matches!(linear_acceleration(&s, &g), Err(IngestError::LengthMismatch { .. })));
    }

    #[test]
    fn sinusoid_is_recovered_after_settling() {
        // 2 Hz, 1 m/s² on the x axis over a constant gravity on z.
        let freq = 2.0;
        let n = 20 * 60;
        let s = stream_from(n, |_, t| {
            Vec3::new((2.0 * std::f64::consts::PI * freq * t).sin(), 0.0, 9.81)
        });
        let g = estimate_gravity(&s, &GravityConfig::default()).unwrap();
        let lin = linear_acceleration(&s, &g).unwrap();

        // Project the settled part (after 5 s) onto sin/cos over whole periods.
        let start = 100;
        let len = ((n - start) / 10) * 10;
        let (mut a, mut b) = (0.0, 0.0);
        for i in start..start + len {
            let w = 2.0 * std::f64::consts::PI * freq * i as f64 / RATE;
            a += lin[i].x * w.sin();
            b += lin[i].x * w.cos();
        }
        let amplitude = 2.0 * (a * a + b * b).sqrt() / len as f64;

        // Closed form: the recovered signal is (1 - H) applied to the sine,
        // where H is the discrete first-order low-pass at this frequency.
        let k = 1.0 - (-1.0 / RATE / 1.0f64).exp();
        let w = 2.0 * std::f64::consts::PI * freq / RATE;
        // H(z) = k / (1 - (1-k) z^-1)
        let (re, im) = (1.0 - (1.0 - k) * w.cos(), (1.0 - k) * w.sin());
        let h2 = k * k / (re * re + im * im);
        // 1 - H = (re - k + i*im) / (re + i*im)
        let one_minus_h = (((re - k).powi(2) + im * im) / (re * re + im * im)).sqrt();
        assert!(h2 < 0.01);
        assert!((amplitude - one_minus_h).abs() < 1e-3, "{amplitude} vs {one_minus_h}");
        assert!((amplitude - 1.0).abs() < 0.05);
    }
}
