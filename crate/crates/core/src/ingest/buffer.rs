//! Fixed-capacity overwrite-oldest buffers for the last hour of raw
//! samples and per-second movement labels.

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::{ImuSample, IngestError, NANOS_PER_SEC};
use crate::movement::{Movement, MovementLabel};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingBufferSpec {
    pub capacity_duration_s: f64,
    /// Bits per stored scalar. Only 32 is supported by [`PackedSample`].
    pub precision_bits: u32,
}

impl Default for RingBufferSpec {
    fn default() -> Self {
        RingBufferSpec { capacity_duration_s: 3600.0, precision_bits: 32 }
    }
}

impl RingBufferSpec {
    pub fn capacity_samples(&self, rate_hz: f64) -> usize {
        (self.capacity_duration_s * rate_hz).ceil() as usize
    }

    /// Payload size of the raw sample buffer: six scalars plus a timestamp.
    pub fn sample_bytes(&self, rate_hz: f64) -> usize {
        self.capacity_samples(rate_hz) * std::mem::size_of::<PackedSample>()
    }

    /// Scalar payload only (six sensor channels, no timestamps).
    pub fn scalar_bytes(&self, rate_hz: f64) -> usize {
        self.capacity_samples(rate_hz) * 6 * (self.precision_bits as usize / 8)
    }

    /// The buffer has to hold at least one full reference path.
    pub fn check_covers(&self, longest_path_min: f64) -> Result<(), IngestError> {
        let needed_s = longest_path_min * 60.0;
        if self.capacity_duration_s < needed_s {
            return Err(IngestError::BufferTooSmall {
                capacity_s: self.capacity_duration_s,
                needed_s,
            });
        }
        Ok(())
    }
}

pub trait Timestamped {
    fn timestamp_ns(&self) -> i64;
}

impl Timestamped for ImuSample {
    fn timestamp_ns(&self) -> i64 {
        self.t_ns
    }
}

/// 32-bit storage form of an [`ImuSample`]: 32 bytes per sample.
#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(C)]
pub struct PackedSample {
    pub t_ns: i64,
    pub accel: [f32; 3],
    pub gyro: [f32; 3],
}

impl From<&ImuSample> for PackedSample {
    fn from(s: &ImuSample) -> Self {
        let f = |v: Vec3| [v.x as f32, v.y as f32, v.z as f32];
        PackedSample { t_ns: s.t_ns, accel: f(s.accel), gyro: f(s.gyro) }
    }
}

impl From<&PackedSample> for ImuSample {
    fn from(p: &PackedSample) -> Self {
        let f = |a: [f32; 3]| Vec3::new(a[0] as f64, a[1] as f64, a[2] as f64);
        ImuSample { t_ns: p.t_ns, accel: f(p.accel), gyro: f(p.gyro) }
    }
}

impl Timestamped for PackedSample {
    fn timestamp_ns(&self) -> i64 {
        self.t_ns
    }
}

/// Circular store; once full, each push silently replaces the oldest item.
#[derive(Debug, Clone)]
pub struct RingBuffer<T> {
    buf: Vec<T>,
    capacity: usize,
    head: usize,
}

impl<T: Clone> RingBuffer<T> {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "ring buffer capacity must be positive");
        RingBuffer { buf: Vec::with_capacity(capacity), capacity, head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn push(&mut self, item: T) {
        if self.buf.len() < self.capacity {
            self.buf.push(item);
        } else {
            self.buf[self.head] = item;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        let (newer, older) = self.buf.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    pub fn newest(&self) -> Option<&T> {
        if self.buf.is_empty() {
            None
        } else if self.buf.len() < self.capacity || self.head == 0 {
            self.buf.last()
        } else {
            self.buf.get(self.head - 1)
        }
    }

    pub fn snapshot(&self) -> Vec<T> {
        self.iter().cloned().collect()
    }

    pub fn clear(&mut self) {
        self.buf.clear();
        self.head = 0;
    }
}

impl<T: Clone + Timestamped> RingBuffer<T> {
    /// Items with `from_ns <= t <= to_ns`, oldest first.
    pub fn range(&self, from_ns: i64, to_ns: i64) -> Vec<T> {
        self.iter()
            .filter(|x| (from_ns..=to_ns).contains(&x.timestamp_ns()))
            .cloned()
            .collect()
    }
}

/// Single-writer, multi-reader handle. Readers copy a snapshot under the
/// read lock, so they never observe a half-applied push.
#[derive(Debug)]
pub struct SharedRingBuffer<T> {
    inner: Arc<RwLock<RingBuffer<T>>>,
}

impl<T> Clone for SharedRingBuffer<T> {
    fn clone(&self) -> Self {
        SharedRingBuffer { inner: Arc::clone(&self.inner) }
    }
}

impl<T: Clone> SharedRingBuffer<T> {
    pub fn with_capacity(capacity: usize) -> Self {
        SharedRingBuffer { inner: Arc::new(RwLock::new(RingBuffer::with_capacity(capacity))) }
    }

    pub fn push(&self, item: T) {
        self.inner.write().unwrap_or_else(|e| e.into_inner()).push(item);
    }

    pub fn extend<I: IntoIterator<Item = T>>(&self, items: I) {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        for item in items {
            guard.push(item);
        }
    }

    pub fn snapshot(&self) -> Vec<T> {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).snapshot()
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One byte per second of movement classification; timestamps are implied
/// by the newest label and the fixed 1 s spacing.
#[derive(Debug, Clone)]
pub struct LabelBuffer {
    ring: RingBuffer<u8>,
    newest_t_ns: Option<i64>,
}

impl LabelBuffer {
    pub fn with_capacity(seconds: usize) -> Self {
        LabelBuffer { ring: RingBuffer::with_capacity(seconds), newest_t_ns: None }
    }

    pub fn push(&mut self, label: MovementLabel) {
        self.ring.push(match label.label {
            Movement::Moving => 1,
            Movement::Stationary => 0,
        });
        self.newest_t_ns = Some(label.t_ns);
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.ring.capacity()
    }

    pub fn snapshot(&self) -> Vec<MovementLabel> {
        let Some(newest) = self.newest_t_ns else {
            return Vec::new();
        };
        let n = self.ring.len() as i64;
        self.ring
            .iter()
            .enumerate()
            .map(|(i, &b)| MovementLabel {
                t_ns: newest - (n - 1 - i as i64) * NANOS_PER_SEC,
                label: if b == 1 { Movement::Moving } else { Movement::Stationary },
            })
            .collect()
    }
}

/// Everything kept in memory for on-demand trajectory extraction.
#[derive(Debug, Clone)]
pub struct SensorBuffers {
    pub samples: RingBuffer<PackedSample>,
    pub labels: LabelBuffer,
}

impl SensorBuffers {
    pub fn new(spec: &RingBufferSpec, rate_hz: f64) -> Self {
        SensorBuffers {
            samples: RingBuffer::with_capacity(spec.capacity_samples(rate_hz)),
            labels: LabelBuffer::with_capacity(spec.capacity_duration_s.ceil() as usize),
        }
    }

    pub fn push_sample(&mut self, s: &ImuSample) {
        self.samples.push(PackedSample::from(s));
    }

    pub fn reserved_bytes(&self) -> usize {
        self.samples.capacity() * std::mem::size_of::<PackedSample>() + self.labels.capacity()
    }
}
