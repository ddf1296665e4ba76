//! Raw inertial recordings: loading, validation, resampling onto a fixed
//! grid, gravity estimation and bounded in-memory buffering.
//!
//! Recordings are CSV with the header `t_ns,ax,ay,az,gx,gy,gz` (nanosecond
//! timestamps, m/s² and rad/s) or the equivalent JSON-lines form with one
//! object per sample using the same keys.

mod buffer;
mod gravity;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

pub use buffer::{
    LabelBuffer, PackedSample, RingBuffer, RingBufferSpec, SensorBuffers, SharedRingBuffer,
    Timestamped,
};
pub use gravity::{estimate_gravity, linear_acceleration, GravityConfig, GravityEstimate};

pub const NANOS_PER_SEC: i64 = 1_000_000_000;

/// Default processing rate for all downstream stages.
pub const DEFAULT_RATE_HZ: f64 = 20.0;

const CSV_HEADER: [&str; 7] = ["t_ns", "ax", "ay", "az", "gx", "gy", "gz"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("timestamp regression at line {line}: {t_ns} follows {prev_ns}")]
    Order { line: usize, prev_ns: i64, t_ns: i64 },
    #[error("stream is empty")]
    EmptyStream,
    #[error("invalid sampling rate {0}")]
    InvalidRate(f64),
    #[error("stream length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("buffer capacity {capacity_s} s is shorter than the longest reference path ({needed_s} s)")]
    BufferTooSmall { capacity_s: f64, needed_s: f64 },
}

/// One timestamped accelerometer + gyroscope reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t_ns: i64,
    pub accel: Vec3,
    pub gyro: Vec3,
}

impl ImuSample {
    pub fn new(t_ns: i64, accel: Vec3, gyro: Vec3) -> Self {
        ImuSample { t_ns, accel, gyro }
    }

    pub fn is_finite(&self) -> bool {
        self.accel.is_finite() && self.gyro.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordingFormat {
    Csv,
    Jsonl,
}

impl RecordingFormat {
    /// Guess from a file extension; anything that is not `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => RecordingFormat::Jsonl,
            _ => RecordingFormat::Csv,
        }
    }
}

/// Ordered samples plus the nominal sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStream {
    samples: Vec<ImuSample>,
    rate_hz: f64,
}

impl SensorStream {
    /// Build a stream, checking that timestamps strictly increase and all
    /// components are finite. The nominal rate is estimated from the span.
    pub fn new(samples: Vec<ImuSample>) -> Result<Self, IngestError> {
        validate_samples(&samples)?;
        let rate_hz = estimate_rate(&samples);
        Ok(SensorStream { samples, rate_hz })
    }

    pub fn empty() -> Self {
        SensorStream { samples: Vec::new(), rate_hz: 0.0 }
    }

    pub fn samples(&self) -> &[ImuSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<ImuSample> {
        self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (b.t_ns - a.t_ns) as f64 / NANOS_PER_SEC as f64,
            _ => 0.0,
        }
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.samples.iter().map(|s| s.t_ns).collect()
    }

    pub fn accel(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.samples.iter().map(|s| s.accel)
    }

    pub fn gyro(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.samples.iter().map(|s| s.gyro)
    }

    /// Shift every timestamp by `offset_ns`.
    pub fn shifted(&self, offset_ns: i64) -> SensorStream {
        SensorStream {
            samples: self
                .samples
                .iter()
                .map(|s| ImuSample { t_ns: s.t_ns + offset_ns, ..*s })
                .collect(),
            rate_hz: self.rate_hz,
        }
    }
}

fn estimate_rate(samples: &[ImuSample]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let span = (samples[samples.len() - 1].t_ns - samples[0].t_ns) as f64 / NANOS_PER_SEC as f64;
    (samples.len() - 1) as f64 / span
}

fn validate_samples(samples: &[ImuSample]) -> Result<(), IngestError> {
    for (i, s) in samples.iter().enumerate() {
        if !s.is_finite() {
            return Err(IngestError::Parse {
                line: i + 1,
                message: "non-finite sensor value".into(),
            });
        }
        if i > 0 && s.t_ns <= samples[i - 1].t_ns {
            return Err(IngestError::Order {
                line: i + 1,
                prev_ns: samples[i - 1].t_ns,
                t_ns: s.t_ns,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    t_ns: i64,
    ax: f64,
    ay: f64,
    az: f64,
    gx: f64,
    gy: f64,
    gz: f64,
}

impl Row {
    fn into_sample(self) -> ImuSample {
        ImuSample {
            t_ns: self.t_ns,
            accel: Vec3::new(self.ax, self.ay, self.az),
            gyro: Vec3::new(self.gx, self.gy, self.gz),
        }
    }

    fn from_sample(s: &ImuSample) -> Row {
        Row {
            t_ns: s.t_ns,
            ax: s.accel.x,
            ay: s.accel.y,
            az: s.accel.z,
            gx: s.gyro.x,
            gy: s.gyro.y,
            gz: s.gyro.z,
        }
    }
}

/// Load a recording from disk, keeping its original sample rate.
pub fn load_recording(path: &Path, format: RecordingFormat) -> Result<SensorStream, IngestError> {
    let file = File::open(path)?;
    match format {
        RecordingFormat::Csv => parse_csv(file),
        RecordingFormat::Jsonl => parse_jsonl(BufReader::new(file)),
    }
}

/// Sequential ordering check shared by both parsers; `line` is 1-based.
struct OrderCheck {
    prev: Option<i64>,
}

impl OrderCheck {
    fn push(&mut self, line: usize, sample: &ImuSample) -> Result<(), IngestError> {
        if !sample.is_finite() {
            return Err(IngestError::Parse {
                line,
                message: "non-finite sensor value".into(),
            });
        }
        if let Some(prev) = self.prev {
            if sample.t_ns <= prev {
                return Err(IngestError::Order { line, prev_ns: prev, t_ns: sample.t_ns });
            }
        }
        self.prev = Some(sample.t_ns);
        Ok(())
    }
}

pub fn parse_csv<R: Read>(reader: R) -> Result<SensorStream, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_error(e, 1)),
    };
    if headers.is_empty() {
        return Ok(SensorStream::empty());
    }
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(IngestError::Parse {
            line: 1,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut samples = Vec::new();
    let mut order = OrderCheck { prev: None };
    for (i, record) in rdr.records().enumerate() {
        let fallback_line = i + 2;
        let record = record.map_err(|e| csv_error(e, fallback_line))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(fallback_line);
        if record.len() != CSV_HEADER.len() {
            return Err(IngestError::Parse {
                line,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
            });
        }
        let t_ns: i64 = record[0].parse().map_err(|e| IngestError::Parse {
            line,
            message: format!("bad timestamp {:?}: {e}", &record[0]),
        })?;
        let mut vals = [0.0f64; 6];
        for (k, v) in vals.iter_mut().enumerate() {
            let field = &record[k + 1];
            *v = field.parse().map_err(|e| IngestError::Parse {
                line,
                message: format!("bad value {field:?} in column {}: {e}", CSV_HEADER[k + 1]),
            })?;
        }
        let sample = ImuSample {
            t_ns,
            accel: Vec3::new(vals[0], vals[1], vals[2]),
            gyro: Vec3::new(vals[3], vals[4], vals[5]),
        };
        order.push(line, &sample)?;
        samples.push(sample);
    }
    let rate_hz = estimate_rate(&samples);
    Ok(SensorStream { samples, rate_hz })
}

fn csv_error(e: csv::Error, fallback_line: usize) -> IngestError {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Parse { line, message: format!("{other:?}") },
    }
}

pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<SensorStream, IngestError> {
    let mut samples = Vec::new();
    let mut order = OrderCheck { prev: None };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let sample = row.into_sample();
        order.push(line_no, &sample)?;
        samples.push(sample);
    }
    let rate_hz = estimate_rate(&samples);
    Ok(SensorStream { samples, rate_hz })
}

pub fn write_recording(
    stream: &SensorStream,
    path: &Path,
    format: RecordingFormat,
) -> Result<(), IngestError> {
    let file = BufWriter::new(File::create(path)?);
    write_recording_to(stream, file, format)
}

pub fn write_recording_to<W: Write>(
    stream: &SensorStream,
    writer: W,
    format: RecordingFormat,
) -> Result<(), IngestError> {
    match format {
        RecordingFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            if stream.is_empty() {
                w.write_record(CSV_HEADER).map_err(|e| csv_error(e, 0))?;
            }
            for s in stream.samples() {
                w.serialize(Row::from_sample(s)).map_err(|e| csv_error(e, 0))?;
            }
            w.flush()?;
        }
        RecordingFormat::Jsonl => {
            let mut w = writer;
            for s in stream.samples() {
                serde_json::to_writer(&mut w, &Row::from_sample(s))
                    .map_err(|e| IngestError::Io(e.into()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Linearly interpolate onto an exact `1/target_hz` grid starting at the
/// first timestamp. The grid stops at the last sample; nothing is
/// extrapolated.
pub fn resample(stream: &SensorStream, target_hz: f64) -> Result<SensorStream, IngestError> {
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(IngestError::InvalidRate(target_hz));
    }
    let samples = stream.samples();
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => (a.t_ns, b.t_ns),
        _ => return Err(IngestError::EmptyStream),
    };
    let period_ns = NANOS_PER_SEC as f64 / target_hz;
    let mut out = Vec::with_capacity(((last - first) as f64 / period_ns) as usize + 1);
    let mut j = 0usize;
    let mut k: i64 = 0;
    loop {
        let t = first + (k as f64 * period_ns).round() as i64;
        if t > last {
            break;
        }
        while j + 1 < samples.len() && samples[j + 1].t_ns <= t {
            j += 1;
        }
        let a = &samples[j];
        let sample = if a.t_ns == t || j + 1 == samples.len() {
            ImuSample { t_ns: t, ..*a }
        } else {
            let b = &samples[j + 1];
            let w = (t - a.t_ns) as f64 / (b.t_ns - a.t_ns) as f64;
            ImuSample {
                t_ns: t,
                accel: a.accel.lerp(b.accel, w),
                gyro: a.gyro.lerp(b.gyro, w),
            }
        };
        out.push(sample);
        k += 1;
    }
    Ok(SensorStream { samples: out, rate_hz: target_hz })
}
