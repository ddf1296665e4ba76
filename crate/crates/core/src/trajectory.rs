//! Primitive sequences: merging turn and movement streams, stripping,
//! trimming, and a line-based text format (`symbol,t_ns`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::NANOS_PER_SEC;
use crate::movement::BLOCK_SECONDS;
use crate::turns::TurnEvent;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("timestamps decrease at index {index}")]
    Order { index: usize },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    M,
    S,
    L,
    R,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::M => 'M',
            Symbol::S => 'S',
            Symbol::L => 'L',
            Symbol::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        match c {
            'M' => Some(Symbol::M),
            'S' => Some(Symbol::S),
            'L' => Some(Symbol::L),
            'R' => Some(Symbol::R),
            _ => None,
        }
    }

    pub fn is_turn(self) -> bool {
        matches!(self, Symbol::L | Symbol::R)
    }

    /// Parse a compact string such as `MMLRM`.
    pub fn parse_word(s: &str) -> Result<Vec<Symbol>, TrajectoryError> {
        s.chars()
            .map(|c| Symbol::from_char(c).ok_or_else(|| TrajectoryError::UnknownSymbol(c.to_string())))
            .collect()
    }

    pub fn word(symbols: &[Symbol]) -> String {
        symbols.iter().map(|s| s.as_char()).collect()
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Symbol {
    type Err = TrajectoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(Symbol::from_char), chars.next()) {
            (Some(sym), None) => Ok(sym),
            _ => Err(TrajectoryError::UnknownSymbol(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Primitive {
    pub symbol: Symbol,
    pub t_ns: i64,
}

impl Primitive {
    pub fn new(symbol: Symbol, t_ns: i64) -> Self {
        Primitive { symbol, t_ns }
    }
}

/// Time-ordered primitives (timestamps never decrease).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Primitive>", into = "Vec<Primitive>")]
pub struct PrimitiveSequence {
    primitives: Vec<Primitive>,
}

impl TryFrom<Vec<Primitive>> for PrimitiveSequence {
    type Error = TrajectoryError;

    fn try_from(v: Vec<Primitive>) -> Result<Self, Self::Error> {
        PrimitiveSequence::new(v)
    }
}

impl From<PrimitiveSequence> for Vec<Primitive> {
    fn from(s: PrimitiveSequence) -> Self {
        s.primitives
    }
}

impl PrimitiveSequence {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self, TrajectoryError> {
        if let Some(i) = primitives.windows(2).position(|w| w[1].t_ns < w[0].t_ns) {
            return Err(TrajectoryError::Order { index: i + 1 });
        }
        Ok(PrimitiveSequence { primitives })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Symbols spaced `spacing_ns` apart from `t0_ns`.
    pub fn from_symbols(symbols: &[Symbol], t0_ns: i64, spacing_ns: i64) -> Self {
        let primitives = symbols
            .iter()
            .enumerate()
            .map(|(i, &s)| Primitive::new(s, t0_ns + i as i64 * spacing_ns))
            .collect();
        PrimitiveSequence { primitives }
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        self.primitives.iter().map(|p| p.symbol).collect()
    }

    pub fn word(&self) -> String {
        Symbol::word(&self.symbols())
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn first_t_ns(&self) -> Option<i64> {
        self.primitives.first().map(|p| p.t_ns)
    }

    pub fn last_t_ns(&self) -> Option<i64> {
        self.primitives.last().map(|p| p.t_ns)
    }

    /// Span between first and last primitive.
    pub fn duration_s(&self) -> f64 {
        match (self.first_t_ns(), self.last_t_ns()) {
            (Some(a), Some(b)) => (b - a) as f64 / NANOS_PER_SEC as f64,
            _ => 0.0,
        }
    }

    pub fn count(&self, symbol: Symbol) -> usize {
        self.primitives.iter().filter(|p| p.symbol == symbol).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.primitives.len() * 24);
        for p in &self.primitives {
            out.push_str(&format!("{},{}\n", p.symbol, p.t_ns));
        }
        out
    }

    /// Parse `symbol,t_ns` lines. Blank lines are skipped.
    pub fn parse_text(text: &str) -> Result<Self, TrajectoryError> {
        let mut primitives = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() {
                continue;
            }
            let err = |message: String| TrajectoryError::Parse { line, message };
            let (sym, t) = s.split_once(',').ok_or_else(|| err(format!("expected `symbol,t_ns`, got `{s}`")))?;
            let symbol: Symbol = sym.trim().parse().map_err(|_| err(format!("unknown symbol `{}`", sym.trim())))?;
            let t_ns: i64 = t.trim().parse().map_err(|_| err(format!("bad timestamp `{}`", t.trim())))?;
            if let Some(prev) = primitives.last().map(|p: &Primitive| p.t_ns) {
                if t_ns < prev {
                    return Err(err(format!("timestamp {t_ns} before {prev}")));
                }
            }
            primitives.push(Primitive { symbol, t_ns });
        }
        Ok(PrimitiveSequence { primitives })
    }

    pub fn load(path: &Path) -> Result<Self, TrajectoryError> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrajectoryError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn block_ns() -> i64 {
    BLOCK_SECONDS as i64 * NANOS_PER_SEC
}

/// Combine 5 s movement blocks with turn events; turns take precedence.
///
/// A block `[t, t + 5 s)` that touches a turn's closed interval is dropped.
/// Turn symbols are placed at `t_begin`. On equal timestamps movement
/// blocks come first and turns keep their input order.
pub fn merge_streams(ms_stream: &[Primitive], turns: &[TurnEvent]) -> PrimitiveSequence {
    let overlaps = |t: i64| turns.iter().any(|e| t <= e.t_end_ns && e.t_begin_ns < t + block_ns());
    let mut out: Vec<(u8, Primitive)> = ms_stream
        .iter()
        .filter(|p| !overlaps(p.t_ns))
        .map(|&p| (0, p))
        .collect();
    for e in turns {
        for s in e.symbols() {
            out.push((1, Primitive::new(s, e.t_begin_ns)));
        }
    }
    out.sort_by_key(|(rank, p)| (p.t_ns, *rank));
    PrimitiveSequence { primitives: out.into_iter().map(|(_, p)| p).collect() }
}

pub fn strip_stationary(seq: &PrimitiveSequence) -> PrimitiveSequence {
    PrimitiveSequence {
        primitives: seq.primitives.iter().copied().filter(|p| p.symbol != Symbol::S).collect(),
    }
}

/// Keep primitives in the closed interval `[t_last - L, t_last]`.
pub fn trim_to_duration(seq: &PrimitiveSequence, duration_s: f64) -> PrimitiveSequence {
    let Some(last) = seq.last_t_ns() else {
        return PrimitiveSequence::empty();
    };
    trim_before(seq, last, duration_s)
}

/// Keep primitives in `[anchor - L, anchor]`.
pub fn trim_before(seq: &PrimitiveSequence, anchor_ns: i64, duration_s: f64) -> PrimitiveSequence {
    let span = (duration_s.max(0.0) * NANOS_PER_SEC as f64).round() as i64;
    let from = anchor_ns.saturating_sub(span);
    PrimitiveSequence {
        primitives: seq
            .primitives
            .iter()
            .copied()
            .filter(|p| p.t_ns >= from && p.t_ns <= anchor_ns)
            .collect(),
    }
}

/// Trim to `L` minutes ending at the last primitive, then drop `S`.
pub fn prepare_candidate(seq: &PrimitiveSequence, length_min: f64) -> PrimitiveSequence {
    strip_stationary(&trim_to_duration(seq, length_min * 60.0))
}
