//! Challenge-response authentication gated on trajectory verification,
//! with a relay adversary that forwards frames verbatim.

mod frame;
mod transport;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{Challenge, Frame, FrameType, Key, Response, KEY_LEN, MAC_LEN, MAX_FRAME_BODY, NONCE_LEN};
pub use transport::{
    relay_forward, transport_pair, Direction, InProcTransport, RelayHandle, RelayedFrame, TcpTransport, Transport,
    TransportKind, DEFAULT_RECV_TIMEOUT,
};

use crate::alignment::{nw_score, ScoringScheme};
use crate::ingest::NANOS_PER_SEC;
use crate::path_model::{quantize_legs, random_route, NoiseModel};
use crate::repository::{RepositoryConfig, RepositoryError, Repository};
use crate::trajectory::{strip_stationary, trim_before, PrimitiveSequence, Symbol};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("channel closed")]
    ChannelClosed,
    #[error("response MAC does not verify")]
    MacMismatch,
    #[error("timed out waiting for a frame")]
    Timeout,
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unexpected frame type {0:#04x}")]
    UnexpectedFrame(u8),
    #[error("no key for verifier `{0}`")]
    UnknownVerifier(String),
    #[error("no reference path for verifier `{0}`")]
    NoReferencePath(String),
    #[error("key file line {line}: {message}")]
    KeyFile { line: usize, message: String },
    #[error("actor panicked")]
    ActorPanicked,
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pre-shared keys, one per verifier id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyStore {
    keys: BTreeMap<String, Key>,
}

impl KeyStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, verifier_id: &str, key: Key) {
        self.keys.insert(verifier_id.to_string(), key);
    }

    pub fn get(&self, verifier_id: &str) -> Option<&Key> {
        self.keys.get(verifier_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.keys.keys().map(String::as_str)
    }

    /// Deterministic keys for simulations.
    pub fn derive<'a>(seed: u64, ids: impl IntoIterator<Item = &'a str>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = KeyStore::new();
        for id in ids {
            let mut k = [0u8; KEY_LEN];
            rng.fill(&mut k);
            store.insert(id, k);
        }
        store
    }

    /// Lines of `verifier_id <64 hex chars>`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let mut store = KeyStore::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| ProtocolError::KeyFile { line: i + 1, message: message.to_string() };
            let mut parts = line.split_whitespace();
            let (Some(id), Some(hex_key), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `verifier_id hex_key`"));
            };
            let bytes = hex::decode(hex_key).map_err(|_| err("key is not hex"))?;
            let key: Key = bytes.try_into().map_err(|_| err("key must be 32 bytes"))?;
            if store.keys.insert(id.to_string(), key).is_some() {
                return Err(err("duplicate verifier id"));
            }
        }
        Ok(store)
    }

    pub fn to_text(&self) -> String {
        self.keys.iter().map(|(id, k)| format!("{id} {}\n", hex::encode(k))).collect()
    }

    pub fn load(path: &Path) -> Result<Self, ProtocolError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ProtocolError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Live view of the prover's trajectory.
pub trait CandidateSource: Send {
    /// Primitives observed up to and including `now_ns`.
    fn observe(&mut self, now_ns: i64) -> PrimitiveSequence;
}

/// A fixed recorded path, revealed as time passes.
#[derive(Debug, Clone)]
pub struct RecordedPath(pub PrimitiveSequence);

impl CandidateSource for RecordedPath {
    fn observe(&mut self, now_ns: i64) -> PrimitiveSequence {
        let p: Vec<_> = self.0.primitives().iter().copied().filter(|p| p.t_ns <= now_ns).collect();
        PrimitiveSequence::new(p).expect("filtered sequence stays ordered")
    }
}

/// Simulated time, advanced explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub now_ns: i64,
}

impl SimClock {
    pub fn advance(&mut self, ns: i64) {
        self.now_ns += ns;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub enabled: bool,
    pub max_attempts: u32,
    pub attempt_interval_s: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { enabled: true, max_attempts: 10, attempt_interval_s: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub passed: bool,
    pub attempts_used: u32,
    pub best_score: Option<i32>,
}

/// Compare the live path with every reference path of the verifier, once
/// per interval, until one accepts or the attempts run out.
pub fn verify_proximity(
    repo: &Repository,
    verifier_id: &str,
    source: &mut dyn CandidateSource,
    clock: &mut SimClock,
    cfg: &GateConfig,
    scheme: &ScoringScheme,
) -> Result<GateDecision, ProtocolError> {
    let paths = repo.paths_for(verifier_id);
    if paths.is_empty() {
        return Err(ProtocolError::NoReferencePath(verifier_id.to_string()));
    }
    let mut best: Option<i32> = None;
    for attempt in 1..=cfg.max_attempts {
        let now = clock.now_ns;
        let live = source.observe(now);
        for p in paths {
            let c = strip_stationary(&trim_before(&live, now, p.length_min * 60.0));
            let s = nw_score(&p.medoid().symbols(), &c.symbols(), scheme);
            best = Some(best.map_or(s, |b| b.max(s)));
            if p.threshold.accepts(s) {
                return Ok(GateDecision { passed: true, attempts_used: attempt, best_score: best });
            }
        }
        if attempt < cfg.max_attempts {
            clock.advance((cfg.attempt_interval_s * NANOS_PER_SEC as f64).round() as i64);
        }
    }
    Ok(GateDecision { passed: false, attempts_used: cfg.max_attempts, best_score: best })
}

/// Scripted answer to the explicit proximity prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserDecision {
    Confirm,
    Decline,
}

pub struct Prover {
    pub keys: KeyStore,
    pub repo: Repository,
    pub repo_cfg: RepositoryConfig,
    pub gate: GateConfig,
    pub source: Box<dyn CandidateSource>,
    pub user: UserDecision,
    pub clock: SimClock,
    /// Length used when a confirmed candidate starts a new reference path.
    pub enroll_length_min: f64,
}

pub struct Verifier {
    pub id: String,
    pub key: Key,
    pub nonce_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Accepted,
    FallbackToExplicit,
    Rejected,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Accepted => "Accepted",
            Outcome::FallbackToExplicit => "FallbackToExplicit",
            Outcome::Rejected => "Rejected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub outcome: Outcome,
    pub attempts_used: u32,
    pub gate_score: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Verifier,
    Prover,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub from: Actor,
    pub bytes: Vec<u8>,
}

impl TranscriptEntry {
    pub fn kind(&self) -> Option<FrameType> {
        Frame::decode(&self.bytes).ok().map(|f| f.kind)
    }
}

pub struct SessionReport {
    pub outcome: SessionOutcome,
    pub verifier_accepted: bool,
    pub transcript: Vec<TranscriptEntry>,
    pub relay_transcript: Vec<RelayedFrame>,
    /// The prover's repository after the session.
    pub repository: Repository,
}

impl SessionReport {
    pub fn prover_sent(&self, kind: FrameType) -> bool {
        self.transcript.iter().any(|e| e.from == Actor::Prover && e.kind() == Some(kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Direct(TransportKind),
    Relayed { kind: TransportKind, latency: Duration },
}

type Log = Arc<Mutex<Vec<TranscriptEntry>>>;

fn send_logged(t: &dyn Transport, log: &Log, from: Actor, frame: &Frame) -> Result<(), ProtocolError> {
    let bytes = frame.encode()?;
    if let Ok(mut l) = log.lock() {
        l.push(TranscriptEntry { from, bytes: bytes.clone() });
    }
    t.send(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VerifierVerdict {
    Accepted,
    Declined,
}

fn run_verifier(v: &Verifier, t: &dyn Transport, log: &Log) -> Result<VerifierVerdict, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(v.nonce_seed);
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill(&mut nonce);
    let challenge = Challenge { nonce, verifier_id: v.id.clone() };
    send_logged(t, log, Actor::Verifier, &challenge.to_frame())?;
    let reply = Frame::decode(&t.recv()?)?;
    match reply.kind {
        FrameType::Response => {
            let r = Response::from_frame(&reply)?;
            if r.verify(&v.key, &challenge) {
                send_logged(t, log, Actor::Verifier, &Frame::new(FrameType::Accept, vec![]))?;
                Ok(VerifierVerdict::Accepted)
            } else {
                send_logged(t, log, Actor::Verifier, &Frame::new(FrameType::Reject, vec![]))?;
                Err(ProtocolError::MacMismatch)
            }
        }
        FrameType::Reject => Ok(VerifierVerdict::Declined),
        other => Err(ProtocolError::UnexpectedFrame(other as u8)),
    }
}

struct ProverResult {
    gate: GateDecision,
    responded: bool,
    confirmed: bool,
    accepted: bool,
    repo: Repository,
}

fn run_prover(mut p: Prover, t: &dyn Transport, log: &Log) -> Result<ProverResult, ProtocolError> {
    let frame = Frame::decode(&t.recv()?)?;
    let challenge = Challenge::from_frame(&frame)?;
    let key = *p.keys.get(&challenge.verifier_id).ok_or_else(|| ProtocolError::UnknownVerifier(challenge.verifier_id.clone()))?;
    let gate = if p.gate.enabled {
        verify_proximity(&p.repo, &challenge.verifier_id, p.source.as_mut(), &mut p.clock, &p.gate, &p.repo_cfg.scheme)?
    } else {
        GateDecision { passed: true, attempts_used: 0, best_score: None }
    };
    let confirmed = !gate.passed && p.user == UserDecision::Confirm;
    if confirmed {
        let live = p.source.observe(p.clock.now_ns);
        p.repo.confirm_best(&challenge.verifier_id, &live, p.enroll_length_min, &p.repo_cfg)?;
    }
    let responded = gate.passed || confirmed;
    if !responded {
        send_logged(t, log, Actor::Prover, &Frame::new(FrameType::Reject, vec![]))?;
        return Ok(ProverResult { gate, responded, confirmed, accepted: false, repo: p.repo });
    }
    send_logged(t, log, Actor::Prover, &Response::compute(&key, &challenge).to_frame())?;
    let verdict = Frame::decode(&t.recv()?)?;
    Ok(ProverResult { gate, responded, confirmed, accepted: verdict.kind == FrameType::Accept, repo: p.repo })
}

/// Run one session with prover and verifier on separate threads.
pub fn run_session(prover: Prover, verifier: Verifier, channel: Channel) -> Result<SessionReport, ProtocolError> {
    let log: Log = Arc::new(Mutex::new(Vec::new()));
    let (v_end, p_end, relay) = match channel {
        Channel::Direct(kind) => {
            let (a, b) = transport_pair(kind)?;
            (a, b, None)
        }
        Channel::Relayed { kind, latency } => {
            let (v_end, relay_v) = transport_pair(kind)?;
            let (relay_p, p_end) = transport_pair(kind)?;
            (v_end, p_end, Some(relay_forward(relay_v, relay_p, latency)))
        }
    };
    let (v_res, p_res) = std::thread::scope(|s| {
        let vh = s.spawn(|| run_verifier(&verifier, v_end.as_ref(), &log));
        let ph = s.spawn(|| run_prover(prover, p_end.as_ref(), &log));
        (vh.join(), ph.join())
    });
    v_end.close();
    p_end.close();
    let relay_transcript = relay.map(|r| {
        r.close();
        r.join()
    });
    let v_res = v_res.map_err(|_| ProtocolError::ActorPanicked)?;
    let p_res = p_res.map_err(|_| ProtocolError::ActorPanicked)?;
    let verdict = v_res?;
    let p = p_res?;
    let verifier_accepted = verdict == VerifierVerdict::Accepted;
    let outcome = match (p.gate.passed, p.confirmed, verifier_accepted && p.accepted) {
        (true, _, true) => Outcome::Accepted,
        (false, true, true) => Outcome::FallbackToExplicit,
        _ => Outcome::Rejected,
    };
    debug_assert!(p.responded || !verifier_accepted);
    let transcript = log.lock().map(|l| l.clone()).unwrap_or_default();
    Ok(SessionReport {
        outcome: SessionOutcome { outcome, attempts_used: p.gate.attempts_used, gate_score: p.gate.best_score },
        verifier_accepted,
        transcript,
        relay_transcript: relay_transcript.unwrap_or_default(),
        repository: p.repo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Prover rides the enrolled route up to the verifier.
    Benign,
    /// Prover sits still far away while a relay bridges the radio link.
    Relay,
    /// As `Relay`, with the trajectory gate switched off.
    RelayNogate,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "benign" => Ok(Scenario::Benign),
            "relay" => Ok(Scenario::Relay),
            "relay-nogate" => Ok(Scenario::RelayNogate),
            _ => Err(format!("unknown scenario `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub transport: TransportKind,
    pub latency: Duration,
    pub seed: u64,
    pub length_min: f64,
    pub route_length_min: f64,
    pub gate: GateConfig,
    pub noise: NoiseModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Benign,
            transport: TransportKind::InProc,
            latency: Duration::from_millis(50),
            seed: 42,
            length_min: 2.0,
            route_length_min: 6.0,
            gate: GateConfig::default(),
            noise: NoiseModel::default(),
        }
    }
}

pub const SCENARIO_VERIFIER: &str = "front-door";

/// Build prover and verifier for a scripted scenario and run it.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SessionReport, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let legs = random_route(&mut rng, cfg.route_length_min);
    let truth = quantize_legs(&legs, &[]);
    let arrival = truth.last_t_ns().unwrap_or(0) + 5 * NANOS_PER_SEC;
    let keys = KeyStore::derive(cfg.seed, [SCENARIO_VERIFIER]);
    let repo_cfg = RepositoryConfig::default();
    let mut repo = Repository::new();
    repo.enroll(SCENARIO_VERIFIER, &truth, cfg.length_min, &repo_cfg)?;

    let (source, user, gate): (PrimitiveSequence, UserDecision, GateConfig) = match cfg.scenario {
        Scenario::Benign => (crate::path_model::noisy_instance(&legs, &cfg.noise, &mut rng), UserDecision::Confirm, cfg.gate),
        Scenario::Relay | Scenario::RelayNogate => {
            let idle = PrimitiveSequence::from_symbols(&vec![Symbol::S; 200], arrival - 200 * 5 * NANOS_PER_SEC, 5 * NANOS_PER_SEC);
            let gate = GateConfig { enabled: cfg.scenario == Scenario::Relay, ..cfg.gate };
            (idle, UserDecision::Decline, gate)
        }
    };
    let prover = Prover {
        keys: keys.clone(),
        repo,
        repo_cfg,
        gate,
        source: Box::new(RecordedPath(source)),
        user,
        clock: SimClock { now_ns: arrival },
        enroll_length_min: cfg.length_min,
    };
    let verifier = Verifier {
        id: SCENARIO_VERIFIER.to_string(),
        key: *keys.get(SCENARIO_VERIFIER).expect("derived above"),
        nonce_seed: rng.random(),
    };
    let channel = match cfg.scenario {
        Scenario::Benign => Channel::Direct(cfg.transport),
        _ => Channel::Relayed { kind: cfg.transport, latency: cfg.latency },
    };
    run_session(prover, verifier, channel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(s: Scenario, t: TransportKind, seed: u64) -> ScenarioConfig {
        ScenarioConfig { scenario: s, transport: t, seed, latency: Duration::from_millis(1), ..Default::default() }
    }

    #[test]
    fn key_file_round_trip() {
        let ks = KeyStore::derive(1, ["a", "b"]);
        assert_eq!(KeyStore::parse(&ks.to_text()).unwrap(), ks);
        let text = format!("# keys\n\na {}  # front\n", "00".repeat(32));
        assert_eq!(KeyStore::parse(&text).unwrap().get("a"), Some(&[0u8; 32]));
        assert!(matches!(KeyStore::parse("a 0011"), Err(ProtocolError::KeyFile { line: 1, .. })));
        assert!(matches!(KeyStore::parse("\na zz"), Err(ProtocolError::KeyFile { line: 2, .. })));
        assert!(matches!(KeyStore::parse("a"), Err(ProtocolError::KeyFile { .. })));
    }

    #[test]
    fn benign_session_is_accepted() {
        for t in [TransportKind::InProc, TransportKind::Tcp] {
            let r = run_scenario(&scenario(Scenario::Benign, t, 42)).unwrap();
            assert_eq!(r.outcome.outcome, Outcome::Accepted);
            assert!(r.outcome.attempts_used >= 1);
            assert!(r.verifier_accepted);
        }
    }

    #[test]
    fn relay_is_blocked_by_the_gate() {
        let r = run_scenario(&scenario(Scenario::Relay, TransportKind::InProc, 42)).unwrap();
        assert_eq!(r.outcome.outcome, Outcome::Rejected);
        assert_eq!(r.outcome.attempts_used, 10);
        assert!(!r.verifier_accepted);
        assert!(!r.prover_sent(FrameType::Response));
        assert!(r.prover_sent(FrameType::Reject));
        // The relay saw exactly what the endpoints sent.
        let sent: Vec<&Vec<u8>> = r.transcript.iter().map(|e| &e.bytes).collect();
        let relayed: Vec<&Vec<u8>> = r.relay_transcript.iter().map(|f| &f.bytes).collect();
        assert_eq!(sent, relayed);
    }

    #[test]
    fn relay_without_gate_succeeds() {
        let r = run_scenario(&scenario(Scenario::RelayNogate, TransportKind::Tcp, 42)).unwrap();
        assert_eq!(r.outcome.outcome, Outcome::Accepted);
        assert!(r.verifier_accepted);
        assert_eq!(r.outcome.attempts_used, 0);
    }

    #[test]
    fn latency_does_not_matter_without_gate() {
        let cfg = ScenarioConfig { latency: Duration::from_millis(50), ..scenario(Scenario::RelayNogate, TransportKind::InProc, 5) };
        assert_eq!(run_scenario(&cfg).unwrap().outcome.outcome, Outcome::Accepted);
    }

    #[test]
    fn declined_gate_then_confirm_falls_back_and_enrolls() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let legs = random_route(&mut rng, 4.0);
        let truth = quantize_legs(&legs, &[]);
        let keys = KeyStore::derive(9, ["v"]);
        let cfg = RepositoryConfig::default();
        let mut repo = Repository::new();
        repo.enroll("v", &truth, 2.0, &cfg).unwrap();
        // A different route.
        let other = quantize_legs(&random_route(&mut rng, 4.0), &[]);
        let now = other.last_t_ns().unwrap();
        let prover = Prover {
            keys: keys.clone(),
            repo,
            repo_cfg: cfg,
            gate: GateConfig::default(),
            source: Box::new(RecordedPath(other)),
            user: UserDecision::Confirm,
            clock: SimClock { now_ns: now },
            enroll_length_min: 2.0,
        };
        let verifier = Verifier { id: "v".into(), key: *keys.get("v").unwrap(), nonce_seed: 1 };
        let r = run_session(prover, verifier, Channel::Direct(TransportKind::InProc)).unwrap();
        assert_eq!(r.outcome.outcome, Outcome::FallbackToExplicit);
        assert_eq!(r.repository.paths_for("v")[0].n(), 2);
    }

    #[test]
    fn wrong_key_is_a_mac_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth = quantize_legs(&random_route(&mut rng, 3.0), &[]);
        let mut repo = Repository::new();
        repo.enroll("v", &truth, 2.0, &RepositoryConfig::default()).unwrap();
        let prover = Prover {
            keys: KeyStore::derive(1, ["v"]),
            repo,
            repo_cfg: RepositoryConfig::default(),
            gate: GateConfig { enabled: false, ..Default::default() },
            source: Box::new(RecordedPath(truth)),
            user: UserDecision::Decline,
            clock: SimClock { now_ns: 0 },
            enroll_length_min: 2.0,
        };
        let verifier = Verifier { id: "v".into(), key: *KeyStore::derive(2, ["v"]).get("v").unwrap(), nonce_seed: 3 };
        assert!(matches!(
            run_session(prover, verifier, Channel::Direct(TransportKind::InProc)),
            Err(ProtocolError::MacMismatch)
        ));
    }

    #[test]
    fn gate_without_reference_path() {
        let mut src = RecordedPath(PrimitiveSequence::empty());
        let r = verify_proximity(
            &Repository::new(),
            "nobody",
            &mut src,
            &mut SimClock { now_ns: 0 },
            &GateConfig::default(),
            &ScoringScheme::default(),
        );
        assert!(matches!(r, Err(ProtocolError::NoReferencePath(_))));
    }

    #[test]
    fn medoid_passes_on_first_attempt() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let truth = quantize_legs(&random_route(&mut rng, 5.0), &[]);
        let mut repo = Repository::new();
        repo.enroll("v", &truth, 2.0, &RepositoryConfig::default()).unwrap();
        let now = truth.last_t_ns().unwrap();
        let d = verify_proximity(
            &repo,
            "v",
            &mut RecordedPath(truth),
            &mut SimClock { now_ns: now },
            &GateConfig::default(),
            &ScoringScheme::default(),
        )
        .unwrap();
        assert!(d.passed);
        assert_eq!(d.attempts_used, 1);
    }
}
