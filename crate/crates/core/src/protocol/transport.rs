//! Frame transports (in-process and TCP) and a byte-forwarding relay.

use std::io::{ErrorKind, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use super::ProtocolError;

pub const DEFAULT_RECV_TIMEOUT: Duration = Duration::from_secs(10);

/// Moves whole encoded frames between two endpoints.
pub trait Transport: Send + Sync {
    fn send(&self, frame: &[u8]) -> Result<(), ProtocolError>;
    /// Blocks until one complete frame (header included) arrives.
    fn recv(&self) -> Result<Vec<u8>, ProtocolError>;
    /// Closes the link in both directions.
    fn close(&self);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    InProc,
    Tcp,
}

impl std::str::FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inproc" => Ok(TransportKind::InProc),
            "tcp" => Ok(TransportKind::Tcp),
            _ => Err(format!("unknown transport `{s}`")),
        }
    }
}

/// One end of an in-process link.
pub struct InProcTransport {
    tx: Mutex<Option<Sender<Vec<u8>>>>,
    rx: Receiver<Vec<u8>>,
    closed: Arc<AtomicBool>,
    timeout: Duration,
}

impl InProcTransport {
    pub fn pair() -> (InProcTransport, InProcTransport) {
        Self::pair_with_timeout(DEFAULT_RECV_TIMEOUT)
    }

    pub fn pair_with_timeout(timeout: Duration) -> (InProcTransport, InProcTransport) {
        let (a_tx, b_rx) = unbounded();
        let (b_tx, a_rx) = unbounded();
        let closed = Arc::new(AtomicBool::new(false));
        (
            InProcTransport { tx: Mutex::new(Some(a_tx)), rx: a_rx, closed: closed.clone(), timeout },
            InProcTransport { tx: Mutex::new(Some(b_tx)), rx: b_rx, closed, timeout },
        )
    }
}

impl Transport for InProcTransport {
    fn send(&self, frame: &[u8]) -> Result<(), ProtocolError> {
        if self.closed.load(Ordering::SeqCst) {
            return Err(ProtocolError::ChannelClosed);
        }
        let guard = self.tx.lock().map_err(|_| ProtocolError::ChannelClosed)?;
        match guard.as_ref() {
            Some(tx) => tx.send(frame.to_vec()).map_err(|_| ProtocolError::ChannelClosed),
            None => Err(ProtocolError::ChannelClosed),
        }
    }

    fn recv(&self) -> Result<Vec<u8>, ProtocolError> {
        let start = Instant::now();
        loop {
            match self.rx.recv_timeout(Duration::from_millis(10)) {
                Ok(f) => return Ok(f),
                Err(RecvTimeoutError::Disconnected) => return Err(ProtocolError::ChannelClosed),
                Err(RecvTimeoutError::Timeout) => {
                    if self.closed.load(Ordering::SeqCst) {
                        return Err(ProtocolError::ChannelClosed);
                    }
                    if start.elapsed() >= self.timeout {
                        return Err(ProtocolError::Timeout);
                    }
                }
            }
        }
    }

    fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        if let Ok(mut g) = self.tx.lock() {
            g.take();
        }
    }
}

/// A TCP stream carrying length-prefixed frames.
pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn new(stream: TcpStream, timeout: Duration) -> Result<Self, ProtocolError> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        Ok(TcpTransport { stream })
    }

    /// Two connected endpoints over the loopback interface.
    pub fn loopback_pair() -> Result<(TcpTransport, TcpTransport), ProtocolError> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let client = TcpStream::connect(addr)?;
        let (server, _) = listener.accept()?;
        Ok((TcpTransport::new(server, DEFAULT_RECV_TIMEOUT)?, TcpTransport::new(client, DEFAULT_RECV_TIMEOUT)?))
    }
}

fn map_io(e: std::io::Error) -> ProtocolError {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => ProtocolError::Timeout,
        ErrorKind::UnexpectedEof
        | ErrorKind::ConnectionReset
        | ErrorKind::ConnectionAborted
        | ErrorKind::BrokenPipe
        | ErrorKind::NotConnected => ProtocolError::ChannelClosed,
        _ => ProtocolError::Io(e),
    }
}

impl Transport for TcpTransport {
    fn send(&self, frame: &[u8]) -> Result<(), ProtocolError> {
        (&self.stream).write_all(frame).map_err(map_io)?;
        (&self.stream).flush().map_err(map_io)
    }

    fn recv(&self) -> Result<Vec<u8>, ProtocolError> {
        let mut header = [0u8; 2];
        (&self.stream).read_exact(&mut header).map_err(map_io)?;
        let body = u16::from_be_bytes(header) as usize;
        let mut out = vec![0u8; 2 + body];
        out[..2].copy_from_slice(&header);
        (&self.stream).read_exact(&mut out[2..]).map_err(map_io)?;
        Ok(out)
    }

    fn close(&self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

/// Connected endpoint pair of either kind.
pub fn transport_pair(kind: TransportKind) -> Result<(Arc<dyn Transport>, Arc<dyn Transport>), ProtocolError> {
    Ok(match kind {
        TransportKind::InProc => {
            let (a, b) = InProcTransport::pair();
            (Arc::new(a), Arc::new(b))
        }
        TransportKind::Tcp => {
            let (a, b) = TcpTransport::loopback_pair()?;
            (Arc::new(a), Arc::new(b))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtoB,
    BtoA,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayedFrame {
    pub direction: Direction,
    pub bytes: Vec<u8>,
}

/// Handle for a running relay.
pub struct RelayHandle {
    a: Arc<dyn Transport>,
    b: Arc<dyn Transport>,
    threads: Vec<JoinHandle<()>>,
    transcript: Arc<Mutex<Vec<RelayedFrame>>>,
}

impl RelayHandle {
    /// Close both endpoints; the forwarding threads then stop.
    pub fn close(&self) {
        self.a.close();
        self.b.close();
    }

    pub fn transcript(&self) -> Vec<RelayedFrame> {
        self.transcript.lock().map(|t| t.clone()).unwrap_or_default()
    }

    /// Wait for both directions to stop and return everything forwarded.
    pub fn join(mut self) -> Vec<RelayedFrame> {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        self.transcript()
    }
}

/// Forward frames verbatim between `a` and `b`, adding `latency` per frame.
/// Stops, closing both sides, as soon as either side fails or closes.
pub fn relay_forward(a: Arc<dyn Transport>, b: Arc<dyn Transport>, latency: Duration) -> RelayHandle {
    let transcript = Arc::new(Mutex::new(Vec::new()));
    let spawn = |from: Arc<dyn Transport>, to: Arc<dyn Transport>, direction: Direction| {
        let log = transcript.clone();
        std::thread::spawn(move || {
            while let Ok(bytes) = from.recv() {
                if !latency.is_zero() {
                    std::thread::sleep(latency);
                }
                if let Ok(mut t) = log.lock() {
                    t.push(RelayedFrame { direction, bytes: bytes.clone() });
                }
                if to.send(&bytes).is_err() {
                    break;
                }
            }
            from.close();
            to.close();
        })
    };
    let threads = vec![spawn(a.clone(), b.clone(), Direction::AtoB), spawn(b.clone(), a.clone(), Direction::BtoA)];
    RelayHandle { a, b, threads, transcript }
}
