//! Wire frames: `u16 length (big-endian) | type | payload`, where the length
//! counts the type byte and the payload.

use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;

use super::ProtocolError;

pub const NONCE_LEN: usize = 16;
pub const MAC_LEN: usize = 32;
pub const KEY_LEN: usize = 32;
pub const MAX_FRAME_BODY: usize = u16::MAX as usize;

pub type Key = [u8; KEY_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameType {
    Challenge = 0x01,
    Response = 0x02,
    Accept = 0x03,
    Reject = 0x04,
}

impl FrameType {
    pub fn from_byte(b: u8) -> Result<Self, ProtocolError> {
        match b {
            0x01 => Ok(FrameType::Challenge),
            0x02 => Ok(FrameType::Response),
            0x03 => Ok(FrameType::Accept),
            0x04 => Ok(FrameType::Reject),
            other => Err(ProtocolError::MalformedFrame(format!("unknown frame type {other:#04x}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameType, payload: Vec<u8>) -> Self {
        Frame { kind, payload }
    }

    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        let body = 1 + self.payload.len();
        if body > MAX_FRAME_BODY {
            return Err(ProtocolError::MalformedFrame(format!("payload of {} bytes is too large", self.payload.len())));
        }
        let mut out = Vec::with_capacity(2 + body);
        out.extend_from_slice(&(body as u16).to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Decode exactly one frame; trailing bytes are an error.
    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() < 3 {
            return Err(ProtocolError::MalformedFrame("frame shorter than header".into()));
        }
        let body = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
        if body == 0 || bytes.len() != 2 + body {
            return Err(ProtocolError::MalformedFrame(format!(
                "length field {body} does not match {} bytes",
                bytes.len()
            )));
        }
        Ok(Frame { kind: FrameType::from_byte(bytes[2])?, payload: bytes[3..].to_vec() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub nonce: [u8; NONCE_LEN],
    pub verifier_id: String,
}

impl Challenge {
    pub fn to_frame(&self) -> Frame {
        let mut p = self.nonce.to_vec();
        p.extend_from_slice(self.verifier_id.as_bytes());
        Frame::new(FrameType::Challenge, p)
    }

    pub fn from_frame(f: &Frame) -> Result<Self, ProtocolError> {
        if f.kind != FrameType::Challenge {
            return Err(ProtocolError::UnexpectedFrame(f.kind as u8));
        }
        if f.payload.len() < NONCE_LEN {
            return Err(ProtocolError::MalformedFrame("challenge too short".into()));
        }
        let mut nonce = [0u8; NONCE_LEN];
        nonce.copy_from_slice(&f.payload[..NONCE_LEN]);
        let verifier_id = String::from_utf8(f.payload[NONCE_LEN..].to_vec())
            .map_err(|_| ProtocolError::MalformedFrame("verifier id is not UTF-8".into()))?;
        Ok(Challenge { nonce, verifier_id })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub mac: [u8; MAC_LEN],
}

impl Response {
    pub fn compute(key: &Key, challenge: &Challenge) -> Self {
        let mut m = mac_for(key);
        m.update(&challenge.nonce);
        m.update(challenge.verifier_id.as_bytes());
        Response { mac: m.finalize().into_bytes().into() }
    }

    /// Constant-time check against the enrolled key and exact nonce.
    pub fn verify(&self, key: &Key, challenge: &Challenge) -> bool {
        let mut m = mac_for(key);
        m.update(&challenge.nonce);
        m.update(challenge.verifier_id.as_bytes());
        m.verify_slice(&self.mac).is_ok()
    }

    pub fn to_frame(&self) -> Frame {
        Frame::new(FrameType::Response, self.mac.to_vec())
    }

    pub fn from_frame(f: &Frame) -> Result<Self, ProtocolError> {
        if f.kind != FrameType::Response {
            return Err(ProtocolError::UnexpectedFrame(f.kind as u8));
        }
        let mac: [u8; MAC_LEN] = f
            .payload
            .as_slice()
            .try_into()
            .map_err(|_| ProtocolError::MalformedFrame("response must carry a 32-byte MAC".into()))?;
        Ok(Response { mac })
    }
}

fn mac_for(key: &Key) -> Hmac<Sha256> {
    <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("HMAC accepts any key length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn challenge() -> Challenge {
        Challenge { nonce: [7; 16], verifier_id: "front-door".into() }
    }

    #[test]
    fn header_layout() {
        let f = Frame::new(FrameType::Accept, vec![]);
        assert_eq!(f.encode().unwrap(), vec![0, 1, 3]);
        let bytes = challenge().to_frame().encode().unwrap();
        assert_eq!(u16::from_be_bytes([bytes[0], bytes[1]]) as usize, bytes.len() - 2);
        assert_eq!(bytes[2], 1);
    }

    #[test]
    fn malformed_frames() {
        assert!(Frame::decode(&[0, 1]).is_err());
        assert!(Frame::decode(&[0, 2, 3]).is_err());
        assert!(Frame::decode(&[0, 1, 9]).is_err());
        assert!(Frame::new(FrameType::Response, vec![0; 70_000]).encode().is_err());
        assert!(Response::from_frame(&Frame::new(FrameType::Response, vec![1; 5])).is_err());
        assert!(Challenge::from_frame(&Frame::new(FrameType::Challenge, vec![1; 5])).is_err());
    }

    #[test]
    fn mac_binds_key_nonce_and_id() {
        let key = [3u8; 32];
        let c = challenge();
        let r = Response::compute(&key, &c);
        assert!(r.verify(&key, &c));
        assert!(!r.verify(&[4u8; 32], &c));
        let mut other = c.clone();
        other.nonce[0] ^= 1;
        assert!(!r.verify(&key, &other));
        let renamed = Challenge { verifier_id: "back-door".into(), ..c };
        assert!(!r.verify(&key, &renamed));
    }

    #[test]
    fn hmac_reference_vector() {
        // RFC 4231 test case 2.
        let mut m = <Hmac<Sha256> as KeyInit>::new_from_slice(b"Jefe").unwrap();
        m.update(b"what do ya want for nothing?");
        assert_eq!(
            hex::encode(m.finalize().into_bytes()),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
    }

    proptest! {
        #[test]
        fn frame_round_trip(kind in 1u8..=4, payload in prop::collection::vec(any::<u8>(), 0..300)) {
            let f = Frame::new(FrameType::from_byte(kind).unwrap(), payload);
            prop_assert_eq!(Frame::decode(&f.encode().unwrap()).unwrap(), f);
        }

        #[test]
        fn challenge_round_trip(nonce in any::<[u8; 16]>(), id in "[a-z0-9-]{0,40}") {
            let c = Challenge { nonce, verifier_id: id };
            prop_assert_eq!(Challenge::from_frame(&c.to_frame()).unwrap(), c);
        }
    }
}
