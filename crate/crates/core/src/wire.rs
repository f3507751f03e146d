//! Datagram frame layout shared by every channel.
//!
//! ```text
//! offset  size  field
//!      0     2  magic 0xFB 0x5E
//!      2     1  version 0x01
//!      3     1  msg_type (1 DATA, 2 KE_INIT, 3 KE_RESP, 4 TS)
//!      4     4  link_id      (big-endian)
//!      8     2  sender_id    (big-endian)
//!     10     1  key_epoch
//!     11     4  seq          (big-endian)
//!     15     2  payload_len  (big-endian)
//!     17     n  payload
//! ```

use alloc::vec::Vec;
use core::fmt;

pub const MAGIC: [u8; 2] = [0xFB, 0x5E];
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 17;
pub const MAX_PAYLOAD: usize = u16::MAX as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MsgType {
    Data = 0x01,
    KeInit = 0x02,
    KeResp = 0x03,
    Ts = 0x04,
}

impl MsgType {
    pub const ALL: [MsgType; 4] = [MsgType::Data, MsgType::KeInit, MsgType::KeResp, MsgType::Ts];

    pub fn from_byte(b: u8) -> Option<MsgType> {
        MsgType::ALL.into_iter().find(|t| *t as u8 == b)
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MsgType::Data => "DATA",
            MsgType::KeInit => "KE_INIT",
            MsgType::KeResp => "KE_RESP",
            MsgType::Ts => "TS",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireFrame {
    pub msg_type: MsgType,
    pub link_id: u32,
    pub sender_id: u16,
    pub epoch: u8,
    pub seq: u32,
    pub payload: Vec<u8>,
}

impl WireFrame {
    pub fn new(msg_type: MsgType, link_id: u32, sender_id: u16, epoch: u8, seq: u32, payload: Vec<u8>) -> Self {
        WireFrame {
            msg_type,
            link_id,
            sender_id,
            epoch,
            seq,
            payload,
        }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    /// Milliseconds carried by a TS frame.
    pub fn timestamp(&self) -> Option<u64> {
        match (self.msg_type, <[u8; 8]>::try_from(self.payload.as_slice())) {
            (MsgType::Ts, Ok(b)) => Some(u64::from_be_bytes(b)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds 65535")]
    PayloadTooLong(usize),
    #[error("DATA payload of {0} bytes is not a whole number of 16-byte blocks")]
    NotBlockAligned(usize),
    #[error("TS payload must be 8 bytes, got {0}")]
    BadTimestamp(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecodeReason {
    BadMagic,
    BadVersion,
    Truncated,
    BadLength,
    UnknownType,
}

impl DecodeReason {
    pub fn code(self) -> &'static str {
        match self {
            DecodeReason::BadMagic => "BAD_MAGIC",
            DecodeReason::BadVersion => "BAD_VERSION",
            DecodeReason::Truncated => "TRUNCATED",
            DecodeReason::BadLength => "BAD_LENGTH",
            DecodeReason::UnknownType => "UNKNOWN_TYPE",
        }
    }
}

impl fmt::Display for DecodeReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{reason}: {detail}")]
pub struct DecodeError {
    pub reason: DecodeReason,
    pub detail: &'static str,
}

fn fail(reason: DecodeReason, detail: &'static str) -> DecodeError {
    DecodeError { reason, detail }
}

fn check_payload(msg_type: MsgType, len: usize) -> Result<(), EncodeError> {
    match msg_type {
        MsgType::Data if !len.is_multiple_of(16) => Err(EncodeError::NotBlockAligned(len)),
        MsgType::Ts if len != 8 => Err(EncodeError::BadTimestamp(len)),
        _ => Ok(()),
    }
}

pub fn encode_frame(frame: &WireFrame) -> Result<Vec<u8>, EncodeError> {
    let len = frame.payload.len();
    if len > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLong(len));
    }
    check_payload(frame.msg_type, len)?;
    let mut out = Vec::with_capacity(HEADER_LEN + len);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame.msg_type as u8);
    out.extend_from_slice(&frame.link_id.to_be_bytes());
    out.extend_from_slice(&frame.sender_id.to_be_bytes());
    out.push(frame.epoch);
    out.extend_from_slice(&frame.seq.to_be_bytes());
    out.extend_from_slice(&(len as u16).to_be_bytes());
    out.extend_from_slice(&frame.payload);
    Ok(out)
}

pub fn decode_frame(bytes: &[u8]) -> Result<WireFrame, DecodeError> {
    if bytes.len() < 2 {
        return Err(fail(DecodeReason::Truncated, "shorter than magic"));
    }
    if bytes[..2] != MAGIC {
        return Err(fail(DecodeReason::BadMagic, "expected FB 5E"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(fail(DecodeReason::Truncated, "shorter than header"));
    }
    if bytes[2] != VERSION {
        return Err(fail(DecodeReason::BadVersion, "expected version 1"));
    }
    let msg_type = MsgType::from_byte(bytes[3]).ok_or(fail(DecodeReason::UnknownType, "message type not in 1..=4"))?;
    let be32 = |at: usize| u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
    let be16 = |at: usize| u16::from_be_bytes([bytes[at], bytes[at + 1]]);
    let len = be16(15) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() < len {
        return Err(fail(DecodeReason::Truncated, "payload shorter than declared length"));
    }
    if body.len() > len {
        return Err(fail(DecodeReason::BadLength, "trailing bytes after payload"));
    }
    if check_payload(msg_type, len).is_err() {
        return Err(fail(DecodeReason::BadLength, "payload length invalid for message type"));
    }
    Ok(WireFrame {
        msg_type,
        link_id: be32(4),
        sender_id: be16(8),
        epoch: bytes[10],
        seq: be32(11),
        payload: body.to_vec(),
    })
}
