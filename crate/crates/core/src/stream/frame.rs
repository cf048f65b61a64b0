use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SFMG";
pub const PROTOCOL_VERSION: u8 = 1;
/// magic (4) + version (1) + type (1) + payload length (4).
pub const FRAME_HEADER_LEN: usize = 10;
pub const DEFAULT_PORT: u16 = 7431;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Hello = 0x01,
    Request = 0x02,
    Sample = 0x03,
    Error = 0x04,
    Bye = 0x05,
}

impl MsgType {
    pub fn from_u8(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Self::Hello,
            0x02 => Self::Request,
            0x03 => Self::Sample,
            0x04 => Self::Error,
            0x05 => Self::Bye,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ErrorCode {
    Version = 0x01,
    Malformed = 0x02,
    Generation = 0x03,
}

impl ErrorCode {
    pub fn from_u8(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Self::Version,
            0x02 => Self::Malformed,
            0x03 => Self::Generation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

/// Why a frame could not be read.
#[derive(Debug)]
pub enum FrameError {
    /// Clean end of stream before the first header byte.
    Eof,
    Io(io::Error),
    BadMagic([u8; 4]),
    BadVersion(u8),
    UnknownType(u8),
    TooLarge(u32),
}

impl FrameError {
    pub fn into_error(self) -> Error {
        match self {
            FrameError::Eof => Error::Protocol("connection closed".into()),
            FrameError::Io(e) => Error::Io(e),
            FrameError::BadMagic(m) => Error::Protocol(format!("bad magic {m:02x?}")),
            FrameError::BadVersion(v) => Error::Protocol(format!("unsupported protocol version {v}")),
            FrameError::UnknownType(t) => Error::Protocol(format!("unknown message type {t:#04x}")),
            FrameError::TooLarge(n) => Error::Protocol(format!("payload of {n} bytes exceeds the limit")),
        }
    }
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let len = u32::try_from(self.payload.len()).map_err(|_| Error::Overflow(format!("payload of {} bytes", self.payload.len())))?;
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(PROTOCOL_VERSION);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }
}

pub fn write_frame(w: &mut impl Write, msg_type: MsgType, payload: &[u8]) -> Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| Error::Overflow(format!("payload of {} bytes", payload.len())))?;
    let mut header = [0u8; FRAME_HEADER_LEN];
    header[..4].copy_from_slice(&MAGIC);
    header[4] = PROTOCOL_VERSION;
    header[5] = msg_type as u8;
    header[6..].copy_from_slice(&len.to_le_bytes());
    w.write_all(&header)?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame, rejecting payloads longer than `max_payload`.
pub fn read_frame(r: &mut impl Read, max_payload: u32) -> std::result::Result<Frame, FrameError> {
    let mut header = [0u8; FRAME_HEADER_LEN];
    let mut got = 0;
    while got < FRAME_HEADER_LEN {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Err(FrameError::Eof),
            Ok(0) => return Err(FrameError::Io(io::ErrorKind::UnexpectedEof.into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(FrameError::Io(e)),
        }
    }
    let magic: [u8; 4] = header[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    if header[4] != PROTOCOL_VERSION {
        return Err(FrameError::BadVersion(header[4]));
    }
    let msg_type = MsgType::from_u8(header[5]).ok_or(FrameError::UnknownType(header[5]))?;
    let len = u32::from_le_bytes(header[6..].try_into().unwrap());
    if len > max_payload {
        return Err(FrameError::TooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(FrameError::Io)?;
    Ok(Frame { msg_type, payload })
}

/// REQUEST payload: start index (u64 LE) and count (u32 LE).
pub fn encode_request(start: u64, count: u32) -> Vec<u8> {
    let mut p = Vec::with_capacity(12);
    p.extend_from_slice(&start.to_le_bytes());
    p.extend_from_slice(&count.to_le_bytes());
    p
}

pub fn decode_request(p: &[u8]) -> Option<(u64, u32)> {
    if p.len() != 12 {
        return None;
    }
    Some((u64::from_le_bytes(p[..8].try_into().ok()?), u32::from_le_bytes(p[8..].try_into().ok()?)))
}

/// Server HELLO payload: version byte then the ASCII config hash.
pub fn encode_server_hello(config_hash: &str) -> Vec<u8> {
    let mut p = vec![PROTOCOL_VERSION];
    p.extend_from_slice(config_hash.as_bytes());
    p
}

/// ERROR payload: code, sample index (u64 LE, `u64::MAX` when not tied to a
/// sample), UTF-8 message.
pub fn encode_error(code: ErrorCode, index: Option<u64>, message: &str) -> Vec<u8> {
    let mut p = vec![code as u8];
    p.extend_from_slice(&index.unwrap_or(u64::MAX).to_le_bytes());
    p.extend_from_slice(message.as_bytes());
    p
}

pub fn decode_error(p: &[u8]) -> Option<(u8, Option<u64>, String)> {
    if p.len() < 9 {
        return None;
    }
    let index = u64::from_le_bytes(p[1..9].try_into().ok()?);
    let msg = String::from_utf8_lossy(&p[9..]).into_owned();
    Some((p[0], (index != u64::MAX).then_some(index), msg))
}
