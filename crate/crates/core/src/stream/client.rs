use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::frame::{decode_error, encode_request, read_frame, write_frame, Frame, MsgType, PROTOCOL_VERSION};
use super::payload::{decode_sample, SamplePayload};
use crate::error::{Error, Result};

/// Largest frame the client accepts (a 1024x1024 sample with a few dozen
/// instances is a few MiB).
const MAX_SERVER_PAYLOAD: u32 = 1 << 30;

/// Blocking client for the sample stream.
pub struct StreamClient {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    version: u8,
    config_hash: String,
    closed: bool,
}

impl StreamClient {
    /// Connects and completes the HELLO exchange.
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut client = Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            version: 0,
            config_hash: String::new(),
            closed: false,
        };
        write_frame(&mut client.writer, MsgType::Hello, &[PROTOCOL_VERSION])?;
        let f = client.expect(MsgType::Hello)?;
        let Some((&version, hash)) = f.payload.split_first() else {
            return Err(Error::Protocol("empty server HELLO".into()));
        };
        if version != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!("server speaks protocol version {version}")));
        }
        client.version = version;
        client.config_hash = String::from_utf8(hash.to_vec()).map_err(|_| Error::Protocol("config hash is not UTF-8".into()))?;
        Ok(client)
    }

    pub fn version(&self) -> u8 {
        self.version
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Requests `[start, start + count)` and returns the raw SAMPLE payloads in order.
    pub fn fetch_raw(&mut self, start: u64, count: u32) -> Result<Vec<Vec<u8>>> {
        self.ensure_open()?;
        if count == 0 {
            return Err(Error::Domain("fetch count must be >= 1".into()));
        }
        write_frame(&mut self.writer, MsgType::Request, &encode_request(start, count))?;
        (0..count).map(|_| self.expect(MsgType::Sample).map(|f| f.payload)).collect()
    }

    pub fn fetch(&mut self, start: u64, count: u32) -> Result<Vec<SamplePayload>> {
        let raw = self.fetch_raw(start, count)?;
        let samples: Vec<SamplePayload> = raw.iter().map(|b| decode_sample(b)).collect::<Result<_>>()?;
        for (k, s) in samples.iter().enumerate() {
            if s.header.sample_index != start + k as u64 {
                return Err(Error::Protocol(format!("expected sample {}, got {}", start + k as u64, s.header.sample_index)));
            }
        }
        Ok(samples)
    }

    /// Sends BYE and waits for the echo.
    pub fn bye(&mut self) -> Result<()> {
        self.ensure_open()?;
        write_frame(&mut self.writer, MsgType::Bye, &[])?;
        let r = self.expect(MsgType::Bye).map(|_| ());
        self.closed = true;
        r
    }

    /// Writes raw bytes to the socket, for exercising error paths.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.writer.write_all(bytes)?;
        self.writer.flush()?;
        Ok(())
    }

    /// Reads the next frame, whatever its type.
    pub fn read_frame(&mut self) -> Result<Frame> {
        read_frame(&mut self.reader, MAX_SERVER_PAYLOAD).map_err(|e| e.into_error())
    }

    fn ensure_open(&self) -> Result<()> {
        if self.closed {
            return Err(Error::Protocol("session closed".into()));
        }
        Ok(())
    }

    fn expect(&mut self, want: MsgType) -> Result<Frame> {
        let f = match self.read_frame() {
            Ok(f) => f,
            Err(e) => {
                self.closed = true;
                return Err(e);
            }
        };
        if f.msg_type == MsgType::Error {
            self.closed = true;
            let (code, index, message) = decode_error(&f.payload).ok_or_else(|| Error::Protocol("short ERROR payload".into()))?;
            let message = match index {
                Some(i) => format!("sample {i}: {message}"),
                None => message,
            };
            return Err(Error::Remote { code, message });
        }
        if f.msg_type != want {
            self.closed = true;
            return Err(Error::Protocol(format!("expected {want:?}, got {:?}", f.msg_type)));
        }
        Ok(f)
    }
}
