use std::io::{BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::sync_channel;
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use super::frame::{
    decode_request, encode_error, encode_server_hello, read_frame, write_frame, ErrorCode, FrameError, MsgType, PROTOCOL_VERSION,
};
use super::payload::encode_sample;
use crate::error::{Error, Result};
use crate::par::{map_range, Execution};
use crate::pipeline::{generate_sample, GenConfig};

/// Largest frame a client may send; requests are 12 bytes.
const MAX_CLIENT_PAYLOAD: u32 = 64 * 1024;
/// Encoded samples buffered per connection ahead of the socket.
const BUFFERED_SAMPLES: usize = 4;

/// A bound, not yet running stream server.
pub struct StreamServer {
    listener: TcpListener,
    cfg: Arc<GenConfig>,
    hash: Arc<str>,
}

/// Handle to a server running on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl StreamServer {
    pub fn bind(addr: impl ToSocketAddrs, cfg: GenConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.config_hash().into();
        Ok(Self { listener: TcpListener::bind(addr)?, cfg: Arc::new(cfg), hash })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until the process exits.
    pub fn run(self) -> Result<()> {
        self.accept_loop(&AtomicBool::new(false));
        Ok(())
    }

    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = thread::Builder::new().name("segsynth-accept".into()).spawn(move || self.accept_loop(&flag))?;
        Ok(ServerHandle { addr, stop, thread: Some(thread) })
    }

    fn accept_loop(&self, stop: &AtomicBool) {
        for conn in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            match conn {
                Ok(stream) => {
                    let (cfg, hash) = (Arc::clone(&self.cfg), Arc::clone(&self.hash));
                    let spawned = thread::Builder::new().name("segsynth-conn".into()).spawn(move || {
                        let peer = stream.peer_addr().ok();
                        if let Err(e) = handle_connection(stream, &cfg, &hash) {
                            log::debug!("connection {peer:?} ended: {e}");
                        }
                    });
                    if let Err(e) = spawned {
                        log::error!("could not spawn a connection thread: {e}");
                    }
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
    }
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting new connections; open connections run to completion.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_and_join();
        }
    }
}

/// Binds and serves forever.
pub fn serve(addr: impl ToSocketAddrs, cfg: GenConfig) -> Result<()> {
    let server = StreamServer::bind(addr, cfg)?;
    log::info!("serving on {}", server.local_addr()?);
    server.run()
}

fn handle_connection(stream: TcpStream, cfg: &GenConfig, hash: &str) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let fail = |w: &mut BufWriter<TcpStream>, code: ErrorCode, index: Option<u64>, msg: String| -> Result<()> {
        write_frame(w, MsgType::Error, &encode_error(code, index, &msg))?;
        Err(Error::Protocol(msg))
    };

    match read_frame(&mut reader, MAX_CLIENT_PAYLOAD) {
        Ok(f) if f.msg_type == MsgType::Hello => {
            if f.payload.first() != Some(&PROTOCOL_VERSION) {
                let v = f.payload.first().copied();
                return fail(&mut writer, ErrorCode::Version, None, format!("client protocol version {v:?}, server speaks {PROTOCOL_VERSION}"));
            }
        }
        Ok(f) => return fail(&mut writer, ErrorCode::Malformed, None, format!("expected HELLO, got {:?}", f.msg_type)),
        Err(FrameError::Eof) => return Ok(()),
        Err(FrameError::BadVersion(v)) => {
            return fail(&mut writer, ErrorCode::Version, None, format!("frame version {v}, server speaks {PROTOCOL_VERSION}"))
        }
        Err(FrameError::Io(e)) => return Err(e.into()),
        Err(e) => return fail(&mut writer, ErrorCode::Malformed, None, e.into_error().to_string()),
    }
    write_frame(&mut writer, MsgType::Hello, &encode_server_hello(hash))?;

    loop {
        let frame = match read_frame(&mut reader, MAX_CLIENT_PAYLOAD) {
            Ok(f) => f,
            Err(FrameError::Eof) => return Ok(()),
            Err(FrameError::Io(e)) => return Err(e.into()),
            Err(FrameError::BadVersion(v)) => return fail(&mut writer, ErrorCode::Version, None, format!("frame version {v}")),
            Err(e) => return fail(&mut writer, ErrorCode::Malformed, None, e.into_error().to_string()),
        };
        match frame.msg_type {
            MsgType::Request => {
                let Some((start, count)) = decode_request(&frame.payload) else {
                    return fail(&mut writer, ErrorCode::Malformed, None, format!("REQUEST payload of {} bytes", frame.payload.len()));
                };
                if count == 0 || start.checked_add(count as u64).is_none() {
                    return fail(&mut writer, ErrorCode::Malformed, None, format!("invalid request range start {start} count {count}"));
                }
                if let Err((index, e)) = serve_request(&mut writer, cfg, start, count)? {
                    return fail(&mut writer, ErrorCode::Generation, Some(index), e.to_string());
                }
            }
            MsgType::Bye => {
                write_frame(&mut writer, MsgType::Bye, &[])?;
                return Ok(());
            }
            other => return fail(&mut writer, ErrorCode::Malformed, None, format!("unexpected {other:?} frame")),
        }
    }
}

/// Streams `count` SAMPLE frames in index order. A producer thread generates
/// small chunks in parallel and hands encoded payloads over a bounded channel.
/// The outer result carries socket errors, the inner one generation failures.
fn serve_request(writer: &mut BufWriter<TcpStream>, cfg: &GenConfig, start: u64, count: u32) -> Result<std::result::Result<(), (u64, Error)>> {
    let (tx, rx) = sync_channel::<(u64, Result<Vec<u8>>)>(BUFFERED_SAMPLES);
    let end = start + count as u64;
    thread::scope(|s| {
        s.spawn(move || {
            let mut next = start;
            while next < end {
                let n = (end - next).min(BUFFERED_SAMPLES as u64);
                let chunk = map_range(n as usize, Execution::Parallel, |k| {
                    let i = next + k as u64;
                    (i, generate_sample(cfg, i).and_then(|r| encode_sample(&r)))
                });
                for item in chunk {
                    let failed = item.1.is_err();
                    if tx.send(item).is_err() || failed {
                        return;
                    }
                }
                next += n;
            }
        });
        for (index, payload) in rx.iter() {
            match payload {
                Ok(bytes) => write_frame(writer, MsgType::Sample, &bytes)?,
                Err(e) => return Ok(Err((index, e))),
            }
        }
        Ok(Ok(()))
    })
}
