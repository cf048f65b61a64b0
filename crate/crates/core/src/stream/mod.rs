//! TCP sample stream.
//!
//! Every message is a frame: `"SFMG"`, version byte (1), message type byte,
//! payload length (u32 LE), payload. A session is
//!
//! ```text
//! client HELLO [version]          -> server HELLO [version][config hash, ASCII hex]
//! client REQUEST [start u64][count u32] -> server SAMPLE x count, in index order
//! client BYE                      -> server BYE, close
//! ```
//!
//! Errors are reported with an ERROR frame `[code][index u64, u64::MAX if none][message]`
//! after which the server closes the connection. Codes: 0x01 version mismatch,
//! 0x02 malformed input, 0x03 generation failure.

mod client;
mod frame;
mod payload;
mod server;

pub use client::StreamClient;
pub use frame::{
    decode_error, decode_request, encode_error, encode_request, encode_server_hello, read_frame, write_frame, ErrorCode, Frame,
    FrameError, MsgType, DEFAULT_PORT, FRAME_HEADER_LEN, MAGIC, PROTOCOL_VERSION,
};
pub use payload::{decode_sample, encode_sample, header_block_len, payload_len, row_bytes, SampleHeader, SamplePayload};
pub use server::{serve, ServerHandle, StreamServer};
