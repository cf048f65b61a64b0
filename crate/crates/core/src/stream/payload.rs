use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, ScalarImage};
use crate::pipeline::{ModuleKind, SampleRecord};

/// JSON header of a SAMPLE payload. Prompt points are `[x, y]` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleHeader {
    pub sample_index: u64,
    pub width: u32,
    pub height: u32,
    pub instance_count: u32,
    pub target_index: u32,
    pub module_kind: ModuleKind,
    pub positives: Vec<[i64; 2]>,
    pub negatives: Vec<[i64; 2]>,
    pub config_hash: String,
    pub seed: u64,
}

/// Decoded SAMPLE payload.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePayload {
    pub header: SampleHeader,
    pub image: ScalarImage,
    pub masks: Vec<BinaryMask>,
}

/// Bytes per packed mask row.
pub fn row_bytes(width: usize) -> usize {
    width.div_ceil(8)
}

/// Length of the `header_len` field plus the JSON, padded to a multiple of 8.
pub fn header_block_len(json_len: usize) -> usize {
    (4 + json_len).next_multiple_of(8)
}

/// Total payload size for the given dimensions.
pub fn payload_len(json_len: usize, width: usize, height: usize, instances: usize) -> usize {
    header_block_len(json_len) + 4 * width * height + instances * row_bytes(width) * height
}

impl SamplePayload {
    pub fn from_record(r: &SampleRecord) -> Result<Self> {
        let fit = |v: usize, what: &str| u32::try_from(v).map_err(|_| Error::Overflow(format!("{what} = {v}")));
        let pts = |v: Option<&Vec<crate::Point>>| v.map_or_else(Vec::new, |v| v.iter().map(|p| [p.x, p.y]).collect());
        Ok(Self {
            header: SampleHeader {
                sample_index: r.sample_index,
                width: fit(r.width(), "width")?,
                height: fit(r.height(), "height")?,
                instance_count: fit(r.instance_count(), "instance_count")?,
                target_index: fit(r.target_index, "target_index")?,
                module_kind: r.module_kind,
                positives: pts(r.prompts.as_ref().map(|p| &p.positives)),
                negatives: pts(r.prompts.as_ref().map(|p| &p.negatives)),
                config_hash: r.meta.config_hash.clone(),
                seed: r.meta.seed,
            },
            image: r.image.clone(),
            masks: r.instance_masks(),
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let (w, h) = (self.image.width(), self.image.height());
        if self.header.width as usize != w || self.header.height as usize != h {
            return Err(Error::ShapeMismatch(self.header.width as usize, self.header.height as usize, w, h));
        }
        if self.header.instance_count as usize != self.masks.len() {
            return Err(Error::domain(format!("header lists {} instances, payload has {}", self.header.instance_count, self.masks.len())));
        }
        let json = serde_json::to_vec(&self.header)?;
        let json_len = u32::try_from(json.len()).map_err(|_| Error::Overflow(format!("header of {} bytes", json.len())))?;
        let total = w
            .checked_mul(h)
            .and_then(|px| px.checked_mul(4))
            .and_then(|img| row_bytes(w).checked_mul(h)?.checked_mul(self.masks.len())?.checked_add(img))
            .and_then(|body| body.checked_add(header_block_len(json.len())))
            .filter(|&t| u32::try_from(t).is_ok())
            .ok_or_else(|| Error::Overflow(format!("{w}x{h} sample with {} masks exceeds a 4-byte frame length", self.masks.len())))?;

        let mut out = Vec::with_capacity(total);
        out.extend_from_slice(&json_len.to_le_bytes());
        out.extend_from_slice(&json);
        out.resize(header_block_len(json.len()), 0);
        for v in self.image.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let rb = row_bytes(w);
        for m in &self.masks {
            if m.width() != w || m.height() != h {
                return Err(Error::ShapeMismatch(m.width(), m.height(), w, h));
            }
            for row in m.data().chunks(w) {
                let start = out.len();
                out.resize(start + rb, 0);
                for (x, &on) in row.iter().enumerate() {
                    if on {
                        out[start + x / 8] |= 0x80 >> (x % 8);
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), total);
        Ok(out)
    }

    /// Strict inverse of [`encode`](Self::encode): padding and unused mask
    /// bits must be zero and the length must match exactly.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Protocol(format!("malformed sample payload: {m}"));
        if bytes.len() < 4 {
            return Err(bad("shorter than the header length field"));
        }
        let json_len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let block = header_block_len(json_len);
        if bytes.len() < block {
            return Err(bad("truncated header"));
        }
        let header: SampleHeader = serde_json::from_slice(&bytes[4..4 + json_len]).map_err(|e| bad(&format!("header json: {e}")))?;
        if bytes[4 + json_len..block].iter().any(|&b| b != 0) {
            return Err(bad("nonzero header padding"));
        }
        let (w, h, n) = (header.width as usize, header.height as usize, header.instance_count as usize);
        let expected = w
            .checked_mul(h)
            .and_then(|px| px.checked_mul(4))
            .and_then(|img| row_bytes(w).checked_mul(h)?.checked_mul(n)?.checked_add(img))
            .and_then(|body| body.checked_add(block));
        if expected != Some(bytes.len()) {
            return Err(bad("length does not match the header dimensions"));
        }
        let mut pos = block;
        let data = bytes[pos..pos + 4 * w * h]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += 4 * w * h;
        let rb = row_bytes(w);
        let mut masks = Vec::with_capacity(n);
        for _ in 0..n {
            let mut bits = Vec::with_capacity(w * h);
            for row in bytes[pos..pos + rb * h].chunks_exact(rb) {
                bits.extend((0..w).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
                if w % 8 != 0 && row[rb - 1] & (0xFFu8 >> (w % 8)) != 0 {
                    return Err(bad("nonzero mask row padding"));
                }
            }
            pos += rb * h;
            masks.push(BinaryMask::from_vec(w, h, bits));
        }
        Ok(Self { header, image: ScalarImage::from_vec(w, h, data), masks })
    }
}

/// SAMPLE payload bytes for a record.
pub fn encode_sample(record: &SampleRecord) -> Result<Vec<u8>> {
    SamplePayload::from_record(record)?.encode()
}

pub fn decode_sample(bytes: &[u8]) -> Result<SamplePayload> {
    SamplePayload::decode(bytes)
}
