use std::fs;
use std::io::Cursor;
use std::ops::Range;
use std::path::Path;

use image::{GrayImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::{generate_sample, ModuleKind, SampleMeta, SampleRecord};
use super::GenConfig;
use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, ScalarImage};
use crate::par::{current_threads, map_range, Execution};
use crate::promptgen::PromptSet;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "segsynth-shard/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub format: String,
    pub config_hash: String,
    pub master_seed: u64,
    /// Half-open index range `[start, end)`.
    pub start: u64,
    pub end: u64,
    pub count: u64,
    pub config: GenConfig,
    pub files: Vec<FileEntry>,
}

/// Per-sample JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub sample_index: u64,
    pub module_kind: ModuleKind,
    pub width: usize,
    pub height: usize,
    pub instance_count: usize,
    pub target_index: usize,
    pub prompts: Option<PromptSet>,
    pub meta: SampleMeta,
}

impl SampleSidecar {
    pub fn of(r: &SampleRecord) -> Self {
        Self {
            sample_index: r.sample_index,
            module_kind: r.module_kind,
            width: r.width(),
            height: r.height(),
            instance_count: r.instance_count(),
            target_index: r.target_index,
            prompts: r.prompts.clone(),
            meta: r.meta.clone(),
        }
    }
}

/// `round_half_even(v * 65535)` after clamping to `[0, 1]`.
pub fn quantize_u16(v: f32) -> u16 {
    ((v.clamp(0.0, 1.0) as f64) * 65535.0).round_ties_even() as u16
}

fn encode_png<P, C>(img: &ImageBuffer<P, C>) -> Result<Vec<u8>>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

fn image_png(img: &ScalarImage) -> Result<Vec<u8>> {
    let data: Vec<u16> = img.data().iter().map(|&v| quantize_u16(v)).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, data).expect("buffer length matches dimensions");
    encode_png(&buf)
}

fn mask_png(mask: &BinaryMask) -> Result<Vec<u8>> {
    let data: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, data).expect("buffer length matches dimensions");
    encode_png(&buf)
}

fn sample_files(r: &SampleRecord) -> Result<Vec<(String, Vec<u8>)>> {
    let i = r.sample_index;
    let mut files = vec![(format!("{i:08}.img.png"), image_png(&r.image)?)];
    for (k, m) in r.instance_masks().iter().enumerate() {
        files.push((format!("{i:08}.mask{k:02}.png"), mask_png(m)?));
    }
    let meta = serde_json::to_vec_pretty(&SampleSidecar::of(r))?;
    files.push((format!("{i:08}.meta.json"), meta));
    Ok(files)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<ShardManifest> {
    let text = fs::read_to_string(dir.as_ref().join(MANIFEST_NAME))?;
    Ok(serde_json::from_str(&text)?)
}

/// Generates `indices` and writes images, masks, sidecars and the manifest.
///
/// Samples are generated in chunks so memory stays bounded for large ranges.
/// A directory holds one shard: an existing manifest with a different config
/// hash is an error, one with the same hash is replaced.
pub fn export_shard(cfg: &GenConfig, indices: Range<u64>, out_dir: impl AsRef<Path>, exec: Execution) -> Result<ShardManifest> {
    let dir = out_dir.as_ref();
    if indices.is_empty() {
        return Err(Error::domain(format!("empty index range {}..{}", indices.start, indices.end)));
    }
    let hash = cfg.config_hash();
    fs::create_dir_all(dir)?;
    if dir.join(MANIFEST_NAME).exists() {
        let existing = read_manifest(dir)?;
        if existing.config_hash != hash {
            return Err(Error::ConfigMismatch { dir: dir.to_path_buf(), existing: existing.config_hash, current: hash });
        }
    }

    let chunk = (current_threads() * 2).max(4) as u64;
    let mut entries = Vec::new();
    let mut start = indices.start;
    while start < indices.end {
        let end = (start + chunk).min(indices.end);
        let encoded = map_range((end - start) as usize, exec, |k| {
            generate_sample(cfg, start + k as u64).and_then(|r| sample_files(&r))
        });
        for files in encoded {
            for (name, bytes) in files? {
                fs::write(dir.join(&name), &bytes)?;
                entries.push(FileEntry { sha256: sha256_hex(&bytes), bytes: bytes.len() as u64, name });
            }
        }
        log::debug!("exported samples {start}..{end}");
        start = end;
    }

    let manifest = ShardManifest {
        format: MANIFEST_FORMAT.to_string(),
        config_hash: hash,
        master_seed: cfg.master_seed,
        start: indices.start,
        end: indices.end,
        count: indices.end - indices.start,
        config: cfg.clone(),
        files: entries,
    };
    fs::write(dir.join(MANIFEST_NAME), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Re-hashes every listed file; the first mismatch is reported by name.
pub fn verify_shard(dir: impl AsRef<Path>) -> Result<ShardManifest> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    for f in &manifest.files {
        let bytes = fs::read(dir.join(&f.name))?;
        if bytes.len() as u64 != f.bytes || sha256_hex(&bytes) != f.sha256 {
            return Err(Error::Checksum(f.name.clone()));
        }
    }
    Ok(manifest)
}

/// Reads a grayscale PNG as unit-interval intensities (16-bit aware).
pub fn read_image_png(path: impl AsRef<Path>) -> Result<ScalarImage> {
    let img = image::open(path)?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.into_raw().into_iter().map(|v| (v as f64 / 65535.0) as f32).collect();
    Ok(ScalarImage::from_vec(w, h, data))
}

/// Reads a PNG mask; any nonzero luma is foreground.
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(BinaryMask::from_vec(w, h, img.into_raw().into_iter().map(|v| v > 0).collect()))
}
