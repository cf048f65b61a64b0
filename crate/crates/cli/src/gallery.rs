//! Tiled PNG preview of generated samples.

use image::{Rgb, RgbImage};
use segsynth::imgcore::Point;
use segsynth::SampleRecord;

/// Longest tile side; larger samples are shown nearest-neighbour downscaled.
const MAX_TILE: usize = 256;
const GAP: u32 = 2;
const OVERLAY_ALPHA: f32 = 0.35;
const POSITIVE: [u8; 3] = [255, 230, 0];
const NEGATIVE: [u8; 3] = [230, 20, 20];

/// Fixed hue cycle so the gallery is identical across runs.
fn label_color(label: u32) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 8] = [
        [0, 160, 255],
        [0, 200, 120],
        [200, 80, 255],
        [255, 140, 0],
        [0, 220, 220],
        [255, 90, 160],
        [140, 200, 0],
        [120, 120, 255],
    ];
    PALETTE[(label as usize - 1) % PALETTE.len()]
}

fn tile_scale(r: &SampleRecord) -> f64 {
    let side = r.width().max(r.height());
    if side <= MAX_TILE { 1.0 } else { MAX_TILE as f64 / side as f64 }
}

fn draw_tile(canvas: &mut RgbImage, r: &SampleRecord, ox: u32, oy: u32) {
    let s = tile_scale(r);
    let tw = ((r.width() as f64 * s).round() as usize).max(1);
    let th = ((r.height() as f64 * s).round() as usize).max(1);
    for ty in 0..th {
        let y = ((ty as f64 + 0.5) / s) as usize;
        let y = y.min(r.height() - 1);
        for tx in 0..tw {
            let x = (((tx as f64 + 0.5) / s) as usize).min(r.width() - 1);
            let g = (r.image.get(x, y).clamp(0.0, 1.0) * 255.0).round();
            let label = r.instances.get(x, y);
            let px = if label == 0 {
                [g as u8; 3]
            } else {
                let c = label_color(label);
                c.map(|c| (g * (1.0 - OVERLAY_ALPHA) + c as f32 * OVERLAY_ALPHA).round() as u8)
            };
            canvas.put_pixel(ox + tx as u32, oy + ty as u32, Rgb(px));
        }
    }
    if let Some(p) = &r.prompts {
        let arm = ((4.0 * s).round() as i64).max(2);
        for q in &p.positives {
            draw_marker(canvas, *q, s, (ox, oy, tw, th), arm, POSITIVE);
        }
        for q in &p.negatives {
            draw_marker(canvas, *q, s, (ox, oy, tw, th), arm, NEGATIVE);
        }
    }
}

/// Plus-shaped marker clipped to its tile.
fn draw_marker(canvas: &mut RgbImage, p: Point, s: f64, tile: (u32, u32, usize, usize), arm: i64, color: [u8; 3]) {
    let (ox, oy, tw, th) = tile;
    let cx = ((p.x as f64 + 0.5) * s) as i64;
    let cy = ((p.y as f64 + 0.5) * s) as i64;
    for d in -arm..=arm {
        for (x, y) in [(cx + d, cy), (cx, cy + d)] {
            if x >= 0 && y >= 0 && (x as usize) < tw && (y as usize) < th {
                canvas.put_pixel(ox + x as u32, oy + y as u32, Rgb(color));
            }
        }
    }
}

/// Lays the samples out row-major on a near-square grid.
pub fn render(records: &[SampleRecord]) -> RgbImage {
    let n = records.len().max(1);
    let cols = (n as f64).sqrt().ceil() as u32;
    let rows = (n as u32).div_ceil(cols);
    let tile_w = records.iter().map(|r| (r.width() as f64 * tile_scale(r)).round() as u32).max().unwrap_or(1).max(1);
    let tile_h = records.iter().map(|r| (r.height() as f64 * tile_scale(r)).round() as u32).max().unwrap_or(1).max(1);
    let mut canvas = RgbImage::from_pixel(cols * (tile_w + GAP) + GAP, rows * (tile_h + GAP) + GAP, Rgb([32, 32, 32]));
    for (i, r) in records.iter().enumerate() {
        let (c, row) = (i as u32 % cols, i as u32 / cols);
        draw_tile(&mut canvas, r, GAP + c * (tile_w + GAP), GAP + row * (tile_h + GAP));
    }
    canvas
}
