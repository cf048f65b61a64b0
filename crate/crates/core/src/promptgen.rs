//! Click prompts for a target mask: positives at the centroid plus random
//! interior points, negatives by farthest-point sampling in a dilated band.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{centroid, dilate, BinaryMask, Point, StructuringElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptConfig {
    pub n_pos: u32,
    pub n_neg: u32,
}

impl PromptConfig {
    pub const fn new(n_pos: u32, n_neg: u32) -> Self {
        Self { n_pos, n_neg }
    }

    /// The four standard (positive, negative) configurations.
    pub const STANDARD: [PromptConfig; 4] = [Self::new(1, 0), Self::new(3, 0), Self::new(1, 2), Self::new(3, 2)];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub positives: Vec<Point>,
    pub negatives: Vec<Point>,
    pub config: PromptConfig,
    pub band_dilation: u32,
}

/// Prompt settings used by the pipeline; each sample draws one configuration uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptDefaults {
    pub enabled: bool,
    pub configs: Vec<PromptConfig>,
    /// `None` scales with the image (see [`default_dilation`]).
    pub dilation_iterations: Option<u32>,
}

impl Default for PromptDefaults {
    fn default() -> Self {
        Self { enabled: true, configs: PromptConfig::STANDARD.to_vec(), dilation_iterations: None }
    }
}

impl PromptDefaults {
    pub fn validate(&self) -> Result<()> {
        const S: &str = "PromptDefaults";
        if self.enabled && self.configs.is_empty() {
            return Err(Error::validation(S, "configs", "must list at least one configuration when prompts are enabled"));
        }
        if let Some(c) = self.configs.iter().find(|c| c.n_pos == 0) {
            return Err(Error::validation(S, "configs", format!("n_pos must be >= 1, got ({}, {})", c.n_pos, c.n_neg)));
        }
        if self.dilation_iterations == Some(0) {
            return Err(Error::validation(S, "dilation_iterations", "must be >= 1"));
        }
        Ok(())
    }

    pub fn dilation(&self, width: usize, height: usize) -> u32 {
        self.dilation_iterations.unwrap_or_else(|| default_dilation(width, height))
    }
}

/// `max(3, round(10 * min(width, height) / 1024))`.
pub fn default_dilation(width: usize, height: usize) -> u32 {
    let scaled = (10.0 * width.min(height) as f64 / 1024.0).round() as u32;
    scaled.max(3)
}

/// First point: the centroid if it is foreground, else the nearest foreground
/// pixel (raster order on ties). Remaining points are drawn without replacement
/// from the other foreground pixels, or with replacement when there are too few.
pub fn positive_prompts(mask: &BinaryMask, n: u32, rng: &mut impl Rng) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::domain("positive prompt count must be >= 1"));
    }
    let c = centroid(mask)?;
    let first = if mask.contains(c) {
        c
    } else {
        nearest_foreground(mask, c)
    };
    let rest: Vec<Point> = mask.points().filter(|&p| p != first).collect();
    let want = n as usize - 1;
    let mut out = Vec::with_capacity(n as usize);
    out.push(first);
    if rest.len() >= want {
        out.extend(rand::seq::index::sample(rng, rest.len(), want).into_iter().map(|i| rest[i]));
    } else {
        let pool: Vec<Point> = std::iter::once(first).chain(rest).collect();
        out.extend((0..want).map(|_| pool[rng.random_range(0..pool.len())]));
    }
    Ok(out)
}

fn nearest_foreground(mask: &BinaryMask, c: Point) -> Point {
    // strict `<` over raster order keeps the first of equally near pixels
    let mut best = None::<(i64, Point)>;
    for p in mask.points() {
        let d = p.dist2(c);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, p));
        }
    }
    best.expect("mask is nonempty").1
}

/// Candidate band for negatives: `dilate(mask, square3, iterations) \ mask`.
pub fn negative_band(mask: &BinaryMask, dilation_iterations: u32) -> BinaryMask {
    dilate(mask, StructuringElement::Square3, dilation_iterations).and_not(mask)
}

/// Farthest-point negatives. The first maximizes the distance to the mask
/// centroid; each later one maximizes its minimum distance to the chosen ones.
/// Ties go to the first candidate in raster order. Uses no randomness; the
/// `rng` parameter keeps the sampler signatures uniform.
pub fn negative_prompts(mask: &BinaryMask, n: u32, _rng: &mut impl Rng, dilation_iterations: u32) -> Result<Vec<Point>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let c = centroid(mask)?;
    let band: Vec<Point> = negative_band(mask, dilation_iterations).points().collect();
    if band.is_empty() {
        return Err(Error::NoBand);
    }
    let mut min_d: Vec<i64> = band.iter().map(|p| p.dist2(c)).collect();
    let mut out = Vec::with_capacity(n as usize);
    for k in 0..n {
        let mut bi = 0;
        for i in 1..band.len() {
            if min_d[i] > min_d[bi] {
                bi = i;
            }
        }
        let chosen = band[bi];
        out.push(chosen);
        if k + 1 < n {
            for (d, p) in min_d.iter_mut().zip(&band) {
                let nd = p.dist2(chosen);
                // first pass replaces the centroid distance
                *d = if k == 0 { nd } else { (*d).min(nd) };
            }
        }
    }
    Ok(out)
}

pub fn sample_prompts(mask: &BinaryMask, config: PromptConfig, rng: &mut impl Rng, dilation_iterations: u32) -> Result<PromptSet> {
    let positives = positive_prompts(mask, config.n_pos, rng)?;
    let negatives = negative_prompts(mask, config.n_neg, rng, dilation_iterations)?;
    Ok(PromptSet { positives, negatives, config, band_dilation: dilation_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SampleRng;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SampleRng {
        SampleRng::seed_from_u64(seed)
    }

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn disk_positive_is_center() {
        let m = disk(41, 41, 20.0, 20.0, 9.0);
        assert_eq!(positive_prompts(&m, 1, &mut rng(0)).unwrap(), vec![Point::new(20, 20)]);
    }

    #[test]
    fn annulus_positive_is_nearest_ring_pixel() {
        let m = BinaryMask::from_fn(41, 41, |x, y| {
            let d2 = (x as i64 - 20).pow(2) + (y as i64 - 20).pow(2);
            (36..=144).contains(&d2)
        });
        let p = positive_prompts(&m, 1, &mut rng(0)).unwrap()[0];
        assert!(m.contains(p));
        let c = centroid(&m).unwrap();
        let best = m.points().map(|q| q.dist2(c)).min().unwrap();
        assert_eq!(p.dist2(c), best);
        let first = m.points().find(|q| q.dist2(c) == best).unwrap();
        assert_eq!(p, first);
    }

    #[test]
    fn replacement_fallback_on_tiny_mask() {
        let mut m = BinaryMask::new(5, 5);
        m.set(1, 1, true);
        m.set(2, 1, true);
        let ps = positive_prompts(&m, 3, &mut rng(4)).unwrap();
        assert_eq!(ps.len(), 3);
        assert!(ps.iter().all(|&p| m.contains(p)));
    }

    #[test]
    fn positives_distinct_when_possible() {
        let m = disk(30, 30, 14.0, 14.0, 6.0);
        for seed in 0..200 {
            let ps = positive_prompts(&m, 5, &mut rng(seed)).unwrap();
            for i in 0..ps.len() {
                for j in 0..i {
                    assert_ne!(ps[i], ps[j]);
                }
            }
        }
    }

    #[test]
    fn square_first_negative_is_band_corner() {
        let m = BinaryMask::from_fn(61, 61, |x, y| (25..=35).contains(&x) && (25..=35).contains(&y));
        let n = negative_prompts(&m, 1, &mut rng(0), 3).unwrap();
        // band corners are (22,22), (38,22), (22,38), (38,38); raster order picks the first
        assert_eq!(n, vec![Point::new(22, 22)]);
        let band = negative_band(&m, 3);
        let c = centroid(&m).unwrap();
        let max = band.points().map(|p| p.dist2(c)).max().unwrap();
        assert_eq!(n[0].dist2(c), max);
    }

    #[test]
    fn second_negative_is_farthest_from_first() {
        let m = disk(64, 48, 30.0, 20.0, 8.0);
        let n = negative_prompts(&m, 2, &mut rng(0), 4).unwrap();
        let band = negative_band(&m, 4);
        let max = band.points().map(|p| p.dist2(n[0])).max().unwrap();
        assert_eq!(n[1].dist2(n[0]), max);
    }

    #[test]
    fn zero_negatives_and_no_band() {
        let m = disk(20, 20, 10.0, 10.0, 4.0);
        assert!(negative_prompts(&m, 0, &mut rng(0), 3).unwrap().is_empty());
        let full = BinaryMask::filled(8, 8, true);
        assert!(matches!(negative_prompts(&full, 1, &mut rng(0), 3), Err(Error::NoBand)));
        assert!(negative_prompts(&full, 0, &mut rng(0), 3).unwrap().is_empty());
        assert!(matches!(positive_prompts(&BinaryMask::new(4, 4), 1, &mut rng(0)), Err(Error::EmptyMask)));
    }

    #[test]
    fn configurations_and_determinism() {
        let m = disk(50, 50, 25.0, 25.0, 10.0);
        let s = sample_prompts(&m, PromptConfig::new(1, 0), &mut rng(1), 3).unwrap();
        assert_eq!((s.positives.len(), s.negatives.len()), (1, 0));
        let s = sample_prompts(&m, PromptConfig::new(3, 2), &mut rng(1), 3).unwrap();
        assert_eq!((s.positives.len(), s.negatives.len()), (3, 2));
        assert_eq!(s.band_dilation, 3);
        assert_eq!(s, sample_prompts(&m, PromptConfig::new(3, 2), &mut rng(1), 3).unwrap());
    }

    #[test]
    fn dilation_default_scales() {
        assert_eq!(default_dilation(1024, 1024), 10);
        assert_eq!(default_dilation(2048, 1024), 10);
        assert_eq!(default_dilation(2048, 2048), 20);
        assert_eq!(default_dilation(256, 256), 3);
        assert_eq!(default_dilation(512, 512), 5);
    }

    #[test]
    fn defaults_validate() {
        assert!(PromptDefaults::default().validate().is_ok());
        let bad = PromptDefaults { configs: vec![PromptConfig::new(0, 1)], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
