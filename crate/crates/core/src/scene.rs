//! Shape-aware scenes: random Bezier shapes superimposed on a black canvas or
//! a circular phantom, with per-shape contrast `(1 - p) * (m * r)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, LabelMap, ScalarImage};
use crate::noiselib::{apply_noise_stack, NoiseSpec, NoiseStackSpec};
use crate::pipeline::{Interval, StageTimings};
use crate::shapegen::{sample_closed_shape, ShapeSamplingSpec};

const MAX_CONTRAST_DRAWS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneParams {
    pub shape_count_range: Interval<u32>,
    pub r_range: Interval<f64>,
    pub phantom_probability: f64,
    /// Phantom radius as a fraction of the canvas min-dimension.
    pub phantom_radius_range: Interval<f64>,
    /// Maximum phantom center offset as a fraction of the canvas size.
    pub phantom_jitter: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            shape_count_range: Interval::new(1, 8),
            r_range: Interval::new(-0.2, 0.2),
            phantom_probability: 0.5,
            phantom_radius_range: Interval::new(0.30, 0.45),
            phantom_jitter: 0.05,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        const S: &str = "SceneParams";
        let c = self.shape_count_range;
        if c.lo < 1 || c.lo > c.hi || c.hi > 64 {
            return Err(Error::validation(S, "shape_count_range", format!("{c} must be an ordered subset of [1, 64]")));
        }
        if !self.r_range.is_within(-1.0, 1.0) {
            return Err(Error::validation(S, "r_range", format!("{} must be an ordered subset of [-1, 1]", self.r_range)));
        }
        if !(0.0..=1.0).contains(&self.phantom_probability) {
            return Err(Error::validation(S, "phantom_probability", "must lie in [0, 1]"));
        }
        if !(self.phantom_radius_range.lo > 0.0 && self.phantom_radius_range.is_within(0.0, 0.5)) {
            return Err(Error::validation(S, "phantom_radius_range", "must be an ordered subset of (0, 0.5]"));
        }
        if !(0.0..=0.5).contains(&self.phantom_jitter) {
            return Err(Error::validation(S, "phantom_jitter", "must lie in [0, 0.5]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl Phantom {
    /// Pixel `(x, y)` belongs to the phantom iff its center is within the radius.
    pub fn covers(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 + 0.5 - self.center_x;
        let dy = y as f64 + 0.5 - self.center_y;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub image: ScalarImage,
    /// Phantom intensity, or 0 on the plain black canvas.
    pub p: f64,
    pub phantom: Option<Phantom>,
}

/// Black canvas, or (with `phantom_probability`) a uniform disk of intensity
/// `p ~ U(0, 1)` on black.
pub fn make_background(rng: &mut impl Rng, params: &SceneParams, width: usize, height: usize) -> Background {
    let with_phantom = params.phantom_probability > 0.0 && rng.random_bool(params.phantom_probability);
    if !with_phantom {
        return Background {
            image: ScalarImage::new(width, height),
            p: 0.0,
            phantom: None,
        };
    }
    let p: f64 = rng.random_range(0.0..1.0);
    let radius = params.phantom_radius_range.sample(rng) * width.min(height) as f64;
    let jitter = |rng: &mut dyn rand::RngCore, extent: usize| {
        let j = params.phantom_jitter * extent as f64;
        extent as f64 / 2.0 + if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 }
    };
    let center_x = jitter(rng, width);
    let center_y = jitter(rng, height);
    let phantom = Phantom { center_x, center_y, radius };

    let mut image = ScalarImage::new(width, height);
    let value = p as f32;
    for y in 0..height {
        for x in 0..width {
            if phantom.covers(x, y) {
                image.set(x, y, value);
            }
        }
    }
    Background {
        image,
        p,
        phantom: Some(phantom),
    }
}

/// The contrast heuristic `(1 - p) * (m * r)`, used as an additive offset from
/// the local background.
pub fn contrast_offset(p: f64, m: u32, r: f64) -> f64 {
    (1.0 - p) * (m as f64 * r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMeta {
    /// 1-based paint order.
    pub m: u32,
    pub r: f64,
    pub offset: f64,
    /// Sign of the first `r` draw was flipped because it produced no visible
    /// contrast anywhere under the shape.
    pub flipped: bool,
    /// Pixels of the rasterized shape before overlap resolution.
    pub area: usize,
    /// Instance label (1-based) if any pixel survived overpainting.
    pub instance: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSceneMeta {
    pub p: f64,
    pub phantom: Option<Phantom>,
    pub shape_count: u32,
    pub shapes: Vec<ShapeMeta>,
    pub noise: Vec<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeScene {
    pub image: ScalarImage,
    /// Background before any shape was painted.
    pub background: ScalarImage,
    /// Disjoint instances, label `k` is instance `k - 1` in paint order.
    pub instances: LabelMap,
    pub meta: ShapeSceneMeta,
}

impl ShapeScene {
    pub fn instance_count(&self) -> usize {
        self.instances.max_label() as usize
    }

    pub fn instance_masks(&self) -> Vec<BinaryMask> {
        self.instances.masks()
    }
}

pub fn compose_shape_scene(
    rng: &mut impl Rng,
    params: &SceneParams,
    shape_spec: &ShapeSamplingSpec,
    noise: &NoiseStackSpec,
    width: usize,
    height: usize,
) -> Result<ShapeScene> {
    compose_shape_scene_timed(rng, params, shape_spec, noise, width, height, &mut StageTimings::default())
}

pub(crate) fn compose_shape_scene_timed(
    rng: &mut impl Rng,
    params: &SceneParams,
    shape_spec: &ShapeSamplingSpec,
    noise: &NoiseStackSpec,
    width: usize,
    height: usize,
    timings: &mut StageTimings,
) -> Result<ShapeScene> {
    let bg = timings.time("background", || make_background(rng, params, width, height));
    let shape_count = params.shape_count_range.sample(rng);

    let mut image = bg.image.clone();
    // 0 = no shape, otherwise the paint index m.
    let mut owner = vec![0u32; width * height];
    let mut shapes = Vec::with_capacity(shape_count as usize);

    for m in 1..=shape_count {
        let mask = timings.time("shapes", || sample_closed_shape(rng, shape_spec, width, height))?;
        let Some((r, flipped)) = draw_visible_r(rng, params, &bg, &mask, m) else {
            shapes.push(ShapeMeta { m, r: 0.0, offset: 0.0, flipped: false, area: mask.count(), instance: None });
            continue;
        };
        let offset = contrast_offset(bg.p, m, r);
        timings.time("paint", || {
            for (i, _) in mask.data().iter().enumerate().filter(|(_, &b)| b) {
                image.data_mut()[i] = paint(bg.image.data()[i], offset);
                owner[i] = m;
            }
        });
        shapes.push(ShapeMeta { m, r, offset, flipped, area: mask.count(), instance: None });
    }

    // Relabel surviving shapes contiguously in paint order.
    let mut relabel = vec![0u32; shape_count as usize + 1];
    for &o in &owner {
        if o > 0 {
            relabel[o as usize] = 1;
        }
    }
    let mut next = 0;
    for (m, slot) in relabel.iter_mut().enumerate().skip(1) {
        if *slot == 1 {
            next += 1;
            *slot = next;
            shapes[m - 1].instance = Some(next);
        }
    }
    if next == 0 {
        return Err(Error::Generation {
            what: "shape scene with a visible instance",
            attempts: shape_count,
            seed: rng.next_u64(),
        });
    }
    let instances = LabelMap::from_vec(width, height, owner.iter().map(|&o| relabel[o as usize]).collect());

    let (mut image, applied) = timings.time("noise", || apply_noise_stack(&image, noise, rng));
    image.clamp_unit();

    Ok(ShapeScene {
        image,
        background: bg.image,
        instances,
        meta: ShapeSceneMeta {
            p: bg.p,
            phantom: bg.phantom,
            shape_count,
            shapes,
            noise: applied,
        },
    })
}

#[inline]
fn paint(background: f32, offset: f64) -> f32 {
    (background as f64 + offset).clamp(0.0, 1.0) as f32
}

/// Draws `r`, flipping its sign when the offset would be clamped away at every
/// pixel of the shape (e.g. a darker shape on the black canvas).
fn draw_visible_r(rng: &mut impl Rng, params: &SceneParams, bg: &Background, mask: &BinaryMask, m: u32) -> Option<(f64, bool)> {
    let visible = |r: f64| {
        let offset = contrast_offset(bg.p, m, r);
        mask.data()
            .iter()
            .zip(bg.image.data())
            .any(|(&inside, &b)| inside && paint(b, offset) != b)
    };
    for _ in 0..MAX_CONTRAST_DRAWS {
        let r = params.r_range.sample(rng);
        if visible(r) {
            return Some((r, false));
        }
        if params.r_range.contains(-r) && visible(-r) {
            return Some((-r, true));
        }
    }
    None
}
