//! Texture and noise models: additive Gaussian, scaled Poisson, Perlin texture,
//! multiplicative speckle, Rician magnitude noise, and Gaussian blur.
//!
//! None of these clamp; the scene composers clamp once at the end.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod perlin;

pub use perlin::{perlin_field, Perlin};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{gaussian_blur, ScalarImage};
use crate::pipeline::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Perlin,
    Poisson,
    Speckle,
    Rician,
    Gaussian,
    Blur,
}

impl NoiseKind {
    /// Application order of a stack: texture first, sensor noise, blur last.
    pub const ORDER: [NoiseKind; 6] = [
        NoiseKind::Perlin,
        NoiseKind::Poisson,
        NoiseKind::Speckle,
        NoiseKind::Rician,
        NoiseKind::Gaussian,
        NoiseKind::Blur,
    ];
}

/// One concrete noise application, with every parameter needed to replay it
/// (given the same RNG state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    Poisson { scale: f64 },
    Perlin { base_frequency: f64, octaves: u32, persistence: f64, amplitude: f64, seed: u64 },
    Speckle { sigma: f64 },
    Rician { sigma: f64 },
    Blur { sigma: f64 },
}

impl NoiseSpec {
    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseSpec::Gaussian { .. } => NoiseKind::Gaussian,
            NoiseSpec::Poisson { .. } => NoiseKind::Poisson,
            NoiseSpec::Perlin { .. } => NoiseKind::Perlin,
            NoiseSpec::Speckle { .. } => NoiseKind::Speckle,
            NoiseSpec::Rician { .. } => NoiseKind::Rician,
            NoiseSpec::Blur { .. } => NoiseKind::Blur,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::domain(format!("{what} in {self:?}")));
        match *self {
            NoiseSpec::Gaussian { sigma } | NoiseSpec::Speckle { sigma } | NoiseSpec::Rician { sigma } | NoiseSpec::Blur { sigma }
                if !(sigma >= 0.0) => bad("negative sigma"),
            NoiseSpec::Poisson { scale } if !(scale > 0.0) => bad("non-positive scale"),
            NoiseSpec::Perlin { octaves, persistence, amplitude, base_frequency, .. }
                if !(1..=6).contains(&octaves) || !(persistence > 0.0 && persistence <= 1.0) || !(amplitude >= 0.0) || !(base_frequency >= 1.0) =>
            {
                bad("perlin parameters out of range")
            }
            _ => Ok(()),
        }
    }

    /// Applies this spec to `img`. Negative inputs are an error for the
    /// Poisson and Rician models.
    pub fn apply(&self, img: &ScalarImage, rng: &mut impl Rng) -> Result<ScalarImage> {
        self.validate()?;
        Ok(match *self {
            NoiseSpec::Gaussian { sigma } => apply_gaussian(img, sigma, rng),
            NoiseSpec::Poisson { scale } => apply_poisson(img, scale, rng)?,
            NoiseSpec::Speckle { sigma } => apply_speckle(img, sigma, rng),
            NoiseSpec::Rician { sigma } => apply_rician(img, sigma, rng)?,
            NoiseSpec::Blur { sigma } => gaussian_blur(img, sigma),
            NoiseSpec::Perlin { base_frequency, octaves, persistence, amplitude, seed } => {
                let field = perlin_field(img.width(), img.height(), base_frequency, octaves, persistence, amplitude, seed);
                let data = img.data().iter().zip(field.data()).map(|(a, b)| a + b).collect();
                ScalarImage::from_vec(img.width(), img.height(), data)
            }
        })
    }
}

fn map_pixels(img: &ScalarImage, mut f: impl FnMut(f64) -> f64) -> ScalarImage {
    let data = img.data().iter().map(|&v| f(v as f64) as f32).collect();
    ScalarImage::from_vec(img.width(), img.height(), data)
}

fn check_non_negative(img: &ScalarImage, model: &str) -> Result<()> {
    match img.data().iter().find(|v| **v < 0.0) {
        Some(v) => Err(Error::domain(format!("{model} noise needs non-negative intensities, found {v}"))),
        None => Ok(()),
    }
}

/// `out = in + N(0, sigma^2)`.
pub fn apply_gaussian(img: &ScalarImage, sigma: f64, rng: &mut impl Rng) -> ScalarImage {
    if sigma == 0.0 {
        return img.clone();
    }
    map_pixels(img, |v| {
        let z: f64 = StandardNormal.sample(rng);
        v + sigma * z
    })
}

/// `out = Poisson(in * scale) / scale`.
pub fn apply_poisson(img: &ScalarImage, scale: f64, rng: &mut impl Rng) -> Result<ScalarImage> {
    if !(scale > 0.0) {
        return Err(Error::domain(format!("poisson scale must be positive, got {scale}")));
    }
    check_non_negative(img, "poisson")?;
    Ok(poisson_unchecked(img, scale, rng))
}

fn poisson_unchecked(img: &ScalarImage, scale: f64, rng: &mut impl Rng) -> ScalarImage {
    // Flat regions share one rate; rebuilding the sampler per pixel dominates otherwise.
    let mut cached: Option<(f64, Poisson<f64>)> = None;
    map_pixels(img, |v| {
        let lambda = v.max(0.0) * scale;
        if lambda <= 0.0 {
            return 0.0;
        }
        let dist = match &cached {
            Some((l, d)) if *l == lambda => d,
            _ => {
                let d = Poisson::new(lambda).expect("finite positive rate");
                &cached.insert((lambda, d)).1
            }
        };
        dist.sample(rng) / scale
    })
}

/// `out = in + in * N(0, sigma^2)`.
pub fn apply_speckle(img: &ScalarImage, sigma: f64, rng: &mut impl Rng) -> ScalarImage {
    if sigma == 0.0 {
        return img.clone();
    }
    map_pixels(img, |v| {
        let z: f64 = StandardNormal.sample(rng);
        v + v * sigma * z
    })
}

/// `out = sqrt((in + n1)^2 + n2^2)` with independent `n1, n2 ~ N(0, sigma^2)`.
pub fn apply_rician(img: &ScalarImage, sigma: f64, rng: &mut impl Rng) -> Result<ScalarImage> {
    check_non_negative(img, "rician")?;
    Ok(rician_unchecked(img, sigma, rng))
}

fn rician_unchecked(img: &ScalarImage, sigma: f64, rng: &mut impl Rng) -> ScalarImage {
    if sigma == 0.0 {
        return map_pixels(img, |v| v.max(0.0));
    }
    map_pixels(img, |v| {
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        (v.max(0.0) + sigma * n1).hypot(sigma * n2)
    })
}

/// Ranges the noise stack draws its parameters from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseStackSpec {
    /// How many distinct kinds to apply per image.
    pub count_range: Interval<u32>,
    /// Kinds eligible for selection.
    pub kinds: Vec<NoiseKind>,
    pub gaussian_sigma: Interval<f64>,
    pub poisson_scale: Interval<f64>,
    pub speckle_sigma: Interval<f64>,
    pub rician_sigma: Interval<f64>,
    pub perlin_base_frequency: Interval<f64>,
    pub perlin_octaves: Interval<u32>,
    pub perlin_persistence: Interval<f64>,
    pub perlin_amplitude: Interval<f64>,
    pub blur_sigma: Interval<f64>,
}

impl Default for NoiseStackSpec {
    fn default() -> Self {
        Self {
            count_range: Interval::new(1, 3),
            kinds: NoiseKind::ORDER.to_vec(),
            gaussian_sigma: Interval::new(0.01, 0.10),
            poisson_scale: Interval::new(20.0, 200.0),
            speckle_sigma: Interval::new(0.05, 0.30),
            rician_sigma: Interval::new(0.01, 0.10),
            perlin_base_frequency: Interval::new(2.0, 16.0),
            perlin_octaves: Interval::new(1, 4),
            perlin_persistence: Interval::new(0.5, 0.5),
            perlin_amplitude: Interval::new(0.05, 0.20),
            blur_sigma: Interval::new(0.0, 3.0),
        }
    }
}

impl NoiseStackSpec {
    /// A stack that never applies anything.
    pub fn disabled() -> Self {
        Self {
            count_range: Interval::new(0, 0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        const S: &str = "NoiseStackSpec";
        let mut kinds = self.kinds.clone();
        kinds.sort();
        kinds.dedup();
        if kinds.len() != self.kinds.len() {
            return Err(Error::validation(S, "kinds", "duplicate noise kind"));
        }
        let c = self.count_range;
        if c.lo > c.hi || c.hi as usize > self.kinds.len() {
            return Err(Error::validation(S, "count_range", format!("{c} must be an ordered subset of [0, {}]", self.kinds.len())));
        }
        let non_neg = |r: Interval<f64>, field: &'static str| {
            if r.lo >= 0.0 && r.lo <= r.hi && r.hi.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(S, field, format!("{r} must be an ordered non-negative interval")))
            }
        };
        non_neg(self.gaussian_sigma, "gaussian_sigma")?;
        non_neg(self.speckle_sigma, "speckle_sigma")?;
        non_neg(self.rician_sigma, "rician_sigma")?;
        non_neg(self.perlin_amplitude, "perlin_amplitude")?;
        non_neg(self.blur_sigma, "blur_sigma")?;
        non_neg(self.poisson_scale, "poisson_scale")?;
        if !(self.poisson_scale.lo > 0.0) {
            return Err(Error::validation(S, "poisson_scale", "scale must be positive"));
        }
        non_neg(self.perlin_base_frequency, "perlin_base_frequency")?;
        if self.perlin_base_frequency.lo < 1.0 {
            return Err(Error::validation(S, "perlin_base_frequency", "base frequency must be at least 1"));
        }
        let o = self.perlin_octaves;
        if o.lo > o.hi || o.lo < 1 || o.hi > 6 {
            return Err(Error::validation(S, "perlin_octaves", format!("{o} must be an ordered subset of [1, 6]")));
        }
        let p = self.perlin_persistence;
        if !(p.lo > 0.0 && p.lo <= p.hi && p.hi <= 1.0) {
            return Err(Error::validation(S, "perlin_persistence", format!("{p} must be an ordered subset of (0, 1]")));
        }
        Ok(())
    }

    fn draw(&self, kind: NoiseKind, rng: &mut impl Rng) -> NoiseSpec {
        match kind {
            NoiseKind::Gaussian => NoiseSpec::Gaussian { sigma: self.gaussian_sigma.sample(rng) },
            NoiseKind::Poisson => NoiseSpec::Poisson { scale: self.poisson_scale.sample(rng) },
            NoiseKind::Speckle => NoiseSpec::Speckle { sigma: self.speckle_sigma.sample(rng) },
            NoiseKind::Rician => NoiseSpec::Rician { sigma: self.rician_sigma.sample(rng) },
            NoiseKind::Blur => NoiseSpec::Blur { sigma: self.blur_sigma.sample(rng) },
            NoiseKind::Perlin => NoiseSpec::Perlin {
                base_frequency: self.perlin_base_frequency.sample(rng),
                octaves: self.perlin_octaves.sample(rng),
                persistence: self.perlin_persistence.sample(rng),
                amplitude: self.perlin_amplitude.sample(rng),
                seed: rng.next_u64(),
            },
        }
    }
}

/// Picks a random subset of noise kinds, draws their parameters and applies
/// them in [`NoiseKind::ORDER`]. Returns the result and the specs applied.
///
/// Inside a stack the photon (Poisson) and magnitude (Rician) models read
/// negative intermediate values as zero, since an earlier texture field may
/// push dark pixels below zero.
pub fn apply_noise_stack(img: &ScalarImage, stack: &NoiseStackSpec, rng: &mut impl Rng) -> (ScalarImage, Vec<NoiseSpec>) {
    let hi = stack.count_range.hi.min(stack.kinds.len() as u32);
    let lo = stack.count_range.lo.min(hi);
    let count = if lo == hi { lo } else { rng.random_range(lo..=hi) } as usize;
    if count == 0 {
        return (img.clone(), Vec::new());
    }
    let mut chosen: Vec<NoiseKind> = rand::seq::index::sample(rng, stack.kinds.len(), count)
        .into_iter()
        .map(|i| stack.kinds[i])
        .collect();
    chosen.sort();

    let mut out = img.clone();
    let mut applied = Vec::with_capacity(count);
    for kind in chosen {
        let spec = stack.draw(kind, rng);
        out = match spec {
            NoiseSpec::Poisson { scale } => poisson_unchecked(&out, scale, rng),
            NoiseSpec::Rician { sigma } => rician_unchecked(&out, sigma, rng),
            ref other => other.apply(&out, rng).expect("stack parameters are validated"),
        };
        applied.push(spec);
    }
    (out, applied)
}
