use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::imgcore::ScalarImage;
use crate::SampleRng;

/// Supremum of single-octave 2-D gradient noise with unit-length gradients.
const UNIT_PERLIN_BOUND: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Eight unit gradients at multiples of 45 degrees.
const GRADIENTS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    (0.0, -1.0),
    (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

/// Classic gradient-lattice noise over a seeded permutation table.
#[derive(Clone)]
pub struct Perlin {
    perm: [u8; 512],
}

impl Perlin {
    pub fn new(seed: u64) -> Self {
        let mut table: Vec<u8> = (0..=255).collect();
        table.shuffle(&mut SampleRng::seed_from_u64(seed));
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        Self { perm }
    }

    #[inline]
    fn gradient(&self, ix: i64, iy: i64) -> (f64, f64) {
        let a = self.perm[(ix & 255) as usize] as usize;
        let h = self.perm[(a + (iy & 255) as usize) & 511];
        GRADIENTS[(h & 7) as usize]
    }

    /// Single-octave noise in `[-1/sqrt(2), 1/sqrt(2)]`; zero at integer nodes.
    pub fn noise(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as i64, y0 as i64);
        let dot = |gx: i64, gy: i64, dx: f64, dy: f64| {
            let g = self.gradient(gx, gy);
            g.0 * dx + g.1 * dy
        };
        let n00 = dot(ix, iy, fx, fy);
        let n10 = dot(ix + 1, iy, fx - 1.0, fy);
        let n01 = dot(ix, iy + 1, fx, fy - 1.0);
        let n11 = dot(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
        let (u, v) = (fade(fx), fade(fy));
        let a = n00 + u * (n10 - n00);
        let b = n01 + u * (n11 - n01);
        a + v * (b - a)
    }
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Fractal Perlin field. Octave `o` runs at `base_frequency * 2^o` lattice cells
/// per image width/height with weight `persistence^o`; the sum is scaled so its
/// theoretical bound maps to `amplitude`. Pixel `(x, y)` samples lattice
/// coordinate `(x * f / width, y * f / height)`.
pub fn perlin_field(
    width: usize,
    height: usize,
    base_frequency: f64,
    octaves: u32,
    persistence: f64,
    amplitude: f64,
    seed: u64,
) -> ScalarImage {
    let octaves = octaves.max(1);
    let layers: Vec<(Perlin, f64, f64)> = (0..octaves)
        .map(|o| {
            let layer_seed = seed.wrapping_add((o as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            (Perlin::new(layer_seed), base_frequency * (1u64 << o) as f64, persistence.powi(o as i32))
        })
        .collect();
    let total_weight: f64 = layers.iter().map(|l| l.2).sum();
    let scale = amplitude / (UNIT_PERLIN_BOUND * total_weight);

    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (p, f, w) in &layers {
                acc += w * p.noise(x as f64 * f / width as f64, y as f64 * f / height as f64);
            }
            data.push((acc * scale) as f32);
        }
    }
    ScalarImage::from_vec(width, height, data)
}
