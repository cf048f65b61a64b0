//! Boundary-aware scenes: a multi-cluster label map whose randomly selected
//! clusters are eroded so that neighbouring structures end up separated by thin
//! background rims, textured from a narrow-range random canvas.
//!
//! The label map is the argmax over `K` smooth random fields. Each field is
//! white noise on a coarse lattice, bilinearly upsampled and Gaussian-smoothed.
//! Upsampling and smoothing are both separable linear maps, so a field equals
//! `A * N * B^T` with `A` (rows x lattice) and `B` (cols x lattice) built once
//! per image; the full-resolution fields are never materialized.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{blur_1d, connected_components, gaussian_kernel, BinaryMask, LabelMap, ScalarImage, StructuringElement};
use crate::noiselib::{apply_noise_stack, NoiseSpec, NoiseStackSpec};
use crate::pipeline::{Interval, StageTimings};

const MAX_LABEL_RETRIES: u32 = 16;
const MAX_CARVE_RETRIES: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelMapSpec {
    pub cluster_count_range: Interval<u32>,
    /// Smoothing sigma in pixels; `None` means `min(width, height) / 64`.
    pub field_smoothing_sigma: Option<f64>,
    /// Coarse lattice size per axis.
    pub low_res_grid: u32,
}

impl Default for LabelMapSpec {
    fn default() -> Self {
        Self {
            cluster_count_range: Interval::new(10, 15),
            field_smoothing_sigma: None,
            low_res_grid: 16,
        }
    }
}

impl LabelMapSpec {
    pub fn validate(&self) -> Result<()> {
        const S: &str = "LabelMapSpec";
        let c = self.cluster_count_range;
        if c.lo < 2 || c.lo > c.hi || c.hi > 64 {
            return Err(Error::validation(S, "cluster_count_range", format!("{c} must be an ordered subset of [2, 64]")));
        }
        if let Some(s) = self.field_smoothing_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::validation(S, "field_smoothing_sigma", "must be a finite non-negative number"));
            }
        }
        if !(2..=256).contains(&self.low_res_grid) {
            return Err(Error::validation(S, "low_res_grid", "must lie in [2, 256]"));
        }
        Ok(())
    }

    pub fn smoothing_sigma(&self, width: usize, height: usize) -> f64 {
        self.field_smoothing_sigma.unwrap_or(width.min(height) as f64 / 64.0)
    }
}

/// Linear map from a coarse lattice axis to a full-resolution axis
/// (bilinear upsampling followed by 1-D Gaussian smoothing).
#[derive(Debug, Clone)]
pub(crate) struct AxisBasis {
    grid: usize,
    /// `len x grid`, row-major.
    weights: Vec<f64>,
    /// Per output position, the half-open range of lattice nodes with nonzero weight.
    support: Vec<(usize, usize)>,
}

impl AxisBasis {
    pub(crate) fn new(len: usize, grid: usize, sigma: f64) -> Self {
        let kernel = gaussian_kernel(sigma);
        let mut weights = vec![0.0; len * grid];
        for node in 0..grid {
            let column: Vec<f64> = (0..len).map(|i| bilinear_weight(i, len, grid, node)).collect();
            for (i, w) in blur_1d(&column, &kernel).into_iter().enumerate() {
                weights[i * grid + node] = w;
            }
        }
        let support = (0..len)
            .map(|i| {
                let row = &weights[i * grid..(i + 1) * grid];
                let lo = row.iter().position(|&w| w != 0.0).unwrap_or(0);
                let hi = row.iter().rposition(|&w| w != 0.0).map_or(lo, |p| p + 1);
                (lo, hi)
            })
            .collect();
        Self { grid, weights, support }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.grid..(i + 1) * self.grid]
    }
}

/// Weight of lattice `node` at output pixel `i`: the pixel center maps to
/// lattice coordinate `(i + 0.5) * grid / len - 0.5`, clamped to the lattice.
pub(crate) fn bilinear_weight(i: usize, len: usize, grid: usize, node: usize) -> f64 {
    let u = ((i as f64 + 0.5) * grid as f64 / len as f64 - 0.5).clamp(0.0, (grid - 1) as f64);
    let a = (u.floor() as usize).min(grid - 1);
    let frac = u - a as f64;
    if node == a {
        1.0 - frac
    } else if node == a + 1 {
        frac
    } else {
        0.0
    }
}

/// Argmax over smooth random fields. Every label `1..=K` is present; label 0 is unused.
pub fn synth_label_map(rng: &mut impl Rng, spec: &LabelMapSpec, width: usize, height: usize) -> Result<LabelMap> {
    let k = spec.cluster_count_range.sample(rng) as usize;
    let g = spec.low_res_grid as usize;
    let sigma = spec.smoothing_sigma(width, height);
    let rows = AxisBasis::new(height, g, sigma);
    let cols = AxisBasis::new(width, g, sigma);
    let draw = |rng: &mut dyn rand::RngCore| -> Vec<f64> { (0..g * g).map(|_| StandardNormal.sample(&mut *rng)).collect() };

    let mut noise: Vec<Vec<f64>> = (0..k).map(|_| draw(rng)).collect();
    for _ in 0..=MAX_LABEL_RETRIES {
        let labels = argmax_fields(&noise, &rows, &cols);
        let mut present = vec![false; k + 1];
        labels.data().iter().for_each(|&l| present[l as usize] = true);
        let missing: Vec<usize> = (1..=k).filter(|&l| !present[l]).collect();
        if missing.is_empty() {
            return Ok(labels);
        }
        for l in missing {
            noise[l - 1] = draw(rng);
        }
    }
    Err(Error::Generation {
        what: "label map with every cluster present",
        attempts: MAX_LABEL_RETRIES + 1,
        seed: rng.next_u64(),
    })
}

/// Projects each lattice noise through the column basis: `M_k = N_k * B^T`
/// (`grid x width`), then evaluates `A[i] . M_k[:, j]` row by row.
fn argmax_fields(noise: &[Vec<f64>], rows: &AxisBasis, cols: &AxisBasis) -> LabelMap {
    let g = rows.grid;
    let (height, width) = (rows.support.len(), cols.support.len());
    let projected: Vec<Vec<f64>> = noise
        .iter()
        .map(|n| {
            let mut m = vec![0.0; g * width];
            for a in 0..g {
                let nrow = &n[a * g..(a + 1) * g];
                let out = &mut m[a * width..(a + 1) * width];
                for (j, o) in out.iter_mut().enumerate() {
                    let (lo, hi) = cols.support[j];
                    let brow = cols.row(j);
                    *o = (lo..hi).map(|b| nrow[b] * brow[b]).sum();
                }
            }
            m
        })
        .collect();

    let mut labels = vec![0u32; width * height];
    let mut best = vec![0.0f64; width];
    let mut value = vec![0.0f64; width];
    for i in 0..height {
        let (lo, hi) = rows.support[i];
        let arow = rows.row(i);
        let out = &mut labels[i * width..(i + 1) * width];
        for (k, m) in projected.iter().enumerate() {
            value.iter_mut().for_each(|v| *v = 0.0);
            for a in lo..hi {
                let w = arow[a];
                for (v, x) in value.iter_mut().zip(&m[a * width..(a + 1) * width]) {
                    *v += w * x;
                }
            }
            // strict comparison keeps the lowest field index on ties
            for j in 0..width {
                if k == 0 || value[j] > best[j] {
                    best[j] = value[j];
                    out[j] = k as u32 + 1;
                }
            }
        }
    }
    LabelMap::from_vec(width, height, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarveSpec {
    pub selection_probability: f64,
    pub iteration_range: Interval<u32>,
    pub structuring_element: StructuringElement,
}

impl Default for CarveSpec {
    fn default() -> Self {
        Self {
            selection_probability: 0.5,
            iteration_range: Interval::new(1, 3),
            structuring_element: StructuringElement::Square3,
        }
    }
}

impl CarveSpec {
    pub fn validate(&self) -> Result<()> {
        const S: &str = "CarveSpec";
        if !(self.selection_probability > 0.0 && self.selection_probability <= 1.0) {
            return Err(Error::validation(S, "selection_probability", "must lie in (0, 1]"));
        }
        let r = self.iteration_range;
        if r.lo > r.hi || r.hi > 64 {
            return Err(Error::validation(S, "iteration_range", format!("{r} must be an ordered subset of [0, 64]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarveMeta {
    /// Selected cluster labels, ascending.
    pub selected: Vec<u32>,
    /// Erosion iterations, parallel to `selected`.
    pub iterations: Vec<u32>,
}

/// Erodes a random subset of clusters (each with its own iteration count) and
/// returns the union of all clusters as foreground; the carved rims become
/// background.
pub fn carve_boundaries(labels: &LabelMap, rng: &mut impl Rng, spec: &CarveSpec) -> Result<(BinaryMask, CarveMeta)> {
    let k = labels.max_label();
    let mut present = vec![false; k as usize + 1];
    labels.data().iter().for_each(|&l| present[l as usize] = true);
    let clusters: Vec<u32> = (1..=k).filter(|&l| present[l as usize]).collect();
    if clusters.len() < 2 {
        return Err(Error::DegenerateMask("carving needs at least two clusters"));
    }

    let selected: Vec<u32> = loop {
        let s: Vec<u32> = clusters.iter().copied().filter(|_| rng.random_bool(spec.selection_probability)).collect();
        if !s.is_empty() {
            break s;
        }
    };
    let iterations: Vec<u32> = selected.iter().map(|_| spec.iteration_range.sample(rng)).collect();

    let mut budget = vec![0u32; k as usize + 1];
    for (&c, &it) in selected.iter().zip(&iterations) {
        budget[c as usize] = it;
    }
    let fg = erode_clusters(labels, &budget, spec.structuring_element);
    Ok((fg, CarveMeta { selected, iterations }))
}

/// Erodes every cluster `c` by `budget[c]` iterations in one sweep per
/// iteration. Clusters are disjoint, so a pixel stays in its eroded cluster iff
/// every structuring-element neighbour is still alive and carries the same label.
fn erode_clusters(labels: &LabelMap, budget: &[u32], se: StructuringElement) -> BinaryMask {
    let (w, h) = (labels.width(), labels.height());
    let lab = labels.data();
    let mut alive: Vec<bool> = lab.iter().map(|&l| l > 0).collect();
    let max_iter = budget.iter().copied().max().unwrap_or(0);
    let offsets: &[(i64, i64)] = match se {
        StructuringElement::Square3 => &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)],
        StructuringElement::Cross3 => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
    };
    for t in 1..=max_iter {
        let prev = alive.clone();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let l = lab[i];
                if !prev[i] || budget[l as usize] < t {
                    continue;
                }
                let keep = offsets.iter().all(|&(dx, dy)| {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        return false;
                    }
                    let j = ny as usize * w + nx as usize;
                    prev[j] && lab[j] == l
                });
                alive[i] = keep;
            }
        }
    }
    BinaryMask::from_vec(w, h, alive)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanvasSpec {
    pub limit1_range: Interval<f64>,
    /// Distance between limit1 and limit2 (the side is a coin flip).
    pub delta_range: Interval<f64>,
    pub outlier_fraction_range: Interval<f64>,
    pub background_shift_range: Interval<f64>,
}

impl Default for CanvasSpec {
    fn default() -> Self {
        Self {
            limit1_range: Interval::new(0.1, 0.9),
            delta_range: Interval::new(0.02, 0.10),
            outlier_fraction_range: Interval::new(0.0, 0.03),
            background_shift_range: Interval::new(-0.10, 0.10),
        }
    }
}

impl CanvasSpec {
    pub fn validate(&self) -> Result<()> {
        const S: &str = "CanvasSpec";
        if !self.limit1_range.is_within(0.1, 0.9) {
            return Err(Error::validation(S, "limit1_range", format!("{} must be an ordered subset of [0.1, 0.9]", self.limit1_range)));
        }
        if !self.delta_range.is_within(0.0, 1.0) {
            return Err(Error::validation(S, "delta_range", format!("{} must be an ordered subset of [0, 1]", self.delta_range)));
        }
        if !self.outlier_fraction_range.is_within(0.0, 0.05) {
            return Err(Error::validation(
                S,
                "outlier_fraction_range",
                format!("{} must be an ordered subset of [0, 0.05]", self.outlier_fraction_range),
            ));
        }
        if !self.background_shift_range.is_within(-1.0, 1.0) {
            return Err(Error::validation(S, "background_shift_range", "must be an ordered subset of [-1, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasMeta {
    pub limit1: f64,
    pub limit2: f64,
    pub outlier_fraction: f64,
    pub foreground_outliers: usize,
    pub background_outliers: usize,
    pub canvas_mean: f64,
    pub background_shift: f64,
    pub background_value: f32,
}

/// Paints the foreground from a `[limit1, limit2]` canvas and the background
/// with one shared value, `mean(canvas) + shift`.
///
/// Outlier positions are drawn separately inside the foreground and the
/// background, each as `round(fraction * area)` positions, so the out-of-range
/// share of the foreground never exceeds the drawn fraction.
pub fn canvas_texture(foreground: &BinaryMask, rng: &mut impl Rng, spec: &CanvasSpec) -> Result<(ScalarImage, CanvasMeta)> {
    if foreground.is_empty() {
        return Err(Error::DegenerateMask("canvas texture needs a nonempty foreground"));
    }
    if foreground.is_full() {
        return Err(Error::DegenerateMask("canvas texture needs some background"));
    }
    let limit1 = spec.limit1_range.sample(rng);
    let delta = spec.delta_range.sample(rng);
    let limit2 = if rng.random_bool(0.5) { limit1 + delta } else { limit1 - delta }.clamp(0.0, 1.0);
    let (lo, hi) = if limit1 <= limit2 { (limit1, limit2) } else { (limit2, limit1) };

    let n = foreground.data().len();
    let mut canvas: Vec<f32> = (0..n)
        .map(|_| if lo < hi { rng.random_range(lo..=hi) } else { lo } as f32)
        .collect();
    // Keep f32 rounding from leaving the interval.
    let (lo32, hi32) = (lo as f32, hi as f32);
    canvas.iter_mut().for_each(|v| *v = v.clamp(lo32, hi32));

    let outlier_fraction = spec.outlier_fraction_range.sample(rng);
    let mut outliers = [0usize; 2];
    for (slot, want_fg) in [(0usize, true), (1, false)] {
        let positions: Vec<usize> = foreground
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == want_fg)
            .map(|(i, _)| i)
            .collect();
        let count = (outlier_fraction * positions.len() as f64).floor() as usize;
        for idx in rand::seq::index::sample(rng, positions.len(), count) {
            canvas[positions[idx]] = rng.random_range(0.0f32..=1.0);
        }
        outliers[slot] = count;
    }

    let canvas_mean = canvas.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let background_shift = spec.background_shift_range.sample(rng);
    let background_value = (canvas_mean + background_shift).clamp(0.0, 1.0) as f32;

    let data = canvas
        .iter()
        .zip(foreground.data())
        .map(|(&c, &fg)| if fg { c } else { background_value })
        .collect();
    let (w, h) = (foreground.width(), foreground.height());
    Ok((
        ScalarImage::from_vec(w, h, data),
        CanvasMeta {
            limit1,
            limit2,
            outlier_fraction,
            foreground_outliers: outliers[0],
            background_outliers: outliers[1],
            canvas_mean,
            background_shift,
            background_value,
        },
    ))
}

/// All boundary-module sampling specs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundarySpecs {
    pub label_map: LabelMapSpec,
    pub carve: CarveSpec,
    pub canvas: CanvasSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySceneMeta {
    pub cluster_count: u32,
    pub carve: CarveMeta,
    /// Carving attempts until the foreground was neither empty nor full.
    pub carve_attempts: u32,
    pub canvas: CanvasMeta,
    pub noise: Vec<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScene {
    pub image: ScalarImage,
    pub labels: LabelMap,
    pub foreground: BinaryMask,
    /// 8-connected components of the foreground.
    pub instances: LabelMap,
    pub meta: BoundarySceneMeta,
}

impl BoundaryScene {
    pub fn instance_count(&self) -> usize {
        self.instances.max_label() as usize
    }

    pub fn instance_masks(&self) -> Vec<BinaryMask> {
        self.instances.masks()
    }
}

pub fn compose_boundary_scene(
    rng: &mut impl Rng,
    specs: &BoundarySpecs,
    noise: &NoiseStackSpec,
    width: usize,
    height: usize,
) -> Result<BoundaryScene> {
    compose_boundary_scene_timed(rng, specs, noise, width, height, &mut StageTimings::default())
}

pub(crate) fn compose_boundary_scene_timed(
    rng: &mut impl Rng,
    specs: &BoundarySpecs,
    noise: &NoiseStackSpec,
    width: usize,
    height: usize,
    timings: &mut StageTimings,
) -> Result<BoundaryScene> {
    let labels = timings.time("label_map", || synth_label_map(rng, &specs.label_map, width, height))?;

    let mut carved = None;
    let mut attempts = 0;
    while attempts < MAX_CARVE_RETRIES && carved.is_none() {
        attempts += 1;
        let (fg, meta) = timings.time("carve", || carve_boundaries(&labels, rng, &specs.carve))?;
        if !fg.is_empty() && !fg.is_full() {
            carved = Some((fg, meta));
        }
    }
    let Some((foreground, carve)) = carved else {
        return Err(Error::Generation {
            what: "carved foreground that is neither empty nor full",
            attempts,
            seed: rng.next_u64(),
        });
    };

    let (image, canvas) = timings.time("canvas", || canvas_texture(&foreground, rng, &specs.canvas))?;
    let (mut image, applied) = timings.time("noise", || apply_noise_stack(&image, noise, rng));
    image.clamp_unit();
    let instances = timings.time("components", || connected_components(&foreground, 8));

    Ok(BoundaryScene {
        image,
        meta: BoundarySceneMeta {
            cluster_count: labels.max_label(),
            carve,
            carve_attempts: attempts,
            canvas,
            noise: applied,
        },
        labels,
        foreground,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{erode, gaussian_kernel, reflect_index};
    use crate::SampleRng;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SampleRng {
        SampleRng::seed_from_u64(seed)
    }

    /// Direct route: upsample the whole lattice to full resolution, then blur
    /// rows and columns with mirror reflection.
    fn naive_field(noise: &[f64], g: usize, w: usize, h: usize, sigma: f64) -> Vec<f64> {
        let up = |i: usize, len: usize| {
            let u = ((i as f64 + 0.5) * g as f64 / len as f64 - 0.5).clamp(0.0, (g - 1) as f64);
            let a = (u.floor() as usize).min(g - 1);
            (a, (a + 1).min(g - 1), u - a as f64)
        };
        let mut field = vec![0.0; w * h];
        for y in 0..h {
            let (y0, y1, fy) = up(y, h);
            for x in 0..w {
                let (x0, x1, fx) = up(x, w);
                let v = |a: usize, b: usize| noise[a * g + b];
                let top = v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx;
                let bot = v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx;
                field[y * w + x] = top * (1.0 - fy) + bot * fy;
            }
        }
        let k = gaussian_kernel(sigma);
        let r = (k.len() / 2) as i64;
        let mut tmp = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                tmp[y * w + x] = (0..k.len()).map(|t| k[t] * field[y * w + reflect_index(x as i64 + t as i64 - r, w)]).sum();
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                out[y * w + x] = (0..k.len()).map(|t| k[t] * tmp[reflect_index(y as i64 + t as i64 - r, h) * w + x]).sum();
            }
        }
        out
    }

    #[test]
    fn factorized_field_matches_direct_route() {
        let mut r = rng(3);
        let (w, h, g) = (37usize, 29usize, 6usize);
        let sigma = 2.5;
        let noise: Vec<f64> = (0..g * g).map(|_| StandardNormal.sample(&mut r)).collect();
        let rows = AxisBasis::new(h, g, sigma);
        let cols = AxisBasis::new(w, g, sigma);
        let direct = naive_field(&noise, g, w, h, sigma);
        for y in 0..h {
            for x in 0..w {
                let mut v = 0.0;
                for a in 0..g {
                    for b in 0..g {
                        v += rows.row(y)[a] * noise[a * g + b] * cols.row(x)[b];
                    }
                }
                assert!((v - direct[y * w + x]).abs() < 1e-9);
            }
        }
        // argmax path agrees with the argmax of the direct fields
        let fields: Vec<Vec<f64>> = (0..4).map(|_| (0..g * g).map(|_| StandardNormal.sample(&mut r)).collect()).collect();
        let labels = argmax_fields(&fields, &rows, &cols);
        let direct: Vec<Vec<f64>> = fields.iter().map(|n| naive_field(n, g, w, h, sigma)).collect();
        let mut agree = 0;
        for (i, &l) in labels.data().iter().enumerate() {
            let best = (0..4).fold(0, |b, k| if direct[k][i] > direct[b][i] { k } else { b });
            agree += (l == best as u32 + 1) as usize;
        }
        assert_eq!(agree, w * h);
    }

    #[test]
    fn label_map_cluster_counts_and_coverage() {
        let spec = LabelMapSpec::default();
        for seed in 0..100 {
            let l = synth_label_map(&mut rng(seed), &spec, 96, 80).unwrap();
            let k = l.max_label();
            assert!((10..=15).contains(&k));
            let mut seen = vec![false; k as usize + 1];
            for &v in l.data() {
                assert!(v >= 1);
                seen[v as usize] = true;
            }
            assert!(seen[1..].iter().all(|&s| s));
        }
        let a = synth_label_map(&mut rng(5), &spec, 64, 64).unwrap();
        assert_eq!(a, synth_label_map(&mut rng(5), &spec, 64, 64).unwrap());
    }

    #[test]
    fn sweep_erosion_matches_per_cluster_erosion() {
        let spec = LabelMapSpec::default();
        for seed in 0..30 {
            let labels = synth_label_map(&mut rng(seed), &spec, 48, 40).unwrap();
            let carve = CarveSpec { iteration_range: Interval::new(0, 3), ..Default::default() };
            let se = if seed % 2 == 0 { StructuringElement::Square3 } else { StructuringElement::Cross3 };
            let carve = CarveSpec { structuring_element: se, ..carve };
            let (fg, meta) = carve_boundaries(&labels, &mut rng(seed + 1000), &carve).unwrap();
            let mut expected = BinaryMask::new(48, 40);
            for c in 1..=labels.max_label() {
                let m = labels.mask_of(c);
                let m = match meta.selected.iter().position(|&s| s == c) {
                    Some(i) => erode(&m, se, meta.iterations[i]),
                    None => m,
                };
                expected = expected.or(&m);
            }
            assert_eq!(fg, expected, "seed {seed}");
        }
    }

    #[test]
    fn zero_iterations_keep_full_canvas() {
        let labels = synth_label_map(&mut rng(1), &LabelMapSpec::default(), 40, 40).unwrap();
        let spec = CarveSpec { iteration_range: Interval::new(0, 0), ..Default::default() };
        let (fg, _) = carve_boundaries(&labels, &mut rng(2), &spec).unwrap();
        assert!(fg.is_full());
    }

    #[test]
    fn carving_strictly_shrinks_touching_clusters() {
        let labels = synth_label_map(&mut rng(8), &LabelMapSpec::default(), 64, 64).unwrap();
        let spec = CarveSpec { selection_probability: 1.0, iteration_range: Interval::new(1, 1), ..Default::default() };
        let (fg, meta) = carve_boundaries(&labels, &mut rng(9), &spec).unwrap();
        assert_eq!(meta.selected.len() as u32, labels.max_label());
        for c in 1..=labels.max_label() {
            let orig = labels.mask_of(c);
            let eroded = orig.and(&fg);
            assert!(eroded.is_subset_of(&orig));
            assert!(eroded.count() < orig.count());
        }
    }

    #[test]
    fn single_cluster_rejected() {
        let labels = LabelMap::from_vec(4, 4, vec![1; 16]);
        assert!(carve_boundaries(&labels, &mut rng(0), &CarveSpec::default()).is_err());
    }

    #[test]
    fn canvas_rules() {
        let fg = BinaryMask::from_fn(50, 40, |x, y| (x / 7 + y / 5) % 2 == 0);
        let no_outliers = CanvasSpec { outlier_fraction_range: Interval::new(0.0, 0.0), background_shift_range: Interval::new(0.0, 0.0), ..Default::default() };
        for seed in 0..50 {
            let (img, meta) = canvas_texture(&fg, &mut rng(seed), &no_outliers).unwrap();
            let (lo, hi) = (meta.limit1.min(meta.limit2) as f32, meta.limit1.max(meta.limit2) as f32);
            let mut bg_values = Vec::new();
            for (i, &f) in fg.data().iter().enumerate() {
                let v = img.data()[i];
                if f {
                    assert!(v >= lo && v <= hi);
                } else {
                    bg_values.push(v);
                }
            }
            bg_values.dedup();
            assert_eq!(bg_values.len(), 1);
            assert!((bg_values[0] as f64 - meta.canvas_mean).abs() < 1e-6);
            assert!((0.1..=0.9).contains(&meta.limit1));
            assert!((meta.limit1 - meta.limit2).abs() <= 0.10 + 1e-12);
        }
    }

    #[test]
    fn canvas_rejects_degenerate_masks() {
        assert!(canvas_texture(&BinaryMask::new(5, 5), &mut rng(0), &CanvasSpec::default()).is_err());
        assert!(canvas_texture(&BinaryMask::filled(5, 5, true), &mut rng(0), &CanvasSpec::default()).is_err());
    }

    #[test]
    fn scene_invariants() {
        let specs = BoundarySpecs::default();
        for seed in 0..30 {
            let s = compose_boundary_scene(&mut rng(seed), &specs, &NoiseStackSpec::disabled(), 96, 96).unwrap();
            let union = s.instance_masks().iter().fold(BinaryMask::new(96, 96), |acc, m| acc.or(m));
            assert_eq!(union, s.foreground);
            let mut bg: Vec<f32> = s.image.data().iter().zip(s.foreground.data()).filter(|(_, &f)| !f).map(|(&v, _)| v).collect();
            bg.sort_by(f32::total_cmp);
            bg.dedup();
            assert_eq!(bg.len(), 1);
        }
        let a = compose_boundary_scene(&mut rng(77), &specs, &NoiseStackSpec::default(), 64, 48).unwrap();
        let b = compose_boundary_scene(&mut rng(77), &specs, &NoiseStackSpec::default(), 64, 48).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cluster_count_within_range_for_many_seeds() {
        let spec = LabelMapSpec::default();
        for seed in 0..1000 {
            let k = synth_label_map(&mut rng(seed), &spec, 32, 32).unwrap().max_label();
            assert!((10..=15).contains(&k), "seed {seed}: {k}");
        }
    }

    #[test]
    fn selected_neighbours_end_two_pixels_apart() {
        let spec = CarveSpec { selection_probability: 1.0, iteration_range: Interval::new(1, 1), ..Default::default() };
        for seed in 0..100 {
            let labels = synth_label_map(&mut rng(seed), &LabelMapSpec::default(), 64, 64).unwrap();
            let (fg, _) = carve_boundaries(&labels, &mut rng(seed ^ 0xabc), &spec).unwrap();
            let (w, h) = (64i64, 64i64);
            for p in fg.points() {
                let c = labels.get(p.x as usize, p.y as usize);
                for dy in -2..=2 {
                    for dx in -2..=2 {
                        let (x, y) = (p.x + dx, p.y + dy);
                        if x < 0 || y < 0 || x >= w || y >= h {
                            continue;
                        }
                        if fg.get(x as usize, y as usize) {
                            assert_eq!(labels.get(x as usize, y as usize), c, "seed {seed}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn foreground_neither_empty_nor_full_after_carving() {
        let spec = CarveSpec::default();
        for seed in 0..100 {
            let labels = synth_label_map(&mut rng(seed), &LabelMapSpec::default(), 96, 96).unwrap();
            let (fg, _) = carve_boundaries(&labels, &mut rng(seed + 7), &spec).unwrap();
            assert!(!fg.is_empty() && !fg.is_full());
        }
    }

    /// At one iteration the background is exactly the one-pixel rim of each
    /// selected cluster. Rim pixels need not touch foreground: a selected
    /// cluster part at most two pixels thick is removed entirely.
    #[test]
    fn single_iteration_background_is_selected_rims() {
        let spec = CarveSpec { iteration_range: Interval::new(1, 1), ..Default::default() };
        let (w, h) = (128i64, 128i64);
        for seed in 0..100 {
            let labels = synth_label_map(&mut rng(seed), &LabelMapSpec::default(), 128, 128).unwrap();
            let (fg, meta) = carve_boundaries(&labels, &mut rng(seed + 3), &spec).unwrap();
            for y in 0..h {
                for x in 0..w {
                    let l = labels.get(x as usize, y as usize);
                    let on_rim = (-1..=1).any(|dy| {
                        (-1..=1).any(|dx| {
                            let (nx, ny) = (x + dx, y + dy);
                            nx < 0 || ny < 0 || nx >= w || ny >= h || labels.get(nx as usize, ny as usize) != l
                        })
                    });
                    let expect_bg = meta.selected.contains(&l) && on_rim;
                    assert_eq!(!fg.get(x as usize, y as usize), expect_bg, "seed {seed} at ({x}, {y})");
                }
            }
        }
    }
}
