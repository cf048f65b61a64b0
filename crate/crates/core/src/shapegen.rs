//! Random closed shapes from a single Bezier loop.
//!
//! Control points are placed at random radii around a jittered center with
//! angles sorted ascending, `P0` is repeated as the last control point to close
//! the loop, and the densely sampled curve is filled with the even-odd rule.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{fill_polygon, BinaryMask, PointF};
use crate::pipeline::Interval;

const MAX_SHAPE_ATTEMPTS: u32 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct BezierShape {
    control_points: Vec<PointF>,
    closed: bool,
}

impl BezierShape {
    /// An open curve through `P0..Pn`.
    pub fn open(control_points: Vec<PointF>) -> Result<Self> {
        if control_points.len() < 2 {
            return Err(Error::domain("a Bezier curve needs at least 2 control points"));
        }
        Ok(Self {
            control_points,
            closed: false,
        })
    }

    /// A closed loop: `P0` is appended as `Pn`.
    pub fn closed(mut control_points: Vec<PointF>) -> Result<Self> {
        if control_points.is_empty() {
            return Err(Error::domain("a Bezier curve needs at least 2 control points"));
        }
        control_points.push(control_points[0]);
        Ok(Self {
            control_points,
            closed: true,
        })
    }

    pub fn control_points(&self) -> &[PointF] {
        &self.control_points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Degree `n` (one less than the number of control points).
    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }
}

/// Binomial coefficients `C(n, 0..=n)` as floats.
fn binomials(n: usize) -> Vec<f64> {
    let mut c = vec![1.0f64; n + 1];
    for i in 1..n {
        c[i] = c[i - 1] * (n - i + 1) as f64 / i as f64;
    }
    c
}

/// Bernstein basis `C(n,i) (1-t)^(n-i) t^i` for `i = 0..=n`.
pub fn bernstein_weights(n: usize, t: f64) -> Vec<f64> {
    let s = 1.0 - t;
    binomials(n)
        .into_iter()
        .enumerate()
        .map(|(i, c)| c * s.powi((n - i) as i32) * t.powi(i as i32))
        .collect()
}

/// `B(t) = sum_i C(n,i) (1-t)^(n-i) t^i P_i`.
pub fn bezier_point(shape: &BezierShape, t: f64) -> Result<PointF> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("curve parameter t = {t} outside [0, 1]")));
    }
    let cps = shape.control_points();
    let w = bernstein_weights(shape.degree(), t);
    let (x, y) = cps
        .iter()
        .zip(&w)
        .fold((0.0, 0.0), |(x, y), (p, w)| (x + w * p.x, y + w * p.y));
    Ok(PointF::new(x, y))
}

/// Evaluates the curve at `t = i / (samples - 1)`.
pub fn shape_polyline(shape: &BezierShape, samples: usize) -> Vec<PointF> {
    let samples = samples.max(2);
    let n = shape.degree();
    let binom = binomials(n);
    let cps = shape.control_points();
    let mut out: Vec<PointF> = (0..samples)
        .map(|i| {
            let t = i as f64 / (samples - 1) as f64;
            let s = 1.0 - t;
            let (mut x, mut y) = (0.0, 0.0);
            for (k, p) in cps.iter().enumerate() {
                let w = binom[k] * s.powi((n - k) as i32) * t.powi(k as i32);
                x += w * p.x;
                y += w * p.y;
            }
            PointF::new(x, y)
        })
        .collect();
    // The endpoints are exact by the Bernstein identities at t = 0 and 1; pin
    // them to the control points so closed loops close bit-exactly.
    out[0] = cps[0];
    out[samples - 1] = cps[n];
    out
}

/// Sampling ranges for random shapes. Radii and jitter are fractions of the
/// canvas (min dimension and full size respectively).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeSamplingSpec {
    pub control_point_count_range: Interval<u32>,
    pub radius_range: Interval<f64>,
    pub center_jitter: f64,
    pub curve_samples: u32,
}

impl Default for ShapeSamplingSpec {
    fn default() -> Self {
        Self {
            control_point_count_range: Interval::new(4, 12),
            radius_range: Interval::new(0.05, 0.25),
            center_jitter: 0.3,
            curve_samples: 512,
        }
    }
}

impl ShapeSamplingSpec {
    pub fn validate(&self) -> Result<()> {
        const S: &str = "ShapeSamplingSpec";
        let c = self.control_point_count_range;
        if c.lo > c.hi || c.lo < 4 || c.hi > 16 {
            return Err(Error::validation(S, "control_point_count_range", format!("{c} must be an ordered subset of [4, 16]")));
        }
        let r = self.radius_range;
        if !(r.lo > 0.0 && r.lo <= r.hi && r.hi < 0.5) {
            return Err(Error::validation(S, "radius_range", format!("{r} must be an ordered subset of (0, 0.5)")));
        }
        if !(0.0..=0.5).contains(&self.center_jitter) {
            return Err(Error::validation(S, "center_jitter", format!("{} must lie in [0, 0.5]", self.center_jitter)));
        }
        if self.curve_samples < 64 {
            return Err(Error::validation(S, "curve_samples", format!("{} must be at least 64", self.curve_samples)));
        }
        Ok(())
    }
}

/// Draws the control points of one random closed shape.
pub fn sample_shape(rng: &mut impl Rng, spec: &ShapeSamplingSpec, width: usize, height: usize) -> Result<BezierShape> {
    let min_dim = width.min(height) as f64;
    let k = rng.random_range(spec.control_point_count_range.lo..=spec.control_point_count_range.hi) as usize;
    let jx = spec.center_jitter * width as f64;
    let jy = spec.center_jitter * height as f64;
    let cx = width as f64 / 2.0 + if jx > 0.0 { rng.random_range(-jx..=jx) } else { 0.0 };
    let cy = height as f64 / 2.0 + if jy > 0.0 { rng.random_range(-jy..=jy) } else { 0.0 };

    // One uniform angle per equal sector after a random rotation: ascending by
    // construction and never bunched, so the curve does not collapse inward.
    let rotation = rng.random_range(0.0..TAU);
    let sector = TAU / k as f64;
    let angles: Vec<f64> = (0..k).map(|i| rotation + (i as f64 + rng.random::<f64>()) * sector).collect();
    let r = spec.radius_range;
    let points = angles
        .into_iter()
        .map(|a| {
            let radius = r.sample(rng) * min_dim;
            PointF::new(cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect();
    BezierShape::closed(points)
}

/// Samples and rasterizes a random closed shape, retrying degenerate draws.
pub fn sample_closed_shape(
    rng: &mut impl Rng,
    spec: &ShapeSamplingSpec,
    width: usize,
    height: usize,
) -> Result<BinaryMask> {
    sample_closed_shape_with_outline(rng, spec, width, height).map(|(m, _)| m)
}

pub(crate) fn sample_closed_shape_with_outline(
    rng: &mut impl Rng,
    spec: &ShapeSamplingSpec,
    width: usize,
    height: usize,
) -> Result<(BinaryMask, BezierShape)> {
    // Fingerprint of the generator state for the error report.
    let seed = rng.next_u64();
    for _ in 0..MAX_SHAPE_ATTEMPTS {
        let shape = sample_shape(rng, spec, width, height)?;
        let outline = shape_polyline(&shape, spec.curve_samples as usize);
        let mask = fill_polygon(&outline, width, height)?;
        if !mask.is_empty() {
            return Ok((mask, shape));
        }
    }
    Err(Error::Generation {
        what: "closed shape",
        attempts: MAX_SHAPE_ATTEMPTS,
        seed,
    })
}
