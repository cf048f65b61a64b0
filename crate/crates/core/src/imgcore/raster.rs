use super::{BinaryMask, Point, PointF};
use crate::error::{Error, Result};

/// Even-odd scanline fill. A pixel is foreground iff its center
/// `(x + 0.5, y + 0.5)` is inside the polygon; the polygon is closed implicitly
/// and anything outside the canvas is clipped.
pub fn fill_polygon(vertices: &[PointF], width: usize, height: usize) -> Result<BinaryMask> {
    if vertices.len() < 3 {
        return Err(Error::DegeneratePolygon(vertices.len()));
    }
    let mut mask = BinaryMask::new(width, height);
    let (ymin, ymax) = vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    if !(ymin.is_finite() && ymax.is_finite()) {
        return Err(Error::domain("polygon vertex is not finite"));
    }
    let row_lo = (ymin - 0.5).floor().max(0.0) as usize;
    let row_hi = ((ymax - 0.5).ceil() + 1.0).clamp(0.0, height as f64) as usize;

    let n = vertices.len();
    let mut crossings: Vec<f64> = Vec::new();
    for row in row_lo..row_hi {
        let y = row as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + n - 1) % n];
            if (a.y > y) != (b.y > y) {
                crossings.push((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(f64::total_cmp);
        let m = crossings.len();
        let data = &mut mask.data_mut()[row * width..(row + 1) * width];
        // Centers in [c[k-1], c[k]) have m - k crossings strictly to their right.
        for k in 1..m {
            if (m - k) % 2 == 1 {
                let lo = first_center_at_or_after(crossings[k - 1], width);
                let hi = first_center_at_or_after(crossings[k], width);
                if lo < hi {
                    data[lo..hi].iter_mut().for_each(|p| *p = true);
                }
            }
        }
    }
    Ok(mask)
}

/// Smallest column `j` in `0..=width` with `j + 0.5 >= x`.
fn first_center_at_or_after(x: f64, width: usize) -> usize {
    if x <= 0.5 {
        return 0;
    }
    if x > width as f64 {
        return width;
    }
    let mut j = (x - 0.5).ceil() as i64;
    while j > 0 && (j - 1) as f64 + 0.5 >= x {
        j -= 1;
    }
    while (j as f64) + 0.5 < x {
        j += 1;
    }
    (j.max(0) as usize).min(width)
}

/// Mean foreground pixel coordinate, rounded half away from zero.
pub fn centroid(mask: &BinaryMask) -> Result<Point> {
    let (mut sx, mut sy, mut n) = (0u128, 0u128, 0u128);
    for p in mask.points() {
        sx += p.x as u128;
        sy += p.y as u128;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    // floor(s/n + 1/2) for non-negative s is round-half-away-from-zero.
    let round = |s: u128| ((2 * s + n) / (2 * n)) as i64;
    Ok(Point::new(round(sx), round(sy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Crossing-number point-in-polygon test at every pixel center.
    fn pnpoly_oracle(v: &[PointF], w: usize, h: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut inside = false;
            let n = v.len();
            let mut j = n - 1;
            for i in 0..n {
                let (a, b) = (v[i], v[j]);
                if (a.y > py) != (b.y > py) && px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x {
                    inside = !inside;
                }
                j = i;
            }
            inside
        })
    }

    fn pts(c: &[(f64, f64)]) -> Vec<PointF> {
        c.iter().map(|&(x, y)| PointF::new(x, y)).collect()
    }

    #[test]
    fn axis_aligned_square() {
        let sq = pts(&[(2.0, 2.0), (2.0, 6.0), (6.0, 6.0), (6.0, 2.0)]);
        let m = fill_polygon(&sq, 10, 10).unwrap();
        assert_eq!(m, pnpoly_oracle(&sq, 10, 10));
        assert_eq!(m.count(), 16);
        assert!(m.get(2, 2) && m.get(5, 5) && !m.get(6, 6) && !m.get(1, 2));
    }

    #[test]
    fn outside_triangle_is_empty() {
        let tri = pts(&[(-20.0, -20.0), (-5.0, -20.0), (-10.0, -2.0)]);
        assert!(fill_polygon(&tri, 10, 10).unwrap().is_empty());
        let tri = pts(&[(20.0, 3.0), (40.0, 3.0), (30.0, 8.0)]);
        assert!(fill_polygon(&tri, 10, 10).unwrap().is_empty());
    }

    #[test]
    fn two_vertices_rejected() {
        let line = pts(&[(0.0, 0.0), (4.0, 4.0)]);
        assert!(matches!(fill_polygon(&line, 5, 5), Err(Error::DegeneratePolygon(2))));
    }

    #[test]
    fn matches_oracle_on_random_simple_polygons() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for case in 0..200 {
            let (w, h) = (rng.random_range(8..48), rng.random_range(8..48));
            let k = rng.random_range(3..20);
            let (cx, cy) = (rng.random_range(-5.0..w as f64 + 5.0), rng.random_range(-5.0..h as f64 + 5.0));
            let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let mut v: Vec<PointF> = angles
                .iter()
                .map(|a| {
                    let r = rng.random_range(1.0..25.0);
                    PointF::new(cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            // some polygons with vertices snapped to the pixel-center lattice
            if case % 4 == 0 {
                for p in &mut v {
                    p.x = p.x.round() + 0.5;
                    p.y = p.y.round() + 0.5;
                }
            }
            assert_eq!(fill_polygon(&v, w, h).unwrap(), pnpoly_oracle(&v, w, h), "case {case}");
        }
    }

    #[test]
    fn centroid_cases() {
        let mut m = BinaryMask::new(8, 8);
        m.set(3, 4, true);
        assert_eq!(centroid(&m).unwrap(), Point::new(3, 4));

        let sq = BinaryMask::from_fn(8, 8, |x, y| x < 5 && y < 5);
        assert_eq!(centroid(&sq).unwrap(), Point::new(2, 2));

        let l = BinaryMask::from_fn(4, 4, |x, y| (x, y) == (0, 0) || (x, y) == (1, 0) || (x, y) == (0, 1));
        assert_eq!(centroid(&l).unwrap(), Point::new(0, 0));

        // exact half rounds up (away from zero)
        let pair = BinaryMask::from_fn(4, 1, |x, _| x == 0 || x == 1);
        assert_eq!(centroid(&pair).unwrap(), Point::new(1, 0));

        assert!(matches!(centroid(&BinaryMask::new(3, 3)), Err(Error::EmptyMask)));
    }
}
