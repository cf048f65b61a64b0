use serde::{Deserialize, Serialize};

use super::BinaryMask;

/// 3x3 structuring elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuringElement {
    /// Full 3x3 block (8-connected).
    #[default]
    Square3,
    /// Center plus 4 neighbors (4-connected).
    Cross3,
}

/// Binary erosion, pixels outside the canvas count as background.
pub fn erode(mask: &BinaryMask, se: StructuringElement, iterations: u32) -> BinaryMask {
    erode_with_border(mask, se, iterations, false)
}

/// Binary dilation, pixels outside the canvas count as background.
pub fn dilate(mask: &BinaryMask, se: StructuringElement, iterations: u32) -> BinaryMask {
    if iterations == 0 {
        return mask.clone();
    }
    match se {
        // square3 applied k times is the (2k+1)-square, which is separable.
        StructuringElement::Square3 => square_filter(mask, iterations as usize, Op::Any, false),
        StructuringElement::Cross3 => {
            let mut cur = mask.clone();
            for _ in 0..iterations {
                cur = cross_step(&cur, Op::Any, false);
            }
            cur
        }
    }
}

/// Erosion with an explicit value for out-of-canvas pixels. `border = true`
/// is what the complement of a border-as-background mask needs for the
/// dilation/erosion duality to hold exactly.
pub fn erode_with_border(
    mask: &BinaryMask,
    se: StructuringElement,
    iterations: u32,
    border: bool,
) -> BinaryMask {
    if iterations == 0 {
        return mask.clone();
    }
    match se {
        StructuringElement::Square3 => square_filter(mask, iterations as usize, Op::All, border),
        StructuringElement::Cross3 => {
            let mut cur = mask.clone();
            for _ in 0..iterations {
                cur = cross_step(&cur, Op::All, border);
            }
            cur
        }
    }
}

#[derive(Clone, Copy)]
enum Op {
    All,
    Any,
}

/// Min/max filter over a (2r+1)-square, as a row pass then a column pass over
/// running foreground counts.
fn square_filter(mask: &BinaryMask, r: usize, op: Op, border: bool) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let src = mask.data();
    let mut tmp = vec![false; w * h];
    let mut prefix = vec![0u32; w.max(h) + 1];

    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x] as u32;
        }
        for x in 0..w {
            tmp[y * w + x] = window(&prefix, x, r, w, op, border);
        }
    }

    let mut out = vec![false; w * h];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + tmp[y * w + x] as u32;
        }
        for y in 0..h {
            out[y * w + x] = window(&prefix, y, r, h, op, border);
        }
    }
    BinaryMask::from_vec(w, h, out)
}

#[inline]
fn window(prefix: &[u32], c: usize, r: usize, n: usize, op: Op, border: bool) -> bool {
    let lo = c.saturating_sub(r);
    let hi = (c + r + 1).min(n);
    let inside = (hi - lo) as u32;
    let count = prefix[hi] - prefix[lo];
    let clipped = c < r || c + r + 1 > n;
    match op {
        Op::All => count == inside && (!clipped || border),
        Op::Any => count > 0 || (clipped && border),
    }
}

fn cross_step(mask: &BinaryMask, op: Op, border: bool) -> BinaryMask {
    const OFFS: [(i64, i64); 5] = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)];
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let read = |x: i64, y: i64| {
        if x < 0 || y < 0 || x >= w || y >= h {
            border
        } else {
            mask.get(x as usize, y as usize)
        }
    };
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        let mut it = OFFS.iter().map(|&(dx, dy)| read(x + dx, y + dy));
        match op {
            Op::All => it.all(|b| b),
            Op::Any => it.any(|b| b),
        }
    })
}
