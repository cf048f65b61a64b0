use super::{BinaryMask, LabelMap};

/// Labels maximal connected foreground regions `1..=K` in raster order of
/// their first pixel. `connectivity` is 4 or 8 (anything else is treated as 8).
pub fn connected_components(mask: &BinaryMask, connectivity: u8) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let src = mask.data();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack: Vec<usize> = Vec::new();
    let eight = connectivity != 4;

    for start in 0..w * h {
        if !src[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if src[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    LabelMap::from_vec(w, h, labels)
}
