use super::ScalarImage;

/// Normalized 1-D Gaussian kernel truncated at radius `ceil(3 sigma)`.
/// `sigma = 0` gives the unit kernel `[1.0]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Mirror reflection with the edge sample repeated: `... c b a | a b c ...`.
#[inline]
pub fn reflect_index(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Convolves a 1-D signal with a centered kernel using mirror reflection.
pub fn blur_1d(src: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = src.len();
    let r = (kernel.len() / 2) as i64;
    (0..n as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[reflect_index(i + k as i64 - r, n)])
                .sum()
        })
        .collect()
}

/// Separable Gaussian blur with mirror-reflected borders.
pub fn gaussian_blur(img: &ScalarImage, sigma: f64) -> ScalarImage {
    if sigma <= 0.0 || img.is_empty() {
        return img.clone();
    }
    let kernel: Vec<f32> = gaussian_kernel(sigma).into_iter().map(|v| v as f32).collect();
    let r = kernel.len() / 2;
    let (w, h) = (img.width(), img.height());

    // Horizontal pass into a padded row buffer so the inner loop is branch-free.
    let mut tmp = vec![0f32; w * h];
    let mut padded = vec![0f32; w + 2 * r];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[reflect_index(i as i64 - r as i64, w)];
        }
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = padded[x..x + kernel.len()]
                .iter()
                .zip(&kernel)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    // Vertical pass, accumulating whole rows.
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, &kw) in kernel.iter().enumerate() {
            let sy = reflect_index(y as i64 + k as i64 - r as i64, h);
            let src = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kw * s;
            }
        }
    }
    ScalarImage::from_vec(w, h, out)
}
