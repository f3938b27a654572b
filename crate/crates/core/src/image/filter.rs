//! Convolution and resampling.

use super::{ImageBuffer, Kernel2D};

/// Per-channel 2-D correlation with replicated borders. The result is
/// clamped to `[0, 1]`.
pub fn convolve2d(img: &ImageBuffer, kernel: &Kernel2D) -> ImageBuffer {
    let (h, w, ch) = img.shape();
    let r = kernel.radius() as isize;
    let size = kernel.size();
    let taps = kernel.taps();
    let src = img.data();

    // Source rows padded by replication, so every tap reads a contiguous run.
    let clamp_rows: Vec<usize> = (-r..h as isize + r)
        .map(|y| y.clamp(0, h as isize - 1) as usize)
        .collect();
    let row_len = (w + 2 * r as usize) * ch;
    let mut padded = Vec::with_capacity(h * row_len);
    for y in 0..h {
        for x in -r..w as isize + r {
            let base = (y * w + x.clamp(0, w as isize - 1) as usize) * ch;
            padded.extend_from_slice(&src[base..base + ch]);
        }
    }

    // Per output sample the taps are accumulated row by row, left to right.
    let mut out = vec![0.0; src.len()];
    for (i, acc) in out.chunks_exact_mut(w * ch).enumerate() {
        for ky in 0..size {
            let prow = &padded[clamp_rows[i + ky] * row_len..][..row_len];
            for kx in 0..size {
                let t = taps[ky * size + kx];
                for (a, &v) in acc.iter_mut().zip(&prow[kx * ch..kx * ch + w * ch]) {
                    *a += t * v;
                }
            }
        }
        acc.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
    }
    ImageBuffer::new(h, w, ch, out).expect("shape preserved")
}

/// Output size for a resize by `scale`: `max(1, round(n * scale))` per axis.
pub fn scaled_dims(height: usize, width: usize, scale: f64) -> (usize, usize) {
    let f = |n: usize| ((n as f64 * scale).round() as usize).max(1);
    (f(height), f(width))
}

/// Bilinear resampling with half-pixel centers (`align_corners = false`).
///
/// Output pixel `d` samples the source at `(d + 0.5) * in / out - 0.5`,
/// clamped at zero below and to the last pixel above. Output dimensions come
/// from [`scaled_dims`].
pub fn bilinear_resize(img: &ImageBuffer, scale: f64) -> ImageBuffer {
    assert!(scale > 0.0 && scale.is_finite(), "resize scale must be positive");
    let (h, w, ch) = img.shape();
    let (oh, ow) = scaled_dims(h, w, scale);

    let taps = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let ratio = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * ratio - 0.5).max(0.0);
                let i0 = (s.floor() as usize).min(n_in - 1);
                let i1 = (i0 + 1).min(n_in - 1);
                let frac = if i0 == n_in - 1 { 0.0 } else { s - i0 as f64 };
                (i0, i1, frac)
            })
            .collect()
    };
    let rows = taps(h, oh);
    let cols = taps(w, ow);

    let mut out = Vec::with_capacity(oh * ow * ch);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            for c in 0..ch {
                let top = (1.0 - fx) * img.get(y0, x0, c) + fx * img.get(y0, x1, c);
                let bottom = (1.0 - fx) * img.get(y1, x0, c) + fx * img.get(y1, x1, c);
                out.push((1.0 - fy) * top + fy * bottom);
            }
        }
    }
    ImageBuffer::new(oh, ow, ch, out).expect("resize produces a valid shape")
}
