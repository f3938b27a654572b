//! Lossy JPEG transfer function on a single plane: 8x8 DCT, quantization
//! with the IJG-scaled luminance table, dequantization and inverse DCT.
//! There is no entropy coding; only the lossy stage is modeled.

use std::sync::LazyLock;

use crate::error::{NdsError, Result};

/// ITU-T T.81 Annex K.1 luminance quantization table, row-major.
pub const LUMA_QUANT_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Orthonormal DCT-II basis, `BASIS[u][x] = a(u) cos((2x + 1) u pi / 16)`.
static BASIS: LazyLock<[[f64; 8]; 8]> = LazyLock::new(|| {
    let mut m = [[0.0; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let a = if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = a * (((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    m
});

/// Quantization table for `quality` using the IJG mapping: scale factor
/// `5000 / q` below 50 and `200 - 2q` from 50 up, entries
/// `(base * scale + 50) / 100` clamped to `[1, 255]`.
pub fn scaled_quant_table(quality: u8) -> Result<[u16; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(NdsError::InvalidParameter(format!(
            "jpeg quality must lie in [1, 100], got {quality}"
        )));
    }
    let q = quality as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut table = [0u16; 64];
    for (t, &base) in table.iter_mut().zip(&LUMA_QUANT_TABLE) {
        *t = ((base as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(table)
}

fn dct_8x8(block: &[f64; 64]) -> [f64; 64] {
    let b = &*BASIS;
    let mut tmp = [0.0; 64];
    // rows: tmp[y][u] = sum_x b[u][x] block[y][x]
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| b[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| b[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

fn idct_8x8(coef: &[f64; 64]) -> [f64; 64] {
    let b = &*BASIS;
    let mut tmp = [0.0; 64];
    // columns: tmp[y][u] = sum_v b[v][y] coef[v][u]
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|v| b[v][y] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|u| b[u][x] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

/// Compresses a `height x width` plane with samples in `[0, 255]`.
///
/// Partial edge blocks are padded by replicating the last row/column; the
/// padding is discarded after reconstruction. Output samples are clamped to
/// `[0, 255]` but not rounded to integers.
pub fn jpeg_luma_compress(plane: &[f64], height: usize, width: usize, quality: u8) -> Result<Vec<f64>> {
    let table = scaled_quant_table(quality)?;
    if plane.len() != height * width {
        return Err(NdsError::InvalidInput(format!(
            "plane has {} samples, expected {height}x{width}",
            plane.len()
        )));
    }
    let mut out = vec![0.0; plane.len()];
    let mut block = [0.0; 64];
    for by in (0..height).step_by(8) {
        for bx in (0..width).step_by(8) {
            for y in 0..8 {
                let row = (by + y).min(height - 1) * width;
                for x in 0..8 {
                    block[y * 8 + x] = plane[row + (bx + x).min(width - 1)] - 128.0;
                }
            }
            let mut coef = dct_8x8(&block);
            for (c, &q) in coef.iter_mut().zip(&table) {
                let q = q as f64;
                *c = (*c / q).round() * q;
            }
            let rec = idct_8x8(&coef);
            for y in 0..8.min(height - by) {
                for x in 0..8.min(width - bx) {
                    out[(by + y) * width + bx + x] = (rec[y * 8 + x] + 128.0).clamp(0.0, 255.0);
                }
            }
        }
    }
    Ok(out)
}
