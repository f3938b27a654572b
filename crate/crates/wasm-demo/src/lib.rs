//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes and returns plain numbers, byte buffers and strings,
//! so the same functions run under `cargo test` on the host. Pixel buffers
//! are RGBA8, row-major, as produced by `CanvasRenderingContext2D.getImageData`.

use nds_core::degrade::{degrade, region_mask, sample_recipe, DegradationRecipe, MaskParams, RecipeRanges};
use nds_core::image::gaussian_kernel_aniso;
use nds_core::image::io::{from_rgb8, quantize, to_rgb8};
use nds_core::ImageBuffer;
use wasm_bindgen::prelude::*;

fn to_rgba(rgb: &[u8]) -> Vec<u8> {
    rgb.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

fn gray_rgba(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values
        .flat_map(|v| {
            let g = quantize(v);
            [g, g, g, 255]
        })
        .collect()
}

fn from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<ImageBuffer, String> {
    if rgba.len() != width * height * 4 {
        return Err(format!(
            "expected {} RGBA bytes for {width}x{height}, got {}",
            width * height * 4,
            rgba.len()
        ));
    }
    let rgb: Vec<u8> = rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    from_rgb8(height, width, &rgb).map_err(|e| e.to_string())
}

/// Region mask as a grayscale RGBA image. Centers and spreads are given in
/// the 128x128 reference frame used by recipes.
#[wasm_bindgen]
pub fn mask_rgba(
    width: usize,
    height: usize,
    c_i: f64,
    c_j: f64,
    sigma_i: f64,
    sigma_j: f64,
    angle_deg: f64,
) -> Result<Vec<u8>, String> {
    let p = MaskParams {
        c_i,
        c_j,
        sigma_i,
        sigma_j,
        angle_deg,
    }
    .to_image_frame(height, width, 128.0);
    let m = region_mask(height, width, &p).map_err(|e| e.to_string())?;
    Ok(gray_rgba(m.weights.into_iter()))
}

/// Anisotropic Gaussian kernel, each tap drawn as a `cell x cell` block and
/// scaled so the largest tap is white.
#[wasm_bindgen]
pub fn kernel_rgba(
    size: usize,
    sigma_major: f64,
    sigma_minor: f64,
    angle_deg: f64,
    cell: usize,
) -> Result<Vec<u8>, String> {
    let k = gaussian_kernel_aniso(size, sigma_major, sigma_minor, angle_deg).map_err(|e| e.to_string())?;
    let peak = k.taps().iter().copied().fold(0.0, f64::max);
    let side = size * cell;
    Ok(gray_rgba((0..side * side).map(|n| {
        let (y, x) = (n / side / cell, n % side / cell);
        k.taps()[y * size + x] / peak
    })))
}

/// The recipe sampled from `seed` with the default ranges, as JSON.
#[wasm_bindgen]
pub fn recipe_json(seed: u64) -> Result<String, String> {
    sample_recipe(seed, &RecipeRanges::default())
        .map(|r| r.to_json())
        .map_err(|e| e.to_string())
}

/// Degrades an RGBA image with the recipe JSON given (see [`recipe_json`]).
#[wasm_bindgen]
pub fn degrade_rgba(rgba: &[u8], width: usize, height: usize, recipe: &str) -> Result<Vec<u8>, String> {
    let recipe = DegradationRecipe::from_json(recipe).map_err(|e| e.to_string())?;
    let img = from_rgba(rgba, width, height)?;
    let out = degrade(&img, &[], &recipe).map_err(|e| e.to_string())?;
    Ok(to_rgba(&to_rgb8(&out.degraded)))
}

/// Synthetic test card: smooth color ramps, fine stripes and a checker, so
/// every degradation has something to act on.
#[wasm_bindgen]
pub fn test_card_rgba(width: usize, height: usize) -> Vec<u8> {
    let img = ImageBuffer::from_fn(height, width, 3, |i, j, c| {
        let (y, x) = (i as f64 / height.max(1) as f64, j as f64 / width.max(1) as f64);
        match c {
            0 => x,
            1 => {
                if (i / 8 + j / 8) % 2 == 0 {
                    0.25 + 0.5 * y
                } else {
                    0.75 - 0.5 * y
                }
            }
            _ => 0.5 + 0.5 * (j as f64 * 0.9).sin() * (1.0 - y),
        }
    })
    .expect("test card shape is valid");
    to_rgba(&to_rgb8(&img))
}
