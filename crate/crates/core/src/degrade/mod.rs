//! The hand-crafted degradation simulator.
//!
//! [`degrade`] runs the stages listed in a recipe's `order` (by default
//! illumination jetting, splatted Gaussian noise, re-positioning,
//! anisotropic blur, lightness compression). Illumination jetting applies
//! one gamma to the target and every reference view and is not masked. The
//! other four stages only touch the target and are blended back into their
//! input through their own region mask.

mod jpeg;
mod mask;
mod ops;
mod recipe;

pub use jpeg::{jpeg_luma_compress, scaled_quant_table, LUMA_QUANT_TABLE};
pub use mask::{region_mask, MaskParams, RegionMask};
pub use ops::{
    add_gaussian_noise, aniso_blur, blend_region_adaptive, compress_lightness_lab, gamma_adjust, illumination_jetting,
    lightness_compression, reposition, reposition_counted, splatted_gaussian_noise,
};
pub use recipe::{
    default_order, sample_recipe, BlurParams, CompressionParams, DegradationRecipe, JettingParams, RecipeRanges,
    RepositionParams, Span, SplatNoiseParams, StageKind,
};

use crate::error::Result;
use crate::image::{gaussian_kernel_iso, ImageBuffer};
use crate::rng::{stage_stream, Stage};

/// Output of one simulator run.
#[derive(Debug, Clone, PartialEq)]
pub struct Degraded {
    pub degraded: ImageBuffer,
    pub refs: Vec<ImageBuffer>,
}

fn masked(
    input: &ImageBuffer,
    mask: &MaskParams,
    frame: f64,
    op: impl FnOnce(&ImageBuffer) -> Result<ImageBuffer>,
) -> Result<ImageBuffer> {
    let (h, w) = (input.height(), input.width());
    let m = region_mask(h, w, &mask.to_image_frame(h, w, frame))?;
    // A mask that is zero everywhere blends back to the input exactly, and
    // every stage owns its random stream, so the operator can be skipped.
    if m.weights.iter().all(|&v| v == 0.0) {
        return Ok(input.clone());
    }
    blend_region_adaptive(input, &op(input)?, &m)
}

/// Degrades `target` according to `recipe`; reference views receive the
/// shared illumination jetting only. Deterministic in its inputs.
pub fn degrade(target: &ImageBuffer, refs: &[ImageBuffer], recipe: &DegradationRecipe) -> Result<Degraded> {
    recipe.validate()?;
    for (n, r) in refs.iter().enumerate() {
        target.ensure_same_shape(r, &format!("reference view {n}"))?;
    }
    let frame = recipe.mask_frame;
    let mut img = target.clone();
    let mut refs = refs.to_vec();
    for stage in &recipe.order {
        img = match stage {
            StageKind::IlluminationJetting => {
                let (t, r) = illumination_jetting(&img, &refs, recipe.ij.gamma)?;
                refs = r;
                t
            }
            StageKind::SplattedNoise => {
                let p = &recipe.sgn;
                let splat = gaussian_kernel_iso(p.splat_kernel_size, p.splat_sigma)?;
                let mut rng = stage_stream(recipe.seed, Stage::SplatNoise);
                masked(&img, &p.mask, frame, |x| {
                    splatted_gaussian_noise(x, p.noise_sigma, &splat, &mut rng)
                })?
            }
            StageKind::Reposition => {
                let p = &recipe.repos;
                let mut rng = stage_stream(recipe.seed, Stage::Reposition);
                masked(&img, &p.mask, frame, |x| {
                    Ok(reposition(x, p.prob, p.max_offset, &mut rng))
                })?
            }
            StageKind::AnisoBlur => {
                let p = &recipe.ablur;
                masked(&img, &p.mask, frame, |x| {
                    aniso_blur(x, p.size, p.sigma_major, p.sigma_minor, p.angle_deg)
                })?
            }
            StageKind::LightnessCompression => {
                let p = &recipe.lc;
                masked(&img, &p.mask, frame, |x| lightness_compression(x, p.quality))?
            }
        };
    }
    Ok(Degraded { degraded: img, refs })
}
