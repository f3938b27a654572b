//! Degradation recipes: every random parameter of one simulator run, plus
//! the ranges they are drawn from.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mask::MaskParams;
use crate::error::{NdsError, Result};
use crate::rng::{stage_stream, Stage};
use crate::SCHEMA_VERSION;

/// Pipeline stages that can be reordered through [`DegradationRecipe::order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    IlluminationJetting,
    SplattedNoise,
    Reposition,
    AnisoBlur,
    LightnessCompression,
}

impl StageKind {
    pub const ALL: [StageKind; 5] = [
        StageKind::IlluminationJetting,
        StageKind::SplattedNoise,
        StageKind::Reposition,
        StageKind::AnisoBlur,
        StageKind::LightnessCompression,
    ];
}

pub fn default_order() -> Vec<StageKind> {
    StageKind::ALL.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplatNoiseParams {
    pub noise_sigma: f64,
    pub splat_kernel_size: usize,
    pub splat_sigma: f64,
    pub mask: MaskParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepositionParams {
    pub prob: f64,
    pub max_offset: usize,
    pub mask: MaskParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurParams {
    pub size: usize,
    pub angle_deg: f64,
    /// Spread along the rotated axis.
    pub sigma_major: f64,
    /// Spread across the rotated axis. Drawn independently of `sigma_major`,
    /// so it may be the larger of the two.
    pub sigma_minor: f64,
    pub mask: MaskParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JettingParams {
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionParams {
    pub quality: u8,
    pub mask: MaskParams,
}

/// A fully sampled parameter set. Together with the input images it
/// determines the simulator output bit for bit.
///
/// Mask parameters live in a `mask_frame x mask_frame` reference square and
/// are stretched to the image at application time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationRecipe {
    pub schema: u32,
    pub seed: u64,
    pub order: Vec<StageKind>,
    pub mask_frame: f64,
    pub sgn: SplatNoiseParams,
    pub repos: RepositionParams,
    pub ablur: BlurParams,
    pub ij: JettingParams,
    pub lc: CompressionParams,
}

/// Closed interval `[lo, hi]`, serialized as a two-element array. Floats are
/// drawn from `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span(pub f64, pub f64);

impl Span {
    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.0 && v <= self.1
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.0 <= self.1) || !self.0.is_finite() || !self.1.is_finite() {
            return Err(NdsError::Config(format!(
                "range {name} = [{}, {}] is empty",
                self.0, self.1
            )));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.random_range(self.0..self.1)
        }
    }
}

/// Sampling ranges for [`sample_recipe`]. Defaults follow the simulator's
/// published hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeRanges {
    pub noise_sigma: Span,
    pub splat_kernel_size: usize,
    pub splat_sigma: Span,
    pub repos_prob: f64,
    pub repos_max_offset: usize,
    pub blur_sizes: Vec<usize>,
    pub blur_angle: Span,
    pub blur_sigma: Span,
    pub gamma: Span,
    pub quality: (u8, u8),
    pub mask_center: Span,
    pub mask_sigma_i: Span,
    pub mask_sigma_j: Span,
    pub mask_angle: Span,
    pub mask_frame: f64,
    pub order: Vec<StageKind>,
}

impl Default for RecipeRanges {
    fn default() -> Self {
        Self {
            noise_sigma: Span(0.01, 0.05),
            splat_kernel_size: 5,
            splat_sigma: Span(0.6, 1.2),
            repos_prob: 0.1,
            repos_max_offset: 2,
            blur_sizes: vec![3, 5, 7],
            blur_angle: Span(0.0, 180.0),
            blur_sigma: Span(0.2, 1.2),
            gamma: Span(0.95, 1.05),
            quality: (20, 90),
            mask_center: Span(-16.0, 144.0),
            mask_sigma_i: Span(13.0, 25.0),
            // Floored above zero: a zero-width mask is degenerate.
            mask_sigma_j: Span(0.5, 24.0),
            mask_angle: Span(0.0, 180.0),
            mask_frame: 128.0,
            order: default_order(),
        }
    }
}

impl RecipeRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, span) in [
            ("noise_sigma", self.noise_sigma),
            ("splat_sigma", self.splat_sigma),
            ("blur_angle", self.blur_angle),
            ("blur_sigma", self.blur_sigma),
            ("gamma", self.gamma),
            ("mask_center", self.mask_center),
            ("mask_sigma_i", self.mask_sigma_i),
            ("mask_sigma_j", self.mask_sigma_j),
            ("mask_angle", self.mask_angle),
        ] {
            span.check(name)?;
        }
        if self.noise_sigma.lo() < 0.0 {
            return Err(NdsError::Config("noise_sigma must be non-negative".into()));
        }
        for (name, span) in [
            ("splat_sigma", self.splat_sigma),
            ("blur_sigma", self.blur_sigma),
            ("gamma", self.gamma),
            ("mask_sigma_i", self.mask_sigma_i),
            ("mask_sigma_j", self.mask_sigma_j),
        ] {
            if span.lo() <= 0.0 {
                return Err(NdsError::Config(format!("{name} must be strictly positive")));
            }
        }
        if self.blur_sizes.is_empty() {
            return Err(NdsError::Config("blur_sizes is empty".into()));
        }
        if self
            .blur_sizes
            .iter()
            .chain([&self.splat_kernel_size])
            .any(|s| s % 2 == 0)
        {
            return Err(NdsError::Config("kernel sizes must be odd".into()));
        }
        if !(self.quality.0 >= 1 && self.quality.0 <= self.quality.1 && self.quality.1 <= 100) {
            return Err(NdsError::Config(format!(
                "quality range {:?} is empty or outside [1, 100]",
                self.quality
            )));
        }
        if !(0.0..=1.0).contains(&self.repos_prob) {
            return Err(NdsError::Config("repos_prob must lie in [0, 1]".into()));
        }
        if !(self.mask_frame > 0.0) {
            return Err(NdsError::Config("mask_frame must be positive".into()));
        }
        check_order(&self.order).map_err(|e| NdsError::Config(e.to_string()))
    }

    /// Whether every sampled field of `r` lies inside these ranges.
    pub fn admits(&self, r: &DegradationRecipe) -> bool {
        let mask_ok = |m: &MaskParams| {
            self.mask_center.contains(m.c_i)
                && self.mask_center.contains(m.c_j)
                && self.mask_sigma_i.contains(m.sigma_i)
                && self.mask_sigma_j.contains(m.sigma_j)
                && self.mask_angle.contains(m.angle_deg)
        };
        self.noise_sigma.contains(r.sgn.noise_sigma)
            && r.sgn.splat_kernel_size == self.splat_kernel_size
            && self.splat_sigma.contains(r.sgn.splat_sigma)
            && r.repos.prob == self.repos_prob
            && r.repos.max_offset == self.repos_max_offset
            && self.blur_sizes.contains(&r.ablur.size)
            && self.blur_angle.contains(r.ablur.angle_deg)
            && self.blur_sigma.contains(r.ablur.sigma_major)
            && self.blur_sigma.contains(r.ablur.sigma_minor)
            && self.gamma.contains(r.ij.gamma)
            && (self.quality.0..=self.quality.1).contains(&r.lc.quality)
            && [r.sgn.mask, r.repos.mask, r.ablur.mask, r.lc.mask].iter().all(mask_ok)
    }
}

fn check_order(order: &[StageKind]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    if order.iter().any(|s| !seen.insert(*s)) {
        return Err(NdsError::InvalidParameter("stage order lists a stage twice".into()));
    }
    Ok(())
}

/// Draws a recipe from `ranges` using the recipe substream of `seed`.
///
/// Draw order is fixed: splatted noise (sigma, splat sigma, mask), blur
/// (size, angle, sigma_major, sigma_minor, mask), gamma, quality,
/// re-positioning mask, compression mask. Each mask draws
/// `c_i, c_j, sigma_i, sigma_j, angle`.
pub fn sample_recipe(seed: u64, ranges: &RecipeRanges) -> Result<DegradationRecipe> {
    ranges.validate()?;
    let mut rng = stage_stream(seed, Stage::Recipe);
    let mask = |rng: &mut rand_chacha::ChaCha8Rng| MaskParams {
        c_i: ranges.mask_center.sample(rng),
        c_j: ranges.mask_center.sample(rng),
        sigma_i: ranges.mask_sigma_i.sample(rng),
        sigma_j: ranges.mask_sigma_j.sample(rng),
        angle_deg: ranges.mask_angle.sample(rng),
    };
    let sgn = SplatNoiseParams {
        noise_sigma: ranges.noise_sigma.sample(&mut rng),
        splat_kernel_size: ranges.splat_kernel_size,
        splat_sigma: ranges.splat_sigma.sample(&mut rng),
        mask: mask(&mut rng),
    };
    let ablur = BlurParams {
        size: ranges.blur_sizes[rng.random_range(0..ranges.blur_sizes.len())],
        angle_deg: ranges.blur_angle.sample(&mut rng),
        sigma_major: ranges.blur_sigma.sample(&mut rng),
        sigma_minor: ranges.blur_sigma.sample(&mut rng),
        mask: mask(&mut rng),
    };
    let ij = JettingParams {
        gamma: ranges.gamma.sample(&mut rng),
    };
    let quality = rng.random_range(ranges.quality.0..=ranges.quality.1);
    let repos = RepositionParams {
        prob: ranges.repos_prob,
        max_offset: ranges.repos_max_offset,
        mask: mask(&mut rng),
    };
    let lc = CompressionParams {
        quality,
        mask: mask(&mut rng),
    };
    Ok(DegradationRecipe {
        schema: SCHEMA_VERSION,
        seed,
        order: ranges.order.clone(),
        mask_frame: ranges.mask_frame,
        sgn,
        repos,
        ablur,
        ij,
        lc,
    })
}

impl DegradationRecipe {
    /// Structural validity: every parameter is usable by its operator.
    /// Range membership is a separate question, see [`RecipeRanges::admits`].
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(NdsError::InvalidParameter(format!(
                "recipe schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        check_order(&self.order)?;
        let bad = |what: &str| Err(NdsError::InvalidParameter(what.to_string()));
        if !(self.mask_frame > 0.0) {
            return bad("mask_frame must be positive");
        }
        if !(self.sgn.noise_sigma >= 0.0)
            || self.sgn.splat_kernel_size.is_multiple_of(2)
            || !(self.sgn.splat_sigma > 0.0)
        {
            return bad("splatted-noise parameters are invalid");
        }
        if !(0.0..=1.0).contains(&self.repos.prob) {
            return bad("re-positioning probability must lie in [0, 1]");
        }
        if self.ablur.size.is_multiple_of(2) || !(self.ablur.sigma_major > 0.0) || !(self.ablur.sigma_minor > 0.0) {
            return bad("blur parameters are invalid");
        }
        if !(self.ij.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(1..=100).contains(&self.lc.quality) {
            return bad("quality must lie in [1, 100]");
        }
        for m in [self.sgn.mask, self.repos.mask, self.ablur.mask, self.lc.mask] {
            m.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recipes always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let recipe: DegradationRecipe = serde_json::from_str(text)?;
        recipe.validate()?;
        Ok(recipe)
    }
}
