//! Weighted top-K similarity (WKS) loss and multi-scale L1, as plain
//! metrics without gradients.
//!
//! For every patch `g_pred` of a prediction, the `K` candidates `g` from a
//! real rendered frame minimizing `alpha |g - g_pred|^2 + beta |g - g_gt|^2`
//! are collected. Each gets weight `softmax(-|g - g_pred|^2 / 2)` over the K
//! selected, and the patch loss is `sum_k |(g_k - g_pred) * w_k|_1`.

mod patches;

pub use patches::{positions, unfold_patches, PatchGrid};

use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};
use crate::image::{bilinear_resize, ImageBuffer};

/// Default number of buddies.
pub const DEFAULT_K: usize = 5;

/// How per-patch terms are combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl std::str::FromStr for Reduction {
    type Err = NdsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Reduction::Mean),
            "sum" => Ok(Reduction::Sum),
            other => Err(NdsError::InvalidParameter(format!("unknown reduction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WksParams {
    pub patch_size: usize,
    pub stride: usize,
    /// Stride used to unfold the real frame into candidates.
    pub candidate_stride: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub reduction: Reduction,
}

impl Default for WksParams {
    fn default() -> Self {
        Self {
            patch_size: 7,
            stride: 4,
            candidate_stride: 4,
            k: DEFAULT_K,
            alpha: 1.0,
            beta: 1.0,
            reduction: Reduction::Mean,
        }
    }
}

/// The K best candidates for one query patch, ascending by score.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKMatch {
    pub k: usize,
    /// Candidate indices into the [`PatchGrid`].
    pub candidates: Vec<usize>,
    /// `alpha |g - g_pred|^2 + beta |g - g_gt|^2`.
    pub scores: Vec<f64>,
    /// `|g - g_pred|^2`, the input to the weights.
    pub pred_dist2: Vec<f64>,
    pub weights: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Softmax of `-d / 2` over squared distances, shifted by the maximum
/// exponent before exponentiation.
pub fn softmax_weights(pred_dist2: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = pred_dist2.iter().map(|d| -0.5 * d).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Weights `w_k = exp(d_k) / sum_m exp(d_m)` with `d_k = -|g_k - g_pred|^2 / 2`.
pub fn wks_weights(m: &TopKMatch) -> Vec<f64> {
    softmax_weights(&m.pred_dist2)
}

/// Selects the K candidates minimizing the triple distance. Ties go to the
/// earlier candidate in scan order.
pub fn topk_buddies(
    g_pred: &[f64],
    g_gt: &[f64],
    candidates: &PatchGrid,
    k: usize,
    alpha: f64,
    beta: f64,
) -> Result<TopKMatch> {
    let len = candidates.patch_len();
    if g_pred.len() != len || g_gt.len() != len {
        return Err(NdsError::InvalidInput(format!(
            "patch lengths {} / {} do not match candidate length {len}",
            g_pred.len(),
            g_gt.len()
        )));
    }
    if k == 0 || k > candidates.len() {
        return Err(NdsError::InvalidInput(format!(
            "K = {k} must lie in [1, {}] (the candidate count)",
            candidates.len()
        )));
    }
    let dists: Vec<(f64, f64)> = candidates
        .iter()
        .map(|g| {
            let dp = sq_dist(g, g_pred);
            (alpha * dp + beta * sq_dist(g, g_gt), dp)
        })
        .collect();
    let mut order: Vec<usize> = (0..dists.len()).collect();
    let cmp = |a: &usize, b: &usize| dists[*a].0.total_cmp(&dists[*b].0).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_unstable_by(cmp);
    let pred_dist2: Vec<f64> = order.iter().map(|&n| dists[n].1).collect();
    Ok(TopKMatch {
        k,
        scores: order.iter().map(|&n| dists[n].0).collect(),
        weights: softmax_weights(&pred_dist2),
        pred_dist2,
        candidates: order,
    })
}

/// `sum_k |(g_k - g_pred) * w_k|_1` for one query patch.
pub fn patch_wks_term(
    g_pred: &[f64],
    g_gt: &[f64],
    candidates: &PatchGrid,
    k: usize,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let m = topk_buddies(g_pred, g_gt, candidates, k, alpha, beta)?;
    Ok(m.candidates
        .iter()
        .zip(&m.weights)
        .map(|(&n, &w)| {
            candidates
                .patch(n)
                .iter()
                .zip(g_pred)
                .map(|(g, p)| ((g - p) * w).abs())
                .sum::<f64>()
        })
        .sum())
}

/// Loss value plus the per-patch terms it was reduced from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WksEvaluation {
    pub loss: f64,
    pub per_patch: Vec<f64>,
}

/// Summary of the per-patch terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl WksEvaluation {
    pub fn stats(&self) -> PatchStats {
        let n = self.per_patch.len() as f64;
        let mean = self.per_patch.iter().sum::<f64>() / n;
        let var = self.per_patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        PatchStats {
            count: self.per_patch.len(),
            mean,
            std: var.sqrt(),
            min: self.per_patch.iter().copied().fold(f64::INFINITY, f64::min),
            max: self.per_patch.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// WKS over every patch of `pred`, with candidates unfolded from `real`.
pub fn wks_loss(pred: &ImageBuffer, gt: &ImageBuffer, real: &ImageBuffer, params: &WksParams) -> Result<WksEvaluation> {
    pred.ensure_same_shape(gt, "wks_loss ground truth")?;
    if real.channels() != pred.channels() {
        return Err(NdsError::InvalidInput(
            "real frame channel count differs from the prediction".into(),
        ));
    }
    let candidates = unfold_patches(real, params.patch_size, params.candidate_stride)?;
    wks_loss_with_candidates(pred, gt, &candidates, params)
}

/// WKS against an explicit candidate set.
pub fn wks_loss_with_candidates(
    pred: &ImageBuffer,
    gt: &ImageBuffer,
    candidates: &PatchGrid,
    params: &WksParams,
) -> Result<WksEvaluation> {
    pred.ensure_same_shape(gt, "wks_loss ground truth")?;
    let queries = unfold_patches(pred, params.patch_size, params.stride)?;
    let targets = unfold_patches(gt, params.patch_size, params.stride)?;
    let term = |n: usize| {
        patch_wks_term(
            queries.patch(n),
            targets.patch(n),
            candidates,
            params.k,
            params.alpha,
            params.beta,
        )
    };
    #[cfg(feature = "parallel")]
    let per_patch: Vec<f64> = {
        use rayon::prelude::*;
        (0..queries.len()).into_par_iter().map(term).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_patch: Vec<f64> = (0..queries.len()).map(term).collect::<Result<_>>()?;
    let total: f64 = per_patch.iter().sum();
    let loss = match params.reduction {
        Reduction::Sum => total,
        Reduction::Mean => total / per_patch.len() as f64,
    };
    Ok(WksEvaluation { loss, per_patch })
}

/// `L1(full) + 0.1 * (L1(1/4) + L1(1/8))`, each L1 a mean absolute error.
/// Ground-truth pyramids come from [`bilinear_resize`].
pub fn multiscale_l1(
    pred_full: &ImageBuffer,
    pred_quarter: &ImageBuffer,
    pred_eighth: &ImageBuffer,
    gt_full: &ImageBuffer,
) -> Result<f64> {
    let gt_quarter = bilinear_resize(gt_full, 0.25);
    let gt_eighth = bilinear_resize(gt_full, 0.125);
    let full = gt_full.mean_abs_diff(pred_full)?;
    let quarter = gt_quarter.mean_abs_diff(pred_quarter)?;
    let eighth = gt_eighth.mean_abs_diff(pred_eighth)?;
    Ok(0.1 * (eighth + quarter) + full)
}
