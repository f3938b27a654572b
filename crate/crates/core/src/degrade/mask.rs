//! Region-adaptive blending masks: oriented anisotropic Gaussians with unit
//! peak.

use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};

/// Mean, spread and orientation of one blending mask, in pixel units.
/// `c_i` / `sigma_i` run along rows, `c_j` / `sigma_j` along columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    pub c_i: f64,
    pub c_j: f64,
    pub sigma_i: f64,
    pub sigma_j: f64,
    pub angle_deg: f64,
}

impl MaskParams {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [("sigma_i", self.sigma_i), ("sigma_j", self.sigma_j)] {
            if !(s > 0.0) || !s.is_finite() {
                return Err(NdsError::InvalidParameter(format!(
                    "mask {name} must be positive, got {s}"
                )));
            }
        }
        if !self.c_i.is_finite() || !self.c_j.is_finite() || !self.angle_deg.is_finite() {
            return Err(NdsError::InvalidParameter(
                "mask center and angle must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Maps parameters expressed in a `frame x frame` reference square onto a
    /// `height x width` image. Row quantities scale with the height and
    /// column quantities with the width.
    pub fn to_image_frame(&self, height: usize, width: usize, frame: f64) -> MaskParams {
        let si = height as f64 / frame;
        let sj = width as f64 / frame;
        MaskParams {
            c_i: self.c_i * si,
            c_j: self.c_j * sj,
            sigma_i: self.sigma_i * si,
            sigma_j: self.sigma_j * sj,
            angle_deg: self.angle_deg,
        }
    }

    /// A mask that is zero everywhere on any reasonably sized image.
    pub fn off() -> MaskParams {
        MaskParams {
            c_i: -1.0e9,
            c_j: -1.0e9,
            sigma_i: 1.0,
            sigma_j: 1.0,
            angle_deg: 0.0,
        }
    }

    /// A mask that is one everywhere (up to rounding).
    pub fn full() -> MaskParams {
        MaskParams {
            c_i: 0.0,
            c_j: 0.0,
            sigma_i: 1.0e12,
            sigma_j: 1.0e12,
            angle_deg: 0.0,
        }
    }
}

/// Per-pixel blend weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub height: usize,
    pub width: usize,
    pub weights: Vec<f64>,
}

impl RegionMask {
    pub fn constant(height: usize, width: usize, value: f64) -> RegionMask {
        RegionMask {
            height,
            width,
            weights: vec![value.clamp(0.0, 1.0); height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.width + col]
    }
}

/// `M(i, j) = exp(-1/2 (u^2 / sigma_i^2 + v^2 / sigma_j^2))` where `(u, v)`
/// is the offset `(i - c_i, j - c_j)` rotated by `angle_deg`.
pub fn region_mask(height: usize, width: usize, p: &MaskParams) -> Result<RegionMask> {
    p.validate()?;
    let (sin, cos) = p.angle_deg.to_radians().sin_cos();
    let inv_i = 1.0 / (p.sigma_i * p.sigma_i);
    let inv_j = 1.0 / (p.sigma_j * p.sigma_j);
    let mut weights = Vec::with_capacity(height * width);
    for i in 0..height {
        let di = i as f64 - p.c_i;
        for j in 0..width {
            let dj = j as f64 - p.c_j;
            let u = cos * di + sin * dj;
            let v = -sin * di + cos * dj;
            weights.push((-0.5 * (u * u * inv_i + v * v * inv_j)).exp());
        }
    }
    Ok(RegionMask { height, width, weights })
}
