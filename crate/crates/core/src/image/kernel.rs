//! Normalized 2-D Gaussian kernels.

use crate::error::{NdsError, Result};

/// Square, odd-sized, non-negative kernel whose taps sum to one.
///
/// Taps are stored row-major; `tap(dy, dx)` addresses offsets from the
/// center with `dx` growing to the right and `dy` growing downwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel2D {
    /// Normalizes `weights` into a kernel. Fails on an even size, negative
    /// taps or a zero sum.
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self> {
        check_size(size)?;
        if weights.len() != size * size {
            return Err(NdsError::InvalidParameter(format!(
                "kernel of size {size} needs {} taps, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(NdsError::InvalidParameter(
                "kernel taps must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(NdsError::InvalidParameter("kernel taps sum to zero".into()));
        }
        Ok(Self {
            size,
            taps: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    /// The 1x1 identity kernel.
    pub fn delta() -> Self {
        Self {
            size: 1,
            taps: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn tap(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius() as isize;
        self.taps[((dy + r) * self.size as isize + (dx + r)) as usize]
    }
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(NdsError::InvalidParameter(format!(
            "kernel size must be odd and positive, got {size}"
        )));
    }
    Ok(())
}

fn check_sigma(name: &str, sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(NdsError::InvalidParameter(format!(
            "{name} must be positive, got {sigma}"
        )));
    }
    Ok(())
}

fn sample_grid(size: usize, density: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let r = (size / 2) as isize;
    let mut w = Vec::with_capacity(size * size);
    for dy in -r..=r {
        for dx in -r..=r {
            w.push(density(dx as f64, dy as f64));
        }
    }
    w
}

/// Isotropic Gaussian, `exp(-(x^2 + y^2) / (2 sigma^2))` on the centered grid.
pub fn gaussian_kernel_iso(size: usize, sigma: f64) -> Result<Kernel2D> {
    check_size(size)?;
    check_sigma("sigma", sigma)?;
    let s2 = 2.0 * sigma * sigma;
    Kernel2D::from_weights(size, sample_grid(size, |x, y| (-(x * x + y * y) / s2).exp()))
}

/// Oriented anisotropic Gaussian with covariance
/// `R(angle) diag(sigma_major^2, sigma_minor^2) R(angle)^T`.
///
/// At `angle_deg = 0` the major axis is horizontal. Positive angles rotate
/// the major axis from +x towards +y (clockwise on screen, since rows grow
/// downwards).
pub fn gaussian_kernel_aniso(size: usize, sigma_major: f64, sigma_minor: f64, angle_deg: f64) -> Result<Kernel2D> {
    check_size(size)?;
    check_sigma("sigma_major", sigma_major)?;
    check_sigma("sigma_minor", sigma_minor)?;
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let inv_a = 1.0 / (sigma_major * sigma_major);
    let inv_b = 1.0 / (sigma_minor * sigma_minor);
    Kernel2D::from_weights(
        size,
        sample_grid(size, |x, y| {
            let u = cos * x + sin * y;
            let v = -sin * x + cos * y;
            (-0.5 * (u * u * inv_a + v * v * inv_b)).exp()
        }),
    )
}
