//! Floating-point image buffers and the pixel math shared by the
//! degradation operators: color conversion, kernels, filtering, resampling
//! and 8-bit file I/O.

mod color;
mod filter;
pub mod io;
mod kernel;

pub use color::{lab_to_srgb, srgb_to_lab, LabBuffer};
pub use filter::{bilinear_resize, convolve2d, scaled_dims};
pub use kernel::{gaussian_kernel_aniso, gaussian_kernel_iso, Kernel2D};

use crate::error::{NdsError, Result};

/// Row-major, interleaved image with samples nominally in `[0, 1]`
/// (sRGB-encoded).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(NdsError::InvalidInput(format!(
                "image dimensions must be non-zero, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(NdsError::InvalidInput(format!(
                "images carry 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(NdsError::InvalidInput(format!(
                "sample count {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image by evaluating `f(row, col, channel)` at every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for i in 0..height {
            for j in 0..width {
                for c in 0..channels {
                    data.push(f(i, j, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[self.index(row, col, channel)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        let idx = self.index(row, col, channel);
        self.data[idx] = value;
    }

    /// Same dimensions and channel count.
    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn ensure_same_shape(&self, other: &ImageBuffer, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(NdsError::InvalidInput(format!(
                "{what}: shape {:?} does not match {:?}",
                other.shape(),
                self.shape()
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageBuffer {
        ImageBuffer {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamp_unit(mut self) -> ImageBuffer {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, channel: usize) -> ImageBuffer {
        assert!(channel < self.channels, "channel {channel} out of range");
        ImageBuffer {
            height: self.height,
            width: self.width,
            channels: 1,
            data: self.data.iter().skip(channel).step_by(self.channels).copied().collect(),
        }
    }

    /// Mean absolute difference over all samples.
    pub fn mean_abs_diff(&self, other: &ImageBuffer) -> Result<f64> {
        self.ensure_same_shape(other, "mean_abs_diff")?;
        let sum: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum();
        Ok(sum / self.data.len() as f64)
    }

    pub fn max_abs_diff(&self, other: &ImageBuffer) -> Result<f64> {
        self.ensure_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Peak signal-to-noise ratio in dB for unit-range data.
    pub fn psnr(&self, other: &ImageBuffer) -> Result<f64> {
        self.ensure_same_shape(other, "psnr")?;
        let mse = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.data.len() as f64;
        Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
    }
}
