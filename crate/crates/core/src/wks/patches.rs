use crate::error::{NdsError, Result};
use crate::image::ImageBuffer;

/// Square patches flattened row-major with interleaved channels, stored
/// contiguously, each tagged with its `(row, col)` origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    patch_size: usize,
    stride: usize,
    channels: usize,
    origins: Vec<(usize, usize)>,
    data: Vec<f64>,
}

impl PatchGrid {
    /// Builds a candidate set from explicit patches. `stride` is recorded as
    /// zero since there is no regular layout.
    pub fn from_patches(patch_size: usize, channels: usize, patches: Vec<((usize, usize), Vec<f64>)>) -> Result<Self> {
        let len = patch_size * patch_size * channels;
        let mut grid = PatchGrid {
            patch_size,
            stride: 0,
            channels,
            origins: Vec::with_capacity(patches.len()),
            data: Vec::with_capacity(patches.len() * len),
        };
        for (origin, p) in patches {
            if p.len() != len {
                return Err(NdsError::InvalidInput(format!(
                    "patch has {} values, expected {len}",
                    p.len()
                )));
            }
            grid.origins.push(origin);
            grid.data.extend(p);
        }
        Ok(grid)
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Values per patch.
    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn origin(&self, n: usize) -> (usize, usize) {
        self.origins[n]
    }

    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    pub fn patch(&self, n: usize) -> &[f64] {
        let len = self.patch_len();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.patch_len())
    }
}

/// Number of patch positions along an axis of length `n`.
pub fn positions(n: usize, patch_size: usize, stride: usize) -> usize {
    (n - patch_size) / stride + 1
}

/// All `patch_size x patch_size` patches at multiples of `stride`, in
/// row-major scan order of their origins.
pub fn unfold_patches(img: &ImageBuffer, patch_size: usize, stride: usize) -> Result<PatchGrid> {
    let (h, w, ch) = img.shape();
    if patch_size == 0 || stride == 0 {
        return Err(NdsError::InvalidParameter(
            "patch size and stride must be positive".into(),
        ));
    }
    if patch_size > h.min(w) {
        return Err(NdsError::InvalidInput(format!(
            "patch size {patch_size} exceeds the {h}x{w} image"
        )));
    }
    let (rows, cols) = (positions(h, patch_size, stride), positions(w, patch_size, stride));
    let row_len = patch_size * ch;
    let mut grid = PatchGrid {
        patch_size,
        stride,
        channels: ch,
        origins: Vec::with_capacity(rows * cols),
        data: Vec::with_capacity(rows * cols * patch_size * row_len),
    };
    for r in 0..rows {
        for c in 0..cols {
            let (y, x) = (r * stride, c * stride);
            grid.origins.push((y, x));
            for dy in 0..patch_size {
                let start = img.index(y + dy, x, 0);
                grid.data.extend_from_slice(&img.data()[start..start + row_len]);
            }
        }
    }
    Ok(grid)
}
