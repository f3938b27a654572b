//! 8-bit file I/O. Samples convert as `v / 255` on read and
//! `round(v * 255)` on write.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

use super::ImageBuffer;
use crate::error::{NdsError, Result};

/// File extensions accepted by [`read_image`].
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn from_rgb8(height: usize, width: usize, bytes: &[u8]) -> Result<ImageBuffer> {
    ImageBuffer::new(height, width, 3, bytes.iter().map(|&b| b as f64 / 255.0).collect())
}

/// Interleaved RGB bytes; single-channel images are replicated to gray.
pub fn to_rgb8(img: &ImageBuffer) -> Vec<u8> {
    match img.channels() {
        3 => img.data().iter().map(|&v| quantize(v)).collect(),
        _ => img.data().iter().flat_map(|&v| [quantize(v); 3]).collect(),
    }
}

/// Reads a PNG or binary PPM as a 3-channel image.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => NdsError::io(path, e),
        source => NdsError::Codec {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let rgb = decoded.to_rgb8();
    from_rgb8(rgb.height() as usize, rgb.width() as usize, rgb.as_raw())
}

/// Writes an image; the format follows the extension (`.ppm` writes binary
/// P6, anything else PNG).
pub fn write_image(path: impl AsRef<Path>, img: &ImageBuffer) -> Result<()> {
    let path = path.as_ref();
    let is_ppm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    let file = std::fs::File::create(path).map_err(|e| NdsError::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes = to_rgb8(img);
    let encoded = if is_ppm {
        PnmEncoder::new(&mut writer)
            .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
            .write_image(&bytes, w, h, ExtendedColorType::Rgb8)
    } else {
        image::codecs::png::PngEncoder::new(&mut writer).write_image(&bytes, w, h, ExtendedColorType::Rgb8)
    };
    encoded.map_err(|source| match source {
        image::ImageError::IoError(e) => NdsError::io(path, e),
        source => NdsError::Codec {
            path: path.to_path_buf(),
            source,
        },
    })?;
    std::io::Write::flush(&mut writer).map_err(|e| NdsError::io(path, e))
}
