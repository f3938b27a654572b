//! sRGB <-> CIELAB (D65) conversion.

use std::sync::LazyLock;

use nalgebra::{Matrix3, Vector3};

use super::ImageBuffer;
use crate::error::{NdsError, Result};

/// Linear sRGB -> XYZ (D65).
static RGB_TO_XYZ: LazyLock<Matrix3<f64>> = LazyLock::new(|| {
    Matrix3::new(
        0.4124564, 0.3575761, 0.1804375, //
        0.2126729, 0.7151522, 0.0721750, //
        0.0193339, 0.1191920, 0.9503041,
    )
});

static XYZ_TO_RGB: LazyLock<Matrix3<f64>> =
    LazyLock::new(|| RGB_TO_XYZ.try_inverse().expect("sRGB primaries matrix is invertible"));

/// Reference white: the XYZ of linear RGB (1, 1, 1), so sRGB white maps to
/// a* = b* = 0 exactly.
static WHITE: LazyLock<Vector3<f64>> = LazyLock::new(|| *RGB_TO_XYZ * Vector3::new(1.0, 1.0, 1.0));

const DELTA: f64 = 6.0 / 29.0;

/// Per-pixel CIELAB planes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabBuffer {
    pub height: usize,
    pub width: usize,
    pub l: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[inline]
fn srgb_decode(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

#[inline]
fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

pub(crate) fn pixel_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = Vector3::new(srgb_decode(rgb[0]), srgb_decode(rgb[1]), srgb_decode(rgb[2]));
    let xyz = *RGB_TO_XYZ * lin;
    let fx = lab_f(xyz.x / WHITE.x);
    let fy = lab_f(xyz.y / WHITE.y);
    let fz = lab_f(xyz.z / WHITE.z);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub(crate) fn pixel_from_lab(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = Vector3::new(
        WHITE.x * lab_f_inv(fx),
        WHITE.y * lab_f_inv(fy),
        WHITE.z * lab_f_inv(fz),
    );
    let lin = *XYZ_TO_RGB * xyz;
    [
        srgb_encode(lin.x.max(0.0)).clamp(0.0, 1.0),
        srgb_encode(lin.y.max(0.0)).clamp(0.0, 1.0),
        srgb_encode(lin.z.max(0.0)).clamp(0.0, 1.0),
    ]
}

/// Converts a 3-channel sRGB image to CIELAB under D65.
pub fn srgb_to_lab(img: &ImageBuffer) -> Result<LabBuffer> {
    if img.channels() != 3 {
        return Err(NdsError::InvalidInput(format!(
            "srgb_to_lab needs 3 channels, got {}",
            img.channels()
        )));
    }
    let n = img.height() * img.width();
    let mut out = LabBuffer {
        height: img.height(),
        width: img.width(),
        l: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
    };
    for px in img.data().chunks_exact(3) {
        let [l, a, b] = pixel_to_lab([px[0], px[1], px[2]]);
        out.l.push(l);
        out.a.push(a);
        out.b.push(b);
    }
    Ok(out)
}

/// Converts CIELAB back to sRGB; out-of-gamut colors are clamped.
pub fn lab_to_srgb(lab: &LabBuffer) -> ImageBuffer {
    let mut data = Vec::with_capacity(lab.l.len() * 3);
    for ((&l, &a), &b) in lab.l.iter().zip(&lab.a).zip(&lab.b) {
        data.extend_from_slice(&pixel_from_lab([l, a, b]));
    }
    ImageBuffer::new(lab.height, lab.width, 3, data).expect("lab planes describe a valid image")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn uniform(v: f64) -> ImageBuffer {
        ImageBuffer::filled(3, 4, 3, v).unwrap()
    }

    #[test]
    fn black_and_white() {
        let lab = srgb_to_lab(&uniform(0.0)).unwrap();
        assert!(lab.l.iter().chain(&lab.a).chain(&lab.b).all(|&v| v.abs() < 1e-12));
        let lab = srgb_to_lab(&uniform(1.0)).unwrap();
        assert!(lab.l.iter().all(|&v| (v - 100.0).abs() < 1e-9));
        assert!(lab.a.iter().chain(&lab.b).all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn mid_gray_matches_reference_formula() {
        // Evaluated independently from the published sRGB/CIELAB formulas.
        let lab = srgb_to_lab(&uniform(0.5)).unwrap();
        for ((&l, &a), &b) in lab.l.iter().zip(&lab.a).zip(&lab.b) {
            assert!((l - 53.38896474111432).abs() < 1e-9, "{l}");
            assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_of_reference_points() {
        let n = 4;
        let white = LabBuffer {
            height: 2,
            width: 2,
            l: vec![100.0; n],
            a: vec![0.0; n],
            b: vec![0.0; n],
        };
        assert!(lab_to_srgb(&white).data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let gray = LabBuffer {
            l: vec![50.0; n],
            ..white
        };
        assert!(lab_to_srgb(&gray)
            .data()
            .iter()
            .all(|&v| (v - 0.46632660928353725).abs() < 1e-9));
    }

    #[test]
    fn rejects_single_channel() {
        let img = ImageBuffer::filled(2, 2, 1, 0.5).unwrap();
        assert!(matches!(srgb_to_lab(&img), Err(NdsError::InvalidInput(_))));
    }

    #[test]
    fn round_trip_ten_thousand_pixels() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let img = ImageBuffer::from_fn(100, 100, 3, |_, _, _| rng.random::<f64>()).unwrap();
        let back = lab_to_srgb(&srgb_to_lab(&img).unwrap());
        assert!(img.max_abs_diff(&back).unwrap() < 1e-3);
    }
}
