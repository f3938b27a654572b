//! The individual degradation operators. Every operator returns an image
//! clamped to `[0, 1]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::jpeg::jpeg_luma_compress;
use super::mask::RegionMask;
use crate::error::{NdsError, Result};
use crate::image::{convolve2d, gaussian_kernel_aniso, lab_to_srgb, srgb_to_lab, ImageBuffer, Kernel2D, LabBuffer};

/// `out = m * degraded + (1 - m) * original`, per pixel and channel.
pub fn blend_region_adaptive(original: &ImageBuffer, degraded: &ImageBuffer, mask: &RegionMask) -> Result<ImageBuffer> {
    original.ensure_same_shape(degraded, "blend_region_adaptive")?;
    if mask.height != original.height() || mask.width != original.width() {
        return Err(NdsError::InvalidInput(format!(
            "mask is {}x{}, image is {}x{}",
            mask.height,
            mask.width,
            original.height(),
            original.width()
        )));
    }
    let ch = original.channels();
    let mut out = original.clone();
    for ((o, d), &m) in out
        .data_mut()
        .chunks_exact_mut(ch)
        .zip(degraded.data().chunks_exact(ch))
        .zip(&mask.weights)
    {
        for (o, &d) in o.iter_mut().zip(d) {
            *o = m * d + (1.0 - m) * *o;
        }
    }
    Ok(out)
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation
/// `noise_sigma` to every sample, then spreads it with `splat`.
///
/// Noise is drawn in row-major, channel-interleaved order.
pub fn splatted_gaussian_noise<R: Rng + ?Sized>(
    img: &ImageBuffer,
    noise_sigma: f64,
    splat: &Kernel2D,
    rng: &mut R,
) -> Result<ImageBuffer> {
    let noisy = add_gaussian_noise(img, noise_sigma, rng)?;
    Ok(convolve2d(&noisy, splat))
}

/// The unclamped `img + n` half of the splatted-noise operator.
pub fn add_gaussian_noise<R: Rng + ?Sized>(img: &ImageBuffer, noise_sigma: f64, rng: &mut R) -> Result<ImageBuffer> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(NdsError::InvalidParameter(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let normal = Normal::new(0.0, noise_sigma).expect("validated sigma");
    let mut noisy = img.clone();
    for v in noisy.data_mut() {
        *v += normal.sample(rng);
    }
    Ok(noisy)
}

/// Re-positions pixels to simulate ray jitter; see [`reposition_counted`].
pub fn reposition<R: Rng + ?Sized>(img: &ImageBuffer, prob: f64, max_offset: usize, rng: &mut R) -> ImageBuffer {
    reposition_counted(img, prob, max_offset, rng).0
}

/// For each pixel in row-major order draw `p ~ U[0, 1)`; when `p < prob`
/// the pixel is replaced by the source pixel at `(i + di, j + dj)` with
/// integer offsets uniform in `[-max_offset, max_offset]`, clamped to the
/// image. Sources are always read from the input, never from already
/// displaced output. Returns the image and the number of displaced pixels.
pub fn reposition_counted<R: Rng + ?Sized>(
    img: &ImageBuffer,
    prob: f64,
    max_offset: usize,
    rng: &mut R,
) -> (ImageBuffer, usize) {
    let (h, w, ch) = img.shape();
    let reach = max_offset as i64;
    let mut out = img.clone();
    let mut moved = 0;
    for i in 0..h {
        for j in 0..w {
            let p: f64 = rng.random();
            // Strict comparison keeps prob = 0 an exact identity.
            if p < prob {
                let di = rng.random_range(-reach..=reach);
                let dj = rng.random_range(-reach..=reach);
                let si = (i as i64 + di).clamp(0, h as i64 - 1) as usize;
                let sj = (j as i64 + dj).clamp(0, w as i64 - 1) as usize;
                let dst = img.index(i, j, 0);
                let src = img.index(si, sj, 0);
                out.data_mut()[dst..dst + ch].copy_from_slice(&img.data()[src..src + ch]);
                moved += 1;
            }
        }
    }
    (out, moved)
}

/// Blurs with an oriented anisotropic Gaussian kernel.
pub fn aniso_blur(
    img: &ImageBuffer,
    size: usize,
    sigma_major: f64,
    sigma_minor: f64,
    angle_deg: f64,
) -> Result<ImageBuffer> {
    let kernel = gaussian_kernel_aniso(size, sigma_major, sigma_minor, angle_deg)?;
    Ok(convolve2d(img, &kernel))
}

/// `x^gamma` on every sample.
pub fn gamma_adjust(img: &ImageBuffer, gamma: f64) -> Result<ImageBuffer> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(NdsError::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(img.map(|v| v.clamp(0.0, 1.0).powf(gamma)))
}

/// Applies the same gamma to the target and every reference view.
pub fn illumination_jetting(
    target: &ImageBuffer,
    refs: &[ImageBuffer],
    gamma: f64,
) -> Result<(ImageBuffer, Vec<ImageBuffer>)> {
    let target = gamma_adjust(target, gamma)?;
    let refs = refs
        .iter()
        .map(|r| gamma_adjust(r, gamma))
        .collect::<Result<Vec<_>>>()?;
    Ok((target, refs))
}

/// Runs the JPEG transfer function on the L plane only; a and b are
/// returned untouched.
pub fn compress_lightness_lab(lab: &LabBuffer, quality: u8) -> Result<LabBuffer> {
    let scaled: Vec<f64> = lab.l.iter().map(|&l| l * 2.55).collect();
    let compressed = jpeg_luma_compress(&scaled, lab.height, lab.width, quality)?;
    Ok(LabBuffer {
        height: lab.height,
        width: lab.width,
        l: compressed.into_iter().map(|v| (v / 2.55).clamp(0.0, 100.0)).collect(),
        a: lab.a.clone(),
        b: lab.b.clone(),
    })
}

/// sRGB -> Lab, JPEG-compress L, merge with the original a/b, back to sRGB.
pub fn lightness_compression(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    let lab = srgb_to_lab(img)?;
    Ok(lab_to_srgb(&compress_lightness_lab(&lab, quality)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::gaussian_kernel_iso;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn textured(h: usize, w: usize) -> ImageBuffer {
        ImageBuffer::from_fn(h, w, 3, |i, j, c| {
            let v = 0.5
                + 0.3 * ((i as f64 * 0.37 + c as f64).sin() * (j as f64 * 0.23).cos())
                + if (i / 4 + j / 4) % 2 == 0 { 0.1 } else { -0.1 };
            v.clamp(0.0, 1.0)
        })
        .unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn variance(v: impl Iterator<Item = f64> + Clone) -> f64 {
        let n = v.clone().count() as f64;
        let mean = v.clone().sum::<f64>() / n;
        v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    }

    #[test]
    fn blend_extremes_and_midpoint() {
        let a = ImageBuffer::filled(4, 5, 3, 0.2).unwrap();
        let b = ImageBuffer::filled(4, 5, 3, 0.8).unwrap();
        assert_eq!(
            blend_region_adaptive(&a, &b, &RegionMask::constant(4, 5, 0.0)).unwrap(),
            a
        );
        assert_eq!(
            blend_region_adaptive(&a, &b, &RegionMask::constant(4, 5, 1.0)).unwrap(),
            b
        );
        let mid = blend_region_adaptive(&a, &b, &RegionMask::constant(4, 5, 0.5)).unwrap();
        assert!(mid.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let small = ImageBuffer::filled(4, 4, 3, 0.2).unwrap();
        assert!(blend_region_adaptive(&a, &small, &RegionMask::constant(4, 5, 0.5)).is_err());
        assert!(blend_region_adaptive(&a, &b, &RegionMask::constant(5, 4, 0.5)).is_err());
    }

    #[test]
    fn zero_noise_with_delta_splat_is_identity() {
        let img = textured(9, 11);
        let out = splatted_gaussian_noise(&img, 0.0, &Kernel2D::delta(), &mut rng(1)).unwrap();
        assert_eq!(out, img);
        assert!(splatted_gaussian_noise(&img, -0.1, &Kernel2D::delta(), &mut rng(1)).is_err());
    }

    #[test]
    fn splatted_noise_mean_is_unbiased() {
        // std of the mean <= 0.05 / sqrt(256 * 256 * 3) ~ 1.1e-4; 0.003 is > 25 sigma.
        let img = ImageBuffer::filled(256, 256, 3, 0.5).unwrap();
        let splat = gaussian_kernel_iso(5, 1.0).unwrap();
        let out = splatted_gaussian_noise(&img, 0.05, &splat, &mut rng(2)).unwrap();
        let mean = out.data().iter().sum::<f64>() / out.data().len() as f64;
        assert!((mean - 0.5).abs() < 0.003, "{mean}");
    }

    #[test]
    fn splatted_noise_equals_add_then_convolve() {
        let img = textured(24, 17);
        let splat = gaussian_kernel_iso(5, 0.9).unwrap();
        let out = splatted_gaussian_noise(&img, 0.03, &splat, &mut rng(3)).unwrap();
        // Two-step reference: draw the same stream by hand, then convolve.
        let mut r = rng(3);
        let normal = Normal::new(0.0, 0.03).unwrap();
        let mut noisy = img.clone();
        for v in noisy.data_mut() {
            *v += normal.sample(&mut r);
        }
        assert_eq!(out, convolve2d(&noisy, &splat));
    }

    #[test]
    fn reposition_identity_cases() {
        let img = textured(16, 16);
        assert_eq!(reposition(&img, 0.0, 2, &mut rng(4)), img);
        let flat = ImageBuffer::filled(16, 16, 3, 0.7).unwrap();
        assert_eq!(reposition(&flat, 0.9, 2, &mut rng(4)), flat);
        assert_eq!(reposition(&img, 1.0, 0, &mut rng(4)), img);
    }

    #[test]
    fn reposition_rate_matches_probability() {
        let img = textured(512, 512);
        let (_, moved) = reposition_counted(&img, 0.1, 2, &mut rng(5));
        let rate = moved as f64 / (512.0 * 512.0);
        assert!((0.09..=0.11).contains(&rate), "{rate}");
    }

    #[test]
    fn reposition_moves_stay_within_offset() {
        // Columns encode their own index, so any source column is readable.
        let img = ImageBuffer::from_fn(20, 30, 1, |i, j, _| (i * 30 + j) as f64 / 600.0).unwrap();
        let out = reposition(&img, 0.5, 2, &mut rng(6));
        for i in 0..20 {
            for j in 0..30 {
                let src = (out.get(i, j, 0) * 600.0).round() as isize;
                let (si, sj) = (src / 30, src % 30);
                assert!((si - i as isize).abs() <= 2 && (sj - j as isize).abs() <= 2);
            }
        }
    }

    #[test]
    fn blur_limits_and_variance() {
        let img = textured(20, 20);
        let near_delta = aniso_blur(&img, 7, 1e-3, 1e-3, 20.0).unwrap();
        assert!(near_delta.max_abs_diff(&img).unwrap() < 1e-3);
        let flat = ImageBuffer::filled(10, 10, 3, 0.25).unwrap();
        assert!(
            aniso_blur(&flat, 5, 1.0, 0.5, 45.0)
                .unwrap()
                .max_abs_diff(&flat)
                .unwrap()
                < 1e-12
        );
        let blurred = aniso_blur(&img, 5, 1.2, 0.6, 60.0).unwrap();
        for c in 0..3 {
            let before = variance(img.channel(c).data().iter().copied());
            let after = variance(blurred.channel(c).data().iter().copied());
            assert!(after < before, "channel {c}: {after} >= {before}");
        }
    }

    #[test]
    fn jetting_fixed_points_and_shared_gamma() {
        let img = ImageBuffer::new(1, 3, 1, vec![0.0, 0.25, 1.0]).unwrap();
        let refs = vec![img.clone(), img.clone()];
        let (t, r) = illumination_jetting(&img, &refs, 1.05).unwrap();
        assert_eq!(t.data()[0], 0.0);
        assert_eq!(t.data()[2], 1.0);
        assert!((t.data()[1] - 0.23325824788420185).abs() < 1e-12);
        assert!(r.iter().all(|x| *x == t));
        assert_eq!(gamma_adjust(&img, 1.0).unwrap(), img);
        assert!(gamma_adjust(&img, 0.0).is_err());
        assert!(gamma_adjust(&img, -1.0).is_err());
    }

    #[test]
    fn lightness_compression_touches_only_l() {
        let img = textured(19, 23);
        let lab = srgb_to_lab(&img).unwrap();
        let out = compress_lightness_lab(&lab, 35).unwrap();
        assert_eq!(out.a, lab.a);
        assert_eq!(out.b, lab.b);
        assert_ne!(out.l, lab.l);
    }

    #[test]
    fn lightness_compression_quality_bounds() {
        let img = textured(40, 40);
        let hi = lightness_compression(&img, 100).unwrap();
        assert!(hi.max_abs_diff(&img).unwrap() < 0.02);
        let lo = lightness_compression(&img, 20).unwrap();
        assert!(lo.max_abs_diff(&img).unwrap() > 1e-3);
        assert!(lightness_compression(&img.channel(0), 50).is_err());
    }
}
