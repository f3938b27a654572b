use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{NdsError, Result};
use crate::image::io::{is_image_path, read_image};
use crate::image::ImageBuffer;

/// Histogram settings. Values above a range clamp into the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub bins: usize,
    pub gradient_max: f64,
    /// Side of the non-overlapping windows for local variance.
    pub window: usize,
    pub variance_max: f64,
    /// Stop after this many images per corpus (sorted by path).
    pub max_images: Option<usize>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            bins: 64,
            gradient_max: 0.5,
            window: 5,
            variance_max: 0.05,
            max_images: None,
        }
    }
}

impl ReportConfig {
    fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.window == 0 || !(self.gradient_max > 0.0) || !(self.variance_max > 0.0) {
            return Err(NdsError::InvalidParameter(format!("bad report settings {self:?}")));
        }
        Ok(())
    }
}

/// Normalized histogram over `[0, max]` with its sample mean and std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub max: f64,
    pub density: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
struct Accumulator {
    max: f64,
    counts: Vec<u64>,
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn new(bins: usize, max: f64) -> Self {
        Self {
            max,
            counts: vec![0; bins],
            n: 0,
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        let bins = self.counts.len();
        let b = ((v / self.max * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        self.counts[b] += 1;
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn finish(&self) -> Histogram {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        Histogram {
            max: self.max,
            density: self.counts.iter().map(|&c| c as f64 / n).collect(),
            mean,
            std: (self.sum_sq / n - mean * mean).max(0.0).sqrt(),
        }
    }
}

/// Statistics of one image corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub images: usize,
    pub gradient: Histogram,
    pub local_variance: Histogram,
    /// R, G, B intensity histograms over `[0, 1]`.
    pub channels: Vec<Histogram>,
}

/// Per-statistic 1-Wasserstein distances between two corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub gradient: f64,
    pub local_variance: f64,
    pub channels: Vec<f64>,
    /// Gradient plus local variance plus the mean channel distance.
    pub aggregate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub simulated: CorpusStats,
    pub real: CorpusStats,
    pub distances: Distances,
}

fn luma(img: &ImageBuffer) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    (0..h * w)
        .map(|p| {
            let (i, j) = (p / w, p % w);
            if img.channels() >= 3 {
                0.299 * img.get(i, j, 0) + 0.587 * img.get(i, j, 1) + 0.114 * img.get(i, j, 2)
            } else {
                img.get(i, j, 0)
            }
        })
        .collect()
}

/// Forward-difference gradient magnitudes of the luma plane.
pub fn gradient_magnitudes(img: &ImageBuffer) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let y = luma(img);
    let mut out = Vec::with_capacity(h.saturating_sub(1) * w.saturating_sub(1));
    for i in 0..h.saturating_sub(1) {
        for j in 0..w.saturating_sub(1) {
            let c = y[i * w + j];
            out.push((y[i * w + j + 1] - c).hypot(y[(i + 1) * w + j] - c));
        }
    }
    out
}

/// Luma variance over non-overlapping `window x window` tiles; partial
/// tiles at the borders are dropped.
pub fn local_variances(img: &ImageBuffer, window: usize) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let y = luma(img);
    let n = (window * window) as f64;
    let mut out = Vec::new();
    for ti in 0..h / window {
        for tj in 0..w / window {
            let vals = (0..window).flat_map(|a| (0..window).map(move |b| (ti * window + a, tj * window + b)));
            let (s, s2) = vals.fold((0.0, 0.0), |(s, s2), (i, j)| {
                let v = y[i * w + j];
                (s + v, s2 + v * v)
            });
            let m = s / n;
            out.push((s2 / n - m * m).max(0.0));
        }
    }
    out
}

/// 1-Wasserstein distance between two histograms on the same bins.
pub fn wasserstein1(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.density.len() != b.density.len() || a.max != b.max {
        return Err(NdsError::InvalidInput("histograms use different bins".into()));
    }
    let width = a.max / a.density.len() as f64;
    let (mut ca, mut cb, mut total) = (0.0, 0.0, 0.0);
    for (x, y) in a.density.iter().zip(&b.density) {
        ca += x;
        cb += y;
        total += (ca - cb).abs();
    }
    Ok(total * width)
}

/// Computes the statistics of a set of in-memory images.
pub fn corpus_stats(images: &[ImageBuffer], cfg: &ReportConfig) -> Result<CorpusStats> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(NdsError::InvalidInput("corpus has no images".into()));
    }
    let mut grad = Accumulator::new(cfg.bins, cfg.gradient_max);
    let mut var = Accumulator::new(cfg.bins, cfg.variance_max);
    let mut chan = vec![Accumulator::new(cfg.bins, 1.0); 3];
    for img in images {
        gradient_magnitudes(img).into_iter().for_each(|v| grad.push(v));
        local_variances(img, cfg.window).into_iter().for_each(|v| var.push(v));
        for (n, v) in img.data().iter().enumerate() {
            chan[(n % img.channels()).min(2)].push(*v);
        }
    }
    Ok(CorpusStats {
        images: images.len(),
        gradient: grad.finish(),
        local_variance: var.finish(),
        channels: chan.iter().map(Accumulator::finish).collect(),
    })
}

pub fn compare_stats(sim: &CorpusStats, real: &CorpusStats) -> Result<Distances> {
    let gradient = wasserstein1(&sim.gradient, &real.gradient)?;
    let local_variance = wasserstein1(&sim.local_variance, &real.local_variance)?;
    let channels = sim
        .channels
        .iter()
        .zip(&real.channels)
        .map(|(a, b)| wasserstein1(a, b))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = gradient + local_variance + channels.iter().sum::<f64>() / channels.len() as f64;
    Ok(Distances {
        gradient,
        local_variance,
        channels,
        aggregate,
    })
}

/// Image files under `dir` (recursively), sorted by path.
pub fn find_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(NdsError::InvalidInput(format!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| NdsError::InvalidInput(format!("{}: {e}", dir.display())))?;
        if entry.file_type().is_file() && is_image_path(entry.path()) {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

fn load_corpus(dir: &Path, cfg: &ReportConfig) -> Result<Vec<ImageBuffer>> {
    let mut paths = find_images(dir)?;
    if let Some(m) = cfg.max_images {
        paths.truncate(m);
    }
    paths.iter().map(read_image).collect()
}

pub fn quality_report_images(sim: &[ImageBuffer], real: &[ImageBuffer], cfg: &ReportConfig) -> Result<QualityReport> {
    let simulated = corpus_stats(sim, cfg)?;
    let real = corpus_stats(real, cfg)?;
    let distances = compare_stats(&simulated, &real)?;
    Ok(QualityReport {
        simulated,
        real,
        distances,
    })
}

/// Compares the image statistics of a simulated corpus against a real one.
pub fn quality_report(sim_dir: &Path, real_dir: &Path, cfg: &ReportConfig) -> Result<QualityReport> {
    let sim = load_corpus(sim_dir, cfg)?;
    let real = load_corpus(real_dir, cfg)?;
    quality_report_images(&sim, &real, cfg)
        .map_err(|e| NdsError::InvalidInput(format!("{} vs {}: {e}", sim_dir.display(), real_dir.display())))
}
