use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{DatasetConfig, SourceSpec};
use super::ingest::{ingest_posed_scene, ingest_triplets, Triplet, TripletSource};
use crate::degrade::{degrade, sample_recipe, DegradationRecipe};
use crate::error::{NdsError, Result};
use crate::image::io::{read_image, to_rgb8, write_image};
use crate::image::ImageBuffer;
use crate::rng::{stage_stream, stream, Stage};
use crate::SCHEMA_VERSION;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "NDS_THREADS";

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SAMPLES_DIR: &str = "samples";

/// Shifts `img` by `(dy, dx)` pixels with replicate padding:
/// `out(i, j) = img(clamp(i - dy), clamp(j - dx))`.
pub fn translate(img: &ImageBuffer, dy: i64, dx: i64) -> ImageBuffer {
    let (h, w) = (img.height() as i64, img.width() as i64);
    ImageBuffer::from_fn(img.height(), img.width(), img.channels(), |i, j, c| {
        let si = (i as i64 - dy).clamp(0, h - 1) as usize;
        let sj = (j as i64 - dx).clamp(0, w - 1) as usize;
        img.get(si, sj, c)
    })
    .expect("same shape as a valid image")
}

/// Independently translates both references by integer offsets drawn
/// uniformly from `[-max_px, max_px]` on each axis. Returns the shifted
/// views and their `(dy, dx)` offsets.
pub fn augment_global_offsets<R: Rng + ?Sized>(
    ref1: &ImageBuffer,
    ref2: &ImageBuffer,
    max_px: usize,
    rng: &mut R,
) -> Result<([ImageBuffer; 2], [[i64; 2]; 2])> {
    ref1.ensure_same_shape(ref2, "second reference")?;
    let side = ref1.height().min(ref1.width());
    if 4 * max_px >= side {
        return Err(NdsError::InvalidParameter(format!(
            "global offset {max_px} px must stay below a quarter of the smaller side ({side})"
        )));
    }
    let m = max_px as i64;
    let mut draw = || [rng.random_range(-m..=m), rng.random_range(-m..=m)];
    let offsets = [draw(), draw()];
    let shifted = [
        translate(ref1, offsets[0][0], offsets[0][1]),
        translate(ref2, offsets[1][0], offsets[1][1]),
    ];
    Ok((shifted, offsets))
}

/// Crops a larger reference to the target size around its center.
fn fit_reference(r: ImageBuffer, height: usize, width: usize, what: &str) -> Result<ImageBuffer> {
    if (r.height(), r.width()) == (height, width) {
        return Ok(r);
    }
    if r.height() < height || r.width() < width {
        return Err(NdsError::InvalidInput(format!(
            "{what} is {}x{}, smaller than the {height}x{width} target",
            r.height(),
            r.width()
        )));
    }
    let (oi, oj) = ((r.height() - height) / 2, (r.width() - width) / 2);
    ImageBuffer::from_fn(height, width, r.channels(), |i, j, c| r.get(i + oi, j + oj, c))
}

/// One generated sample as recorded in the manifest. Paths are relative
/// to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub id: String,
    pub degraded: String,
    pub gt: String,
    pub ref1: String,
    pub ref2: String,
    pub recipe_path: String,
    pub recipe: DegradationRecipe,
    pub source: TripletSource,
    /// `(dy, dx)` global offset applied to each reference.
    pub ref_offsets: [[i64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: u32,
    pub config_hash: String,
    pub samples: usize,
    pub verified: Vec<String>,
    /// False when the verification pass found a mismatch.
    pub valid: bool,
}

/// One line of `manifest.jsonl`; the first line is the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestLine {
    Header(ManifestHeader),
    Sample(Box<PairedSample>),
}

/// Parsed manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub samples: Vec<PairedSample>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NdsError::io(path, e))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = match lines.next().map(serde_json::from_str::<ManifestLine>).transpose()? {
            Some(ManifestLine::Header(h)) => h,
            _ => {
                return Err(NdsError::InvalidInput(format!(
                    "{} does not start with a header",
                    path.display()
                )))
            }
        };
        let mut samples = Vec::new();
        for line in lines {
            match serde_json::from_str::<ManifestLine>(line)? {
                ManifestLine::Sample(s) => samples.push(*s),
                ManifestLine::Header(_) => {
                    return Err(NdsError::InvalidInput(format!(
                        "{} has a second header",
                        path.display()
                    )))
                }
            }
        }
        Ok(Manifest { header, samples })
    }
}

/// Summary of a finished build.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub manifest: PathBuf,
    pub samples: usize,
    pub verified: Vec<String>,
    pub threads: usize,
}

/// Worker count: the configured value (or the CPU count), capped by
/// `NDS_THREADS` when set.
pub fn resolve_threads(configured: Option<usize>) -> Result<usize> {
    let base = configured.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| NdsError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
            Ok(base.min(cap))
        }
        Err(_) => Ok(base),
    }
}

/// Sizes the process-wide worker pool used by view selection and WKS from
/// [`resolve_threads`]. Returns the worker count; a pool that already
/// exists is left as is.
pub fn init_global_pool() -> Result<usize> {
    let threads = resolve_threads(None)?;
    #[cfg(feature = "parallel")]
    if rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .is_err()
    {
        return Ok(rayon::current_num_threads());
    }
    Ok(threads)
}

fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(usize, &T) -> R + Sync + Send) -> Result<Vec<R>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| NdsError::Config(format!("cannot start {threads} worker(s): {e}")))?;
        Ok(pool.install(|| items.par_iter().enumerate().map(|(n, t)| f(n, t)).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(items.iter().enumerate().map(|(n, t)| f(n, t)).collect())
    }
}

/// All triplets of the configured sources in config order.
pub fn collect_triplets(cfg: &DatasetConfig) -> Result<Vec<Triplet>> {
    let mut all = Vec::new();
    for (k, src) in cfg.sources.iter().enumerate() {
        let found = match src {
            SourceSpec::Triplets { name, dir, repeats } => ingest_triplets(dir, name, *repeats, cfg.seed, k as u64)?,
            SourceSpec::Posed {
                name,
                dir,
                poses,
                holdout_every,
                grid,
                repeats,
            } => ingest_posed_scene(dir, poses.as_deref(), name, *holdout_every, *grid, *repeats)?,
        };
        all.extend(found);
    }
    Ok(all)
}

fn sample_id(n: usize) -> String {
    format!("{n:06}")
}

fn generate_sample(cfg: &DatasetConfig, n: usize, t: &Triplet) -> Result<PairedSample> {
    let gt = read_image(&t.target)?;
    let (h, w) = (gt.height(), gt.width());
    let r1 = fit_reference(read_image(&t.refs[0])?, h, w, "first reference")?;
    let r2 = fit_reference(read_image(&t.refs[1])?, h, w, "second reference")?;
    let max_px = cfg.offset_bound(h, w)?;
    let mut offset_rng = stream(cfg.seed, n as u64, Stage::GlobalOffset);
    let ([r1, r2], ref_offsets) = augment_global_offsets(&r1, &r2, max_px, &mut offset_rng)?;
    let recipe_seed: u64 = stream(cfg.seed, n as u64, Stage::Recipe).random();
    let recipe = sample_recipe(recipe_seed, &cfg.recipe_ranges)?;
    let out = degrade(&gt, &[r1, r2], &recipe)?;

    let id = sample_id(n);
    let rel = format!("{SAMPLES_DIR}/{id}");
    let dir = cfg.output_dir.join(&rel);
    std::fs::create_dir_all(&dir).map_err(|e| NdsError::io(&dir, e))?;
    write_image(dir.join("degraded.png"), &out.degraded)?;
    write_image(dir.join("gt.png"), &gt)?;
    write_image(dir.join("ref1.png"), &out.refs[0])?;
    write_image(dir.join("ref2.png"), &out.refs[1])?;
    let recipe_file = dir.join("recipe.json");
    std::fs::write(&recipe_file, recipe.to_json()).map_err(|e| NdsError::io(&recipe_file, e))?;
    Ok(PairedSample {
        degraded: format!("{rel}/degraded.png"),
        gt: format!("{rel}/gt.png"),
        ref1: format!("{rel}/ref1.png"),
        ref2: format!("{rel}/ref2.png"),
        recipe_path: format!("{rel}/recipe.json"),
        id,
        recipe,
        source: t.source.clone(),
        ref_offsets,
    })
}

/// Re-runs the simulator from the files on disk and checks that the stored
/// degraded image is reproduced exactly at 8 bits.
pub fn verify_sample(root: &Path, s: &PairedSample) -> Result<bool> {
    for rel in [&s.degraded, &s.gt, &s.ref1, &s.ref2, &s.recipe_path] {
        if !root.join(rel).is_file() {
            return Ok(false);
        }
    }
    let recipe_path = root.join(&s.recipe_path);
    let text = std::fs::read_to_string(&recipe_path).map_err(|e| NdsError::io(&recipe_path, e))?;
    let recipe = DegradationRecipe::from_json(&text)?;
    if recipe != s.recipe {
        return Ok(false);
    }
    let gt = read_image(root.join(&s.gt))?;
    let stored = read_image(root.join(&s.degraded))?;
    let again = degrade(&gt, &[], &recipe)?;
    Ok(stored.same_shape(&again.degraded) && to_rgb8(&stored) == to_rgb8(&again.degraded))
}

/// Verifies every sample listed in `dir/manifest.jsonl`. Returns the number
/// of samples checked, or [`NdsError::VerifyFailed`] naming the mismatches.
pub fn verify_dataset(dir: &Path) -> Result<usize> {
    let manifest = Manifest::read(dir.join(MANIFEST_FILE))?;
    if manifest.header.samples != manifest.samples.len() {
        return Err(NdsError::VerifyFailed {
            ids: vec!["manifest header count".into()],
        });
    }
    let threads = resolve_threads(None)?;
    let checks = par_map(&manifest.samples, threads, |_, s| verify_sample(dir, s))?;
    let mut failed = Vec::new();
    for (s, ok) in manifest.samples.iter().zip(checks) {
        if !matches!(ok, Ok(true)) {
            failed.push(s.id.clone());
        }
    }
    if !failed.is_empty() {
        return Err(NdsError::VerifyFailed { ids: failed });
    }
    Ok(manifest.samples.len())
}

fn clear_previous(cfg: &DatasetConfig) -> Result<()> {
    let manifest = cfg.output_dir.join(MANIFEST_FILE);
    let samples = cfg.output_dir.join(SAMPLES_DIR);
    if !manifest.exists() && !samples.exists() {
        return Ok(());
    }
    if !cfg.overwrite {
        return Err(NdsError::Config(format!(
            "{} already holds a dataset; set \"overwrite\": true to replace it",
            cfg.output_dir.display()
        )));
    }
    if manifest.exists() {
        std::fs::remove_file(&manifest).map_err(|e| NdsError::io(&manifest, e))?;
    }
    if samples.exists() {
        std::fs::remove_dir_all(&samples).map_err(|e| NdsError::io(&samples, e))?;
    }
    Ok(())
}

/// Ingests every source, generates one sample per triplet, verifies a
/// random subset and writes `manifest.jsonl`. Output bytes depend only on
/// the config contents, never on the worker count or scheduling. A failed
/// verification still writes the manifest, marked invalid, and returns
/// [`NdsError::VerifyFailed`].
pub fn build_dataset(cfg: &DatasetConfig) -> Result<BuildReport> {
    cfg.validate()?;
    let threads = resolve_threads(cfg.threads)?;
    let triplets = collect_triplets(cfg)?;
    clear_previous(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| NdsError::io(&cfg.output_dir, e))?;
    info!("generating {} sample(s) on {threads} worker(s)", triplets.len());

    let samples = par_map(&triplets, threads, |n, t| generate_sample(cfg, n, t))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let n_verify = ((cfg.verify_fraction * samples.len() as f64).ceil() as usize).min(samples.len());
    let mut chosen =
        rand::seq::index::sample(&mut stage_stream(cfg.seed, Stage::Verify), samples.len(), n_verify).into_vec();
    chosen.sort_unstable();
    let checks = par_map(&chosen, threads, |_, &n| verify_sample(&cfg.output_dir, &samples[n]))?;
    let mut failed = Vec::new();
    for (&n, ok) in chosen.iter().zip(checks) {
        if !matches!(ok, Ok(true)) {
            failed.push(samples[n].id.clone());
        }
    }
    let verified: Vec<String> = chosen.iter().map(|&n| samples[n].id.clone()).collect();

    let header = ManifestHeader {
        schema: SCHEMA_VERSION,
        config_hash: cfg.content_hash(),
        samples: samples.len(),
        verified: verified.clone(),
        valid: failed.is_empty(),
    };
    let path = cfg.output_dir.join(MANIFEST_FILE);
    let mut buf = Vec::new();
    writeln!(buf, "{}", serde_json::to_string(&ManifestLine::Header(header))?).expect("writing to a Vec");
    for s in &samples {
        writeln!(
            buf,
            "{}",
            serde_json::to_string(&ManifestLine::Sample(Box::new(s.clone())))?
        )
        .expect("writing to a Vec");
    }
    std::fs::write(&path, buf).map_err(|e| NdsError::io(&path, e))?;

    if !failed.is_empty() {
        return Err(NdsError::VerifyFailed { ids: failed });
    }
    info!(
        "wrote {} ({} sample(s), {} verified)",
        path.display(),
        samples.len(),
        verified.len()
    );
    Ok(BuildReport {
        manifest: path,
        samples: samples.len(),
        verified,
        threads,
    })
}
