use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::degrade::RecipeRanges;
use crate::error::{NdsError, Result};
use crate::SCHEMA_VERSION;

/// LLFF convention: every 8th view (indices 0, 8, 16, ...) is held out.
pub const DEFAULT_HOLDOUT_EVERY: usize = 8;

/// One raw-data source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// A directory of clips; each clip is a subdirectory of frames.
    Triplets {
        name: String,
        dir: PathBuf,
        /// Samples drawn per clip.
        #[serde(default = "one")]
        repeats: usize,
    },
    /// A posed multi-view scene: `images/` plus a pose file.
    Posed {
        name: String,
        dir: PathBuf,
        /// Pose file; defaults to `poses.json`, `poses_bounds.npy` or
        /// `poses_bounds.txt` inside `dir`, in that order.
        #[serde(default)]
        poses: Option<PathBuf>,
        /// Hold out every n-th view from both targets and references.
        #[serde(default = "default_holdout")]
        holdout_every: Option<usize>,
        #[serde(default = "default_grid")]
        grid: usize,
        /// Samples drawn per target view.
        #[serde(default = "one")]
        repeats: usize,
    },
}

impl SourceSpec {
    pub fn name(&self) -> &str {
        match self {
            SourceSpec::Triplets { name, .. } | SourceSpec::Posed { name, .. } => name,
        }
    }

    fn resolve(&mut self, base: &Path) {
        match self {
            SourceSpec::Triplets { dir, .. } => *dir = base.join(&*dir),
            SourceSpec::Posed { dir, poses, .. } => {
                *dir = base.join(&*dir);
                if let Some(p) = poses {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

fn one() -> usize {
    1
}

fn default_holdout() -> Option<usize> {
    Some(DEFAULT_HOLDOUT_EVERY)
}

fn default_grid() -> usize {
    16
}

fn default_verify_fraction() -> f64 {
    0.05
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Everything `build_dataset` needs. Relative paths are resolved against
/// the directory of the config file by [`DatasetConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default = "schema_version")]
    pub schema: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub recipe_ranges: RecipeRanges,
    /// Largest global reference offset in pixels. When absent it is 8 px at
    /// 448x256 and scales with the smaller relative side.
    #[serde(default)]
    pub global_offset_max: Option<usize>,
    #[serde(default = "default_verify_fraction")]
    pub verify_fraction: f64,
    /// Worker count; defaults to the number of CPUs. `NDS_THREADS` caps it.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Replace the manifest and samples of an earlier run.
    #[serde(default)]
    pub overwrite: bool,
}

impl DatasetConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NdsError::io(path, e))?;
        let mut cfg: DatasetConfig =
            serde_json::from_str(&text).map_err(|e| NdsError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output_dir = base.join(&cfg.output_dir);
        for s in &mut cfg.sources {
            s.resolve(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(NdsError::Config(format!(
                "config schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if !(0.0..=1.0).contains(&self.verify_fraction) {
            return Err(NdsError::Config(format!(
                "verify_fraction must lie in [0, 1], got {}",
                self.verify_fraction
            )));
        }
        if self.threads == Some(0) {
            return Err(NdsError::Config("threads must be at least 1".into()));
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.sources {
            if !names.insert(s.name()) {
                return Err(NdsError::Config(format!("duplicate source name '{}'", s.name())));
            }
            if s.name().is_empty()
                || !s
                    .name()
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(NdsError::Config(format!(
                    "source name '{}' must be non-empty ASCII alphanumerics, '-' or '_'",
                    s.name()
                )));
            }
        }
        self.recipe_ranges.validate()
    }

    /// SHA-256 of the canonical JSON form, ignoring settings that do not
    /// affect the produced files (output location, worker count, overwrite).
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.threads = None;
        canonical.overwrite = false;
        let json = serde_json::to_vec(&canonical).expect("configs always serialize");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Effective global offset bound for `height x width` frames, kept
    /// strictly below a quarter of the smaller side.
    pub fn offset_bound(&self, height: usize, width: usize) -> Result<usize> {
        let limit = height.min(width).div_ceil(4).saturating_sub(1);
        match self.global_offset_max {
            Some(m) if m > limit => Err(NdsError::Config(format!(
                "global_offset_max {m} must stay below a quarter of {height}x{width}"
            ))),
            Some(m) => Ok(m),
            None => {
                let scale = (height as f64 / 256.0).min(width as f64 / 448.0);
                Ok(((8.0 * scale).round() as usize).min(limit))
            }
        }
    }
}
