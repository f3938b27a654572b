use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};
use crate::image::io::is_image_path;
use crate::rng::{stream, Stage};
use crate::viewsel::{
    cast_rig, estimate_sphere, import_llff, load_poses, rank_candidates, CameraPose, NnStrategy, SphereConfig,
};

/// Where a sample's three frames came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletSource {
    pub dataset: String,
    pub clip: String,
    /// Frame indices of (target, ref1, ref2) within the clip or scene.
    pub frame_indices: [usize; 3],
}

/// Target frame plus two reference frames, still on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triplet {
    pub source: TripletSource,
    pub target: PathBuf,
    pub refs: [PathBuf; 2],
}

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| NdsError::io(dir, e))? {
        let path = entry.map_err(|e| NdsError::io(dir, e))?.path();
        if path.is_file() && is_image_path(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn list_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| NdsError::io(dir, e))? {
        let path = entry.map_err(|e| NdsError::io(dir, e))?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Scans a clip directory (`dir/<clip>/<frames>`) and draws `repeats`
/// triplets per clip: three distinct frames in random roles. Role draws for
/// clip `c` come from the stream keyed by `(source_key << 32) | c`, so a
/// clip's triplets do not depend on which other clips exist after it.
/// Clips with fewer than three frames are skipped with a warning.
pub fn ingest_triplets(dir: &Path, name: &str, repeats: usize, seed: u64, source_key: u64) -> Result<Vec<Triplet>> {
    if !dir.is_dir() {
        return Err(NdsError::Ingestion(format!(
            "triplet source '{name}': {} is not a directory",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for (c, clip_dir) in list_subdirs(dir)?.iter().enumerate() {
        let frames = list_images(clip_dir)?;
        let clip = file_name(clip_dir);
        if frames.len() < 3 {
            warn!("skipping clip {name}/{clip}: {} frame(s), need 3", frames.len());
            continue;
        }
        let mut rng = stream(seed, (source_key << 32) | c as u64, Stage::RoleAssignment);
        for _ in 0..repeats {
            let idx = rand::seq::index::sample(&mut rng, frames.len(), 3);
            let f = [idx.index(0), idx.index(1), idx.index(2)];
            out.push(Triplet {
                source: TripletSource {
                    dataset: name.to_string(),
                    clip: clip.clone(),
                    frame_indices: f,
                },
                target: frames[f[0]].clone(),
                refs: [frames[f[1]].clone(), frames[f[2]].clone()],
            });
        }
    }
    debug!("source {name}: {} triplet(s) from {}", out.len(), dir.display());
    Ok(out)
}

/// Frames and poses of one posed scene, index-aligned.
#[derive(Debug, Clone)]
pub struct PosedScene {
    pub frames: Vec<PathBuf>,
    pub poses: Vec<CameraPose>,
}

/// Loads `dir/images/*` and the pose file. Without an explicit `poses`
/// path, `poses.json`, `poses_bounds.npy` and `poses_bounds.txt` are tried
/// in that order.
pub fn load_posed_scene(dir: &Path, poses: Option<&Path>) -> Result<PosedScene> {
    let pose_path = match poses {
        Some(p) => p.to_path_buf(),
        None => ["poses.json", "poses_bounds.npy", "poses_bounds.txt"]
            .iter()
            .map(|f| dir.join(f))
            .find(|p| p.is_file())
            .ok_or_else(|| NdsError::Ingestion(format!("no pose file found in {}", dir.display())))?,
    };
    let poses = if pose_path.extension().is_some_and(|e| e == "json") {
        load_poses(&pose_path)?
    } else {
        import_llff(&pose_path)?
    };
    let images = dir.join("images");
    if !images.is_dir() {
        return Err(NdsError::Ingestion(format!(
            "{} has no images/ directory",
            dir.display()
        )));
    }
    let frames = list_images(&images)?;
    if frames.len() != poses.len() {
        return Err(NdsError::Ingestion(format!(
            "{}: {} image(s) but {} pose(s)",
            dir.display(),
            frames.len(),
            poses.len()
        )));
    }
    Ok(PosedScene { frames, poses })
}

/// Indices kept out of both targets and references.
pub fn holdout_indices(n: usize, every: Option<usize>) -> Vec<usize> {
    match every {
        Some(e) if e > 0 => (0..n).step_by(e).collect(),
        _ => Vec::new(),
    }
}

/// Every non-held-out view becomes a target (`repeats` times) paired with
/// its two lowest-cost non-held-out references.
pub fn ingest_posed_scene(
    dir: &Path,
    poses: Option<&Path>,
    name: &str,
    holdout_every: Option<usize>,
    grid_n: usize,
    repeats: usize,
) -> Result<Vec<Triplet>> {
    let scene = load_posed_scene(dir, poses)?;
    let n = scene.poses.len();
    let held = holdout_indices(n, holdout_every);
    let usable: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
    if usable.len() < 3 {
        return Err(NdsError::Ingestion(format!(
            "scene {name} has {} usable view(s) after holdout, need 3",
            usable.len()
        )));
    }
    let sphere = estimate_sphere(&scene.poses, &SphereConfig::default())?;
    let hits = cast_rig(&scene.poses, &sphere, grid_n)?;
    let clip = file_name(dir);
    let mut out = Vec::new();
    for &t in &usable {
        let candidates: Vec<usize> = usable.iter().copied().filter(|&c| c != t).collect();
        let sel = rank_candidates(&hits, t, &candidates, 2, NnStrategy::Auto);
        let f = [t, sel.references[0], sel.references[1]];
        for _ in 0..repeats {
            out.push(Triplet {
                source: TripletSource {
                    dataset: name.to_string(),
                    clip: clip.clone(),
                    frame_indices: f,
                },
                target: scene.frames[f[0]].clone(),
                refs: [scene.frames[f[1]].clone(), scene.frames[f[2]].clone()],
            });
        }
    }
    debug!("source {name}: {} triplet(s) from {} views", out.len(), n);
    Ok(out)
}
