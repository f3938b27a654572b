#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nds_core::image::io::write_image;
use nds_core::ImageBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth textured frame; `t` shifts the pattern like camera motion.
pub fn synth_frame(h: usize, w: usize, scene: u64, t: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(scene);
    let waves: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            [
                rng.random_range(0.05..0.4),
                rng.random_range(0.05..0.4),
                rng.random_range(0.0..6.3),
                rng.random_range(0.05..0.15),
            ]
        })
        .collect();
    ImageBuffer::from_fn(h, w, 3, |i, j, c| {
        let x = j as f64 + 1.5 * t as f64;
        let y = i as f64 + 0.5 * t as f64;
        let v: f64 = waves
            .iter()
            .enumerate()
            .map(|(n, [fy, fx, ph, a])| a * (fy * y + fx * x + ph + 0.7 * (c + n) as f64).sin())
            .sum();
        (0.5 + v).clamp(0.0, 1.0)
    })
    .unwrap()
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize, ch: usize) -> ImageBuffer {
    ImageBuffer::from_fn(h, w, ch, |_, _, _| rng.random()).unwrap()
}

/// Writes `clips` clip folders of `frames` PNG frames each under `root`.
pub fn write_clips(root: &Path, clips: usize, frames: usize, h: usize, w: usize) -> PathBuf {
    for c in 0..clips {
        let dir = root.join(format!("clip{c:03}"));
        std::fs::create_dir_all(&dir).unwrap();
        for t in 0..frames {
            write_image(dir.join(format!("im{}.png", t + 1)), &synth_frame(h, w, c as u64, t)).unwrap();
        }
    }
    root.to_path_buf()
}

/// Relative path and bytes of every file below `root`, sorted.
pub fn tree_snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
