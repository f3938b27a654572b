//! Pose files: the native JSON schema and an importer for LLFF
//! `poses_bounds` arrays.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::CameraPose;
use crate::error::{NdsError, Result};

/// Reads a JSON array of poses and validates each one.
pub fn load_poses(path: impl AsRef<Path>) -> Result<Vec<CameraPose>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| NdsError::io(path, e))?;
    let poses: Vec<CameraPose> = serde_json::from_str(&text)?;
    for (n, p) in poses.iter().enumerate() {
        p.validate()
            .map_err(|e| NdsError::InvalidInput(format!("pose {n} in {}: {e}", path.display())))?;
    }
    Ok(poses)
}

pub fn save_poses(path: impl AsRef<Path>, poses: &[CameraPose]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(poses)?;
    std::fs::write(path, text).map_err(|e| NdsError::io(path, e))
}

/// Converts one 17-float LLFF row (a row-major 3x5 `[R | t | hwf]` matrix
/// followed by near/far bounds) into a pose.
///
/// LLFF rotation columns are (down, right, backwards); the OpenCV frame used
/// here is (right, down, forwards), so the columns are permuted to
/// `(c1, c0, -c2)`. The principal point is the image center.
pub fn llff_row_to_pose(row: &[f64]) -> Result<CameraPose> {
    if row.len() < 15 {
        return Err(NdsError::InvalidInput(format!(
            "LLFF rows need at least 15 values, got {}",
            row.len()
        )));
    }
    let m = |r: usize, c: usize| row[r * 5 + c];
    let down = Vector3::new(m(0, 0), m(1, 0), m(2, 0));
    let right = Vector3::new(m(0, 1), m(1, 1), m(2, 1));
    let back = Vector3::new(m(0, 2), m(1, 2), m(2, 2));
    let r = Matrix3::from_columns(&[right, down, -back]);
    let (h, w, f) = (m(0, 4), m(1, 4), m(2, 4));
    if !(h >= 1.0 && w >= 1.0 && f > 0.0) {
        return Err(NdsError::InvalidInput(format!("bad LLFF intrinsics h={h} w={w} f={f}")));
    }
    let pose = CameraPose {
        fx: f,
        fy: f,
        cx: w / 2.0,
        cy: h / 2.0,
        image_w: w.round() as usize,
        image_h: h.round() as usize,
        rotation: std::array::from_fn(|n| r[(n / 3, n % 3)]),
        center: [m(0, 3), m(1, 3), m(2, 3)],
    };
    pose.validate()?;
    Ok(pose)
}

/// Loads an LLFF `poses_bounds` array, either as `.npy` (N x 17, float64 or
/// float32) or as whitespace-separated text with one 17-value row per view.
pub fn import_llff(path: impl AsRef<Path>) -> Result<Vec<CameraPose>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| NdsError::io(path, e))?;
    let rows: Vec<Vec<f64>> = if bytes.starts_with(b"\x93NUMPY") {
        read_npy_rows(&bytes).map_err(|e| NdsError::InvalidInput(format!("{}: {e}", path.display())))?
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| NdsError::InvalidInput(format!("{} is neither .npy nor text", path.display())))?;
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| NdsError::InvalidInput(format!("{}: {e}", path.display())))
            })
            .collect::<Result<_>>()?
    };
    rows.iter()
        .enumerate()
        .map(|(n, row)| {
            if row.len() != 17 && row.len() != 15 {
                return Err(NdsError::InvalidInput(format!(
                    "row {n} has {} values, expected 17",
                    row.len()
                )));
            }
            llff_row_to_pose(row)
        })
        .collect()
}

fn read_npy_rows(bytes: &[u8]) -> std::result::Result<Vec<Vec<f64>>, String> {
    let npy = npyz::NpyFile::new(bytes).map_err(|e| e.to_string())?;
    let shape = npy.shape().to_vec();
    if shape.len() != 2 {
        return Err(format!("expected a 2-D array, got shape {shape:?}"));
    }
    if npy.order() != npyz::Order::C {
        return Err("fortran-ordered arrays are not supported".into());
    }
    let cols = shape[1] as usize;
    let flat: Vec<f64> = match npy.dtype() {
        npyz::DType::Plain(t) if t.type_char() == npyz::TypeChar::Float && t.size_field() == 4 => npy
            .into_vec::<f32>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(f64::from)
            .collect(),
        _ => npy.into_vec::<f64>().map_err(|e| e.to_string())?,
    };
    Ok(flat.chunks(cols).map(<[f64]>::to_vec).collect())
}
