//! Reference-view selection.
//!
//! The scene is approximated by a bounding sphere. Each camera casts a grid
//! of rays; their first intersections with the sphere form the camera's hit
//! set. The directed cost from view `a` to view `b` sums, over the hits of
//! `a`, the squared distance to the nearest hit of `b`; the mutual cost adds
//! both directions. References for a target are the views with the smallest
//! mutual cost.
//!
//! Poses are world-from-camera in the right-handed OpenCV convention: the
//! camera looks down +z with +x to the right and +y down the image.

mod nn;
mod poses;

pub use nn::{NnStrategy, BRUTE_FORCE_LIMIT};
pub use poses::{import_llff, llff_row_to_pose, load_poses, save_poses};

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};
use nn::NnIndex;

/// Pinhole intrinsics plus world-from-camera extrinsics for one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "w")]
    pub image_w: usize,
    #[serde(rename = "h")]
    pub image_h: usize,
    /// Row-major world-from-camera rotation.
    #[serde(rename = "R")]
    pub rotation: [f64; 9],
    /// Camera origin in world coordinates.
    pub center: [f64; 3],
}

impl CameraPose {
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_row_slice(&self.rotation)
    }

    pub fn origin(&self) -> Point3<f64> {
        Point3::from(self.center)
    }

    /// World-space direction of the optical axis.
    pub fn axis(&self) -> Vector3<f64> {
        self.rotation_matrix() * Vector3::z()
    }

    /// Unit world-space direction of the ray through pixel `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        let d = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        (self.rotation_matrix() * d).normalize()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(NdsError::InvalidInput(format!(
                "focal lengths must be positive ({}, {})",
                self.fx, self.fy
            )));
        }
        if self.image_w == 0 || self.image_h == 0 {
            return Err(NdsError::InvalidInput("image size must be non-zero".into()));
        }
        let r = self.rotation_matrix();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err < 1e-6) || !((r.determinant() - 1.0).abs() < 1e-6) {
            return Err(NdsError::InvalidInput(format!(
                "rotation is not a proper orthonormal matrix (orthogonality error {err:.2e}, det {:.6})",
                r.determinant()
            )));
        }
        Ok(())
    }

    /// Applies the rigid motion `x -> rotation * x + translation` to the pose.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> CameraPose {
        let r = rotation * self.rotation_matrix();
        let c = rotation * self.origin().coords + translation;
        CameraPose {
            rotation: std::array::from_fn(|n| r[(n / 3, n % 3)]),
            center: [c.x, c.y, c.z],
            ..self.clone()
        }
    }

    /// A camera at `center` looking at `target`, with `up` roughly towards
    /// the top of the image.
    pub fn look_at(
        center: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        focal: f64,
        width: usize,
        height: usize,
    ) -> Result<CameraPose> {
        let forward = target - center;
        let right = forward.cross(&up);
        if forward.norm() == 0.0 || right.norm() < 1e-12 {
            return Err(NdsError::DegenerateGeometry(
                "look_at needs a non-parallel up vector".into(),
            ));
        }
        let z = forward.normalize();
        let x = right.normalize();
        let y = z.cross(&x);
        let r = Matrix3::from_columns(&[x, y, z]);
        Ok(CameraPose {
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            image_w: width,
            image_h: height,
            rotation: std::array::from_fn(|n| r[(n / 3, n % 3)]),
            center: [center.x, center.y, center.z],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingSphere {
    pub center: [f64; 3],
    pub radius: f64,
}

impl BoundingSphere {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(NdsError::InvalidParameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center_point(&self) -> Point3<f64> {
        Point3::from(self.center)
    }

    /// Parses `cx,cy,cz,r`.
    pub fn parse(text: &str) -> Result<Self> {
        let v: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| NdsError::InvalidInput(format!("bad sphere '{text}': {e}")))?;
        match v.as_slice() {
            [x, y, z, r] => Self::new([*x, *y, *z], *r),
            _ => Err(NdsError::InvalidInput(format!("sphere needs cx,cy,cz,r, got '{text}'"))),
        }
    }
}

/// Settings for [`estimate_sphere`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereConfig {
    /// Radius as a fraction of the median camera distance.
    pub radius_factor: f64,
}

impl Default for SphereConfig {
    fn default() -> Self {
        Self { radius_factor: 0.7 }
    }
}

/// Center: least-squares point closest to every optical axis. Radius:
/// `radius_factor` times the median camera distance, shrunk when needed so
/// every camera origin stays strictly outside.
pub fn estimate_sphere(cams: &[CameraPose], cfg: &SphereConfig) -> Result<BoundingSphere> {
    if cams.len() < 2 {
        return Err(NdsError::InvalidInput(
            "sphere estimation needs at least two cameras".into(),
        ));
    }
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for cam in cams {
        let d = cam.axis();
        let proj = Matrix3::identity() - d * d.transpose();
        a += proj;
        b += proj * cam.origin().coords;
    }
    let eig = SymmetricEigen::new(a);
    let smallest = eig.eigenvalues.min();
    if smallest < 1e-9 * cams.len() as f64 {
        return Err(NdsError::DegenerateGeometry(
            "optical axes are parallel; they have no unique closest point".into(),
        ));
    }
    let center = a
        .lu()
        .solve(&b)
        .ok_or_else(|| NdsError::DegenerateGeometry("singular axis system".into()))?;
    let mut dists: Vec<f64> = cams.iter().map(|c| (c.origin().coords - center).norm()).collect();
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    let nearest = dists[0];
    if !(nearest > 0.0) {
        return Err(NdsError::DegenerateGeometry(
            "a camera sits at the axis intersection".into(),
        ));
    }
    let radius = (cfg.radius_factor * median).min(0.99 * nearest);
    BoundingSphere::new([center.x, center.y, center.z], radius)
}

/// First ray/sphere intersections for one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct RayHitSet {
    pub source_view: usize,
    pub points: Vec<Point3<f64>>,
}

/// Casts rays through a `grid_n x grid_n` grid of pixel centers,
/// `u_k = (k + 0.5) * width / grid_n`, and keeps the nearer positive root of
/// each ray/sphere quadratic. Rays that miss are dropped.
pub fn cast_rays(cam: &CameraPose, view: usize, sphere: &BoundingSphere, grid_n: usize) -> Result<RayHitSet> {
    if grid_n < 2 {
        return Err(NdsError::InvalidParameter(format!(
            "ray grid must be at least 2x2, got {grid_n}"
        )));
    }
    Ok(cast_rays_unchecked(cam, view, sphere, grid_n))
}

fn cast_rays_unchecked(cam: &CameraPose, view: usize, sphere: &BoundingSphere, grid_n: usize) -> RayHitSet {
    let o = cam.origin();
    let oc = o - sphere.center_point();
    let c = oc.norm_squared() - sphere.radius * sphere.radius;
    let mut points = Vec::with_capacity(grid_n * grid_n);
    for gy in 0..grid_n {
        let v = (gy as f64 + 0.5) * cam.image_h as f64 / grid_n as f64;
        for gx in 0..grid_n {
            let u = (gx as f64 + 0.5) * cam.image_w as f64 / grid_n as f64;
            let d = cam.ray_direction(u, v);
            // |o + t d - c|^2 = r^2 with |d| = 1: t^2 + 2 b t + c = 0
            let half_b = d.dot(&oc);
            let disc = half_b * half_b - c;
            if disc < 0.0 {
                continue;
            }
            let s = disc.sqrt();
            let t = if -half_b - s > 0.0 {
                -half_b - s
            } else if -half_b + s > 0.0 {
                -half_b + s
            } else {
                continue;
            };
            points.push(o + d * t);
        }
    }
    RayHitSet {
        source_view: view,
        points,
    }
}

/// Sum over `a` of the squared distance to the nearest point of `b`.
/// Returns `f64::INFINITY` when `b` is empty.
pub fn directed_cost(a: &RayHitSet, b: &RayHitSet) -> f64 {
    directed_cost_with(a, b, NnStrategy::Auto)
}

pub fn directed_cost_with(a: &RayHitSet, b: &RayHitSet, strategy: NnStrategy) -> f64 {
    if b.points.is_empty() {
        return f64::INFINITY;
    }
    let index = NnIndex::build(&b.points, strategy);
    a.points.iter().map(|p| index.nearest_dist2(p)).sum()
}

/// `directed_cost(a, b) + directed_cost(b, a)`; infinite if either set is empty.
pub fn mutual_cost(a: &RayHitSet, b: &RayHitSet) -> f64 {
    mutual_cost_with(a, b, NnStrategy::Auto)
}

pub fn mutual_cost_with(a: &RayHitSet, b: &RayHitSet, strategy: NnStrategy) -> f64 {
    if a.points.is_empty() || b.points.is_empty() {
        return f64::INFINITY;
    }
    directed_cost_with(a, b, strategy) + directed_cost_with(b, a, strategy)
}

/// Options shared by the selection entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectOptions {
    pub grid_n: usize,
    /// Explicit sphere; estimated from the rig when `None`.
    pub sphere: Option<BoundingSphere>,
    pub sphere_config: SphereConfig,
    pub strategy: NnStrategy,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            grid_n: 16,
            sphere: None,
            sphere_config: SphereConfig::default(),
            strategy: NnStrategy::Auto,
        }
    }
}

/// Chosen references with their mutual costs to the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub target: usize,
    pub references: Vec<usize>,
    pub costs: Vec<f64>,
}

fn resolve_sphere(cams: &[CameraPose], opts: &SelectOptions) -> Result<BoundingSphere> {
    match opts.sphere {
        Some(s) => Ok(s),
        None => estimate_sphere(cams, &opts.sphere_config),
    }
}

/// Hit sets for every camera of the rig.
pub fn cast_rig(cams: &[CameraPose], sphere: &BoundingSphere, grid_n: usize) -> Result<Vec<RayHitSet>> {
    if grid_n < 2 {
        return Err(NdsError::InvalidParameter(format!(
            "ray grid must be at least 2x2, got {grid_n}"
        )));
    }
    for cam in cams {
        cam.validate()?;
    }
    Ok(cams
        .iter()
        .enumerate()
        .map(|(n, c)| cast_rays_unchecked(c, n, sphere, grid_n))
        .collect())
}

/// Full symmetric table of mutual costs; the diagonal is zero.
pub fn cost_matrix(hits: &[RayHitSet], strategy: NnStrategy) -> Vec<Vec<f64>> {
    let n = hits.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let cost = |&(i, j): &(usize, usize)| mutual_cost_with(&hits[i], &hits[j], strategy);
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        pairs.par_iter().map(cost).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = pairs.iter().map(cost).collect();
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[i][j] = v;
        m[j][i] = v;
    }
    m
}

/// Picks the `k` views with the smallest mutual cost to `target`, skipping
/// the target itself and everything in `exclude`. Ties go to the lower index.
pub fn select_references(
    cams: &[CameraPose],
    target: usize,
    k: usize,
    exclude: &[usize],
    opts: &SelectOptions,
) -> Result<Selection> {
    if target >= cams.len() {
        return Err(NdsError::InvalidInput(format!(
            "target {target} out of range for {} cameras",
            cams.len()
        )));
    }
    let candidates: Vec<usize> = (0..cams.len())
        .filter(|&i| i != target && !exclude.contains(&i))
        .collect();
    if k > candidates.len() {
        return Err(NdsError::InvalidInput(format!(
            "requested {k} references but only {} candidate views remain",
            candidates.len()
        )));
    }
    let sphere = resolve_sphere(cams, opts)?;
    let hits = cast_rig(cams, &sphere, opts.grid_n)?;
    Ok(rank_candidates(&hits, target, &candidates, k, opts.strategy))
}

/// Selection against precomputed hit sets.
pub fn rank_candidates(
    hits: &[RayHitSet],
    target: usize,
    candidates: &[usize],
    k: usize,
    strategy: NnStrategy,
) -> Selection {
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&c| (mutual_cost_with(&hits[target], &hits[c], strategy), c))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    Selection {
        target,
        references: scored.iter().map(|s| s.1).collect(),
        costs: scored.iter().map(|s| s.0).collect(),
    }
}

/// `n` cameras evenly spaced on a horizontal circle of radius `distance`
/// around the origin, all aimed at the origin. Camera 0 sits on +x and the
/// index grows counter-clockwise seen from +y.
pub fn ring_rig(n: usize, distance: f64, focal: f64, width: usize, height: usize) -> Vec<CameraPose> {
    (0..n)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / n as f64;
            let c = Point3::new(distance * phi.cos(), 0.0, distance * phi.sin());
            CameraPose::look_at(c, Point3::origin(), Vector3::y(), focal, width, height)
                .expect("ring cameras are well posed")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_set(rng: &mut impl Rng, n: usize) -> RayHitSet {
        RayHitSet {
            source_view: 0,
            points: (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect(),
        }
    }

    fn brute_directed(a: &RayHitSet, b: &RayHitSet) -> f64 {
        let mut total = 0.0;
        for p in &a.points {
            let mut best = f64::INFINITY;
            for q in &b.points {
                let d = (p - q).norm_squared();
                if d < best {
                    best = d;
                }
            }
            total += best;
        }
        total
    }

    #[test]
    fn look_at_builds_proper_rotations() {
        for cam in ring_rig(8, 4.0, 50.0, 64, 48) {
            cam.validate().unwrap();
            assert!((cam.axis() + cam.origin().coords.normalize()).norm() < 1e-12);
        }
    }

    #[test]
    fn validate_rejects_reflections_and_bad_focal() {
        let mut cam = ring_rig(4, 3.0, 40.0, 32, 32).remove(0);
        cam.rotation[0] = -cam.rotation[0];
        cam.rotation[3] = -cam.rotation[3];
        cam.rotation[6] = -cam.rotation[6];
        assert!(cam.validate().is_err());
        let mut cam = ring_rig(4, 3.0, 40.0, 32, 32).remove(0);
        cam.fx = 0.0;
        assert!(cam.validate().is_err());
    }

    #[test]
    fn ring_sphere_is_centered() {
        let s = estimate_sphere(&ring_rig(8, 5.0, 50.0, 64, 64), &SphereConfig::default()).unwrap();
        assert!(Point3::from(s.center).coords.norm() < 1e-6);
        assert!((s.radius - 3.5).abs() < 1e-9);
    }

    #[test]
    fn intersecting_pair_meets_at_intersection() {
        let p = Point3::new(1.0, 2.0, -3.0);
        let a = CameraPose::look_at(Point3::new(6.0, 2.0, -3.0), p, Vector3::y(), 40.0, 32, 32).unwrap();
        let b = CameraPose::look_at(Point3::new(1.0, 2.0, 4.0), p, Vector3::y(), 40.0, 32, 32).unwrap();
        let s = estimate_sphere(&[a, b], &SphereConfig::default()).unwrap();
        assert!((Point3::from(s.center) - p).norm() < 1e-9);
    }

    #[test]
    fn parallel_axes_are_degenerate() {
        let a = CameraPose::look_at(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Vector3::y(),
            40.0,
            32,
            32,
        )
        .unwrap();
        let b = CameraPose::look_at(
            Point3::new(0.0, 0.0, 2.0),
            Point3::new(0.0, 0.0, 3.0),
            Vector3::y(),
            40.0,
            32,
            32,
        )
        .unwrap();
        assert!(matches!(
            estimate_sphere(&[a, b], &SphereConfig::default()),
            Err(NdsError::DegenerateGeometry(_))
        ));
        assert!(estimate_sphere(&ring_rig(1, 3.0, 10.0, 8, 8), &SphereConfig::default()).is_err());
    }

    #[test]
    fn random_rigs_keep_cameras_outside() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n = rng.random_range(2..8);
            let target = Point3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let cams: Vec<CameraPose> = (0..n)
                .map(|_| {
                    let c = Point3::new(
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                    );
                    let jitter = Vector3::new(
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    );
                    CameraPose::look_at(c, target + jitter, Vector3::y(), 30.0, 16, 16).unwrap()
                })
                .collect();
            let s = estimate_sphere(&cams, &SphereConfig::default()).unwrap();
            for cam in &cams {
                assert!((cam.origin() - s.center_point()).norm() > s.radius);
            }
        }
    }

    #[test]
    fn axial_ray_hits_at_expected_depth() {
        let sphere = BoundingSphere::new([0.5, -0.2, 0.1], 1.5).unwrap();
        let o = Point3::new(4.0, 1.0, -2.0);
        let cam = CameraPose::look_at(o, sphere.center_point(), Vector3::y(), 30.0, 3, 3).unwrap();
        let hits = cast_rays(&cam, 0, &sphere, 3).unwrap();
        assert_eq!(hits.points.len(), 9);
        let center_hit = hits.points[4];
        let expect = (o - sphere.center_point()).norm() - sphere.radius;
        assert!(((center_hit - o).norm() - expect).abs() < 1e-9);
        for p in &hits.points {
            assert!(((p - sphere.center_point()).norm() - sphere.radius).abs() < 1e-6 * sphere.radius);
        }
    }

    #[test]
    fn camera_facing_away_misses() {
        let sphere = BoundingSphere::new([0.0, 0.0, 0.0], 1.0).unwrap();
        let cam = CameraPose::look_at(
            Point3::new(3.0, 0.0, 0.0),
            Point3::new(6.0, 0.0, 0.0),
            Vector3::y(),
            20.0,
            16,
            16,
        )
        .unwrap();
        assert!(cast_rays(&cam, 0, &sphere, 8).unwrap().points.is_empty());
        assert!(cast_rays(&cam, 0, &sphere, 1).is_err());
    }

    #[test]
    fn directed_and_mutual_costs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = random_set(&mut rng, 50);
        let b = random_set(&mut rng, 50);
        assert_eq!(directed_cost(&a, &a), 0.0);
        assert_eq!(mutual_cost(&a, &a), 0.0);
        assert_eq!(directed_cost(&a, &b), brute_directed(&a, &b));
        assert_eq!(mutual_cost(&a, &b), mutual_cost(&b, &a));
        let p = RayHitSet {
            source_view: 0,
            points: vec![Point3::new(1.0, 2.0, 3.0)],
        };
        let q = RayHitSet {
            source_view: 1,
            points: vec![Point3::new(2.0, 0.0, 3.0)],
        };
        assert_eq!(directed_cost(&p, &q), 5.0);
        let empty = RayHitSet {
            source_view: 2,
            points: vec![],
        };
        assert_eq!(directed_cost(&a, &empty), f64::INFINITY);
        assert_eq!(mutual_cost(&empty, &a), f64::INFINITY);
    }

    #[test]
    fn grid_strategy_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [1, 17, 100, 400] {
            let a = random_set(&mut rng, n);
            let b = random_set(&mut rng, 400 - n + 1);
            assert_eq!(
                mutual_cost_with(&a, &b, NnStrategy::BruteForce),
                mutual_cost_with(&a, &b, NnStrategy::UniformGrid)
            );
        }
    }

    #[test]
    fn selection_basics() {
        let cams = ring_rig(8, 4.0, 40.0, 64, 64);
        let opts = SelectOptions::default();
        let sel = select_references(&cams, 0, 2, &[], &opts).unwrap();
        let mut refs = sel.references.clone();
        refs.sort();
        assert_eq!(refs, vec![1, 7]);
        let all = select_references(&cams, 3, 7, &[], &opts).unwrap();
        let mut idx = all.references.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 4, 5, 6, 7]);
        assert!(select_references(&cams, 0, 8, &[], &opts).is_err());
        assert!(select_references(&cams, 0, 6, &[1, 2], &opts).is_err());
        let sel = select_references(&cams, 0, 2, &[1], &opts).unwrap();
        assert!(!sel.references.contains(&1) && !sel.references.contains(&0));
    }

    #[test]
    fn duplicate_camera_wins() {
        let mut cams = ring_rig(8, 4.0, 40.0, 64, 64);
        cams.push(cams[5].clone());
        let sel = select_references(&cams, 5, 1, &[], &SelectOptions::default()).unwrap();
        assert_eq!(sel.references, vec![8]);
        assert_eq!(sel.costs, vec![0.0]);
    }

    #[test]
    fn sphere_parsing() {
        assert_eq!(
            BoundingSphere::parse("1, 2,3,0.5").unwrap(),
            BoundingSphere::new([1.0, 2.0, 3.0], 0.5).unwrap()
        );
        assert!(BoundingSphere::parse("1,2,3").is_err());
        assert!(BoundingSphere::parse("1,2,3,-1").is_err());
    }
}
