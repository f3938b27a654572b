//! Exact nearest-neighbor distances over 3-D point sets.

use nalgebra::Point3;

/// Point count above which [`NnStrategy::Auto`] switches to the grid.
pub const BRUTE_FORCE_LIMIT: usize = 1000;

/// How nearest neighbors are found. Every strategy returns identical
/// distances; only the running time differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NnStrategy {
    #[default]
    Auto,
    BruteForce,
    UniformGrid,
}

#[inline]
pub(crate) fn dist2(p: &Point3<f64>, q: &Point3<f64>) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    dx * dx + dy * dy + dz * dz
}

pub(crate) enum NnIndex<'a> {
    Brute(&'a [Point3<f64>]),
    Grid(UniformGrid<'a>),
}

impl<'a> NnIndex<'a> {
    pub(crate) fn build(points: &'a [Point3<f64>], strategy: NnStrategy) -> Self {
        match strategy {
            NnStrategy::BruteForce => NnIndex::Brute(points),
            NnStrategy::UniformGrid => NnIndex::Grid(UniformGrid::new(points)),
            NnStrategy::Auto if points.len() <= BRUTE_FORCE_LIMIT => NnIndex::Brute(points),
            NnStrategy::Auto => NnIndex::Grid(UniformGrid::new(points)),
        }
    }

    /// Squared distance to the nearest indexed point (infinite when empty).
    pub(crate) fn nearest_dist2(&self, p: &Point3<f64>) -> f64 {
        match self {
            NnIndex::Brute(points) => points.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min),
            NnIndex::Grid(grid) => grid.nearest_dist2(p),
        }
    }
}

/// Dense bucket grid over the bounding box of the indexed points.
pub(crate) struct UniformGrid<'a> {
    points: &'a [Point3<f64>],
    origin: Point3<f64>,
    cell: f64,
    dims: [i64; 3],
    buckets: Vec<Vec<u32>>,
}

impl<'a> UniformGrid<'a> {
    fn new(points: &'a [Point3<f64>]) -> Self {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if points.is_empty() {
            lo = Point3::origin();
            hi = Point3::origin();
        }
        let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
        let per_axis = ((points.len() as f64 / 2.0).cbrt().ceil()).max(1.0);
        let cell = if extent > 0.0 { extent / per_axis } else { 1.0 };
        let dims: [i64; 3] = std::array::from_fn(|a| ((hi[a] - lo[a]) / cell).floor() as i64 + 1);
        let mut grid = UniformGrid {
            points,
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize],
        };
        for (n, p) in points.iter().enumerate() {
            let c = grid.cell_of(p);
            let slot = grid.slot(c);
            grid.buckets[slot].push(n as u32);
        }
        grid
    }

    /// Unclamped cell coordinates; may fall outside the grid.
    fn cell_of(&self, p: &Point3<f64>) -> [i64; 3] {
        std::array::from_fn(|a| ((p[a] - self.origin[a]) / self.cell).floor() as i64)
    }

    fn slot(&self, c: [i64; 3]) -> usize {
        ((c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]) as usize
    }

    fn nearest_dist2(&self, p: &Point3<f64>) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let q = self.cell_of(p);
        // Farthest shell that can still intersect the grid.
        let max_shell = (0..3)
            .map(|a| (q[a]).abs().max((q[a] - (self.dims[a] - 1)).abs()))
            .max()
            .unwrap_or(0);
        let mut best = f64::INFINITY;
        for r in 0..=max_shell {
            self.scan_shell(q, r, |n| best = best.min(dist2(p, &self.points[n])));
            // Every cell in shell r + 1 or beyond is at least r cells away.
            let reach = r as f64 * self.cell;
            if best.is_finite() && best <= reach * reach * (1.0 - 1e-9) {
                break;
            }
        }
        best
    }

    fn scan_shell(&self, q: [i64; 3], r: i64, mut visit: impl FnMut(usize)) {
        let range = |a: usize| (q[a] - r).max(0)..=(q[a] + r).min(self.dims[a] - 1);
        for x in range(0) {
            for y in range(1) {
                let on_face_xy = (x - q[0]).abs() == r || (y - q[1]).abs() == r;
                for z in range(2) {
                    if !on_face_xy && (z - q[2]).abs() != r {
                        continue;
                    }
                    for &n in &self.buckets[self.slot([x, y, z])] {
                        visit(n as usize);
                    }
                }
            }
        }
    }
}
