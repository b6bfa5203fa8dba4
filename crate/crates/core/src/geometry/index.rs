//! Uniform-bucket spatial index for nearest-neighbor queries.
//!
//! Star selection asks for the `k` nearest nodes of every node, and ghost-node
//! construction asks for the nearest inner node of every boundary node. A
//! uniform bucket grid sized to roughly one point per cell answers both in
//! O(1) amortized per query for the quasi-uniform clouds this solver targets,
//! and it is simple enough to make tie-breaking fully deterministic.

use super::Point;

/// Spatial index over a fixed set of points.
///
/// The index is immutable after construction. Queries return squared
/// distances; ties are broken by the lower point id so that results do not
/// depend on bucket traversal order.
#[derive(Clone, Debug)]
pub struct BucketIndex {
    positions: Vec<Point>,
    /// Edge length of a square bucket.
    cell: f64,
    /// Lower-left corner of the bucket grid.
    origin: Point,
    nx: usize,
    ny: usize,
    /// Point ids per bucket, row-major (`iy * nx + ix`).
    buckets: Vec<Vec<u32>>,
}

impl BucketIndex {
    /// Builds an index over `positions`. Ids are the slice indices.
    pub fn build(positions: &[Point]) -> Self {
        assert!(!positions.is_empty(), "cannot index an empty point set");
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in positions {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let extent = (xmax - xmin).max(ymax - ymin);
        // Aim for ~1 point per bucket; degenerate extents fall back to a
        // single bucket, which keeps queries correct (they scan everything).
        let target = (positions.len() as f64).sqrt().ceil();
        let cell = if extent > 0.0 { extent / target } else { 1.0 };
        let nx = (((xmax - xmin) / cell).floor() as usize + 1).max(1);
        let ny = (((ymax - ymin) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let origin = Point { x: xmin, y: ymin };
        for (id, p) in positions.iter().enumerate() {
            let (ix, iy) = clamp_cell(*p, origin, cell, nx, ny);
            buckets[iy * nx + ix].push(id as u32);
        }
        Self {
            positions: positions.to_vec(),
            cell,
            origin,
            nx,
            ny,
            buckets,
        }
    }

    /// Returns the `k` nearest points to `from`, excluding `exclude` if given,
    /// as `(id, squared distance)` sorted ascending. Ties in distance are
    /// broken by the lower id. Returns fewer than `k` entries when the index
    /// does not hold enough points.
    pub fn k_nearest(&self, from: Point, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        self.k_nearest_where(from, k, |id| Some(id) != exclude)
    }

    /// Like [`Self::k_nearest`], keeping only points accepted by `keep`.
    pub fn k_nearest_where(
        &self,
        from: Point,
        k: usize,
        keep: impl Fn(usize) -> bool,
    ) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let (cx, cy) = clamp_cell(from, self.origin, self.cell, self.nx, self.ny);
        let mut found: Vec<(usize, f64)> = Vec::new();
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            // Any point in a ring-`ring` bucket is at least this far away,
            // so once we hold k candidates closer than the ring can offer we
            // are done. (`ring − 1` because `from` may sit at a cell edge.)
            if found.len() >= k {
                let ring_min = self.cell * (ring as f64 - 1.0);
                if ring_min > 0.0 {
                    let kth = kth_smallest(&mut found, k);
                    if ring_min * ring_min > kth {
                        break;
                    }
                }
            }
            self.for_ring_bucket(cx, cy, ring, |ids| {
                for &id in ids {
                    let id = id as usize;
                    if !keep(id) {
                        continue;
                    }
                    found.push((id, from.dist2(self.positions[id])));
                }
            });
        }
        found.sort_unstable_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("node distances are never NaN")
                .then(a.0.cmp(&b.0))
        });
        found.truncate(k);
        found
    }

    /// Nearest point to `from` among those accepted by `keep`, or `None`.
    pub fn nearest_where(&self, from: Point, keep: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        self.k_nearest_where(from, 1, keep).into_iter().next()
    }

    /// Smallest pairwise distance in the indexed set. Zero indicates
    /// duplicate positions.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut min2 = f64::INFINITY;
        for (id, p) in self.positions.iter().enumerate() {
            if let Some((_, d2)) = self.nearest_where(*p, |other| other != id) {
                min2 = min2.min(d2);
            }
        }
        min2.sqrt()
    }

    /// Median over all points of the distance to their nearest neighbor.
    /// A robust characteristic spacing for quasi-uniform clouds.
    pub fn median_nearest_distance(&self) -> f64 {
        let mut dists: Vec<f64> = self
            .positions
            .iter()
            .enumerate()
            .filter_map(|(id, p)| self.nearest_where(*p, |other| other != id))
            .map(|(_, d2)| d2.sqrt())
            .collect();
        dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are never NaN"));
        if dists.is_empty() {
            0.0
        } else {
            dists[dists.len() / 2]
        }
    }

    /// Calls `f` on every bucket of the square ring at Chebyshev distance
    /// `ring` around cell `(cx, cy)`, clipped to the grid.
    fn for_ring_bucket(&self, cx: usize, cy: usize, ring: usize, mut f: impl FnMut(&[u32])) {
        let r = ring as isize;
        let (cx, cy) = (cx as isize, cy as isize);
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r {
                    continue;
                }
                let (ix, iy) = (cx + dx, cy + dy);
                if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                    continue;
                }
                f(&self.buckets[iy as usize * self.nx + ix as usize]);
            }
        }
    }
}

/// Bucket coordinates of `p`, clamped into the grid (queries may lie outside
/// the indexed bounding box, e.g. ghost-node probes).
fn clamp_cell(p: Point, origin: Point, cell: f64, nx: usize, ny: usize) -> (usize, usize) {
    let ix = ((p.x - origin.x) / cell).floor();
    let iy = ((p.y - origin.y) / cell).floor();
    let ix = (ix.max(0.0) as usize).min(nx - 1);
    let iy = (iy.max(0.0) as usize).min(ny - 1);
    (ix, iy)
}

/// Squared distance of the k-th best candidate collected so far.
fn kth_smallest(found: &mut [(usize, f64)], k: usize) -> f64 {
    debug_assert!(found.len() >= k && k > 0);
    found.sort_unstable_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("node distances are never NaN")
            .then(a.0.cmp(&b.0))
    });
    found[k - 1].1
}
