//! Bucket-grid index over point clouds for radius and nearest-point queries.

use smallvec::SmallVec;

/// Dense bucket grid over the sample bounding box with cells no smaller
/// than the radius, stored in compressed-row form.
#[derive(Clone, Debug)]
pub(crate) struct CellIndex {
    pub(crate) origin: Vec<f64>,
    pub(crate) size: f64,
    pub(crate) shape: Vec<usize>,
    pub(crate) strides: Vec<usize>,
    pub(crate) start: Vec<usize>,
    pub(crate) ids: Vec<usize>,
}

const MAX_CELLS: f64 = 1e6;

pub(crate) type Coords = SmallVec<[usize; 8]>;

impl CellIndex {
    fn new(points: &[Vec<f64>], radius: f64) -> Self {
        let d = points[0].len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for a in 0..d {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let mut size = radius;
        let cells_for = |s: f64| -> f64 {
            (0..d)
                .map(|a| ((hi[a] - lo[a]) / s).floor() + 1.0)
                .product()
        };
        while cells_for(size) > MAX_CELLS {
            size *= 2.0;
        }
        let shape: Vec<usize> = (0..d)
            .map(|a| ((hi[a] - lo[a]) / size).floor() as usize + 1)
            .collect();
        let mut strides = vec![1; d];
        for a in 1..d {
            strides[a] = strides[a - 1] * shape[a - 1];
        }
        let total: usize = shape.iter().product();
        let mut index = Self {
            origin: lo,
            size,
            shape,
            strides,
            start: vec![0; total + 1],
            ids: Vec::with_capacity(points.len()),
        };
        let home: Vec<usize> = points
            .iter()
            .map(|p| index.linear(&index.cell_of(p)))
            .collect();
        for &h in &home {
            index.start[h + 1] += 1;
        }
        for c in 0..total {
            index.start[c + 1] += index.start[c];
        }
        let mut fill = index.start.clone();
        index.ids = vec![0; points.len()];
        for (i, &h) in home.iter().enumerate() {
            index.ids[fill[h]] = i;
            fill[h] += 1;
        }
        index
    }

    /// Cell coordinates of `p`, clamped to the grid.
    pub(crate) fn cell_of(&self, p: &[f64]) -> Coords {
        p.iter()
            .enumerate()
            .map(|(a, &v)| {
                let c = ((v - self.origin[a]) / self.size).floor();
                c.clamp(0.0, (self.shape[a] - 1) as f64) as usize
            })
            .collect()
    }

    pub(crate) fn linear(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    /// Bucket-order slots of the samples in `cell`.
    pub(crate) fn bucket(&self, cell: usize) -> std::ops::Range<usize> {
        self.start[cell]..self.start[cell + 1]
    }

    /// Visits every cell within Chebyshev distance `r` of `home`.
    pub(crate) fn for_each_near(&self, home: &[usize], r: usize, mut visit: impl FnMut(usize)) {
        let d = home.len();
        let lo: Coords = home.iter().map(|&h| h.saturating_sub(r)).collect();
        let hi: Coords = home
            .iter()
            .zip(&self.shape)
            .map(|(&h, &s)| (h + r).min(s - 1))
            .collect();
        let mut cur = lo.clone();
        let mut lin = self.linear(&cur);
        loop {
            visit(lin);
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                if cur[a] < hi[a] {
                    cur[a] += 1;
                    lin += self.strides[a];
                    break;
                }
                lin -= (cur[a] - lo[a]) * self.strides[a];
                cur[a] = lo[a];
                a += 1;
            }
        }
    }
}

/// Points stored in bucket order of a [`CellIndex`].
#[derive(Clone, Debug)]
pub struct PointIndex {
    stride: usize,
    points: Vec<f64>,
    pub(crate) cells: CellIndex,
}

impl PointIndex {
    /// Index with cells of side at least `cell`.
    pub fn new(coords: &[Vec<f64>], cell: f64) -> Self {
        assert!(!coords.is_empty(), "point index needs points");
        assert!(cell > 0.0, "cell size must be positive");
        let cells = CellIndex::new(coords, cell);
        let points = cells
            .ids
            .iter()
            .flat_map(|&i| coords[i].iter().copied())
            .collect();
        Self {
            stride: coords[0].len(),
            points,
            cells,
        }
    }

    /// Index with about one point per cell.
    pub fn with_mean_spacing(coords: &[Vec<f64>]) -> Self {
        assert!(!coords.is_empty(), "point index needs points");
        let d = coords[0].len();
        let extents: Vec<f64> = (0..d)
            .map(|a| {
                let (lo, hi) = coords
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
                        (l.min(p[a]), h.max(p[a]))
                    });
                hi - lo
            })
            .filter(|&e| e > 0.0)
            .collect();
        let cell = if extents.is_empty() {
            1.0
        } else {
            let volume: f64 = extents.iter().product();
            (volume / coords.len() as f64).powf(1.0 / extents.len() as f64)
        };
        Self::new(coords, cell)
    }

    pub fn len(&self) -> usize {
        self.cells.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates at bucket slot `j`.
    pub(crate) fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.stride..(j + 1) * self.stride]
    }

    /// Original indices in bucket order.
    pub(crate) fn order(&self) -> &[usize] {
        &self.cells.ids
    }

    /// Original index and distance of the point nearest to `p`.
    pub fn nearest(&self, p: &[f64]) -> Option<(usize, f64)> {
        let home = self.cells.cell_of(p);
        self.nearest_slot(p, &home, None)
            .map(|j| (self.cells.ids[j], dist2(p, self.point(j)).sqrt()))
    }

    /// Distance from point `i` (original index) to its nearest other point.
    pub fn nearest_other(&self, i: usize, p: &[f64]) -> Option<f64> {
        let home = self.cells.cell_of(p);
        self.nearest_slot(p, &home, Some(i))
            .map(|j| dist2(p, self.point(j)).sqrt())
    }

    /// Bucket slot of the point nearest to `p`, ignoring the point with
    /// original index `skip`; ties go to the lower original index.
    pub(crate) fn nearest_slot(
        &self,
        p: &[f64],
        home: &[usize],
        skip: Option<usize>,
    ) -> Option<usize> {
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.cells.shape.iter().copied().max().unwrap_or(1);
        for r in 0..=max_ring {
            self.cells.for_each_near(home, r, |c| {
                for j in self.cells.bucket(c) {
                    let i = self.cells.ids[j];
                    if Some(i) == skip {
                        continue;
                    }
                    let d = dist2(p, self.point(j));
                    if d < best.0
                        || (d == best.0 && best.1 != usize::MAX && i < self.cells.ids[best.1])
                    {
                        best = (d, j);
                    }
                }
            });
            // every point outside ring r is farther than the ring's inner
            // edge, measured from the clamped home cell
            if best.1 != usize::MAX {
                let gap = self.outside_distance(p, home, r);
                if gap * gap > best.0 {
                    break;
                }
            }
        }
        (best.1 != usize::MAX).then_some(best.1)
    }

    /// Lower bound on the distance from `p` to any cell outside ring `r`.
    fn outside_distance(&self, p: &[f64], home: &[usize], r: usize) -> f64 {
        let c = &self.cells;
        let mut best = f64::INFINITY;
        for (a, &h) in home.iter().enumerate() {
            let lo_edge = c.origin[a] + (h as f64 - r as f64) * c.size;
            let hi_edge = c.origin[a] + (h + r + 1) as f64 * c.size;
            if h >= r {
                best = best.min((p[a] - lo_edge).max(0.0));
            }
            if h + r + 1 < c.shape[a] {
                best = best.min((hi_edge - p[a]).max(0.0));
            }
        }
        best
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}
