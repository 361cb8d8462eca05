//! Elementary cubes, cubical sets, and their integer chain complexes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

/// An elementary cube, stored in doubled coordinates: an even entry `2a`
/// is the degenerate interval `[a, a]`, an odd entry `2a + 1` is `[a, a + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cube(Vec<i64>);

impl Cube {
    pub fn from_doubled(coords: Vec<i64>) -> Self {
        Cube(coords)
    }

    /// Cube with lower corner `corner` spanning the axes flagged in `extent`.
    pub fn new(corner: &[i64], extent: &[bool]) -> Self {
        Cube(
            corner
                .iter()
                .zip(extent)
                .map(|(c, &e)| 2 * c + i64::from(e))
                .collect(),
        )
    }

    pub fn vertex(p: &[i64]) -> Self {
        Cube(p.iter().map(|c| 2 * c).collect())
    }

    pub fn doubled(&self) -> &[i64] {
        &self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        self.0.iter().filter(|c| c.rem_euclid(2) == 1).count()
    }

    pub fn corner(&self) -> Vec<i64> {
        self.0.iter().map(|c| c.div_euclid(2)).collect()
    }

    pub fn is_extended(&self, axis: usize) -> bool {
        self.0[axis].rem_euclid(2) == 1
    }

    /// Signed codimension-one faces: `∂Q = Σⱼ (−1)^{j} (upperⱼ − lowerⱼ)`
    /// over the extended axes in increasing order, `j` counted from 0.
    pub fn boundary(&self) -> Vec<(Cube, i64)> {
        let mut out = Vec::with_capacity(2 * self.dim());
        let mut j = 0;
        for (axis, &c) in self.0.iter().enumerate() {
            if c.rem_euclid(2) == 0 {
                continue;
            }
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let mut lower = self.0.clone();
            lower[axis] = c - 1;
            let mut upper = self.0.clone();
            upper[axis] = c + 1;
            out.push((Cube(upper), sign));
            out.push((Cube(lower), -sign));
            j += 1;
        }
        out
    }

    /// All faces of every dimension, including the cube itself.
    pub fn faces(&self) -> Vec<Cube> {
        let mut out = vec![Vec::new()];
        for &c in &self.0 {
            let opts: Vec<i64> = if c.rem_euclid(2) == 1 {
                vec![c - 1, c, c + 1]
            } else {
                vec![c]
            };
            out = out
                .into_iter()
                .flat_map(|p| {
                    opts.iter().map(move |&o| {
                        let mut q = p.clone();
                        q.push(o);
                        q
                    })
                })
                .collect();
        }
        out.into_iter().map(Cube).collect()
    }

    fn sort_key(&self) -> (usize, Vec<i64>, &[i64]) {
        (self.dim(), self.corner(), &self.0)
    }
}

impl Ord for Cube {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Cube {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A finite, face-closed set of elementary cubes in a common ambient space.
///
/// Iteration order is lexicographic on (dimension, lower corner).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CubicalSet {
    ambient_dim: usize,
    cells: BTreeSet<Cube>,
}

impl CubicalSet {
    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            cells: BTreeSet::new(),
        }
    }

    /// Closure of the given cubes.
    pub fn from_cubes(ambient_dim: usize, cubes: impl IntoIterator<Item = Cube>) -> Self {
        let mut s = Self::empty(ambient_dim);
        for c in cubes {
            s.insert_closed(&c);
        }
        s
    }

    /// The full box `[lo₁, hi₁] × … ` in integer coordinates.
    pub fn from_box(lo: &[i64], hi: &[i64]) -> Self {
        let n = lo.len();
        let mut tops = vec![Vec::new()];
        for a in 0..n {
            let span: Vec<i64> = if hi[a] > lo[a] {
                (lo[a]..hi[a]).map(|v| 2 * v + 1).collect()
            } else {
                vec![2 * lo[a]]
            };
            tops = tops
                .into_iter()
                .flat_map(|p| {
                    span.iter().map(move |&o| {
                        let mut q = p.clone();
                        q.push(o);
                        q
                    })
                })
                .collect();
        }
        Self::from_cubes(n, tops.into_iter().map(Cube))
    }

    pub fn insert_closed(&mut self, cube: &Cube) {
        assert_eq!(
            cube.ambient_dim(),
            self.ambient_dim,
            "ambient dimension mismatch"
        );
        if self.cells.contains(cube) {
            return;
        }
        for f in cube.faces() {
            self.cells.insert(f);
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &Cube) -> bool {
        self.cells.contains(c)
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cube> {
        self.cells.iter()
    }

    pub fn cells_of_dim(&self, k: usize) -> Vec<Cube> {
        self.cells
            .iter()
            .filter(|c| c.dim() == k)
            .cloned()
            .collect()
    }

    pub fn is_subset(&self, other: &CubicalSet) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn union(&self, other: &CubicalSet) -> CubicalSet {
        CubicalSet {
            ambient_dim: self.ambient_dim,
            cells: self.cells.union(&other.cells).cloned().collect(),
        }
    }

    /// Intersection of two closed sets (closed again).
    pub fn intersection(&self, other: &CubicalSet) -> CubicalSet {
        CubicalSet {
            ambient_dim: self.ambient_dim,
            cells: self.cells.intersection(&other.cells).cloned().collect(),
        }
    }

    /// Maximal cubes (not a proper face of another cell of the set).
    pub fn top_cells(&self) -> Vec<Cube> {
        let mut covered = BTreeSet::new();
        for c in &self.cells {
            for (f, _) in c.boundary() {
                covered.insert(f);
            }
        }
        self.cells
            .iter()
            .filter(|c| !covered.contains(*c))
            .cloned()
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.boundary().iter().all(|(f, _)| self.cells.contains(f)))
    }

    /// Number of connected components (via shared vertices).
    pub fn components(&self) -> usize {
        let verts: Vec<Cube> = self.cells_of_dim(0);
        let index: BTreeMap<&Cube, usize> = verts.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut parent: Vec<usize> = (0..verts.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in self.cells_of_dim(1) {
            let ends: Vec<usize> = e.boundary().iter().map(|(v, _)| index[v]).collect();
            let (a, b) = (find(&mut parent, ends[0]), find(&mut parent, ends[1]));
            parent[a] = b;
        }
        (0..verts.len())
            .filter(|&i| find(&mut parent, i) == i)
            .count()
    }
}

/// Sparse integer column: `(row, value)` pairs sorted by row.
pub type SparseColumn = Vec<(usize, i64)>;

/// Relative cellular chain complex of `(N, L)`: cells of `N ∖ L` with the
/// cubical boundary, rows indexed by the degree-below basis.
#[derive(Clone, Debug)]
pub struct ChainComplex {
    pub bases: Vec<Vec<Cube>>,
    /// `boundaries[k]` holds the columns of `∂ₖ : Cₖ → Cₖ₋₁` (empty for `k = 0`).
    pub boundaries: Vec<Vec<SparseColumn>>,
}

impl ChainComplex {
    pub fn relative(n: &CubicalSet, l: &CubicalSet) -> Self {
        let top = n.ambient_dim();
        let mut bases: Vec<Vec<Cube>> = vec![Vec::new(); top + 1];
        for c in n.cells() {
            if !l.contains(c) {
                bases[c.dim()].push(c.clone());
            }
        }
        Self::with_bases(bases, l)
    }

    /// Builds the complex on explicitly ordered bases (used to check ordering
    /// independence); cells in `l` are dropped from boundaries.
    pub fn with_bases(bases: Vec<Vec<Cube>>, l: &CubicalSet) -> Self {
        let mut boundaries = vec![Vec::new()];
        for k in 1..bases.len() {
            let row_of: BTreeMap<&Cube, usize> = bases[k - 1]
                .iter()
                .enumerate()
                .map(|(i, c)| (c, i))
                .collect();
            let cols = bases[k]
                .iter()
                .map(|c| {
                    let mut col: SparseColumn = c
                        .boundary()
                        .into_iter()
                        .filter(|(f, _)| !l.contains(f))
                        .map(|(f, s)| (row_of[&f], s))
                        .collect();
                    col.sort_unstable();
                    col
                })
                .collect();
            boundaries.push(cols);
        }
        Self { bases, boundaries }
    }

    pub fn rank(&self, k: usize) -> usize {
        self.bases.get(k).map_or(0, Vec::len)
    }

    /// Dense matrix of `∂ₖ` (`rank(k−1) × rank(k)`).
    pub fn dense_boundary(&self, k: usize) -> DMatrix<i64> {
        let rows = if k == 0 { 0 } else { self.rank(k - 1) };
        let cols = self.rank(k);
        let mut m = DMatrix::zeros(rows, cols);
        if k > 0 && k < self.boundaries.len() {
            for (j, col) in self.boundaries[k].iter().enumerate() {
                for &(i, v) in col {
                    m[(i, j)] = v;
                }
            }
        }
        m
    }
}

/// Matrix of `∂ₖ` for the absolute complex of `cs` in the canonical bases.
pub fn boundary_matrix(cs: &CubicalSet, k: usize) -> DMatrix<i64> {
    let cx = ChainComplex::relative(cs, &CubicalSet::empty(cs.ambient_dim()));
    if k > cs.ambient_dim() {
        let rows = if k == cs.ambient_dim() + 1 {
            cx.rank(k - 1)
        } else {
            0
        };
        return DMatrix::zeros(rows, 0);
    }
    if k == 0 {
        return DMatrix::zeros(0, cx.rank(0));
    }
    cx.dense_boundary(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex_has_empty_edge_matrix() {
        let cs = CubicalSet::from_cubes(1, [Cube::vertex(&[0])]);
        let m = boundary_matrix(&cs, 1);
        assert_eq!(m.shape(), (1, 0));
    }

    #[test]
    fn unit_interval_boundary() {
        let cs = CubicalSet::from_box(&[0], &[1]);
        let m = boundary_matrix(&cs, 1);
        assert_eq!(m.shape(), (2, 1));
        assert_eq!(m[(0, 0)], -1);
        assert_eq!(m[(1, 0)], 1);
    }

    #[test]
    fn unit_square_boundary_squares_to_zero() {
        let cs = CubicalSet::from_box(&[0, 0], &[1, 1]);
        let d2 = boundary_matrix(&cs, 2);
        let d1 = boundary_matrix(&cs, 1);
        assert_eq!(d2.shape(), (4, 1));
        assert!(d2.iter().all(|v| v.abs() == 1));
        assert!((&d1 * &d2).iter().all(|&v| v == 0));
    }

    #[test]
    fn cube_faces_and_ordering() {
        let sq = Cube::new(&[0, 0], &[true, true]);
        assert_eq!(sq.faces().len(), 9);
        let cs = CubicalSet::from_cubes(2, [sq]);
        let dims: Vec<usize> = cs.cells().map(Cube::dim).collect();
        let mut sorted = dims.clone();
        sorted.sort();
        assert_eq!(dims, sorted);
        assert!(cs.is_closed());
        assert_eq!(cs.top_cells().len(), 1);
    }

    #[test]
    fn components_of_two_points() {
        let cs = CubicalSet::from_cubes(1, [Cube::vertex(&[0]), Cube::vertex(&[3])]);
        assert_eq!(cs.components(), 2);
        assert_eq!(CubicalSet::from_box(&[0, 0], &[2, 3]).components(), 1);
    }
}
