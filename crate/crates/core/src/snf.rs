//! Invariant factors of sparse integer matrices.
//!
//! Unit pivots are eliminated sparsely (each removes one row and one column
//! and contributes an invariant factor 1). What is left has no unit entries
//! and is usually tiny; it goes through a dense Smith normal form over
//! arbitrary-precision integers. The sparse phase runs on `i64` with checked
//! arithmetic and restarts on `BigInt` if any intermediate would overflow.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::cubical::SparseColumn;

/// Nonzero invariant factors `d₁ | d₂ | …` of a matrix, all positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantFactors {
    pub factors: Vec<BigInt>,
}

impl InvariantFactors {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Factors greater than one.
    pub fn torsion(&self) -> impl Iterator<Item = &BigInt> {
        self.factors.iter().filter(|d| !d.is_one())
    }
}

trait Coef: Clone {
    fn from_i64(v: i64) -> Self;
    fn is_nil(&self) -> bool;
    /// `±1` for unit entries.
    fn unit(&self) -> Option<i64>;
    /// `self − factor·v`, or `None` on overflow.
    fn sub_mul(&self, factor: &Self, v: &Self) -> Option<Self>;
    fn scaled(&self, u: i64) -> Option<Self>;
    fn to_big(&self) -> BigInt;
}

impl Coef for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn unit(&self) -> Option<i64> {
        (self.abs() == 1).then_some(*self)
    }
    fn sub_mul(&self, factor: &Self, v: &Self) -> Option<Self> {
        self.checked_sub(factor.checked_mul(*v)?)
    }
    fn scaled(&self, u: i64) -> Option<Self> {
        self.checked_mul(u)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Coef for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn unit(&self) -> Option<i64> {
        if One::is_one(self) {
            Some(1)
        } else if One::is_one(&-self) {
            Some(-1)
        } else {
            None
        }
    }
    fn sub_mul(&self, factor: &Self, v: &Self) -> Option<Self> {
        Some(self - factor * v)
    }
    fn scaled(&self, u: i64) -> Option<Self> {
        Some(self * u)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

struct Overflow;

struct SparseReducer<T> {
    cols: Vec<BTreeMap<usize, T>>,
    rows: Vec<BTreeSet<usize>>,
    live: Vec<bool>,
    units: usize,
}

impl<T: Coef> SparseReducer<T> {
    fn new(nrows: usize, columns: &[SparseColumn]) -> Self {
        let mut rows = vec![BTreeSet::new(); nrows];
        let cols = columns
            .iter()
            .enumerate()
            .map(|(j, col)| {
                col.iter()
                    .filter(|(_, v)| *v != 0)
                    .map(|&(i, v)| {
                        rows[i].insert(j);
                        (i, T::from_i64(v))
                    })
                    .collect()
            })
            .collect();
        Self {
            cols,
            rows,
            live: vec![true; columns.len()],
            units: 0,
        }
    }

    fn best_unit(&self, j: usize) -> Option<(usize, i64)> {
        self.cols[j]
            .iter()
            .filter_map(|(&i, v)| v.unit().map(|u| (i, u)))
            .min_by_key(|&(i, _)| (self.rows[i].len(), i))
    }

    fn pivot(&mut self, r: usize, c: usize, u: i64) -> Result<(), Overflow> {
        let pivot_col = std::mem::take(&mut self.cols[c]);
        let others: Vec<usize> = self.rows[r].iter().copied().filter(|&j| j != c).collect();
        for j in others {
            let a = self.cols[j][&r].clone();
            let factor = a.scaled(u).ok_or(Overflow)?;
            for (&i, v) in &pivot_col {
                let cur = self.cols[j]
                    .get(&i)
                    .cloned()
                    .unwrap_or_else(|| T::from_i64(0));
                let next = cur.sub_mul(&factor, v).ok_or(Overflow)?;
                if next.is_nil() {
                    self.cols[j].remove(&i);
                    self.rows[i].remove(&j);
                } else {
                    self.cols[j].insert(i, next);
                    self.rows[i].insert(j);
                }
            }
        }
        for &i in pivot_col.keys() {
            self.rows[i].remove(&c);
        }
        self.live[c] = false;
        self.units += 1;
        Ok(())
    }

    fn run(&mut self) -> Result<(), Overflow> {
        loop {
            let mut progressed = false;
            for j in 0..self.cols.len() {
                if !self.live[j] {
                    continue;
                }
                if let Some((r, u)) = self.best_unit(j) {
                    self.pivot(r, j, u)?;
                    progressed = true;
                }
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    fn residual(&self) -> Vec<Vec<BigInt>> {
        let cols: Vec<usize> = (0..self.cols.len())
            .filter(|&j| self.live[j] && !self.cols[j].is_empty())
            .collect();
        let rows: Vec<usize> = (0..self.rows.len())
            .filter(|&i| !self.rows[i].is_empty())
            .collect();
        let row_pos: BTreeMap<usize, usize> =
            rows.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut m = vec![vec![BigInt::zero(); cols.len()]; rows.len()];
        for (q, &j) in cols.iter().enumerate() {
            for (i, v) in &self.cols[j] {
                m[row_pos[i]][q] = v.to_big();
            }
        }
        m
    }
}

/// Invariant factors of the `nrows × columns.len()` matrix given by sparse columns.
pub fn invariant_factors(nrows: usize, columns: &[SparseColumn]) -> InvariantFactors {
    let (units, residual) = {
        let mut small = SparseReducer::<i64>::new(nrows, columns);
        match small.run() {
            Ok(()) => (small.units, small.residual()),
            Err(Overflow) => {
                let mut big = SparseReducer::<BigInt>::new(nrows, columns);
                if big.run().is_err() {
                    unreachable!("BigInt arithmetic cannot overflow");
                }
                (big.units, big.residual())
            }
        }
    };
    let mut factors = vec![BigInt::one(); units];
    factors.extend(dense_smith_diagonal(residual));
    factors.sort();
    InvariantFactors { factors }
}

/// Nonzero diagonal of the Smith normal form of a dense matrix.
pub fn dense_smith_diagonal(mut m: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !m[i][j].is_zero() && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        let mut clean = true;
        for i in t + 1..rows {
            if m[i][t].is_zero() {
                continue;
            }
            let q = m[i][t].div_floor(&m[t][t]);
            for j in t..cols {
                let s = &q * &m[t][j];
                m[i][j] -= s;
            }
            if !m[i][t].is_zero() {
                clean = false;
            }
        }
        for j in t + 1..cols {
            if m[t][j].is_zero() {
                continue;
            }
            let q = m[t][j].div_floor(&m[t][t]);
            for i in t..rows {
                let s = &q * &m[i][t];
                m[i][j] -= s;
            }
            if !m[t][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // enforce divisibility of the trailing block by the pivot
        let p = m[t][t].clone();
        let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !m[i][j].is_multiple_of(&p)));
        if let Some(i) = bad {
            for j in t..cols {
                let v = m[i][j].clone();
                m[t][j] += v;
            }
            continue;
        }
        diag.push(p.abs());
        t += 1;
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols_of(dense: &[&[i64]]) -> (usize, Vec<SparseColumn>) {
        let nrows = dense.len();
        let ncols = dense.first().map_or(0, |r| r.len());
        let cols = (0..ncols)
            .map(|j| {
                (0..nrows)
                    .filter(|&i| dense[i][j] != 0)
                    .map(|i| (i, dense[i][j]))
                    .collect()
            })
            .collect();
        (nrows, cols)
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn diagonal_two_three_becomes_one_six() {
        let (r, c) = cols_of(&[&[2, 0], &[0, 3]]);
        assert_eq!(invariant_factors(r, &c).factors, big(&[1, 6]));
    }

    #[test]
    fn projective_plane_like_torsion() {
        let (r, c) = cols_of(&[&[2, 4], &[4, 2]]);
        assert_eq!(invariant_factors(r, &c).factors, big(&[2, 6]));
    }

    #[test]
    fn rank_deficient_unit_matrix() {
        let (r, c) = cols_of(&[&[1, -1, 0], &[-1, 0, 1], &[0, 1, -1]]);
        let f = invariant_factors(r, &c);
        assert_eq!(f.rank(), 2);
        assert_eq!(f.torsion().count(), 0);
    }

    #[test]
    fn overflow_falls_back_to_bigint() {
        let m = i64::MAX / 3;
        let (r, c) = cols_of(&[&[1, m, 0], &[m, 0, m], &[0, m, 5]]);
        let f = invariant_factors(r, &c);
        assert_eq!(f.rank(), 3);
    }

    #[test]
    fn empty_matrix() {
        assert_eq!(invariant_factors(0, &[]).rank(), 0);
        assert_eq!(invariant_factors(3, &[vec![], vec![]]).rank(), 0);
    }
}
