//! Integer relative homology of cubical pairs.

use std::fmt;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::block::IsolatingBlock;
use crate::cubical::{ChainComplex, CubicalSet};
use crate::snf::invariant_factors;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("the subspace is not a closed cubical subset of the space")]
    NotASubcomplex,
    #[error("torsion coefficient does not fit in 64 bits")]
    TorsionOverflow,
}

/// `H_k(N, L; ℤ) ≅ ℤ^{betti[k]} ⊕ ⨁ ℤ/torsion[k][i]` for `0 ≤ k ≤ ambient_dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyResult {
    pub betti: Vec<usize>,
    pub torsion: Vec<Vec<u64>>,
}

impl HomologyResult {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            betti: vec![0; ambient_dim + 1],
            torsion: vec![Vec::new(); ambient_dim + 1],
        }
    }

    /// `ℤ` in degree `k`, zero elsewhere.
    pub fn z_at(ambient_dim: usize, k: usize) -> Self {
        let mut h = Self::zero(ambient_dim);
        h.betti[k] = 1;
        h
    }

    pub fn betti(&self, k: usize) -> usize {
        self.betti.get(k).copied().unwrap_or(0)
    }

    pub fn has_torsion(&self) -> bool {
        self.torsion.iter().any(|t| !t.is_empty())
    }

    pub fn is_zero(&self) -> bool {
        self.betti.iter().all(|&b| b == 0) && !self.has_torsion()
    }

    /// True iff the homology is exactly `ℤ` in degree `k`.
    pub fn is_z_concentrated_in(&self, k: usize) -> bool {
        !self.has_torsion()
            && self
                .betti
                .iter()
                .enumerate()
                .all(|(d, &b)| b == usize::from(d == k))
            && k < self.betti.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.betti
            .iter()
            .enumerate()
            .map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }
}

impl fmt::Display for HomologyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .betti
            .iter()
            .zip(&self.torsion)
            .enumerate()
            .map(|(k, (b, t))| {
                let tors: Vec<String> = t.iter().map(|o| format!("Z/{o}")).collect();
                if tors.is_empty() {
                    format!("H{k}=Z^{b}")
                } else {
                    format!("H{k}=Z^{b}+{}", tors.join("+"))
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// `H_*(N, L; ℤ)` via invariant factors of the relative boundary matrices.
pub fn relative_homology(n: &CubicalSet, l: &CubicalSet) -> Result<HomologyResult, HomologyError> {
    if l.ambient_dim() != n.ambient_dim() || !l.is_subset(n) || !l.is_closed() || !n.is_closed() {
        return Err(HomologyError::NotASubcomplex);
    }
    homology_of_complex(&ChainComplex::relative(n, l))
}

pub fn homology_of_complex(cx: &ChainComplex) -> Result<HomologyResult, HomologyError> {
    let top = cx.bases.len() - 1;
    let mut ranks = vec![0usize; top + 2];
    let mut torsion = vec![Vec::new(); top + 1];
    for k in 1..=top {
        let f = invariant_factors(cx.rank(k - 1), &cx.boundaries[k]);
        ranks[k] = f.rank();
        torsion[k - 1] = f
            .torsion()
            .map(|d| d.to_u64().ok_or(HomologyError::TorsionOverflow))
            .collect::<Result<_, _>>()?;
    }
    let betti = (0..=top)
        .map(|k| cx.rank(k) - ranks[k] - ranks[k + 1])
        .collect();
    Ok(HomologyResult { betti, torsion })
}

/// Homology Conley index of a block via the index pair `(B, ∂B⁻)`.
pub fn conley_index_of_block(block: &IsolatingBlock) -> Result<HomologyResult, HomologyError> {
    relative_homology(&block.region, &block.exit_set())
}
