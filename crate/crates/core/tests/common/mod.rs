//! Synthetic data sets and independent oracles shared by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use snblock::cubical::{Cube, CubicalSet};
use snblock::ingest::{Sample, SampledVectorField};
use snblock::pipeline::{block_stage, synthesize_stage, BlockSpec, PipelineConfig};
use snblock::synthesis::family::SynthesizedFamily;

/// `f(x, λ) = 1 − 2λ − x²` sampled on `[−2, 2] × [0, 1]`.
pub fn fold_1d_samples() -> SampledVectorField {
    let samples = (0..=80)
        .flat_map(|i| {
            (0..=20).map(move |j| {
                let x = -2.0 + 0.05 * i as f64;
                let l = 0.05 * j as f64;
                Sample {
                    x: vec![x],
                    lambda: l,
                    f: vec![1.0 - 2.0 * l - x * x],
                }
            })
        })
        .collect();
    SampledVectorField::new(1, samples, 5.0).unwrap()
}

pub fn fold_1d_block() -> BlockSpec {
    BlockSpec::parse("box=-2 2\nresolution=8 ; 10\nsplit=0 0\nwitness=0\n").unwrap()
}

/// `f(x, y, λ) = (1 − 2λ − x², −2y)` on `[−2, 2] × [−1, 1] × [0, 1]`: a stable
/// node and a saddle that collide at `λ = ½`.
pub fn fold_2d_samples() -> SampledVectorField {
    let mut samples = Vec::new();
    for i in 0..=40 {
        for j in 0..=20 {
            for l in 0..=20 {
                let x = -2.0 + 0.1 * i as f64;
                let y = -1.0 + 0.1 * j as f64;
                let lam = 0.05 * l as f64;
                samples.push(Sample {
                    x: vec![x, y],
                    lambda: lam,
                    f: vec![1.0 - 2.0 * lam - x * x, -2.0 * y],
                });
            }
        }
    }
    SampledVectorField::new(2, samples, 5.0).unwrap()
}

pub fn fold_2d_block() -> BlockSpec {
    BlockSpec::parse("box=-2 2; -1 1\nresolution=8 4 ; 10\nsplit=0 0\nwitness=0 0\n").unwrap()
}

/// The family synthesized from the 1D fold data, built once per test binary.
pub fn fold_1d_family() -> &'static SynthesizedFamily {
    static FAMILY: OnceLock<SynthesizedFamily> = OnceLock::new();
    FAMILY.get_or_init(|| {
        let svf = fold_1d_samples();
        let pair = block_stage(&svf, &fold_1d_block()).unwrap();
        let cfg = PipelineConfig::new("samples.txt".into(), None, "out".into());
        synthesize_stage(&svf, &pair, 1, &cfg).unwrap().0
    })
}

// ------------------------------------------------------------------ oracles

fn rational(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Rank over ℚ by exact fraction-field elimination.
pub fn rational_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| rational(v)).collect())
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let piv = m[rank][c].clone();
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let factor = &m[r][c] / &piv;
                for k in c..cols {
                    let d = &factor * &m[rank][k];
                    m[r][k] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Invariant factors `d_1 | d_2 | …` of an integer matrix by brute-force
/// gcd-of-minors: `d_1⋯d_k = gcd of all k×k minors`.
pub fn invariant_factors(rows: &[Vec<i64>]) -> Vec<BigInt> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    let mut prev = BigInt::one();
    for k in 1..=nr.min(nc) {
        let mut g = BigInt::zero();
        for rs in subsets(nr, k) {
            for cs in subsets(nc, k) {
                let sub: Vec<Vec<BigRational>> = rs
                    .iter()
                    .map(|&r| cs.iter().map(|&c| rational(rows[r][c])).collect())
                    .collect();
                let d = determinant(sub).to_integer();
                g = num_integer::Integer::gcd(&g, &d);
            }
        }
        if g.is_zero() {
            break;
        }
        out.push(&g / &prev);
        prev = g;
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut with: Vec<Vec<usize>> = subsets(n - 1, k - 1)
        .into_iter()
        .map(|mut s| {
            s.push(n - 1);
            s
        })
        .collect();
    with.extend(subsets(n - 1, k));
    with
}

fn determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c].clone();
        for r in c + 1..n {
            let f = &m[r][c] / &m[c][c];
            for k in c..n {
                let d = &f * &m[c][k];
                m[r][k] -= d;
            }
        }
    }
    det
}

/// Torsion orders (invariant factors > 1) of an integer matrix.
pub fn torsion_of(rows: &[Vec<i64>]) -> Vec<u64> {
    invariant_factors(rows)
        .into_iter()
        .map(|d| d.abs())
        .filter(|d| *d > BigInt::one())
        .map(|d| u64::try_from(d).unwrap())
        .collect()
}

/// Smith normal form diagonal by plain pivoting on the smallest entry.
pub fn elementary_divisors(rows: &[Vec<i64>]) -> Vec<BigInt> {
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let nr = m.len();
    let nc = m.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for t in 0..nr.min(nc) {
        loop {
            let Some((pr, pc)) = (t..nr)
                .flat_map(|r| (t..nc).map(move |c| (r, c)))
                .filter(|&(r, c)| !m[r][c].is_zero())
                .min_by_key(|&(r, c)| m[r][c].abs())
            else {
                return out;
            };
            m.swap(t, pr);
            for row in m.iter_mut() {
                row.swap(t, pc);
            }
            let p = m[t][t].clone();
            let mut clean = true;
            for r in t + 1..nr {
                let q = num_integer::Integer::div_floor(&m[r][t], &p);
                for c in t..nc {
                    let d = &q * &m[t][c];
                    m[r][c] -= d;
                }
                clean &= m[r][t].is_zero();
            }
            for c in t + 1..nc {
                let q = num_integer::Integer::div_floor(&m[t][c], &p);
                for r in t..nr {
                    let d = &q * &m[r][t];
                    m[r][c] -= d;
                }
                clean &= m[t][c].is_zero();
            }
            if !clean {
                continue;
            }
            // the pivot must divide the remaining block
            if let Some(r) = (t + 1..nr).find(|&r| (t + 1..nc).any(|c| !(&m[r][c] % &p).is_zero()))
            {
                for c in t..nc {
                    let v = m[r][c].clone();
                    m[t][c] += v;
                }
                continue;
            }
            out.push(p.abs());
            break;
        }
    }
    out
}

/// Independent relative homology: cells as doubled coordinates, boundary
/// rebuilt here, betti from ℚ-ranks and torsion from the Smith diagonal.
pub fn oracle_homology(n: &CubicalSet, l: &CubicalSet) -> (Vec<usize>, Vec<Vec<u64>>) {
    let dim = n.ambient_dim();
    let mut bases: Vec<Vec<Vec<i64>>> = vec![Vec::new(); dim + 1];
    for c in n.cells() {
        if !l.contains(c) {
            let d = c.doubled().iter().filter(|v| v.rem_euclid(2) == 1).count();
            bases[d].push(c.doubled().to_vec());
        }
    }
    let matrix = |k: usize| -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; bases[k].len()]; bases[k - 1].len()];
        for (j, cell) in bases[k].iter().enumerate() {
            let mut sign = 1;
            for axis in 0..dim {
                if cell[axis].rem_euclid(2) == 0 {
                    continue;
                }
                for (delta, s) in [(-1, -sign), (1, sign)] {
                    let mut face = cell.clone();
                    face[axis] += delta;
                    if let Some(i) = bases[k - 1].iter().position(|b| *b == face) {
                        m[i][j] += s;
                    }
                }
                sign = -sign;
            }
        }
        m
    };
    let mut rank = vec![0usize; dim + 2];
    let mut torsion = vec![Vec::new(); dim + 1];
    for k in 1..=dim {
        let m = matrix(k);
        rank[k] = rational_rank(&m);
        torsion[k - 1] = elementary_divisors(&m)
            .into_iter()
            .filter(|d| *d > BigInt::one())
            .map(|d| u64::try_from(d).unwrap())
            .collect();
        torsion[k - 1].sort_unstable();
    }
    let betti = (0..=dim)
        .map(|k| bases[k].len() - rank[k] - rank[k + 1])
        .collect();
    (betti, torsion)
}

/// The relative-homology and Conley-index example pairs with expected betti numbers.
pub fn homology_fixtures() -> Vec<(&'static str, CubicalSet, CubicalSet, Vec<usize>)> {
    let point = CubicalSet::from_cubes(1, [Cube::vertex(&[0])]);
    let unit = CubicalSet::from_box(&[0], &[1]);
    let square = CubicalSet::from_box(&[0, 0], &[1, 1]);
    let edge = CubicalSet::from_cubes(2, [Cube::new(&[0, 0], &[true, false])]);
    let block = CubicalSet::from_box(&[0], &[4]);
    let v = |p: i64| Cube::vertex(&[p]);
    vec![
        ("point rel empty", point, CubicalSet::empty(1), vec![1, 0]),
        (
            "interval rel one end",
            unit.clone(),
            CubicalSet::from_cubes(1, [v(0)]),
            vec![0, 0],
        ),
        (
            "interval rel both ends",
            unit,
            CubicalSet::from_cubes(1, [v(0), v(1)]),
            vec![0, 1],
        ),
        ("square rel one edge", square, edge, vec![0, 0, 0]),
        (
            "block rel exit end",
            block.clone(),
            CubicalSet::from_cubes(1, [v(0)]),
            vec![0, 0],
        ),
        (
            "attractor block rel empty",
            CubicalSet::from_box(&[2], &[4]),
            CubicalSet::empty(1),
            vec![1, 0],
        ),
        (
            "repeller block rel both ends",
            CubicalSet::from_box(&[0], &[2]),
            CubicalSet::from_cubes(1, [v(0), v(2)]),
            vec![0, 1],
        ),
    ]
}
