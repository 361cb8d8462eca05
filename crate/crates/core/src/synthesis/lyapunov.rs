//! Grid Lyapunov functions for the invariant set of a box block.
//!
//! Each `λ`-slice solves a discrete Laplace problem with value `+1` on
//! entrance faces, `−1` on exit faces and `0` on nodes whose orbits stay in
//! the block for a long time (an estimate of a neighbourhood of `S`). The
//! decrease inequality is then checked on random samples outside a slightly
//! larger neighbourhood.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::block::{face_region, BlockPair, FaceRole, IsolatingBlock};
use crate::dynamics::ode::{residence_time, Direction};
use crate::field::VectorField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("decrease inequality fails at x = {x:?}, lambda = {lambda}: <grad g, f> = {inner}")]
    DecreaseFailed {
        x: Vec<f64>,
        lambda: f64,
        inner: f64,
    },
    #[error(
        "only {found} decrease samples outside the invariant-set neighbourhood, need {needed}"
    )]
    InsufficientSamples { found: usize, needed: usize },
    #[error("Lyapunov construction needs a box-shaped block whose pair parent is the block")]
    UnsupportedBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovOptions {
    /// Nodes per phase axis.
    pub nodes: Vec<usize>,
    /// Number of `λ` intervals; slices sit at `j / lambda_slices`.
    pub lambda_slices: usize,
    /// Candidate horizons `T`, tried in order; empty disables the neighbourhood of `S`.
    pub horizons: Vec<f64>,
    pub step: f64,
    pub samples: usize,
    pub min_samples: usize,
    pub seed: u64,
}

impl LyapunovOptions {
    pub fn for_dim(n: usize) -> Self {
        let per_axis = match n {
            1 => 161,
            2 => 41,
            _ => 13,
        };
        Self {
            nodes: vec![per_axis; n],
            lambda_slices: if n == 1 { 40 } else { 20 },
            horizons: vec![2.0, 1.0, 0.5, 0.25],
            step: 0.05,
            samples: 4000,
            min_samples: 1000,
            seed: 0,
        }
    }
}

/// A point of `B × Λ` at which the decrease inequality is asserted.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreaseSample {
    pub x: Vec<f64>,
    pub lambda: f64,
}

/// `g(x, λ)` on a regular node grid with multilinear interpolation; its
/// gradient interpolates node-wise central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovFunction {
    pub bounds: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
    pub lambda_slices: usize,
    /// Slice-major node values, axis 0 fastest.
    pub values: Vec<f64>,
    /// Horizon used for the neighbourhood of `S`, if any.
    pub horizon: Option<f64>,
    pub samples: Vec<DecreaseSample>,
    /// `min −⟨∇g, f⟩` over `samples`.
    pub margin: f64,
    gradients: Vec<f64>,
}

struct Layout {
    nodes: Vec<usize>,
    strides: Vec<usize>,
    spacing: Vec<f64>,
    lo: Vec<f64>,
}

impl Layout {
    fn new(bounds: &[(f64, f64)], nodes: &[usize]) -> Self {
        let mut strides = Vec::with_capacity(nodes.len());
        let mut s = 1;
        for &m in nodes {
            strides.push(s);
            s *= m;
        }
        Self {
            nodes: nodes.to_vec(),
            strides,
            spacing: bounds
                .iter()
                .zip(nodes)
                .map(|(&(a, b), &m)| (b - a) / (m - 1) as f64)
                .collect(),
            lo: bounds.iter().map(|b| b.0).collect(),
        }
    }

    fn count(&self) -> usize {
        self.nodes.iter().product()
    }

    fn multi(&self, mut i: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .map(|&m| {
                let v = i % m;
                i /= m;
                v
            })
            .collect()
    }

    fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(a, &i)| {
                if i + 1 == self.nodes[a] {
                    self.lo[a] + self.spacing[a] * (self.nodes[a] - 1) as f64
                } else {
                    self.lo[a] + self.spacing[a] * i as f64
                }
            })
            .collect()
    }

    /// Cell index and local weight per axis for a physical point (clamped).
    fn locate(&self, x: &[f64]) -> Vec<(usize, f64)> {
        x.iter()
            .enumerate()
            .map(|(a, &v)| {
                let t = (v - self.lo[a]) / self.spacing[a];
                let i = (t.floor().max(0.0) as usize).min(self.nodes[a] - 2);
                (i, (t - i as f64).clamp(0.0, 1.0))
            })
            .collect()
    }

    /// Multilinear interpolation of a node array with `width` entries per node.
    fn interpolate(&self, data: &[f64], width: usize, x: &[f64]) -> Vec<f64> {
        let cell = self.locate(x);
        let n = self.nodes.len();
        let mut out = vec![0.0; width];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for (a, &(i, t)) in cell.iter().enumerate() {
                if corner >> a & 1 == 1 {
                    w *= t;
                    idx += (i + 1) * self.strides[a];
                } else {
                    w *= 1.0 - t;
                    idx += i * self.strides[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&data[idx * width..(idx + 1) * width]) {
                *o += w * v;
            }
        }
        out
    }
}

fn slice_weights(lambda_slices: usize, lambda: f64) -> (usize, f64) {
    let t = lambda.clamp(0.0, 1.0) * lambda_slices as f64;
    let j = (t.floor() as usize).min(lambda_slices - 1);
    (j, t - j as f64)
}

impl LyapunovFunction {
    /// Builds from node values, computing node gradients.
    pub fn from_values(
        bounds: Vec<(f64, f64)>,
        nodes: Vec<usize>,
        lambda_slices: usize,
        values: Vec<f64>,
    ) -> Self {
        assert!(nodes.iter().all(|&m| m >= 2) && lambda_slices >= 1);
        let layout = Layout::new(&bounds, &nodes);
        let per = layout.count();
        assert_eq!(
            values.len(),
            per * (lambda_slices + 1),
            "node value count mismatch"
        );
        let n = nodes.len();
        let mut gradients = vec![0.0; values.len() * n];
        for s in 0..=lambda_slices {
            let vals = &values[s * per..(s + 1) * per];
            for i in 0..per {
                let idx = layout.multi(i);
                for a in 0..n {
                    let st = layout.strides[a];
                    let h = layout.spacing[a];
                    let m = nodes[a];
                    let d = if idx[a] == 0 {
                        (vals[i + st] - vals[i]) / h
                    } else if idx[a] + 1 == m {
                        (vals[i] - vals[i - st]) / h
                    } else {
                        (vals[i + st] - vals[i - st]) / (2.0 * h)
                    };
                    gradients[(s * per + i) * n + a] = d;
                }
            }
        }
        Self {
            bounds,
            nodes,
            lambda_slices,
            values,
            horizon: None,
            samples: Vec::new(),
            margin: f64::NAN,
            gradients,
        }
    }

    /// Samples `g` at the nodes of the given layout.
    pub fn from_function(
        bounds: Vec<(f64, f64)>,
        nodes: Vec<usize>,
        lambda_slices: usize,
        g: impl Fn(&[f64], f64) -> f64,
    ) -> Self {
        let layout = Layout::new(&bounds, &nodes);
        let per = layout.count();
        let mut values = Vec::with_capacity(per * (lambda_slices + 1));
        for s in 0..=lambda_slices {
            let lam = s as f64 / lambda_slices as f64;
            for i in 0..per {
                values.push(g(&layout.point(&layout.multi(i)), lam));
            }
        }
        Self::from_values(bounds, nodes, lambda_slices, values)
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.bounds, &self.nodes)
    }

    fn blend_slices(&self, data: &[f64], width: usize, x: &[f64], lambda: f64) -> Vec<f64> {
        let layout = self.layout();
        let per = layout.count() * width;
        let (j, t) = slice_weights(self.lambda_slices, lambda);
        let a = layout.interpolate(&data[j * per..(j + 1) * per], width, x);
        if t == 0.0 {
            return a;
        }
        let b = layout.interpolate(&data[(j + 1) * per..(j + 2) * per], width, x);
        a.iter().zip(&b).map(|(p, q)| p + t * (q - p)).collect()
    }

    pub fn value(&self, x: &[f64], lambda: f64) -> f64 {
        self.blend_slices(&self.values, 1, x, lambda)[0]
    }

    pub fn gradient(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        self.blend_slices(&self.gradients, self.dim(), x, lambda)
    }

    /// Worst `−⟨∇g, f⟩` over `samples` with the offending index.
    pub fn decrease_margin(
        &self,
        field: &dyn VectorField,
        samples: &[DecreaseSample],
    ) -> (f64, Option<usize>) {
        let mut worst = (f64::INFINITY, None);
        for (i, s) in samples.iter().enumerate() {
            let m = -dot(&self.gradient(&s.x, s.lambda), &field.eval(&s.x, s.lambda));
            if m < worst.0 || m.is_nan() {
                worst = (m, Some(i));
                if m.is_nan() {
                    break;
                }
            }
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Dirichlet value of a boundary node: mean role value of the faces containing it.
fn boundary_value(block: &IsolatingBlock, x: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for f in &block.faces {
        let r = face_region(&block.grid, &f.cube, (0.0, 1.0));
        let on = x.iter().enumerate().all(|(a, &v)| {
            v >= r.lo[a] - 1e-12 * (1.0 + v.abs()) && v <= r.hi[a] + 1e-12 * (1.0 + v.abs())
        });
        if on {
            sum += match f.role {
                FaceRole::Entrance => 1.0,
                FaceRole::Exit => -1.0,
                FaceRole::Tangency => 0.0,
            };
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn solve_laplace(layout: &Layout, fixed: &[Option<f64>]) -> Vec<f64> {
    let n = layout.nodes.len();
    let mut g: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let inv: Vec<f64> = layout.spacing.iter().map(|h| 1.0 / (h * h)).collect();
    let diag: f64 = 2.0 * inv.iter().sum::<f64>();
    let longest = *layout.nodes.iter().max().unwrap() as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (longest - 1.0)).sin());
    let free: Vec<(usize, Vec<usize>)> = (0..g.len())
        .filter(|&i| fixed[i].is_none())
        .map(|i| (i, layout.multi(i)))
        .collect();
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for (i, idx) in &free {
            let mut acc = 0.0;
            for a in 0..n {
                let st = layout.strides[a];
                // free nodes are interior, so both neighbours exist
                debug_assert!(idx[a] > 0 && idx[a] + 1 < layout.nodes[a]);
                acc += (g[i + st] + g[i - st]) * inv[a];
            }
            let target = acc / diag;
            let d = omega * (target - g[*i]);
            g[*i] += d;
            change = change.max(d.abs());
        }
        if change < 1e-12 {
            break;
        }
    }
    g
}

/// `min(τ⁺, τ⁻)` capped at `cap`.
fn residence(
    field: &dyn VectorField,
    bounds: &[(f64, f64)],
    x: &[f64],
    lambda: f64,
    cap: f64,
    step: f64,
) -> f64 {
    let fwd = residence_time(field, x, lambda, bounds, cap, step, Direction::Forward);
    if fwd < cap {
        return fwd;
    }
    residence_time(field, x, lambda, bounds, cap, step, Direction::Backward)
}

pub fn build_lyapunov(
    block: &IsolatingBlock,
    pair: &BlockPair,
    field: &dyn VectorField,
    opts: &LyapunovOptions,
) -> Result<LyapunovFunction, LyapunovError> {
    if pair.parent.region != block.region
        || block.as_box().is_none()
        || opts.nodes.len() != block.dim()
    {
        return Err(LyapunovError::UnsupportedBlock);
    }
    let bounds = block.bounds();
    let layout = Layout::new(&bounds, &opts.nodes);
    let per = layout.count();
    let slices = opts.lambda_slices;
    let cap = 1.5 * opts.horizons.iter().copied().fold(0.0, f64::max);

    let points: Vec<Vec<f64>> = (0..per).map(|i| layout.point(&layout.multi(i))).collect();
    let on_boundary: Vec<bool> = (0..per)
        .map(|i| {
            let idx = layout.multi(i);
            idx.iter()
                .zip(&layout.nodes)
                .any(|(&v, &m)| v == 0 || v + 1 == m)
        })
        .collect();
    let dirichlet: Vec<Option<f64>> = (0..per)
        .map(|i| on_boundary[i].then(|| boundary_value(block, &points[i])))
        .collect();

    let node_time: Vec<f64> = if cap > 0.0 {
        (0..per * (slices + 1))
            .map(|k| {
                let (s, i) = (k / per, k % per);
                if on_boundary[i] {
                    return 0.0;
                }
                residence(
                    field,
                    &bounds,
                    &points[i],
                    s as f64 / slices as f64,
                    cap,
                    opts.step,
                )
            })
            .collect()
    } else {
        vec![0.0; per * (slices + 1)]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let candidates: Vec<DecreaseSample> = (0..opts.samples)
        .map(|_| DecreaseSample {
            x: bounds.iter().map(|&(a, b)| rng.gen_range(a..b)).collect(),
            lambda: rng.gen_range(0.0..=1.0),
        })
        .collect();
    let sample_time: Vec<f64> = if cap > 0.0 {
        candidates
            .iter()
            .map(|c| residence(field, &bounds, &c.x, c.lambda, cap, opts.step))
            .collect()
    } else {
        vec![0.0; candidates.len()]
    };

    let attempts: Vec<Option<f64>> = if opts.horizons.is_empty() {
        vec![None]
    } else {
        opts.horizons.iter().copied().map(Some).collect()
    };
    let mut last_err = None;
    for horizon in attempts {
        let pin = horizon.map_or(f64::INFINITY, |t| 1.5 * t);
        let values: Vec<f64> = (0..=slices)
            .flat_map(|s| {
                let fixed: Vec<Option<f64>> = (0..per)
                    .map(|i| {
                        dirichlet[i].or_else(|| (node_time[s * per + i] >= pin).then_some(0.0))
                    })
                    .collect();
                solve_laplace(&layout, &fixed)
            })
            .collect();
        let keep = horizon.map_or(f64::INFINITY, |t| t);
        let samples: Vec<DecreaseSample> = candidates
            .iter()
            .zip(&sample_time)
            .filter(|(_, &t)| t < keep)
            .map(|(s, _)| s.clone())
            .collect();
        if samples.len() < opts.min_samples {
            last_err.get_or_insert(LyapunovError::InsufficientSamples {
                found: samples.len(),
                needed: opts.min_samples,
            });
            continue;
        }
        let mut g =
            LyapunovFunction::from_values(bounds.clone(), opts.nodes.clone(), slices, values);
        let (margin, worst) = g.decrease_margin(field, &samples);
        if margin > 0.0 {
            g.horizon = horizon;
            g.samples = samples;
            g.margin = margin;
            return Ok(g);
        }
        let w = &samples[worst.expect("nonempty sample set")];
        last_err = Some(LyapunovError::DecreaseFailed {
            x: w.x.clone(),
            lambda: w.lambda,
            inner: -margin,
        });
    }
    Err(last_err.expect("at least one attempt"))
}
