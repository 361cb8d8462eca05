//! The three deformation stages and their composition.

use std::sync::Arc;

use crate::cerf::{
    quadratic_form, quadratic_form_gradient, CerfGraphic, Chart, EventKind, WhitneyModel,
};
use crate::field::{Family, SharedField, VectorField};

use super::cutoff::{smooth_step, BoxCutoff, IntervalCutoff};
use super::lyapunov::LyapunovFunction;
use super::SynthesisError;

/// Shape of an endpoint Morse function in the model chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointShape {
    /// `z³ − 3z + Q(y)`: two critical points of indices `q` and `q + 1`.
    Canceling,
    /// `z + Q(y)`: no critical points.
    Regular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndpointMorse {
    pub chart: Chart,
    pub q_signature: (usize, usize),
    pub shape: EndpointShape,
}

impl EndpointMorse {
    pub fn value(&self, x: &[f64]) -> f64 {
        let (z, y) = self.chart.split(&self.chart.to_chart(x));
        let q = quadratic_form(self.q_signature, &y);
        match self.shape {
            EndpointShape::Canceling => z * z * z - 3.0 * z + q,
            EndpointShape::Regular => z + q,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let u = self.chart.to_chart(x);
        let (z, y) = self.chart.split(&u);
        let mut dy = quadratic_form_gradient(self.q_signature, &y).into_iter();
        let dz = match self.shape {
            EndpointShape::Canceling => 3.0 * z * z - 3.0,
            EndpointShape::Regular => 1.0,
        };
        let du: Vec<f64> = (0..u.len())
            .map(|a| {
                if a == self.chart.split_axis {
                    dz
                } else {
                    dy.next().unwrap_or(0.0)
                }
            })
            .collect();
        self.chart.pull_back_gradient(&du)
    }

    /// Critical points with Morse indices.
    pub fn critical_points(&self) -> Vec<(Vec<f64>, usize)> {
        match self.shape {
            EndpointShape::Regular => Vec::new(),
            EndpointShape::Canceling => [(-1.0, self.q_signature.1 + 1), (1.0, self.q_signature.1)]
                .into_iter()
                .map(|(z, idx)| {
                    let mut u = vec![0.0; self.chart.dim()];
                    u[self.chart.split_axis] = z;
                    (self.chart.from_chart(&u), idx)
                })
                .collect(),
        }
    }
}

/// `f_e(x, σ) = f(x, λ_e) + ρ_e(x)·σ·(−∇g_e(x) − f(x, λ_e))`.
#[derive(Clone)]
pub struct EndpointFamily {
    pub f: SharedField,
    pub lambda: f64,
    pub morse: EndpointMorse,
    pub rho: BoxCutoff,
}

impl EndpointFamily {
    /// `f_e(x, σ) − f(x, λ_e)`, or `None` where it vanishes identically.
    pub fn correction(&self, x: &[f64], sigma: f64) -> Option<Vec<f64>> {
        let w = self.rho.eval(x) * sigma;
        if w == 0.0 {
            return None;
        }
        let base = self.f.eval(x, self.lambda);
        let g = self.morse.gradient(x);
        Some(base.iter().zip(&g).map(|(b, d)| w * (-d - b)).collect())
    }

    pub fn eval(&self, x: &[f64], sigma: f64) -> Vec<f64> {
        let w = self.rho.eval(x) * sigma;
        let base = self.f.eval(x, self.lambda);
        if w == 0.0 {
            return base;
        }
        let g = self.morse.gradient(x);
        base.iter().zip(&g).map(|(b, d)| b + w * (-d - b)).collect()
    }
}

/// Endpoint families on a box block: `g₀` with canceling critical points of
/// indices `k − 1`, `k` and the critical-point-free `g₁`.
pub fn endpoint_families(
    f: SharedField,
    chart: &Chart,
    bounds: &[(f64, f64)],
    k: usize,
    plateau: f64,
) -> Result<(EndpointFamily, EndpointFamily), SynthesisError> {
    let n = chart.dim();
    if k == 0 || k > n || bounds.len() != n || f.dim() != n {
        return Err(SynthesisError::InvalidInput(format!(
            "unstable dimension {k} incompatible with phase dimension {n}"
        )));
    }
    let sig = (n - k, k - 1);
    let rho = BoxCutoff::with_plateau(bounds, plateau);
    let make = |lambda, shape| EndpointFamily {
        f: f.clone(),
        lambda,
        morse: EndpointMorse {
            chart: chart.clone(),
            q_signature: sig,
            shape,
        },
        rho: rho.clone(),
    };
    Ok((
        make(0.0, EndpointShape::Canceling),
        make(1.0, EndpointShape::Regular),
    ))
}

/// `F₁ = f + η(f₀ − f(·,0)) + ξ(f₁ − f(·,1))`.
#[derive(Clone)]
pub struct StageOne {
    pub f: SharedField,
    pub f0: EndpointFamily,
    pub f1: EndpointFamily,
    pub eta: IntervalCutoff,
    pub xi: IntervalCutoff,
}

impl Family for StageOne {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64], lambda: f64, sigma: f64) -> Vec<f64> {
        let mut out = self.f.eval(x, lambda);
        for (cut, fam) in [
            (self.eta.eval(lambda), &self.f0),
            (self.xi.eval(lambda), &self.f1),
        ] {
            if cut == 0.0 {
                continue;
            }
            if let Some(c) = fam.correction(x, sigma) {
                for (o, d) in out.iter_mut().zip(&c) {
                    *o += cut * d;
                }
            }
        }
        out
    }
}

pub fn assemble_f1(
    f: SharedField,
    f0: EndpointFamily,
    f1: EndpointFamily,
    eta: IntervalCutoff,
    xi: IntervalCutoff,
) -> Result<StageOne, SynthesisError> {
    if !eta.disjoint_from(&xi) {
        return Err(SynthesisError::OverlappingCutoffs);
    }
    Ok(StageOne { f, f0, f1, eta, xi })
}

/// `e + w·(−∇ − e)`, returning `e` untouched when `w = 0` and `−∇` when `w = 1`.
fn pull_towards(e: impl FnOnce() -> Vec<f64>, w: f64, grad: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    if w == 0.0 {
        return e();
    }
    let g = grad();
    if w == 1.0 {
        return g.iter().map(|d| -d).collect();
    }
    let e = e();
    e.iter().zip(&g).map(|(v, d)| v + w * (-d - v)).collect()
}

/// `R(x, λ, σ) = ρ[(1 − σ)f − σ∇g] + (1 − ρ)f`, evaluated as `f + ρσ(−∇g − f)`.
#[derive(Clone)]
pub struct Blend {
    pub base: SharedField,
    pub lyapunov: Arc<LyapunovFunction>,
    pub rho: BoxCutoff,
    pub sigma: f64,
}

impl VectorField for Blend {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        let w = self.rho.eval(x) * self.sigma;
        pull_towards(
            || self.base.eval(x, lambda),
            w,
            || self.lyapunov.gradient(x, lambda),
        )
    }
}

pub fn blend(f: SharedField, g: Arc<LyapunovFunction>, rho: BoxCutoff, sigma: f64) -> Blend {
    Blend {
        base: f,
        lyapunov: g,
        rho,
        sigma,
    }
}

/// `F₂(x, λ, σ)`: the blend of `F₁(·,·,1)` towards `−∇g` for the grid Lyapunov function `g`.
#[derive(Clone)]
pub struct StageTwo {
    pub stage1: Arc<StageOne>,
    pub lyapunov: Arc<LyapunovFunction>,
    pub rho: BoxCutoff,
}

impl Family for StageTwo {
    fn dim(&self) -> usize {
        self.stage1.dim()
    }

    fn eval(&self, x: &[f64], lambda: f64, sigma: f64) -> Vec<f64> {
        let w = self.rho.eval(x) * sigma;
        pull_towards(
            || self.stage1.eval(x, lambda, 1.0),
            w,
            || self.lyapunov.gradient(x, lambda),
        )
    }
}

/// `F₃(x, λ, σ) = F₁(x,λ,1) + ρ(−∇G_σ − F₁(x,λ,1))` with
/// `G_σ = (1 − σ)g + σC` and `C` the Whitney Cerf path.
#[derive(Clone)]
pub struct StageThree {
    pub stage1: Arc<StageOne>,
    pub lyapunov: Arc<LyapunovFunction>,
    pub rho: BoxCutoff,
    pub whitney: WhitneyModel,
    pub graphic: CerfGraphic,
}

impl Family for StageThree {
    fn dim(&self) -> usize {
        self.stage1.dim()
    }

    fn eval(&self, x: &[f64], lambda: f64, sigma: f64) -> Vec<f64> {
        let w = self.rho.eval(x);
        pull_towards(
            || self.stage1.eval(x, lambda, 1.0),
            w,
            || {
                if sigma == 0.0 {
                    self.lyapunov.gradient(x, lambda)
                } else if sigma == 1.0 {
                    self.whitney.gradient(x, lambda)
                } else {
                    let a = self.lyapunov.gradient(x, lambda);
                    let b = self.whitney.gradient(x, lambda);
                    a.iter()
                        .zip(&b)
                        .map(|(p, q)| (1.0 - sigma) * p + sigma * q)
                        .collect()
                }
            },
        )
    }
}

pub fn assemble_f3(
    stage1: Arc<StageOne>,
    lyapunov: Arc<LyapunovFunction>,
    graphic: CerfGraphic,
    whitney: WhitneyModel,
    rho: BoxCutoff,
) -> Result<StageThree, SynthesisError> {
    let bad = |m: String| Err(SynthesisError::InconsistentGraphic(m));
    match graphic.events() {
        [e] if e.kind == EventKind::CubicDeath => {
            if (e.lambda - whitney.lambda0).abs() > 1e-12 {
                return bad(format!(
                    "death at {} but model fold at {}",
                    e.lambda, whitney.lambda0
                ));
            }
            let mut idx = [
                graphic.arcs()[e.arcs.0].morse_index,
                graphic.arcs()[e.arcs.1].morse_index,
            ];
            idx.sort_unstable();
            let q = whitney.q_signature.1;
            if idx != [q, q + 1] {
                return bad(format!(
                    "graphic indices {idx:?} but model expects {:?}",
                    [q, q + 1]
                ));
            }
        }
        _ => return bad("graphic must consist of a single cubic death".into()),
    }
    if graphic.arcs().len() != 2 || !graphic.right_endpoint().is_empty() {
        return bad("graphic must contain exactly the dying pair".into());
    }
    Ok(StageThree {
        stage1,
        lyapunov,
        rho,
        whitney,
        graphic,
    })
}

/// Final family `F(x, λ, σ)`: stage `j` runs on `σ ∈ [j/3, (j+1)/3]` with the
/// flat-ended ramp `smooth_step(3σ − j)`.
#[derive(Clone)]
pub struct SynthesizedFamily {
    pub f: SharedField,
    pub stage1: Arc<StageOne>,
    pub stage2: Arc<StageTwo>,
    pub stage3: Arc<StageThree>,
    /// Block `B` and the plateau `B′` of `ρ`.
    pub block_bounds: Vec<(f64, f64)>,
    pub inner_bounds: Vec<(f64, f64)>,
    pub k: usize,
}

impl SynthesizedFamily {
    pub fn whitney(&self) -> &WhitneyModel {
        &self.stage3.whitney
    }

    pub fn lyapunov(&self) -> &LyapunovFunction {
        &self.stage2.lyapunov
    }

    pub fn stages(&self) -> [&dyn Family; 3] {
        [
            self.stage1.as_ref(),
            self.stage2.as_ref(),
            self.stage3.as_ref(),
        ]
    }

    /// Stage index and stage parameter for a global `σ`.
    pub fn schedule(sigma: f64) -> (usize, f64) {
        let s = 3.0 * sigma.clamp(0.0, 1.0);
        let j = (s.floor() as usize).min(2);
        (j, smooth_step(s - j as f64))
    }
}

impl Family for SynthesizedFamily {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64], lambda: f64, sigma: f64) -> Vec<f64> {
        let (j, tau) = Self::schedule(sigma);
        self.stages()[j].eval(x, lambda, tau)
    }
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Composes the stages after checking `F₁(·,·,1) = F₂(·,·,0)` and
/// `F₂(·,·,1) = F₃(·,·,0)` on `probes` to within `tol`.
pub fn compose_final(
    f: SharedField,
    stage1: Arc<StageOne>,
    stage2: Arc<StageTwo>,
    stage3: Arc<StageThree>,
    k: usize,
    probes: &[(Vec<f64>, f64)],
    tol: f64,
) -> Result<SynthesizedFamily, SynthesisError> {
    let mut worst: f64 = 0.0;
    for (x, l) in probes {
        worst = worst.max(max_deviation(
            &stage1.eval(x, *l, 1.0),
            &stage2.eval(x, *l, 0.0),
        ));
        worst = worst.max(max_deviation(
            &stage2.eval(x, *l, 1.0),
            &stage3.eval(x, *l, 0.0),
        ));
    }
    if !(worst <= tol) {
        return Err(SynthesisError::StageMismatch { deviation: worst });
    }
    let block_bounds = stage2.rho.outer_bounds();
    let inner_bounds = stage2.rho.inner_bounds();
    Ok(SynthesizedFamily {
        f,
        stage1,
        stage2,
        stage3,
        block_bounds,
        inner_bounds,
        k,
    })
}
