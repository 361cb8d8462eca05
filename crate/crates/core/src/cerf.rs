//! Cerf graphics: critical values of a one-parameter family of functions,
//! first-stratum events, graphic rewrites and the Whitney normal form.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CerfError {
    #[error("point lies outside the model chart")]
    OutOfChart,
    #[error("unclassifiable event window: {0}")]
    Unclassifiable(String),
    #[error("rewrite precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid graphic: {0}")]
    InvalidGraphic(String),
}

/// Affine coordinates on a box: `u = orientation·(x − center)·4/width` along
/// the split axis and `(x − center)·4/width` elsewhere, so the box maps onto
/// `[−2, 2]ⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub center: Vec<f64>,
    pub width: Vec<f64>,
    /// Axis carrying the `z` coordinate.
    pub split_axis: usize,
    /// `+1` or `−1`; `z` increases from repeller to attractor.
    pub orientation: f64,
}

pub const CHART_HALF_WIDTH: f64 = 2.0;

impl Chart {
    pub fn from_bounds(bounds: &[(f64, f64)], split_axis: usize, orientation: f64) -> Self {
        Self {
            center: bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect(),
            width: bounds.iter().map(|&(a, b)| b - a).collect(),
            split_axis,
            orientation,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `du_i/dx_i`.
    pub fn scale(&self, axis: usize) -> f64 {
        let s = 2.0 * CHART_HALF_WIDTH / self.width[axis];
        if axis == self.split_axis {
            s * self.orientation
        } else {
            s
        }
    }

    pub fn to_chart(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|a| (x[a] - self.center[a]) * self.scale(a))
            .collect()
    }

    pub fn from_chart(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.center[a] + u[a] / self.scale(a))
            .collect()
    }

    /// Splits chart coordinates into `(z, y)`.
    pub fn split(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let y = (0..self.dim())
            .filter(|&a| a != self.split_axis)
            .map(|a| u[a])
            .collect();
        (u[self.split_axis], y)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.to_chart(x)
            .iter()
            .all(|u| u.abs() <= CHART_HALF_WIDTH * (1.0 + 1e-12))
    }

    /// Converts a chart gradient to a physical one.
    pub fn pull_back_gradient(&self, du: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|a| du[a] * self.scale(a)).collect()
    }
}

/// Diagonal quadratic form with `p` positive squares followed by `q` negative ones.
pub fn quadratic_form(signature: (usize, usize), y: &[f64]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, v)| if i < signature.0 { v * v } else { -v * v })
        .sum()
}

pub fn quadratic_form_gradient(signature: (usize, usize), y: &[f64]) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(i, v)| if i < signature.0 { 2.0 * v } else { -2.0 * v })
        .collect()
}

/// `g(x, λ) = g0 + z³ + sign·(λ − λ₀)·z + Q(y)` in chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyModel {
    pub lambda0: f64,
    pub sign: f64,
    pub g0: f64,
    pub q_signature: (usize, usize),
    pub chart: Chart,
}

impl WhitneyModel {
    pub fn new(
        lambda0: f64,
        sign: f64,
        g0: f64,
        q_signature: (usize, usize),
        chart: Chart,
    ) -> Result<Self, CerfError> {
        if !(lambda0 > 0.0 && lambda0 < 1.0) {
            return Err(CerfError::InvalidGraphic(format!(
                "lambda0 = {lambda0} not in (0,1)"
            )));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(CerfError::InvalidGraphic("sign must be +1 or -1".into()));
        }
        if q_signature.0 + q_signature.1 + 1 != chart.dim() {
            return Err(CerfError::InvalidGraphic(
                "signature of Q must have p + q = n - 1".into(),
            ));
        }
        Ok(Self {
            lambda0,
            sign,
            g0,
            q_signature,
            chart,
        })
    }

    /// Model whose death at `lambda0` leaves critical points of indices
    /// `k − 1` and `k` for `λ < λ₀`.
    pub fn saddle_node(lambda0: f64, k: usize, chart: Chart) -> Result<Self, CerfError> {
        let n = chart.dim();
        if k == 0 || k > n {
            return Err(CerfError::InvalidGraphic(format!(
                "unstable dimension {k} outside 1..={n}"
            )));
        }
        Self::new(lambda0, 1.0, 0.0, (n - k, k - 1), chart)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `μ = −sign·(λ − λ₀)`; critical points exist iff `μ ≥ 0`.
    pub fn mu(&self, lambda: f64) -> f64 {
        -self.sign * (lambda - self.lambda0)
    }

    pub fn value_in_chart(&self, u: &[f64], lambda: f64) -> f64 {
        let (z, y) = self.chart.split(u);
        self.g0
            + z * z * z
            + self.sign * (lambda - self.lambda0) * z
            + quadratic_form(self.q_signature, &y)
    }

    pub fn chart_gradient(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        let (z, y) = self.chart.split(u);
        let dy = quadratic_form_gradient(self.q_signature, &y);
        let mut out = Vec::with_capacity(u.len());
        let mut it = dy.into_iter();
        for a in 0..u.len() {
            if a == self.chart.split_axis {
                out.push(3.0 * z * z + self.sign * (lambda - self.lambda0));
            } else {
                out.push(it.next().unwrap_or(0.0));
            }
        }
        out
    }

    /// Physical gradient `∇ₓg`; defined on all of `ℝⁿ`.
    pub fn gradient(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        self.chart
            .pull_back_gradient(&self.chart_gradient(&self.chart.to_chart(x), lambda))
    }

    /// Critical points in physical coordinates with their Morse indices, ordered by `z`.
    pub fn critical_points(&self, lambda: f64) -> Vec<(Vec<f64>, usize)> {
        let mu = self.mu(lambda);
        let q = self.q_signature.1;
        let mut zs: Vec<(f64, usize)> = if mu > 0.0 {
            let r = (mu / 3.0).sqrt();
            vec![(-r, q + 1), (r, q)]
        } else if mu == 0.0 {
            vec![(0.0, q)]
        } else {
            Vec::new()
        };
        zs.sort_by(|a, b| a.0.total_cmp(&b.0));
        zs.into_iter()
            .map(|(z, idx)| {
                let mut u = vec![0.0; self.dim()];
                u[self.chart.split_axis] = z;
                (self.chart.from_chart(&u), idx)
            })
            .collect()
    }
}

pub fn whitney_value(model: &WhitneyModel, x: &[f64], lambda: f64) -> Result<f64, CerfError> {
    if x.len() != model.dim() || !model.chart.contains(x) {
        return Err(CerfError::OutOfChart);
    }
    Ok(model.value_in_chart(&model.chart.to_chart(x), lambda))
}

/// Critical values of `g(·, λ)`, ascending: `g0 ± (2μ/3)√(μ/3)` for `μ > 0`.
pub fn whitney_critical_values(model: &WhitneyModel, lambda: f64) -> Vec<f64> {
    let mu = model.mu(lambda);
    if mu > 0.0 {
        let d = 2.0 * mu / 3.0 * (mu / 3.0).sqrt();
        vec![model.g0 - d, model.g0 + d]
    } else if mu == 0.0 {
        vec![model.g0]
    } else {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphicArc {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub morse_index: usize,
    pub cancels_with: Option<usize>,
}

impl GraphicArc {
    pub fn new(lambdas: Vec<f64>, values: Vec<f64>, morse_index: usize) -> Self {
        Self {
            lambdas,
            values,
            morse_index,
            cancels_with: None,
        }
    }

    pub fn lambda_interval(&self) -> (f64, f64) {
        (
            self.lambdas[0],
            *self.lambdas.last().expect("arcs are nonempty"),
        )
    }

    /// Linear interpolation of the sampled critical value.
    pub fn value_at(&self, lambda: f64) -> Option<f64> {
        let (a, b) = self.lambda_interval();
        if lambda < a || lambda > b {
            return None;
        }
        let j = self.lambdas.partition_point(|&l| l < lambda);
        if j < self.lambdas.len() && self.lambdas[j] == lambda {
            return Some(self.values[j]);
        }
        let (l0, l1) = (self.lambdas[j - 1], self.lambdas[j]);
        let t = (lambda - l0) / (l1 - l0);
        Some(self.values[j - 1] + t * (self.values[j] - self.values[j - 1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Crossing,
    CubicBirth,
    CubicDeath,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Crossing => "crossing",
            EventKind::CubicBirth => "birth",
            EventKind::CubicDeath => "death",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphicEvent {
    pub lambda: f64,
    pub kind: EventKind,
    pub arcs: (usize, usize),
}

/// One arc endpoint fibre: `(morse_index, value)` pairs sorted.
pub type Fibre = Vec<(usize, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct CerfGraphic {
    arcs: Vec<GraphicArc>,
    events: Vec<GraphicEvent>,
}

impl CerfGraphic {
    pub fn new(arcs: Vec<GraphicArc>, events: Vec<GraphicEvent>) -> Result<Self, CerfError> {
        let bad = |m: String| Err(CerfError::InvalidGraphic(m));
        for (i, a) in arcs.iter().enumerate() {
            if a.lambdas.is_empty() || a.lambdas.len() != a.values.len() {
                return bad(format!("arc {i} has mismatched samples"));
            }
            if a.lambdas.windows(2).any(|w| w[0] >= w[1])
                || a.lambdas.iter().chain(&a.values).any(|v| !v.is_finite())
            {
                return bad(format!(
                    "arc {i} mesh must be finite and strictly increasing"
                ));
            }
            if let Some(j) = a.cancels_with {
                if j >= arcs.len() || j == i {
                    return bad(format!("arc {i} cancels with unknown arc {j}"));
                }
            }
        }
        for w in events.windows(2) {
            if w[0].lambda >= w[1].lambda {
                return bad("event parameters must be strictly increasing".into());
            }
        }
        for e in &events {
            let (i, j) = e.arcs;
            if i >= arcs.len() || j >= arcs.len() || i == j {
                return bad(format!("event at {} references unknown arcs", e.lambda));
            }
            let (a, b) = (&arcs[i], &arcs[j]);
            match e.kind {
                EventKind::CubicBirth | EventKind::CubicDeath => {
                    if a.morse_index.abs_diff(b.morse_index) != 1 {
                        return bad(format!(
                            "{} at {} joins non-adjacent indices",
                            e.kind, e.lambda
                        ));
                    }
                    let ends = |arc: &GraphicArc| {
                        let (s, t) = arc.lambda_interval();
                        if e.kind == EventKind::CubicBirth {
                            s == e.lambda
                        } else {
                            t == e.lambda
                        }
                    };
                    if !ends(a) || !ends(b) {
                        return bad(format!(
                            "{} at {} does not terminate its arcs",
                            e.kind, e.lambda
                        ));
                    }
                }
                EventKind::Crossing => {
                    let (Some(va), Some(vb)) = (a.value_at(e.lambda), b.value_at(e.lambda)) else {
                        return bad(format!("crossing at {} outside its arcs", e.lambda));
                    };
                    if (va - vb).abs() > 1e-9 * (1.0 + va.abs().max(vb.abs())) {
                        return bad(format!("crossing at {} joins unequal values", e.lambda));
                    }
                }
            }
        }
        Ok(Self { arcs, events })
    }

    pub fn arcs(&self) -> &[GraphicArc] {
        &self.arcs
    }

    pub fn events(&self) -> &[GraphicEvent] {
        &self.events
    }

    pub fn event_kinds(&self) -> Vec<EventKind> {
        self.events.iter().map(|e| e.kind).collect()
    }

    fn fibre(&self, pick: impl Fn(&GraphicArc) -> Option<f64>) -> Fibre {
        let mut out: Fibre = self
            .arcs
            .iter()
            .filter_map(|a| pick(a).map(|v| (a.morse_index, v)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out
    }

    /// Critical values at `λ = 0`.
    pub fn left_endpoint(&self) -> Fibre {
        self.fibre(|a| (a.lambdas[0] == 0.0).then(|| a.values[0]))
    }

    /// Critical values at `λ = 1`.
    pub fn right_endpoint(&self) -> Fibre {
        self.fibre(|a| (*a.lambdas.last().unwrap() == 1.0).then(|| *a.values.last().unwrap()))
    }

    /// Tabular export: one row per mesh point per arc.
    pub fn arcs_tsv(&self) -> String {
        let mut out = String::from("lambda\tvalue\tmorse_index\tarc_id\n");
        for (id, a) in self.arcs.iter().enumerate() {
            for (l, v) in a.lambdas.iter().zip(&a.values) {
                let _ = writeln!(out, "{l}\t{v}\t{}\t{id}", a.morse_index);
            }
        }
        out
    }

    pub fn events_tsv(&self) -> String {
        let mut out = String::from("lambda\tkind\tarc_a\tarc_b\n");
        for e in &self.events {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", e.lambda, e.kind, e.arcs.0, e.arcs.1);
        }
        out
    }

    /// Standalone SVG drawing of the graphic over `Λ = [0, 1]`.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 400.0, 40.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in self.arcs.iter().flat_map(|a| &a.values) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if !lo.is_finite() {
            (lo, hi) = (-1.0, 1.0);
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 1.0, hi + 1.0);
        }
        let px = |l: f64| pad + l * (w - 2.0 * pad);
        let py = |v: f64| h - pad - (v - lo) / (hi - lo) * (h - 2.0 * pad);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(
            out,
            "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            h - pad,
            w - pad,
            h - pad
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">lambda</text>",
            w / 2.0,
            h - 10.0
        );
        for (id, a) in self.arcs.iter().enumerate() {
            let pts: Vec<String> = a
                .lambdas
                .iter()
                .zip(&a.values)
                .map(|(l, v)| format!("{:.3},{:.3}", px(*l), py(*v)))
                .collect();
            let colour = if a.morse_index % 2 == 0 {
                "#1f77b4"
            } else {
                "#d62728"
            };
            let _ = writeln!(
                out,
                "<polyline id=\"arc{id}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>",
                pts.join(" ")
            );
        }
        for e in &self.events {
            let v = self.arcs[e.arcs.0].value_at(e.lambda).unwrap_or(0.0);
            let _ = writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"black\"><title>{} at {}</title></circle>",
                px(e.lambda),
                py(v),
                e.kind,
                e.lambda
            );
        }
        out.push_str("</svg>\n");
        out
    }

    /// Graphic of a Whitney model over a `λ` mesh, with the cusp inserted.
    pub fn from_whitney(model: &WhitneyModel, mesh: &[f64]) -> Result<Self, CerfError> {
        let lam0 = model.lambda0;
        let alive: Vec<f64> = mesh
            .iter()
            .copied()
            .filter(|&l| model.mu(l) > 0.0)
            .collect();
        let mut lambdas = alive.clone();
        lambdas.push(lam0);
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        let values = |pick: usize| -> Vec<f64> {
            lambdas
                .iter()
                .map(|&l| {
                    let v = whitney_critical_values(model, l);
                    if v.len() == 1 {
                        v[0]
                    } else {
                        v[pick]
                    }
                })
                .collect()
        };
        let q = model.q_signature.1;
        // lower value at z = +√(μ/3), index q; upper at z = −√(μ/3), index q + 1
        let mut low = GraphicArc::new(lambdas.clone(), values(0), q);
        let mut high = GraphicArc::new(lambdas.clone(), values(1), q + 1);
        low.cancels_with = Some(1);
        high.cancels_with = Some(0);
        let kind = if model.sign > 0.0 {
            EventKind::CubicDeath
        } else {
            EventKind::CubicBirth
        };
        Self::new(
            vec![low, high],
            vec![GraphicEvent {
                lambda: lam0,
                kind,
                arcs: (0, 1),
            }],
        )
    }
}

/// One critical point observed in an event window.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub index: usize,
}

/// Critical-point data of a path on a small `λ` window.
#[derive(Clone, Debug, PartialEq)]
pub struct EventWindow {
    pub lambdas: Vec<f64>,
    pub points: Vec<Vec<CriticalPoint>>,
}

impl EventWindow {
    pub fn from_whitney(model: &WhitneyModel, lambdas: &[f64]) -> Self {
        let points = lambdas
            .iter()
            .map(|&l| {
                model
                    .critical_points(l)
                    .into_iter()
                    .map(|(x, index)| CriticalPoint {
                        value: model.value_in_chart(&model.chart.to_chart(&x), l),
                        x,
                        index,
                    })
                    .collect()
            })
            .collect();
        Self {
            lambdas: lambdas.to_vec(),
            points,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub kind: EventKind,
    /// Estimated event parameter.
    pub lambda: f64,
    /// Fitted exponent of the critical-point gap (births and deaths only).
    pub exponent: Option<f64>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Greedy nearest matching of `from` into `to`; returns `to`-indices per `from` entry.
fn match_points(from: &[CriticalPoint], to: &[CriticalPoint]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in from.iter().enumerate() {
        for (j, b) in to.iter().enumerate() {
            pairs.push((dist(&a.x, &b.x), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; from.len()];
    let mut used = vec![false; to.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

pub fn classify_event(window: &EventWindow) -> Result<Classification, CerfError> {
    let un = |m: &str| Err(CerfError::Unclassifiable(m.to_string()));
    let n = window.lambdas.len();
    if n < 3 || window.points.len() != n {
        return un("window needs at least three parameter values");
    }
    let counts: Vec<usize> = window.points.iter().map(Vec::len).collect();
    let (c_first, c_last) = (counts[0], counts[n - 1]);
    if counts.iter().all(|&c| c == c_first) {
        return classify_crossing(window);
    }
    if c_first.abs_diff(c_last) != 2 {
        return un("critical point count changes by other than two");
    }
    // slices strictly between the two regimes may only show the degenerate point
    let start = counts.iter().position(|&c| c != c_first).unwrap();
    let end = n - counts.iter().rev().position(|&c| c != c_last).unwrap();
    let middle = c_first.min(c_last) + 1;
    if counts[start..end].iter().any(|&c| c != middle) {
        return un("more than one change in the critical point count");
    }
    let death = c_last < c_first;
    // slices on the side that still has the pair
    let many: Vec<usize> = if death {
        (0..start).rev().collect()
    } else {
        (end..n).collect()
    };
    let few_slice = if death { end } else { start - 1 };
    let edge = many[0];
    let few = &window.points[few_slice];
    let rich = &window.points[edge];
    let matched = match_points(few, rich);
    let mut used = vec![false; rich.len()];
    for j in matched.iter().flatten() {
        used[*j] = true;
    }
    let pair: Vec<usize> = (0..rich.len()).filter(|&i| !used[i]).collect();
    if pair.len() != 2 {
        return un("could not isolate the merging pair");
    }
    let (a, b) = (&rich[pair[0]], &rich[pair[1]]);
    if a.index.abs_diff(b.index) != 1 {
        return un("merging critical points do not have adjacent indices");
    }
    let mid: Vec<f64> = a.x.iter().zip(&b.x).map(|(p, q)| 0.5 * (p + q)).collect();
    let gap = dist(&a.x, &b.x);
    if few.iter().any(|p| dist(&p.x, &mid) <= gap) {
        return un("more than two critical points meet at the event");
    }
    // follow the pair away from the event
    let mut track = (pair[0], pair[1]);
    let mut lams = Vec::new();
    let mut gaps = Vec::new();
    let mut prev = edge;
    for &s in &many {
        if s != prev {
            let m = match_points(&window.points[prev], &window.points[s]);
            match (m[track.0], m[track.1]) {
                (Some(p), Some(q)) => track = (p, q),
                _ => return un("lost track of the merging pair"),
            }
        }
        let pts = &window.points[s];
        lams.push(window.lambdas[s]);
        gaps.push(dist(&pts[track.0].x, &pts[track.1].x));
        prev = s;
    }
    if lams.len() < 3 {
        return un("too few samples on the paired side for a cusp fit");
    }
    let sq: Vec<f64> = gaps.iter().map(|g| g * g).collect();
    let (c0, c1) = linear_fit(&lams, &sq);
    if c1 == 0.0 || !c1.is_finite() {
        return un("gap does not close");
    }
    let lam_e = -c0 / c1;
    let lo = window.lambdas[0].min(window.lambdas[n - 1]);
    let hi = window.lambdas[0].max(window.lambdas[n - 1]);
    if !(lo..=hi).contains(&lam_e) {
        return un("extrapolated event lies outside the window");
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = lams
        .iter()
        .zip(&gaps)
        .filter(|(l, g)| (**l - lam_e).abs() > 0.0 && **g > 0.0)
        .map(|(l, g)| ((l - lam_e).abs().ln(), g.ln()))
        .unzip();
    if lx.len() < 2 {
        return un("degenerate cusp fit");
    }
    let (_, e) = linear_fit(&lx, &ly);
    if !(0.4..=0.6).contains(&e) {
        return un(&format!("gap exponent {e:.3} is not the cusp exponent 1/2"));
    }
    Ok(Classification {
        kind: if death {
            EventKind::CubicDeath
        } else {
            EventKind::CubicBirth
        },
        lambda: lam_e,
        exponent: Some(e),
    })
}

fn classify_crossing(window: &EventWindow) -> Result<Classification, CerfError> {
    let n = window.lambdas.len();
    let c = window.points[0].len();
    // carry arc labels through the window
    let mut label: Vec<usize> = (0..c).collect();
    let mut values = vec![vec![0.0; n]; c];
    for (i, p) in window.points[0].iter().enumerate() {
        values[i][0] = p.value;
    }
    for s in 1..n {
        let m = match_points(&window.points[s - 1], &window.points[s]);
        let mut next = vec![0; c];
        for (i, t) in m.iter().enumerate() {
            let t = t.ok_or_else(|| CerfError::Unclassifiable("lost an arc".into()))?;
            next[t] = label[i];
        }
        label = next;
        for (t, p) in window.points[s].iter().enumerate() {
            values[label[t]][s] = p.value;
        }
    }
    let mut found = Vec::new();
    for a in 0..c {
        for b in a + 1..c {
            let d: Vec<f64> = (0..n).map(|s| values[a][s] - values[b][s]).collect();
            let changes: Vec<usize> = (1..n)
                .filter(|&s| d[s - 1].signum() != d[s].signum() && d[s - 1] != 0.0)
                .collect();
            if changes.len() == 1 {
                let s = changes[0];
                let lam = window.lambdas[s - 1]
                    - d[s - 1] * (window.lambdas[s] - window.lambdas[s - 1]) / (d[s] - d[s - 1]);
                found.push(lam);
            } else if changes.len() > 1 {
                return Err(CerfError::Unclassifiable("values cross repeatedly".into()));
            }
        }
    }
    match found.as_slice() {
        [lam] => Ok(Classification {
            kind: EventKind::Crossing,
            lambda: *lam,
            exponent: None,
        }),
        [] => Err(CerfError::Unclassifiable("no event in window".into())),
        _ => Err(CerfError::Unclassifiable(
            "several simultaneous crossings".into(),
        )),
    }
}

/// Placement of the death/birth pair produced by uniqueness of birth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirthPlacement {
    pub death: f64,
    pub birth: f64,
}

impl Default for BirthPlacement {
    fn default() -> Self {
        Self {
            death: 0.5,
            birth: 0.75,
        }
    }
}

impl BirthPlacement {
    fn width(&self) -> f64 {
        0.5 * self
            .death
            .min(0.5 * (self.birth - self.death))
            .min(1.0 - self.birth)
    }
}

/// Cusp profile factor `((distance)/δ)^{3/2}`, clamped to 1 outside the window.
fn cusp_factor(distance: f64, width: f64) -> f64 {
    if distance >= width {
        1.0
    } else {
        (distance / width).powf(1.5)
    }
}

/// Samples `p` and `q` on `[from, to]` (original mesh plus the given
/// endpoints), pulled together towards their mean at `anchor`.
fn merged_pair(
    p: &GraphicArc,
    q: &GraphicArc,
    from: f64,
    to: f64,
    anchor: f64,
    width: f64,
) -> (GraphicArc, GraphicArc) {
    let mut lambdas: Vec<f64> = p
        .lambdas
        .iter()
        .copied()
        .filter(|&l| l > from && l < to)
        .collect();
    lambdas.push(from);
    lambdas.push(to);
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut pv = Vec::with_capacity(lambdas.len());
    let mut qv = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let (a, b) = (p.value_at(l).unwrap(), q.value_at(l).unwrap());
        let s = cusp_factor((l - anchor).abs(), width);
        if s == 1.0 {
            pv.push(a);
            qv.push(b);
        } else {
            let m = 0.5 * (a + b);
            pv.push(m + (a - m) * s);
            qv.push(m + (b - m) * s);
        }
    }
    (
        GraphicArc::new(lambdas.clone(), pv, p.morse_index),
        GraphicArc::new(lambdas, qv, q.morse_index),
    )
}

fn link(arcs: &mut [GraphicArc], a: usize, b: usize) {
    arcs[a].cancels_with = Some(b);
    arcs[b].cancels_with = Some(a);
}

/// Uniqueness of birth with the default placement.
pub fn apply_uniqueness_of_birth(g: &CerfGraphic) -> Result<CerfGraphic, CerfError> {
    apply_uniqueness_of_birth_at(g, BirthPlacement::default())
}

/// Rewrites two canceling full-interval arcs into a cubic death at
/// `placement.death` followed by a cubic birth at `placement.birth`.
pub fn apply_uniqueness_of_birth_at(
    g: &CerfGraphic,
    placement: BirthPlacement,
) -> Result<CerfGraphic, CerfError> {
    let pre = |m: &str| Err(CerfError::PreconditionViolated(m.to_string()));
    if !(0.0 < placement.death && placement.death < placement.birth && placement.birth < 1.0) {
        return pre("placement must satisfy 0 < death < birth < 1");
    }
    if g.arcs.len() != 2 || !g.events.is_empty() {
        return pre("graphic must consist of exactly two event-free arcs");
    }
    let (p, q) = (&g.arcs[0], &g.arcs[1]);
    if p.cancels_with != Some(1) || q.cancels_with != Some(0) {
        return pre("arcs are not flagged as algebraically canceling");
    }
    if p.morse_index.abs_diff(q.morse_index) != 1 {
        return pre("arcs do not have adjacent Morse indices");
    }
    if p.lambda_interval() != (0.0, 1.0) || q.lambda_interval() != (0.0, 1.0) {
        return pre("arcs must span the whole parameter interval");
    }
    let w = placement.width();
    let (pd, qd) = merged_pair(p, q, 0.0, placement.death, placement.death, w);
    let (pb, qb) = merged_pair(p, q, placement.birth, 1.0, placement.birth, w);
    let mut arcs = vec![pd, qd, pb, qb];
    link(&mut arcs, 0, 1);
    link(&mut arcs, 2, 3);
    CerfGraphic::new(
        arcs,
        vec![
            GraphicEvent {
                lambda: placement.death,
                kind: EventKind::CubicDeath,
                arcs: (0, 1),
            },
            GraphicEvent {
                lambda: placement.birth,
                kind: EventKind::CubicBirth,
                arcs: (2, 3),
            },
        ],
    )
}

/// Ends the arcs born by the last event in a cubic death at `lambda`,
/// emptying the right endpoint.
pub fn close_right_end(g: &CerfGraphic, lambda: f64) -> Result<CerfGraphic, CerfError> {
    let pre = |m: &str| Err(CerfError::PreconditionViolated(m.to_string()));
    let Some(last) = g.events.last() else {
        return pre("graphic has no birth to close");
    };
    if last.kind != EventKind::CubicBirth || !(last.lambda < lambda && lambda < 1.0) {
        return pre("last event must be a birth before the closing parameter");
    }
    let (i, j) = last.arcs;
    let width = 0.5 * (lambda - last.lambda).min(1.0 - lambda);
    let (a, b) = (&g.arcs[i], &g.arcs[j]);
    let keep_a: Vec<usize> = (0..a.lambdas.len())
        .filter(|&t| a.lambdas[t] < lambda)
        .collect();
    let mut lambdas: Vec<f64> = keep_a.iter().map(|&t| a.lambdas[t]).collect();
    lambdas.push(lambda);
    let mut av = Vec::new();
    let mut bv = Vec::new();
    for &l in &lambdas {
        let (x, y) = (a.value_at(l).unwrap(), b.value_at(l).unwrap());
        let s = cusp_factor(lambda - l, width);
        if s == 1.0 {
            av.push(x);
            bv.push(y);
        } else {
            let m = 0.5 * (x + y);
            av.push(m + (x - m) * s);
            bv.push(m + (y - m) * s);
        }
    }
    let mut arcs = g.arcs.clone();
    arcs[i] = GraphicArc {
        lambdas: lambdas.clone(),
        values: av,
        ..a.clone()
    };
    arcs[j] = GraphicArc {
        lambdas,
        values: bv,
        ..b.clone()
    };
    let mut events = g.events.clone();
    events.push(GraphicEvent {
        lambda,
        kind: EventKind::CubicDeath,
        arcs: (i, j),
    });
    CerfGraphic::new(arcs, events)
}

/// Removes every birth together with the arcs it creates, leaving the arcs
/// of the left endpoint ending in the first cubic death.
pub fn simplify_to_single_death(g: &CerfGraphic) -> Result<CerfGraphic, CerfError> {
    let pre = |m: &str| Err(CerfError::PreconditionViolated(m.to_string()));
    if !g.right_endpoint().is_empty() {
        return pre("right endpoint of the graphic is not empty");
    }
    let Some(first) = g.events.first() else {
        return pre("graphic has no death");
    };
    if first.kind != EventKind::CubicDeath {
        return pre("first event must be a cubic death");
    }
    if g.events.len() == 1 {
        return Ok(g.clone());
    }
    // the remainder must be birth/death pairs of arcs born after the first death
    let rest = &g.events[1..];
    if !rest.len().is_multiple_of(2) {
        return pre("events after the first death are not birth/death pairs");
    }
    for pair in rest.chunks(2) {
        if pair[0].kind != EventKind::CubicBirth || pair[1].kind != EventKind::CubicDeath {
            return pre("events after the first death are not birth/death pairs");
        }
        let (a, b) = (
            pair[0].arcs.0.min(pair[0].arcs.1),
            pair[0].arcs.0.max(pair[0].arcs.1),
        );
        let (c, d) = (
            pair[1].arcs.0.min(pair[1].arcs.1),
            pair[1].arcs.0.max(pair[1].arcs.1),
        );
        if (a, b) != (c, d) {
            return pre("a born pair does not die together");
        }
    }
    let (i, j) = first.arcs;
    let others = (0..g.arcs.len()).filter(|&t| t != i && t != j);
    for t in others {
        if g.arcs[t].lambdas[0] <= first.lambda {
            return pre("arcs other than the dying pair are present before the death");
        }
    }
    let mut arcs = vec![g.arcs[i].clone(), g.arcs[j].clone()];
    arcs[0].cancels_with = Some(1);
    arcs[1].cancels_with = Some(0);
    CerfGraphic::new(
        arcs,
        vec![GraphicEvent {
            lambda: first.lambda,
            kind: EventKind::CubicDeath,
            arcs: (0, 1),
        }],
    )
}

/// Two constant canceling arcs over all of `Λ` (the input shape of uniqueness of birth).
pub fn canceling_pair(
    mesh: &[f64],
    low: (usize, f64),
    high: (usize, f64),
) -> Result<CerfGraphic, CerfError> {
    let mut p = GraphicArc::new(mesh.to_vec(), vec![low.1; mesh.len()], low.0);
    let mut q = GraphicArc::new(mesh.to_vec(), vec![high.1; mesh.len()], high.0);
    p.cancels_with = Some(1);
    q.cancels_with = Some(0);
    CerfGraphic::new(vec![p, q], Vec::new())
}

/// Uniform mesh of `m + 1` points on `[0, 1]` with exact endpoints.
pub fn unit_mesh(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|i| if i == m { 1.0 } else { i as f64 / m as f64 })
        .collect()
}
