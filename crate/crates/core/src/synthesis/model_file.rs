//! Plain-text synthesized-model files.
//!
//! ```text
//! format=snblock-model v1
//! dim=<n>
//! k=<unstable dimension>
//! bounds=<lo hi>;<lo hi>;...
//! chart split_axis=<a> orientation=<±1>
//! lambda0=<r>
//! endpoint_plateau=<r>
//! inner_plateau=<r>
//! eta=<inner_lo> <inner_hi> <outer_lo> <outer_hi>
//! xi=<inner_lo> <inner_hi> <outer_lo> <outer_hi>
//! reference=shepard radius=<r>
//! lyapunov nodes=<m_1>,...,<m_n> slices=<s> horizon=<r|none> margin=<r>
//! <node values of slice 0, space separated>
//! ...                                  (s + 1 lines)
//! graphic arcs=<count> events=<count>
//! arc index=<i> cancels=<j|none>
//! <lambdas>
//! <values>
//! ...
//! event lambda=<r> kind=<crossing|birth|death> arcs=<a>,<b>
//! samples
//! <sample file>
//! ```
//!
//! Reals are written with Rust's shortest round-trip formatting, so reading a
//! file back reproduces every evaluation bit for bit.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::cerf::{CerfGraphic, Chart, EventKind, GraphicArc, GraphicEvent, WhitneyModel};
use crate::field::{SharedField, ShepardField};
use crate::ingest::{parse_samples, SampledVectorField};

use super::cutoff::{BoxCutoff, IntervalCutoff};
use super::family::{
    assemble_f1, assemble_f3, compose_final, endpoint_families, StageTwo, SynthesizedFamily,
};
use super::lyapunov::LyapunovFunction;
use super::SynthesisError;

pub const MODEL_FORMAT: &str = "format=snblock-model v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelFileError {
    #[error("model file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cutoff_text(c: &IntervalCutoff) -> String {
    join(&[c.inner.0, c.inner.1, c.outer.0, c.outer.1])
}

pub fn write_model(
    family: &SynthesizedFamily,
    svf: &SampledVectorField,
    shepard_radius: f64,
) -> String {
    let w = family.whitney();
    let g = family.lyapunov();
    let mut out = format!("{MODEL_FORMAT}\n");
    let _ = writeln!(out, "dim={}", w.dim());
    let _ = writeln!(out, "k={}", family.k);
    let b: Vec<String> = family
        .block_bounds
        .iter()
        .map(|(a, b)| format!("{a} {b}"))
        .collect();
    let _ = writeln!(out, "bounds={}", b.join(";"));
    let _ = writeln!(
        out,
        "chart split_axis={} orientation={}",
        w.chart.split_axis, w.chart.orientation
    );
    let _ = writeln!(out, "lambda0={}", w.lambda0);
    let _ = writeln!(out, "endpoint_plateau={}", family.stage1.f0.rho.plateau);
    let _ = writeln!(out, "inner_plateau={}", family.stage2.rho.plateau);
    let _ = writeln!(out, "eta={}", cutoff_text(&family.stage1.eta));
    let _ = writeln!(out, "xi={}", cutoff_text(&family.stage1.xi));
    let _ = writeln!(out, "reference=shepard radius={shepard_radius}");
    let nodes: Vec<String> = g.nodes.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(
        out,
        "lyapunov nodes={} slices={} horizon={} margin={}",
        nodes.join(","),
        g.lambda_slices,
        g.horizon.map_or("none".to_string(), |h| h.to_string()),
        g.margin
    );
    let per = g.values.len() / (g.lambda_slices + 1);
    for chunk in g.values.chunks(per) {
        let _ = writeln!(out, "{}", join(chunk));
    }
    let graphic = &family.stage3.graphic;
    let _ = writeln!(
        out,
        "graphic arcs={} events={}",
        graphic.arcs().len(),
        graphic.events().len()
    );
    for a in graphic.arcs() {
        let _ = writeln!(
            out,
            "arc index={} cancels={}",
            a.morse_index,
            a.cancels_with.map_or("none".to_string(), |c| c.to_string())
        );
        let _ = writeln!(out, "{}", join(&a.lambdas));
        let _ = writeln!(out, "{}", join(&a.values));
    }
    for e in graphic.events() {
        let _ = writeln!(
            out,
            "event lambda={} kind={} arcs={},{}",
            e.lambda, e.kind, e.arcs.0, e.arcs.1
        );
    }
    out.push_str("samples\n");
    out.push_str(&svf.to_text());
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, ModelFileError> {
        let (i, l) = self.inner.next().ok_or(ModelFileError::Malformed {
            line: self.line + 1,
            msg: "unexpected end of file".into(),
        })?;
        self.line = i + 1;
        Ok(l.trim_end())
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ModelFileError> {
        Err(ModelFileError::Malformed {
            line: self.line,
            msg: msg.into(),
        })
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, ModelFileError> {
        let l = self.next()?;
        match l.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            Some(v) => Ok(v),
            None => self.err(format!("expected `{key}=`")),
        }
    }

    fn keyed_as<T: FromStr>(&mut self, key: &str) -> Result<T, ModelFileError> {
        let v = self.keyed(key)?;
        self.parse(v)
    }

    fn next_reals(&mut self) -> Result<Vec<f64>, ModelFileError> {
        let l = self.next()?;
        self.reals(l)
    }

    fn parse<T: FromStr>(&self, s: &str) -> Result<T, ModelFileError> {
        s.trim()
            .parse()
            .or_else(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn reals(&self, s: &str) -> Result<Vec<f64>, ModelFileError> {
        s.split_whitespace().map(|t| self.parse(t)).collect()
    }

    /// `key=value` tokens of a line that starts with `head`.
    fn fields(&mut self, head: &str) -> Result<Vec<(&'a str, &'a str)>, ModelFileError> {
        let l = self.next()?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(head) {
            return self.err(format!("expected `{head}` line"));
        }
        toks.map(|t| {
            t.split_once('=')
                .map_or_else(|| self.err(format!("bad token `{t}`")), Ok)
        })
        .collect()
    }
}

fn field<'a>(
    lines: &Lines<'_>,
    f: &[(&str, &'a str)],
    key: &str,
) -> Result<&'a str, ModelFileError> {
    f.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .map_or_else(|| lines.err(format!("missing `{key}`")), Ok)
}

fn cutoff_from(lines: &Lines<'_>, s: &str) -> Result<IntervalCutoff, ModelFileError> {
    let v = lines.reals(s)?;
    if v.len() != 4 || !(v[2] <= v[0] && v[0] <= v[1] && v[1] <= v[3]) {
        return lines.err("cutoff needs inner_lo inner_hi outer_lo outer_hi, nested");
    }
    Ok(IntervalCutoff::new((v[0], v[1]), (v[2], v[3])))
}

/// Reads a model file back into an evaluable family and its samples.
pub fn read_model(text: &str) -> Result<(SynthesizedFamily, SampledVectorField), ModelFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()? != MODEL_FORMAT {
        return lines.err(format!("expected `{MODEL_FORMAT}`"));
    }
    let dim: usize = lines.keyed_as("dim")?;
    let k: usize = lines.keyed_as("k")?;
    let bounds: Vec<(f64, f64)> = lines
        .keyed("bounds")?
        .split(';')
        .map(|p| {
            let v = lines.reals(p)?;
            if v.len() == 2 && v[0] < v[1] {
                Ok((v[0], v[1]))
            } else {
                lines.err("bounds need `lo hi` pairs")
            }
        })
        .collect::<Result<_, _>>()?;
    if bounds.len() != dim {
        return lines.err("bounds do not match dim");
    }
    let ch = lines.fields("chart")?;
    let split_axis: usize = lines.parse(field(&lines, &ch, "split_axis")?)?;
    let orientation: f64 = lines.parse(field(&lines, &ch, "orientation")?)?;
    if split_axis >= dim || (orientation != 1.0 && orientation != -1.0) {
        return lines.err("invalid chart");
    }
    let lambda0: f64 = lines.keyed_as("lambda0")?;
    let endpoint_plateau: f64 = lines.keyed_as("endpoint_plateau")?;
    let inner_plateau: f64 = lines.keyed_as("inner_plateau")?;
    for p in [endpoint_plateau, inner_plateau] {
        if !(p > 0.0 && p < 1.0) {
            return lines.err("plateau fractions must lie in (0,1)");
        }
    }
    let eta = lines.keyed("eta")?;
    let eta = cutoff_from(&lines, eta)?;
    let xi = lines.keyed("xi")?;
    let xi = cutoff_from(&lines, xi)?;
    let rf = lines.fields("reference=shepard")?;
    let radius: f64 = lines.parse(field(&lines, &rf, "radius")?)?;
    if !(radius > 0.0) {
        return lines.err("Shepard radius must be positive");
    }
    let ly = lines.fields("lyapunov")?;
    let nodes: Vec<usize> = field(&lines, &ly, "nodes")?
        .split(',')
        .map(|t| lines.parse(t))
        .collect::<Result<_, _>>()?;
    let slices: usize = lines.parse(field(&lines, &ly, "slices")?)?;
    let horizon = match field(&lines, &ly, "horizon")? {
        "none" => None,
        h => Some(lines.parse::<f64>(h)?),
    };
    let margin: f64 = lines.parse(field(&lines, &ly, "margin")?)?;
    if nodes.len() != dim || nodes.iter().any(|&m| m < 2) || slices == 0 {
        return lines.err("invalid Lyapunov grid");
    }
    let per: usize = nodes.iter().product();
    let mut values = Vec::with_capacity(per * (slices + 1));
    for _ in 0..=slices {
        let row = lines.next_reals()?;
        if row.len() != per {
            return lines.err(format!("expected {per} node values"));
        }
        values.extend(row);
    }
    let gh = lines.fields("graphic")?;
    let n_arcs: usize = lines.parse(field(&lines, &gh, "arcs")?)?;
    let n_events: usize = lines.parse(field(&lines, &gh, "events")?)?;
    let mut arcs = Vec::with_capacity(n_arcs);
    for _ in 0..n_arcs {
        let af = lines.fields("arc")?;
        let index: usize = lines.parse(field(&lines, &af, "index")?)?;
        let cancels = match field(&lines, &af, "cancels")? {
            "none" => None,
            c => Some(lines.parse::<usize>(c)?),
        };
        let lams = lines.next_reals()?;
        let vals = lines.next_reals()?;
        let mut a = GraphicArc::new(lams, vals, index);
        a.cancels_with = cancels;
        arcs.push(a);
    }
    let mut events = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        let ef = lines.fields("event")?;
        let lambda: f64 = lines.parse(field(&lines, &ef, "lambda")?)?;
        let kind = match field(&lines, &ef, "kind")? {
            "crossing" => EventKind::Crossing,
            "birth" => EventKind::CubicBirth,
            "death" => EventKind::CubicDeath,
            other => return lines.err(format!("unknown event kind `{other}`")),
        };
        let ids: Vec<usize> = field(&lines, &ef, "arcs")?
            .split(',')
            .map(|t| lines.parse(t))
            .collect::<Result<_, _>>()?;
        if ids.len() != 2 {
            return lines.err("events join two arcs");
        }
        events.push(GraphicEvent {
            lambda,
            kind,
            arcs: (ids[0], ids[1]),
        });
    }
    let graphic = CerfGraphic::new(arcs, events).map_err(|e| ModelFileError::Malformed {
        line: lines.line,
        msg: e.to_string(),
    })?;
    if lines.next()? != "samples" {
        return lines.err("expected `samples`");
    }
    let rest: Vec<&str> = lines.inner.map(|(_, l)| l).collect();
    let svf = parse_samples(&rest.join("\n")).map_err(|e| ModelFileError::Malformed {
        line: lines.line + 1,
        msg: e.to_string(),
    })?;
    if svf.dim != dim {
        return Err(ModelFileError::Malformed {
            line: lines.line + 1,
            msg: "sample dimension differs from model dimension".into(),
        });
    }

    let f: SharedField = Arc::new(ShepardField::new(&svf, radius));
    let chart = Chart::from_bounds(&bounds, split_axis, orientation);
    let (f0, f1) = endpoint_families(f.clone(), &chart, &bounds, k, endpoint_plateau)?;
    let stage1 = Arc::new(assemble_f1(f.clone(), f0, f1, eta, xi)?);
    let mut g = LyapunovFunction::from_values(bounds.clone(), nodes, slices, values);
    g.horizon = horizon;
    g.margin = margin;
    let g = Arc::new(g);
    let rho = BoxCutoff::with_plateau(&bounds, inner_plateau);
    let stage2 = Arc::new(StageTwo {
        stage1: stage1.clone(),
        lyapunov: g.clone(),
        rho: rho.clone(),
    });
    let whitney = WhitneyModel::saddle_node(lambda0, k, chart).map_err(SynthesisError::from)?;
    let stage3 = Arc::new(assemble_f3(stage1.clone(), g, graphic, whitney, rho)?);
    let family = compose_final(f, stage1, stage2, stage3, k, &[], 0.0)?;
    Ok((family, svf))
}
