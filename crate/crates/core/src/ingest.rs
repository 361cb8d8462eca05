//! Sampled vector-field data, the sample grid, and Lipschitz sign certificates.
//!
//! A certificate bounds a scalar `q = f·n` on a face of phase × parameter
//! space from finitely many samples. If every point of the face lies within
//! `h` of a sample and `f` is `L`-Lipschitz (Euclidean metric on `(x, λ)`
//! jointly), then `|q(p) − q(s)| ≤ L·|n|·h` for the nearest sample `s`, so a
//! common sampled sign survives whenever `min|q(s)| − L·|n|·h > 0`.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::spatial::PointIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("malformed input at line {line}: {msg}")]
    MalformedInput { line: usize, msg: String },
    #[error("dimension mismatch at line {line}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("lambda {value} at line {line} lies outside [0, 1]")]
    OutOfRangeLambda { line: usize, value: f64 },
    #[error("duplicate sample location at line {line}")]
    DuplicateSample { line: usize },
    #[error("no samples within radius {radius} of face {face}")]
    NoSamplesOnFace { face: String, radius: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub f: Vec<f64>,
}

/// Finite observations `(x, λ, f(x, λ))` plus a joint Lipschitz bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledVectorField {
    pub dim: usize,
    pub samples: Vec<Sample>,
    pub lipschitz_bound: f64,
}

impl SampledVectorField {
    /// Validates the type invariants. Sample lines are reported 1-based
    /// counting the header, matching [`parse_samples`].
    pub fn new(
        dim: usize,
        samples: Vec<Sample>,
        lipschitz_bound: f64,
    ) -> Result<Self, IngestError> {
        if dim == 0 {
            return Err(IngestError::MalformedInput {
                line: 1,
                msg: "dim must be positive".into(),
            });
        }
        if !(lipschitz_bound >= 0.0) || !lipschitz_bound.is_finite() {
            return Err(IngestError::MalformedInput {
                line: 1,
                msg: "lipschitz bound must be a finite nonnegative real".into(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for (i, s) in samples.iter().enumerate() {
            let line = i + 2;
            for v in [&s.x, &s.f] {
                if v.len() != dim {
                    return Err(IngestError::DimensionMismatch {
                        line,
                        expected: dim,
                        found: v.len(),
                    });
                }
            }
            if !(0.0..=1.0).contains(&s.lambda) {
                return Err(IngestError::OutOfRangeLambda {
                    line,
                    value: s.lambda,
                });
            }
            if s.x.iter().chain(&s.f).any(|v| !v.is_finite()) {
                return Err(IngestError::MalformedInput {
                    line,
                    msg: "non-finite value".into(),
                });
            }
            let key: Vec<u64> =
                s.x.iter()
                    .chain(std::iter::once(&s.lambda))
                    .map(|v| (v + 0.0).to_bits())
                    .collect();
            if !seen.insert(key) {
                return Err(IngestError::DuplicateSample { line });
            }
        }
        Ok(Self {
            dim,
            samples,
            lipschitz_bound,
        })
    }

    /// Writes the sample file format; `parse_samples(&svf.to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim={} lipschitz={}\n", self.dim, self.lipschitz_bound);
        for s in &self.samples {
            let join = |v: &[f64]| {
                v.iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(out, "{} ; {} ; {}", join(&s.x), s.lambda, join(&s.f));
        }
        out
    }

    /// Sample locations `(x, λ)`.
    pub fn locations(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| s.x.iter().copied().chain([s.lambda]).collect())
            .collect()
    }

    pub fn without_samples_near(&self, x: &[f64], lambda: f64, radius: f64) -> Self {
        let samples = self
            .samples
            .iter()
            .filter(|s| {
                let mut p = s.x.clone();
                p.push(s.lambda);
                let mut q = x.to_vec();
                q.push(lambda);
                euclid(&p, &q) > radius
            })
            .cloned()
            .collect();
        Self {
            dim: self.dim,
            samples,
            lipschitz_bound: self.lipschitz_bound,
        }
    }

    pub fn with_lipschitz(&self, lipschitz_bound: f64) -> Self {
        Self {
            lipschitz_bound,
            ..self.clone()
        }
    }
}

/// Parses the sample file: header `dim=<n> lipschitz=<L>` followed by lines
/// `x_1 … x_n ; lambda ; f_1 … f_n`. Blank lines and `#` comments are skipped.
pub fn parse_samples(text: &str) -> Result<SampledVectorField, IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(IngestError::MalformedInput {
        line: 1,
        msg: "missing header".into(),
    })?;
    let mut dim = None;
    let mut lip = None;
    for tok in header.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| IngestError::MalformedInput {
                line: hline,
                msg: format!("expected key=value, got `{tok}`"),
            })?;
        match k {
            "dim" => dim = Some(parse_num::<usize>(v, hline)?),
            "lipschitz" => lip = Some(parse_num::<f64>(v, hline)?),
            _ => {
                return Err(IngestError::MalformedInput {
                    line: hline,
                    msg: format!("unknown header key `{k}`"),
                })
            }
        }
    }
    let (Some(dim), Some(lip)) = (dim, lip) else {
        return Err(IngestError::MalformedInput {
            line: hline,
            msg: "header must give dim and lipschitz".into(),
        });
    };

    let mut samples = Vec::new();
    let mut lines_of = Vec::new();
    for (line, body) in lines {
        let parts: Vec<&str> = body.split(';').collect();
        if parts.len() != 3 {
            return Err(IngestError::MalformedInput {
                line,
                msg: "expected `x ; lambda ; f`".into(),
            });
        }
        let vec_of = |s: &str| -> Result<Vec<f64>, IngestError> {
            s.split_whitespace()
                .map(|t| parse_num::<f64>(t, line))
                .collect()
        };
        let x = vec_of(parts[0])?;
        let lam = vec_of(parts[1])?;
        let f = vec_of(parts[2])?;
        if lam.len() != 1 {
            return Err(IngestError::MalformedInput {
                line,
                msg: "lambda must be a single real".into(),
            });
        }
        for v in [&x, &f] {
            if v.len() != dim {
                return Err(IngestError::DimensionMismatch {
                    line,
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        if !(0.0..=1.0).contains(&lam[0]) {
            return Err(IngestError::OutOfRangeLambda {
                line,
                value: lam[0],
            });
        }
        lines_of.push(line);
        samples.push(Sample {
            x,
            lambda: lam[0],
            f,
        });
    }
    SampledVectorField::new(dim, samples, lip).map_err(|e| match e {
        IngestError::DuplicateSample { line } => IngestError::DuplicateSample {
            line: lines_of.get(line - 2).copied().unwrap_or(line),
        },
        IngestError::MalformedInput { line, msg } if line >= 2 => IngestError::MalformedInput {
            line: lines_of.get(line - 2).copied().unwrap_or(line),
            msg,
        },
        other => other,
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, IngestError> {
    s.parse().map_err(|_| IngestError::MalformedInput {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Regular discretization of `box × [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    pub lambda_resolution: usize,
}

impl Grid {
    pub fn new(
        bounds: Vec<(f64, f64)>,
        resolution: Vec<usize>,
        lambda_resolution: usize,
    ) -> Result<Self, IngestError> {
        if bounds.is_empty() || bounds.len() != resolution.len() {
            return Err(IngestError::InvalidGrid(
                "bounds and resolution must be nonempty and of equal length".into(),
            ));
        }
        if bounds
            .iter()
            .any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(IngestError::InvalidGrid("each axis needs lo < hi".into()));
        }
        if resolution.contains(&0) || lambda_resolution == 0 {
            return Err(IngestError::InvalidGrid(
                "resolutions must be positive".into(),
            ));
        }
        Ok(Self {
            bounds,
            resolution,
            lambda_resolution,
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        (hi - lo) / self.resolution[axis] as f64
    }

    pub fn lambda_spacing(&self) -> f64 {
        1.0 / self.lambda_resolution as f64
    }

    /// Physical coordinate of integer grid coordinate `i` on `axis`.
    pub fn coord(&self, axis: usize, i: i64) -> f64 {
        let (lo, hi) = self.bounds[axis];
        if i as usize == self.resolution[axis] {
            hi
        } else {
            lo + self.spacing(axis) * i as f64
        }
    }

    /// Euclidean diameter of one `(x, λ)` cell.
    pub fn cell_diameter(&self) -> f64 {
        let mut s: f64 = (0..self.dim()).map(|a| self.spacing(a).powi(2)).sum();
        s += self.lambda_spacing().powi(2);
        s.sqrt()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product::<usize>() * self.lambda_resolution
    }
}

/// Axis-aligned closed region of `(x, λ)` space on which a scalar is bounded.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceRegion {
    pub id: String,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub lambda: (f64, f64),
}

impl FaceRegion {
    pub fn new(id: impl Into<String>, lo: Vec<f64>, hi: Vec<f64>, lambda: (f64, f64)) -> Self {
        Self {
            id: id.into(),
            lo,
            hi,
            lambda,
        }
    }

    pub fn point(id: impl Into<String>, x: &[f64], lambda: f64) -> Self {
        Self::new(id, x.to_vec(), x.to_vec(), (lambda, lambda))
    }

    pub fn distance(&self, x: &[f64], lambda: f64) -> f64 {
        let mut s = 0.0;
        for ((v, lo), hi) in x.iter().zip(&self.lo).zip(&self.hi) {
            let d = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            s += d * d;
        }
        let (l0, l1) = self.lambda;
        let d = if lambda < l0 {
            l0 - lambda
        } else if lambda > l1 {
            lambda - l1
        } else {
            0.0
        };
        (s + d * d).sqrt()
    }
}

/// Which scalar a certificate bounds.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Component(usize),
    /// `f·n` for a declared (not necessarily unit) normal `n`.
    Flux(Vec<f64>),
}

impl Quantity {
    pub fn eval(&self, f: &[f64]) -> f64 {
        match self {
            Quantity::Component(i) => f[*i],
            Quantity::Flux(n) => f.iter().zip(n).map(|(a, b)| a * b).sum(),
        }
    }

    fn norm(&self) -> f64 {
        match self {
            Quantity::Component(_) => 1.0,
            Quantity::Flux(n) => n.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn negated(&self) -> Quantity {
        match self {
            Quantity::Component(i) => {
                Quantity::Flux((0..=*i).map(|j| if j == *i { -1.0 } else { 0.0 }).collect())
            }
            Quantity::Flux(n) => Quantity::Flux(n.iter().map(|v| -v).collect()),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Component(i) => write!(f, "f[{i}]"),
            Quantity::Flux(n) => {
                let parts: Vec<String> = n.iter().map(|v| v.to_string()).collect();
                write!(f, "f.({})", parts.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Undetermined,
}

impl Sign {
    pub fn is_determinate(self) -> bool {
        self != Sign::Undetermined
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Undetermined => Sign::Undetermined,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Undetermined => "undetermined",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignCertificate {
    pub face: String,
    pub quantity: Quantity,
    pub sign: Sign,
    /// Guaranteed distance of the quantity from zero; `−∞` when sampled signs disagree.
    pub margin: f64,
}

impl SignCertificate {
    /// The same certificate for `−quantity`.
    pub fn negated(&self) -> Self {
        Self {
            face: self.face.clone(),
            quantity: self.quantity.negated(),
            sign: self.sign.flipped(),
            margin: self.margin,
        }
    }
}

/// Certifies the sign of `quantity` on `face` from the samples within `h` of it.
pub fn certify_face_sign(
    svf: &SampledVectorField,
    face: &FaceRegion,
    quantity: &Quantity,
    h: f64,
) -> Result<SignCertificate, IngestError> {
    let tol = h * (1.0 + 1e-12) + 1e-15;
    let values: Vec<f64> = svf
        .samples
        .iter()
        .filter(|s| face.distance(&s.x, s.lambda) <= tol)
        .map(|s| quantity.eval(&s.f))
        .collect();
    if values.is_empty() {
        return Err(IngestError::NoSamplesOnFace {
            face: face.id.clone(),
            radius: h,
        });
    }
    let all_pos = values.iter().all(|&v| v > 0.0);
    let all_neg = values.iter().all(|&v| v < 0.0);
    let (sign, margin) = if all_pos || all_neg {
        let min_abs = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let margin = min_abs - svf.lipschitz_bound * quantity.norm() * h;
        let sign = match (margin > 0.0, all_pos) {
            (false, _) => Sign::Undetermined,
            (true, true) => Sign::Positive,
            (true, false) => Sign::Negative,
        };
        (sign, margin)
    } else {
        (Sign::Undetermined, f64::NEG_INFINITY)
    };
    Ok(SignCertificate {
        face: face.id.clone(),
        quantity: quantity.clone(),
        sign,
        margin,
    })
}

/// Upper bound on the distance from any point of `face` to its nearest sample.
///
/// Probes a regular lattice of the face and adds the lattice half-diagonal,
/// so the bound holds for every face point, not just the probes.
pub fn covering_radius(svf: &SampledVectorField, face: &FaceRegion, probes_per_axis: usize) -> f64 {
    let m = probes_per_axis.max(1);
    let mut axes: Vec<(f64, f64)> = face
        .lo
        .iter()
        .copied()
        .zip(face.hi.iter().copied())
        .collect();
    axes.push(face.lambda);
    let steps: Vec<f64> = axes.iter().map(|(lo, hi)| (hi - lo) / m as f64).collect();
    let half_diag = 0.5 * steps.iter().map(|s| s * s).sum::<f64>().sqrt();
    let live: Vec<usize> = (0..axes.len()).filter(|&a| steps[a] > 0.0).collect();
    let total = (m + 1).pow(live.len() as u32);
    if svf.samples.is_empty() {
        return f64::INFINITY;
    }
    let index = PointIndex::with_mean_spacing(&svf.locations());
    let mut worst: f64 = 0.0;
    let mut p: Vec<f64> = axes.iter().map(|(lo, _)| *lo).collect();
    for idx in 0..total {
        let mut r = idx;
        for &a in &live {
            let k = r % (m + 1);
            r /= m + 1;
            p[a] = axes[a].0 + steps[a] * k as f64;
        }
        let (_, near) = index.nearest(&p).expect("index is nonempty");
        worst = worst.max(near);
    }
    worst + half_diag
}

/// Generalized S1–S4 assumptions for a box block with a witness point.
#[derive(Clone, Debug, PartialEq)]
pub enum Assumption {
    /// Sign of `f·n` on the phase-boundary face `axis = lo|hi` for all λ.
    BoundaryFace { axis: usize, upper: bool },
    /// A component of `f` keeps one sign on the terminal slice `λ = 1`.
    TerminalSlice,
    /// Nonvanishing sampled direction at the interior witness at `λ = 0`.
    InitialWitness,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::BoundaryFace { axis, upper } => {
                write!(f, "S1/S2 x{}={}", axis, if *upper { "hi" } else { "lo" })
            }
            Assumption::TerminalSlice => f.write_str("S3 lambda=1"),
            Assumption::InitialWitness => f.write_str("S4 witness lambda=0"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionEntry {
    pub assumption: Assumption,
    /// `None` when no sample covers the face (the assumption is missing).
    pub certificate: Option<SignCertificate>,
}

impl AssumptionEntry {
    pub fn holds(&self) -> bool {
        self.certificate
            .as_ref()
            .is_some_and(|c| c.sign.is_determinate())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub entries: Vec<AssumptionEntry>,
}

impl AssumptionReport {
    pub fn certified(&self) -> bool {
        self.entries.iter().all(AssumptionEntry::holds)
    }

    pub fn entry(&self, a: &Assumption) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| &e.assumption == a)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format=snblock-assumptions v1\n");
        let _ = writeln!(
            out,
            "verdict={}",
            if self.certified() {
                "Certified"
            } else {
                "NotCertified"
            }
        );
        for e in &self.entries {
            match &e.certificate {
                Some(c) => {
                    let _ = writeln!(
                        out,
                        "{}\tface={}\tquantity={}\tsign={}\tmargin={}",
                        e.assumption, c.face, c.quantity, c.sign, c.margin
                    );
                }
                None => {
                    let _ = writeln!(out, "{}\tmissing", e.assumption);
                }
            }
        }
        out
    }
}

/// Regions checked for each assumption of a box block, in report order.
pub fn assumption_regions(bounds: &[(f64, f64)], witness: &[f64]) -> Vec<(Assumption, FaceRegion)> {
    let n = bounds.len();
    let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    let mut out = Vec::with_capacity(2 * n + 2);
    for axis in 0..n {
        for upper in [false, true] {
            let mut flo = lo.clone();
            let mut fhi = hi.clone();
            let v = if upper { hi[axis] } else { lo[axis] };
            flo[axis] = v;
            fhi[axis] = v;
            let face = FaceRegion::new(
                format!("x{}={}", axis, if upper { "hi" } else { "lo" }),
                flo,
                fhi,
                (0.0, 1.0),
            );
            out.push((Assumption::BoundaryFace { axis, upper }, face));
        }
    }
    out.push((
        Assumption::TerminalSlice,
        FaceRegion::new("lambda=1", lo, hi, (1.0, 1.0)),
    ));
    out.push((
        Assumption::InitialWitness,
        FaceRegion::point("witness", witness, 0.0),
    ));
    out
}

/// Largest covering radius over the assumption regions, so that every
/// region is covered at the returned radius.
pub fn assumption_radius(
    svf: &SampledVectorField,
    bounds: &[(f64, f64)],
    witness: &[f64],
    probes_per_axis: usize,
) -> f64 {
    assumption_regions(bounds, witness)
        .iter()
        .map(|(_, face)| covering_radius(svf, face, probes_per_axis))
        .fold(0.0, f64::max)
}

/// Checks the boundary, terminal-slice, and witness assumptions of a box block.
pub fn check_block_assumptions(
    svf: &SampledVectorField,
    bounds: &[(f64, f64)],
    witness: &[f64],
    h: f64,
) -> Result<AssumptionReport, IngestError> {
    let n = bounds.len();
    if n != svf.dim || witness.len() != n {
        return Err(IngestError::InvalidGrid(
            "block and witness must match the sample dimension".into(),
        ));
    }
    let mut entries = Vec::new();
    for (assumption, face) in assumption_regions(bounds, witness) {
        let certificate = match assumption {
            Assumption::BoundaryFace { axis, upper } => {
                let mut normal = vec![0.0; n];
                normal[axis] = if upper { 1.0 } else { -1.0 };
                lenient(certify_face_sign(svf, &face, &Quantity::Flux(normal), h))?
            }
            _ => best_component(svf, &face, h)?,
        };
        entries.push(AssumptionEntry {
            assumption,
            certificate,
        });
    }
    Ok(AssumptionReport { entries })
}

fn lenient(
    r: Result<SignCertificate, IngestError>,
) -> Result<Option<SignCertificate>, IngestError> {
    match r {
        Ok(c) => Ok(Some(c)),
        Err(IngestError::NoSamplesOnFace { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Certificate for the component of `f` with the largest margin on `face`.
fn best_component(
    svf: &SampledVectorField,
    face: &FaceRegion,
    h: f64,
) -> Result<Option<SignCertificate>, IngestError> {
    let mut best: Option<SignCertificate> = None;
    for i in 0..svf.dim {
        let Some(c) = lenient(certify_face_sign(svf, face, &Quantity::Component(i), h))? else {
            return Ok(None);
        };
        if best.as_ref().is_none_or(|b| c.margin > b.margin) {
            best = Some(c);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_face() -> FaceRegion {
        FaceRegion::new("x=a", vec![-2.0], vec![-2.0], (0.0, 1.0))
    }

    fn const_data(l: f64) -> SampledVectorField {
        let samples = (0..=10)
            .map(|j| Sample {
                x: vec![-2.0],
                lambda: j as f64 / 10.0,
                f: vec![-1.0],
            })
            .collect();
        SampledVectorField::new(1, samples, l).unwrap()
    }

    #[test]
    fn parse_two_samples() {
        let svf = parse_samples("dim=1 lipschitz=2\n0.5 ; 0 ; -1\n1 ; 0.5 ; 2\n").unwrap();
        assert_eq!(svf.dim, 1);
        assert_eq!(svf.samples.len(), 2);
        assert_eq!(svf.lipschitz_bound, 2.0);
        assert_eq!(svf.samples[1].f, vec![2.0]);
    }

    #[test]
    fn parse_ragged_vector() {
        let e = parse_samples("dim=2 lipschitz=1\n0 0 ; 0 ; 1 1\n0 0 1 ; 0.5 ; 1 1\n").unwrap_err();
        assert_eq!(
            e,
            IngestError::DimensionMismatch {
                line: 3,
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(
            parse_samples("dim=1 lipschitz=1\n0 ; 1.5 ; 1\n"),
            Err(IngestError::OutOfRangeLambda { line: 2, .. })
        ));
        assert!(matches!(
            parse_samples("dim=1 lipschitz=1\n0 ; 0.5 1\n"),
            Err(IngestError::MalformedInput { line: 2, .. })
        ));
        assert!(matches!(
            parse_samples("dim=1 lipschitz=1\n0 ; 0.5 ; x\n"),
            Err(IngestError::MalformedInput { .. })
        ));
        assert!(matches!(
            parse_samples("# c\ndim=1 lipschitz=1\n0 ; 0.5 ; 1\n\n0 ; 0.5 ; 2\n"),
            Err(IngestError::DuplicateSample { line: 5 })
        ));
        assert!(matches!(
            parse_samples(""),
            Err(IngestError::MalformedInput { .. })
        ));
    }

    #[test]
    fn face_sign_with_lipschitz_slack() {
        let c = certify_face_sign(
            &const_data(5.0),
            &line_face(),
            &Quantity::Component(0),
            0.05,
        )
        .unwrap();
        assert_eq!(c.sign, Sign::Negative);
        assert!((c.margin - 0.75).abs() < 1e-12);

        let c = certify_face_sign(
            &const_data(30.0),
            &line_face(),
            &Quantity::Component(0),
            0.05,
        )
        .unwrap();
        assert_eq!(c.sign, Sign::Undetermined);
        assert!((c.margin + 0.5).abs() < 1e-12);

        let c = certify_face_sign(
            &const_data(0.0),
            &line_face(),
            &Quantity::Component(0),
            0.05,
        )
        .unwrap();
        assert_eq!(c.sign, Sign::Negative);
        assert_eq!(c.margin, 1.0);
    }

    #[test]
    fn disagreeing_signs_give_negative_infinity() {
        let mut svf = const_data(0.0);
        svf.samples[3].f = vec![0.5];
        let c = certify_face_sign(&svf, &line_face(), &Quantity::Component(0), 0.05).unwrap();
        assert_eq!(c.sign, Sign::Undetermined);
        assert_eq!(c.margin, f64::NEG_INFINITY);
    }

    #[test]
    fn empty_face_is_an_error() {
        let face = FaceRegion::new("far", vec![7.0], vec![7.0], (0.0, 1.0));
        assert!(matches!(
            certify_face_sign(&const_data(1.0), &face, &Quantity::Component(0), 0.05),
            Err(IngestError::NoSamplesOnFace { .. })
        ));
    }

    #[test]
    fn covering_radius_bounds_lambda_gaps() {
        let r = covering_radius(&const_data(1.0), &line_face(), 40);
        assert!(r >= 0.05 - 1e-12);
        assert!(r < 0.07);
    }

    #[test]
    fn grid_cell_diameter() {
        let g = Grid::new(vec![(0.0, 3.0), (0.0, 4.0)], vec![3, 4], 10).unwrap();
        assert!((g.cell_diameter() - (2.0f64 + 0.01).sqrt()).abs() < 1e-12);
        assert_eq!(g.cell_count(), 120);
        assert_eq!(g.coord(1, 4), 4.0);
        assert!(Grid::new(vec![(1.0, 0.0)], vec![2], 2).is_err());
    }

    // fold picture: rows at a and c, one upward arrow at (b, 0), two extra
    // arrows on the terminal slice
    const A: f64 = 0.75;
    const B: f64 = 3.0;
    const C: f64 = 5.5;

    fn picture(extra: bool, witness: bool) -> String {
        let mut text = String::from("dim=1 lipschitz=0.1\n");
        for i in 0..=5 {
            let f = -(0.5 + 0.05 * i as f64);
            for x in [A, C] {
                text += &format!("{x} ; {} ; {f}\n", i as f64 / 5.0);
            }
        }
        if witness {
            text += &format!("{B} ; 0 ; 0.5\n");
        }
        if extra {
            text += "2.5 ; 1 ; -0.75\n4 ; 1 ; -0.75\n";
        }
        text
    }

    fn picture_report(extra: bool, witness: bool) -> AssumptionReport {
        let svf = parse_samples(&picture(extra, witness)).unwrap();
        let bounds = [(A, C)];
        let h = assumption_radius(&svf, &bounds, &[B], 200);
        check_block_assumptions(&svf, &bounds, &[B], h).unwrap()
    }

    #[test]
    fn picture_without_slice_arrows_has_thirteen_samples() {
        let svf = parse_samples(&picture(false, true)).unwrap();
        assert_eq!(svf.dim, 1);
        assert_eq!(svf.samples.len(), 13);
    }

    #[test]
    fn full_picture_is_certified() {
        let r = picture_report(true, true);
        assert!(r.certified(), "{}", r.to_text());
        let w = r.entry(&Assumption::InitialWitness).unwrap();
        assert_eq!(w.certificate.as_ref().unwrap().sign, Sign::Positive);
        let s3 = r.entry(&Assumption::TerminalSlice).unwrap();
        assert_eq!(s3.certificate.as_ref().unwrap().sign, Sign::Negative);
    }

    #[test]
    fn picture_without_the_witness_arrow_loses_the_upward_sign() {
        let r = picture_report(true, false);
        let w = r.entry(&Assumption::InitialWitness).unwrap();
        // the nearest arrow is now a downward one on the terminal slice
        assert_ne!(w.certificate.as_ref().unwrap().sign, Sign::Positive);
        for upper in [false, true] {
            let e = r
                .entry(&Assumption::BoundaryFace { axis: 0, upper })
                .unwrap();
            assert!(e.holds(), "{}", r.to_text());
        }
    }

    #[test]
    fn thirteen_sample_picture_leaves_s3_open() {
        let r = picture_report(false, true);
        assert!(!r.entry(&Assumption::TerminalSlice).unwrap().holds());
        assert!(!r.certified());
    }

    #[test]
    fn assumption_radius_covers_every_region() {
        let svf = parse_samples(&picture(true, true)).unwrap();
        let bounds = [(A, C)];
        let h = assumption_radius(&svf, &bounds, &[B], 200);
        for (_, face) in assumption_regions(&bounds, &[B]) {
            assert!(covering_radius(&svf, &face, 200) <= h);
        }
        // the slice is the widest gap: half of 1.5 between 2.5 and 4
        assert!((0.75..1.0).contains(&h), "{h}");
    }
}
