//! Numerical checks of the target dynamics of a synthesized family:
//! two hyperbolic equilibria joined by a connecting orbit before the fold,
//! a nondegenerate saddle-node at the fold, and an empty invariant set after.

use std::fmt::{self, Write as _};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{Family, SigmaSlice, VectorField};

use super::continuation::{
    continue_branch, ContinuationError, ContinuationOptions, EquilibriumBranch,
};
use super::equilibria::{
    dist, find_equilibria_with, grid_seeds, newton, Equilibrium, NewtonOptions, DEDUP_TOL,
};
use super::ode::{inside, integrate, rk4_step, OdeError};
use super::par_map;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Newton seeds per phase axis for each census.
    pub seeds_per_axis: usize,
    /// Eigenvalues with `|Re|` at most this are non-hyperbolic.
    pub hyperbolic_tol: f64,
    /// Bound on the null eigenvalue at the fold.
    pub zero_eigenvalue_tol: f64,
    /// Lower bound on the remaining eigenvalue moduli at the fold.
    pub spectral_separation: f64,
    /// Lower bound on the quadratic coefficient along the null direction.
    pub nondegeneracy_min: f64,
    /// Range of `|λ − λ₀|` for the gap fit.
    pub gap_range: (f64, f64),
    pub gap_points: usize,
    pub exponent_window: (f64, f64),
    pub step: f64,
    pub probe_horizon: f64,
    /// Probe orbits per `λ` are `probe_factor · n²`.
    pub probe_factor: usize,
    pub heteroclinic_offset: f64,
    pub heteroclinic_horizon: f64,
    pub convergence_tol: f64,
    /// Mesh points this close to `λ₀` are skipped.
    pub fold_exclusion: f64,
    pub seed: u64,
    pub newton: NewtonOptions,
    pub continuation: ContinuationOptions,
}

impl VerifyOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            seeds_per_axis: match n {
                1 => 41,
                2 => 15,
                _ => 7,
            },
            hyperbolic_tol: 1e-6,
            zero_eigenvalue_tol: 1e-6,
            spectral_separation: 1e-3,
            nondegeneracy_min: 1e-3,
            gap_range: (1e-4, 1e-2),
            gap_points: 9,
            exponent_window: (0.45, 0.55),
            step: 1e-2,
            probe_horizon: 1e3,
            probe_factor: 10,
            heteroclinic_offset: 1e-5,
            heteroclinic_horizon: 1e3,
            convergence_tol: 1e-6,
            fold_exclusion: 1e-3,
            seed: 0,
            newton: NewtonOptions::default(),
            continuation: ContinuationOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl CheckStatus {
    pub fn passed(&self) -> bool {
        *self == CheckStatus::Pass
    }

    fn and(self, other: CheckStatus) -> CheckStatus {
        match (self, other) {
            (CheckStatus::Fail(a), _) => CheckStatus::Fail(a),
            (_, CheckStatus::Fail(b)) => CheckStatus::Fail(b),
            (CheckStatus::Inconclusive(a), _) => CheckStatus::Inconclusive(a),
            (_, b) => b,
        }
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Pass => write!(f, "pass"),
            CheckStatus::Fail(m) => write!(f, "fail ({m})"),
            CheckStatus::Inconclusive(m) => write!(f, "inconclusive ({m})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

// ---------------------------------------------------------------- saddle-node

#[derive(Clone, Debug, PartialEq)]
pub struct SaddleNodeReport {
    pub lambda0: f64,
    pub x0: Vec<f64>,
    /// Smallest eigenvalue modulus at `x0`.
    pub null_eigenvalue: f64,
    /// Smallest modulus among the remaining eigenvalues.
    pub separation: f64,
    /// `(|λ − λ₀|, gap)` samples used in the fit.
    pub gaps: Vec<(f64, f64)>,
    pub exponent: f64,
    /// `⟨w, D²F(x0)[v, v]⟩` for the null vectors `v`, `w`.
    pub curvature: f64,
    pub null_ok: bool,
    pub exponent_ok: bool,
    pub nondegenerate_ok: bool,
}

impl SaddleNodeReport {
    pub fn passed(&self) -> bool {
        self.null_ok && self.exponent_ok && self.nondegenerate_ok
    }

    fn status(&self) -> CheckStatus {
        let mut why = Vec::new();
        if !self.null_ok {
            why.push(format!(
                "null eigenvalue {:.3e}, separation {:.3e}",
                self.null_eigenvalue, self.separation
            ));
        }
        if !self.exponent_ok {
            why.push(format!("gap exponent {:.4}", self.exponent));
        }
        if !self.nondegenerate_ok {
            why.push(format!("quadratic coefficient {:.3e}", self.curvature));
        }
        if why.is_empty() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail(why.join("; "))
        }
    }
}

/// Right and left singular vectors of the smallest singular value.
fn null_vectors(j: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let svd = j.clone().svd(true, true);
    let i = svd.singular_values.argmin().0;
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    (
        vt.row(i).iter().copied().collect(),
        u.column(i).iter().copied().collect(),
    )
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn logspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (m - 1).max(1) as f64).exp())
        .collect()
}

/// Saddle-node test on two branches that meet near `lambda0`: a simple zero
/// eigenvalue at the fold, an equilibrium gap scaling like `|λ − λ₀|^½`,
/// and a nonzero quadratic coefficient along the null direction.
pub fn saddle_node_test(
    field: &dyn VectorField,
    branches: [&EquilibriumBranch; 2],
    lambda0: f64,
    opts: &VerifyOptions,
) -> Result<SaddleNodeReport, VerifyError> {
    for b in branches {
        if b.points.len() < 2 {
            return Err(VerifyError::InsufficientData(
                "branch with fewer than two points".into(),
            ));
        }
    }
    let mean: f64 = branches
        .iter()
        .flat_map(|b| b.points.iter().map(|p| p.equilibrium.lambda))
        .sum::<f64>();
    let count: usize = branches.iter().map(|b| b.points.len()).sum();
    let side = if mean / count as f64 <= lambda0 {
        -1.0
    } else {
        1.0
    };
    let (dmin, dmax) = opts.gap_range;
    for b in branches {
        let (lo, hi) = b.lambda_range();
        let far = if side < 0.0 {
            lambda0 - lo
        } else {
            hi - lambda0
        };
        if far < dmax {
            return Err(VerifyError::InsufficientData(format!(
                "branch covers lambda in [{lo}, {hi}], gap fit needs |lambda - {lambda0}| up to {dmax}"
            )));
        }
    }

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for b in branches {
        if let Some(f) = &b.fold {
            seeds.push(f.x.clone());
        }
    }
    let ends: Vec<Vec<f64>> = branches
        .iter()
        .map(|b| b.nearest(lambda0).expect("nonempty").equilibrium.x.clone())
        .collect();
    seeds.push(
        ends[0]
            .iter()
            .zip(&ends[1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
    );
    seeds.extend(ends.iter().cloned());
    let x0 = seeds
        .iter()
        .find_map(|s| newton(field, s, lambda0, NewtonOptions::default()))
        .ok_or_else(|| {
            VerifyError::InsufficientData(format!("no equilibrium at lambda = {lambda0}"))
        })?;
    let eq = Equilibrium::at(field, x0.clone(), lambda0);
    let mut moduli: Vec<f64> = eq.eigenvalues.iter().map(|e| e.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let null_eigenvalue = moduli[0];
    let separation = moduli.get(1).copied().unwrap_or(f64::INFINITY);
    let null_ok =
        null_eigenvalue < opts.zero_eigenvalue_tol && separation > opts.spectral_separation;

    let (v, w) = null_vectors(&eq.jacobian);
    let h = 1e-3;
    let shifted = |s: f64| -> Vec<f64> { x0.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
    let (fp, fm, f0) = (
        field.eval(&shifted(h), lambda0),
        field.eval(&shifted(-h), lambda0),
        field.eval(&x0, lambda0),
    );
    let curvature: f64 = (0..x0.len())
        .map(|i| w[i] * (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h))
        .sum();
    let nondegenerate_ok = curvature.abs() > opts.nondegeneracy_min;

    let offsets = logspace(1e-6, 1.0, 25);
    let mut gaps = Vec::new();
    for d in logspace(dmin, dmax, opts.gap_points) {
        let lam = lambda0 + side * d;
        let mut local: Vec<Vec<f64>> = offsets
            .iter()
            .flat_map(|&r| [r, -r])
            .map(&shifted)
            .collect();
        for b in branches {
            local.push(b.nearest(lam).expect("nonempty").equilibrium.x.clone());
        }
        let wide: Vec<(f64, f64)> = x0.iter().map(|&c| (c - 1e3, c + 1e3)).collect();
        let mut roots =
            find_equilibria_with(field, lam, &wide, &local, NewtonOptions::default(), 1e-9);
        roots.sort_by(|a, b| dist(&a.x, &x0).total_cmp(&dist(&b.x, &x0)));
        if roots.len() >= 2 {
            gaps.push((d, dist(&roots[0].x, &roots[1].x)));
        }
    }
    let exponent = if gaps.len() == opts.gap_points {
        log_log_slope(&gaps)
    } else {
        f64::NAN
    };
    let exponent_ok = exponent >= opts.exponent_window.0 && exponent <= opts.exponent_window.1;
    Ok(SaddleNodeReport {
        lambda0,
        x0,
        null_eigenvalue,
        separation,
        gaps,
        exponent,
        curvature,
        null_ok,
        exponent_ok,
        nondegenerate_ok,
    })
}

// ---------------------------------------------------------------- orbits

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitFate {
    Converged,
    Exited,
    Undecided,
}

#[allow(clippy::too_many_arguments)]
fn follow(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    bounds: &[(f64, f64)],
    target: Option<&[f64]>,
    horizon: f64,
    step: f64,
    tol: f64,
) -> Result<OrbitFate, OdeError> {
    let steps = (horizon / step).ceil() as usize;
    let mut x = x0.to_vec();
    for i in 1..=steps {
        x = rk4_step(field, &x, lambda, step);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteValue { t: i as f64 * step });
        }
        if !inside(bounds, &x) {
            return Ok(OrbitFate::Exited);
        }
        if target.is_some_and(|t| dist(t, &x) < tol) {
            return Ok(OrbitFate::Converged);
        }
    }
    Ok(OrbitFate::Undecided)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeteroclinicOutcome {
    /// Fate of the orbits started at `x_R ± ε v` for each unstable eigenvector `v`.
    pub sides: Vec<[OrbitFate; 2]>,
    pub passed: bool,
}

/// Unit eigenvectors of the real eigenvalues with positive real part.
fn unstable_directions(eq: &Equilibrium, tol: f64) -> Vec<Vec<f64>> {
    let n = eq.x.len();
    eq.eigenvalues
        .iter()
        .filter(|e| e.re > tol && e.im.abs() <= tol)
        .map(|e| {
            let m = &eq.jacobian - DMatrix::<f64>::identity(n, n) * e.re;
            let (v, _) = null_vectors(&m);
            v
        })
        .collect()
}

/// Follows the repeller's unstable directions. With one unstable direction
/// the check passes iff one side converges to the attractor and the other
/// leaves the block; with more, some direction must connect.
pub fn heteroclinic_check(
    field: &dyn VectorField,
    lambda: f64,
    repeller: &Equilibrium,
    attractor: &Equilibrium,
    bounds: &[(f64, f64)],
    opts: &VerifyOptions,
) -> Result<HeteroclinicOutcome, VerifyError> {
    let dirs = unstable_directions(repeller, opts.hyperbolic_tol);
    if dirs.is_empty() {
        return Err(VerifyError::Inconclusive(
            "repeller has no real unstable direction".into(),
        ));
    }
    let mut sides = Vec::with_capacity(dirs.len());
    for v in &dirs {
        let fate = |s: f64| {
            let x0: Vec<f64> = repeller.x.iter().zip(v).map(|(a, b)| a + s * b).collect();
            follow(
                field,
                &x0,
                lambda,
                bounds,
                Some(&attractor.x),
                opts.heteroclinic_horizon,
                opts.step,
                opts.convergence_tol,
            )
        };
        let eps = opts.heteroclinic_offset;
        sides.push([fate(eps)?, fate(-eps)?]);
    }
    if sides.iter().flatten().any(|f| *f == OrbitFate::Undecided) {
        return Err(VerifyError::Inconclusive(
            "orbit neither converged nor left the block within the horizon".into(),
        ));
    }
    let connects = |s: &[OrbitFate; 2]| s.contains(&OrbitFate::Converged);
    let passed = if sides.len() == 1 {
        let s = sides[0];
        s.contains(&OrbitFate::Converged) && s.contains(&OrbitFate::Exited)
    } else {
        sides.iter().any(connects)
    };
    Ok(HeteroclinicOutcome { sides, passed })
}

#[derive(Clone, Debug, PartialEq)]
pub enum OmegaLimit {
    /// Bounding box of the last tenth of the trajectory.
    Tail(Vec<(f64, f64)>),
    Escaped,
}

impl OmegaLimit {
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        match self {
            OmegaLimit::Tail(b) => b
                .iter()
                .zip(x)
                .all(|(&(lo, hi), &v)| v >= lo - slack && v <= hi + slack),
            OmegaLimit::Escaped => false,
        }
    }
}

pub fn estimate_omega_limit(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    horizon: f64,
    step: f64,
    bounds: &[(f64, f64)],
) -> Result<OmegaLimit, VerifyError> {
    let traj = integrate(field, x0, lambda, horizon, step, Some(bounds))?;
    if traj.exited {
        return Ok(OmegaLimit::Escaped);
    }
    let cut = 0.9 * horizon;
    let n = x0.len();
    let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
    for (t, p) in traj.times.iter().zip(&traj.points) {
        if *t + 0.5 * step >= cut {
            for (bi, &v) in b.iter_mut().zip(p) {
                bi.0 = bi.0.min(v);
                bi.1 = bi.1.max(v);
            }
        }
    }
    Ok(OmegaLimit::Tail(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub seeds: usize,
    pub exited: usize,
}

/// Random orbits of `F(·, λ)` from the interior of the block; all must leave.
pub fn probe_orbits(
    field: &dyn VectorField,
    lambda: f64,
    bounds: &[(f64, f64)],
    opts: &VerifyOptions,
    stream: u64,
) -> Result<ProbeOutcome, VerifyError> {
    let n = bounds.len();
    let count = opts.probe_factor * n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let seeds: Vec<Vec<f64>> = (0..count)
        .map(|_| bounds.iter().map(|&(a, b)| rng.gen_range(a..b)).collect())
        .collect();
    let fates = par_map(count, |i| {
        follow(
            field,
            &seeds[i],
            lambda,
            bounds,
            None,
            opts.probe_horizon,
            opts.step,
            0.0,
        )
    });
    let mut exited = 0;
    for f in fates {
        if f? == OrbitFate::Exited {
            exited += 1;
        }
    }
    if exited < count {
        return Err(VerifyError::Inconclusive(format!(
            "{} of {count} probe orbits still inside after t = {}",
            count - exited,
            opts.probe_horizon
        )));
    }
    Ok(ProbeOutcome {
        seeds: count,
        exited,
    })
}

// ---------------------------------------------------------------- report

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Before,
    Near,
    After,
}

#[derive(Clone, Debug)]
pub struct CensusEntry {
    pub lambda: f64,
    pub phase: Phase,
    pub equilibria: Vec<Equilibrium>,
    pub status: CheckStatus,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub k: usize,
    pub census: Vec<CensusEntry>,
    pub lambda0_estimate: Option<f64>,
    pub scaling_exponent: Option<f64>,
    pub saddle_node: Option<SaddleNodeReport>,
    pub branches: Vec<EquilibriumBranch>,
    pub c1: CheckStatus,
    pub c2: CheckStatus,
    pub c3: CheckStatus,
    pub heteroclinic: CheckStatus,
    pub post_bifurcation_empty: CheckStatus,
}

impl VerificationReport {
    pub fn verdict(&self) -> Verdict {
        let all = [
            &self.c1,
            &self.c2,
            &self.c3,
            &self.heteroclinic,
            &self.post_bifurcation_empty,
        ];
        if all.iter().all(|s| s.passed()) {
            Verdict::Pass
        } else if all.iter().any(|s| matches!(s, CheckStatus::Fail(_))) {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format=snblock-verify v1\n");
        let _ = writeln!(out, "verdict={}", self.verdict());
        let _ = writeln!(out, "k={}", self.k);
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        let _ = writeln!(out, "lambda0_estimate={}", opt(self.lambda0_estimate));
        let _ = writeln!(out, "scaling_exponent={}", opt(self.scaling_exponent));
        let _ = writeln!(out, "C1={}", self.c1);
        let _ = writeln!(out, "C2={}", self.c2);
        let _ = writeln!(out, "C3={}", self.c3);
        let _ = writeln!(out, "heteroclinic={}", self.heteroclinic);
        let _ = writeln!(
            out,
            "post_bifurcation_empty={}",
            self.post_bifurcation_empty
        );
        if let Some(s) = &self.saddle_node {
            let _ = writeln!(
                out,
                "saddle_node null_eigenvalue={:e} separation={} curvature={}",
                s.null_eigenvalue, s.separation, s.curvature
            );
        }
        out.push_str("census\n");
        for c in &self.census {
            let phase = match c.phase {
                Phase::Before => "before",
                Phase::Near => "near",
                Phase::After => "after",
            };
            let dims: Vec<String> = c
                .equilibria
                .iter()
                .map(|e| e.unstable_dim().to_string())
                .collect();
            let _ = writeln!(
                out,
                "lambda={} phase={phase} count={} unstable_dims=[{}] status={}",
                c.lambda,
                c.equilibria.len(),
                dims.join(","),
                c.status
            );
        }
        out
    }
}

/// Checks the σ = 1 slice of `family` on `lambda_mesh`: before the fold two
/// hyperbolic equilibria of unstable dimensions `k − 1`, `k` and a connecting
/// orbit; a saddle-node at the continuation fold; after it no equilibria and
/// every probe orbit leaves `bounds`. `lambda0_hint` classifies mesh points
/// when no fold is found.
pub fn verify_c1_c2_c3<G: Family + ?Sized>(
    family: &G,
    bounds: &[(f64, f64)],
    k: usize,
    lambda_mesh: &[f64],
    lambda0_hint: f64,
    opts: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    if lambda_mesh.len() < 2 {
        return Err(VerifyError::InsufficientData(
            "lambda mesh needs two points".into(),
        ));
    }
    let field = SigmaSlice { family, sigma: 1.0 };
    let mut mesh = lambda_mesh.to_vec();
    mesh.sort_by(f64::total_cmp);
    let seeds = grid_seeds(bounds, opts.seeds_per_axis);
    let censuses: Vec<Vec<Equilibrium>> = mesh
        .iter()
        .map(|&l| find_equilibria_with(&field, l, bounds, &seeds, opts.newton, DEDUP_TOL))
        .collect();

    // Continuation of both equilibria from the first mesh point with a pair.
    let pair_dims = |eqs: &[Equilibrium]| -> Option<(usize, usize)> {
        if eqs.len() != 2 {
            return None;
        }
        let a = eqs.iter().position(|e| e.unstable_dim() + 1 == k)?;
        Some((a, 1 - a))
    };
    let mut branches = Vec::new();
    let mut fold_lambda = None;
    let mut c2 = CheckStatus::Fail("no mesh point with an equilibrium pair".into());
    let mut saddle_node = None;
    if let Some(i) = censuses.iter().position(|c| pair_dims(c).is_some()) {
        let (a, r) = pair_dims(&censuses[i]).expect("checked");
        let range = (mesh[i], *mesh.last().expect("nonempty"));
        let attempt =
            [a, r].map(|j| continue_branch(&field, range, &censuses[i][j].x, &opts.continuation));
        match attempt {
            [Ok(ba), Ok(br)] => {
                fold_lambda = ba.fold.as_ref().or(br.fold.as_ref()).map(|f| f.lambda);
                c2 = match fold_lambda {
                    None => CheckStatus::Fail("continuation found no fold".into()),
                    Some(l0) => match saddle_node_test(&field, [&ba, &br], l0, opts) {
                        Ok(rep) => {
                            let s = rep.status();
                            saddle_node = Some(rep);
                            s
                        }
                        Err(e) => CheckStatus::Inconclusive(e.to_string()),
                    },
                };
                branches = vec![ba, br];
            }
            [Err(e), _] | [_, Err(e)] => c2 = CheckStatus::Fail(e.to_string()),
        }
    }
    let l0 = fold_lambda.unwrap_or(lambda0_hint);

    let mut census = Vec::with_capacity(mesh.len());
    let mut c1 = CheckStatus::Pass;
    let mut het = CheckStatus::Pass;
    let mut post = CheckStatus::Pass;
    let mut c3 = CheckStatus::Pass;
    for (j, (&lambda, eqs)) in mesh.iter().zip(censuses).enumerate() {
        let phase = if (lambda - l0).abs() < opts.fold_exclusion {
            Phase::Near
        } else if lambda < l0 {
            Phase::Before
        } else {
            Phase::After
        };
        let status = match phase {
            Phase::Near => CheckStatus::Pass,
            Phase::Before => {
                let mut dims: Vec<usize> = eqs.iter().map(|e| e.unstable_dim()).collect();
                dims.sort_unstable();
                let hyperbolic = eqs.iter().all(|e| e.is_hyperbolic(opts.hyperbolic_tol));
                let census_ok = if k >= 1 && dims == [k - 1, k] && hyperbolic {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail(format!(
                        "census at lambda = {lambda}: unstable dims {dims:?}"
                    ))
                };
                c1 = c1.and(census_ok.clone());
                let h = if census_ok.passed() {
                    let (a, r) = pair_dims(&eqs).expect("census passed");
                    match heteroclinic_check(&field, lambda, &eqs[r], &eqs[a], bounds, opts) {
                        Ok(o) if o.passed => CheckStatus::Pass,
                        Ok(o) => CheckStatus::Fail(format!(
                            "connecting orbit at lambda = {lambda}: {:?}",
                            o.sides
                        )),
                        Err(e) => CheckStatus::Inconclusive(format!("lambda = {lambda}: {e}")),
                    }
                } else {
                    CheckStatus::Inconclusive(format!("no pair at lambda = {lambda}"))
                };
                het = het.clone().and(h.clone());
                c1 = c1.and(h.clone());
                census_ok.and(h)
            }
            Phase::After => {
                let empty = if eqs.is_empty() {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail(format!("{} equilibria at lambda = {lambda}", eqs.len()))
                };
                let probes = match probe_orbits(&field, lambda, bounds, opts, j as u64) {
                    Ok(_) => CheckStatus::Pass,
                    Err(e @ VerifyError::Inconclusive(_)) => {
                        CheckStatus::Inconclusive(e.to_string())
                    }
                    Err(e) => CheckStatus::Fail(e.to_string()),
                };
                let s = empty.and(probes);
                post = post.clone().and(s.clone());
                c3 = c3.and(s.clone());
                s
            }
        };
        census.push(CensusEntry {
            lambda,
            phase,
            equilibria: eqs,
            status,
        });
    }
    if !census.iter().any(|c| c.phase == Phase::Before) {
        c1 = c1.and(CheckStatus::Fail("no mesh point before the fold".into()));
    }
    if !census.iter().any(|c| c.phase == Phase::After) {
        c3 = c3.and(CheckStatus::Fail("no mesh point after the fold".into()));
    }
    Ok(VerificationReport {
        k,
        census,
        lambda0_estimate: fold_lambda,
        scaling_exponent: saddle_node.as_ref().map(|s| s.exponent),
        saddle_node,
        branches,
        c1,
        c2,
        c3,
        heteroclinic: het,
        post_bifurcation_empty: post,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::equilibria::find_equilibria;
    use crate::field::FnField;

    type Fld = FnField<Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>>;

    fn fld(n: usize, f: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Fld {
        FnField::new(
            n,
            Box::new(f) as Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>,
        )
    }

    /// `ż = −(3z² − μ)`, `μ = ½ − λ`.
    fn canonical() -> Fld {
        fld(1, |x, l| vec![-(3.0 * x[0] * x[0] - (0.5 - l))])
    }

    fn branches(f: &Fld, seeds: [f64; 2], end: f64) -> [EquilibriumBranch; 2] {
        let o = ContinuationOptions::default();
        seeds.map(|s| continue_branch(f, (0.3, end), &[s], &o).unwrap())
    }

    #[test]
    fn canonical_model_passes_saddle_node_test() {
        let f = canonical();
        let [a, b] = branches(&f, [0.7, -0.7], 1.0);
        let l0 = a.fold.as_ref().unwrap().lambda;
        let r = saddle_node_test(&f, [&a, &b], l0, &VerifyOptions::for_dim(1)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!((r.exponent - 0.5).abs() < 1e-3, "{}", r.exponent);
        assert!(r.null_eigenvalue < 1e-6);
        assert!((r.curvature.abs() - 6.0).abs() < 1e-3);
    }

    #[test]
    fn pitchfork_fails_nondegeneracy() {
        let f = fld(1, |x, l| {
            let mu = 0.5 - l;
            vec![mu * x[0] - x[0].powi(3)]
        });
        let [a, b] = branches(&f, [0.4, 0.0], 0.5 - 1e-6);
        let r = saddle_node_test(&f, [&a, &b], 0.5, &VerifyOptions::for_dim(1)).unwrap();
        assert!(!r.passed());
        assert!(!r.nondegenerate_ok);
        assert!((r.exponent - 0.5).abs() < 0.05);
    }

    #[test]
    fn transcritical_fails_gap_exponent() {
        let f = fld(1, |x, l| {
            let mu = 0.5 - l;
            vec![mu * x[0] - x[0] * x[0]]
        });
        let [a, b] = branches(&f, [0.2, 0.0], 0.5 - 1e-6);
        let r = saddle_node_test(&f, [&a, &b], 0.5, &VerifyOptions::for_dim(1)).unwrap();
        assert!(!r.passed());
        assert!(!r.exponent_ok);
        assert!((r.exponent - 1.0).abs() < 1e-3);
    }

    #[test]
    fn short_branches_are_insufficient() {
        let f = canonical();
        let o = ContinuationOptions::default();
        let a = continue_branch(&f, (0.495, 0.499), &[0.1], &o).unwrap();
        let b = continue_branch(&f, (0.495, 0.499), &[-0.1], &o).unwrap();
        let r = saddle_node_test(&f, [&a, &b], 0.5, &VerifyOptions::for_dim(1));
        assert!(matches!(r, Err(VerifyError::InsufficientData(_))));
    }

    #[test]
    fn heteroclinic_connection_at_mu_three() {
        let f = canonical();
        let lam = 0.5 - 3.0;
        let bounds = [(-2.0, 2.0)];
        let eqs = find_equilibria(&f, lam, &bounds, &grid_seeds(&bounds, 21));
        let o = heteroclinic_check(
            &f,
            lam,
            &eqs[0],
            &eqs[1],
            &bounds,
            &VerifyOptions::for_dim(1),
        )
        .unwrap();
        assert!(o.passed);
        assert_eq!(o.sides, vec![[OrbitFate::Converged, OrbitFate::Exited]]);
    }

    #[test]
    fn heteroclinic_connection_just_before_fold() {
        let f = canonical();
        let lam = 0.5 - 1e-4;
        let bounds = [(-2.0, 2.0)];
        let eqs = find_equilibria(&f, lam, &bounds, &grid_seeds(&bounds, 41));
        assert_eq!(eqs.len(), 2);
        let mut opts = VerifyOptions::for_dim(1);
        opts.heteroclinic_horizon = 1e4;
        let o = heteroclinic_check(&f, lam, &eqs[0], &eqs[1], &bounds, &opts).unwrap();
        assert!(o.passed);
    }

    #[test]
    fn two_attractors_are_inconclusive() {
        let f = fld(1, |x, _| vec![-(x[0] * x[0] - 1.0) * x[0] * 0.0 - x[0]]);
        let bounds = [(-2.0, 2.0)];
        let a = Equilibrium::at(&f, vec![0.0], 0.0);
        let r = heteroclinic_check(&f, 0.0, &a, &a, &bounds, &VerifyOptions::for_dim(1));
        assert!(matches!(r, Err(VerifyError::Inconclusive(_))));
    }

    #[test]
    fn omega_limit_of_attractor_is_degenerate_box() {
        let f = canonical();
        let om = estimate_omega_limit(&f, &[1.0], 0.5 - 3.0, 10.0, 1e-2, &[(-2.0, 2.0)]).unwrap();
        let OmegaLimit::Tail(b) = om else { panic!() };
        assert!(b[0].1 - b[0].0 < 1e-8);
        assert!(OmegaLimit::Tail(b).contains(&[1.0], 0.0));
    }

    #[test]
    fn orbits_escape_after_the_fold() {
        let f = canonical();
        let om = estimate_omega_limit(&f, &[0.3], 0.6, 1e3, 1e-2, &[(-2.0, 2.0)]).unwrap();
        assert_eq!(om, OmegaLimit::Escaped);
        let p = probe_orbits(&f, 0.6, &[(-2.0, 2.0)], &VerifyOptions::for_dim(1), 0).unwrap();
        assert_eq!(p.exited, 10);
    }

    #[test]
    fn canonical_family_verifies() {
        struct Fam;
        impl Family for Fam {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &[f64], l: f64, _: f64) -> Vec<f64> {
                vec![-(3.0 * x[0] * x[0] - (0.5 - l))]
            }
        }
        let mesh: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let r = verify_c1_c2_c3(
            &Fam,
            &[(-2.0, 2.0)],
            1,
            &mesh,
            0.5,
            &VerifyOptions::for_dim(1),
        )
        .unwrap();
        assert_eq!(r.verdict(), Verdict::Pass, "{}", r.to_text());
        assert!((r.lambda0_estimate.unwrap() - 0.5).abs() < 1e-4);
        assert!(r
            .to_text()
            .starts_with("format=snblock-verify v1\nverdict=Pass\n"));
    }
}
