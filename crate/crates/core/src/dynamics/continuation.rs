//! Pseudo-arclength continuation of equilibrium branches in `(x, λ)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::field::VectorField;

use super::equilibria::{
    jacobian, newton, norm, Equilibrium, NewtonOptions, Stability, NEWTON_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("lost the branch near lambda = {lambda}")]
    LostBranch { lambda: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// A fold is declared where the smallest singular value of `D_xF` drops
    /// below this value.
    pub fold_tol: f64,
    pub max_points: usize,
    /// Eigenvalues with `|Re|` at most this are treated as zero.
    pub hyperbolic_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            max_step: 2.5e-2,
            min_step: 1e-12,
            fold_tol: 1e-6,
            max_points: 5000,
            hyperbolic_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub equilibrium: Equilibrium,
    pub stability: Stability,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fold {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub sigma_min: f64,
}

#[derive(Clone, Debug)]
pub struct EquilibriumBranch {
    /// Points in continuation order; `λ` is monotone along them.
    pub points: Vec<BranchPoint>,
    pub fold: Option<Fold>,
}

impl EquilibriumBranch {
    pub fn lambda_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.equilibrium.lambda), b.max(p.equilibrium.lambda))
            })
    }

    /// Branch point closest in `λ` to `lambda`.
    pub fn nearest(&self, lambda: f64) -> Option<&BranchPoint> {
        self.points.iter().min_by(|a, b| {
            (a.equilibrium.lambda - lambda)
                .abs()
                .total_cmp(&(b.equilibrium.lambda - lambda).abs())
        })
    }

    /// Tab-separated `lambda, x_i, re_i, im_i` rows.
    pub fn to_tsv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.equilibrium.x.len());
        let mut head = vec!["lambda".to_string()];
        head.extend((0..n).map(|i| format!("x{i}")));
        for i in 0..n {
            head.push(format!("re{i}"));
            head.push(format!("im{i}"));
        }
        let mut out = head.join("\t");
        out.push('\n');
        for p in &self.points {
            let e = &p.equilibrium;
            let mut row = vec![e.lambda.to_string()];
            row.extend(e.x.iter().map(|v| v.to_string()));
            for ev in &e.eigenvalues {
                row.push(ev.re.to_string());
                row.push(ev.im.to_string());
            }
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

fn lambda_derivative(field: &dyn VectorField, x: &[f64], lambda: f64) -> Vec<f64> {
    let h = 1e-6 * (1.0 + lambda.abs());
    let p = field.eval(x, lambda + h);
    let m = field.eval(x, lambda - h);
    p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// `[D_xF | ∂_λF]` at `y = (x, λ)`.
fn extended_jacobian(field: &dyn VectorField, y: &[f64]) -> DMatrix<f64> {
    let n = y.len() - 1;
    let (x, l) = (&y[..n], y[n]);
    let j = jacobian(field, x, l);
    let fl = lambda_derivative(field, x, l);
    let mut a = DMatrix::zeros(n, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&j);
    for r in 0..n {
        a[(r, n)] = fl[r];
    }
    a
}

/// Unit tangent to the solution curve, oriented to agree with `prev`.
fn tangent(a: &DMatrix<f64>, prev: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n + 1)).copy_from(a);
    for c in 0..=n {
        m[(n, c)] = prev[c];
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = m.lu().solve(&rhs)?;
    let s = t.norm();
    (s.is_finite() && s > 0.0).then(|| t.iter().map(|v| v / s).collect())
}

/// Newton on `F(y) = 0, t·(y − p) = 0`.
fn correct(field: &dyn VectorField, pred: &[f64], t: &[f64]) -> Option<(Vec<f64>, usize)> {
    let n = pred.len() - 1;
    let mut y = pred.to_vec();
    for it in 1..=30 {
        let f = field.eval(&y[..n], y[n]);
        let a = extended_jacobian(field, &y);
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n + 1)).copy_from(&a);
        let mut r = DVector::zeros(n + 1);
        for i in 0..n {
            r[i] = -f[i];
        }
        let mut c = 0.0;
        for i in 0..=n {
            m[(n, i)] = t[i];
            c += t[i] * (y[i] - pred[i]);
        }
        r[n] = -c;
        let d = m.lu().solve(&r)?;
        for i in 0..=n {
            y[i] += d[i];
        }
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if d.norm() < 1e-13 * (1.0 + norm(&y)) && norm(&field.eval(&y[..n], y[n])) < NEWTON_TOL {
            return Some((y, it));
        }
    }
    (norm(&field.eval(&y[..n], y[n])) < NEWTON_TOL).then_some((y, 30))
}

fn sigma_min(field: &dyn VectorField, x: &[f64], lambda: f64) -> f64 {
    jacobian(field, x, lambda).singular_values().min()
}

fn point(field: &dyn VectorField, y: &[f64], tol: f64) -> BranchPoint {
    let n = y.len() - 1;
    let equilibrium = Equilibrium::at(field, y[..n].to_vec(), y[n]);
    let stability = equilibrium.stability(tol);
    BranchPoint {
        equilibrium,
        stability,
    }
}

/// Continues the equilibrium near `seed` at `lambda_range.0` towards
/// `lambda_range.1`, stopping at the end of the range or at the first fold.
pub fn continue_branch(
    field: &dyn VectorField,
    lambda_range: (f64, f64),
    seed: &[f64],
    opts: &ContinuationOptions,
) -> Result<EquilibriumBranch, ContinuationError> {
    let (l_start, l_end) = lambda_range;
    let dir = if l_end >= l_start { 1.0 } else { -1.0 };
    let n = seed.len();
    let x0 = newton(field, seed, l_start, NewtonOptions::default())
        .ok_or(ContinuationError::LostBranch { lambda: l_start })?;
    let mut y: Vec<f64> = x0.into_iter().chain([l_start]).collect();
    let mut e = vec![0.0; n + 1];
    e[n] = dir;
    let lost = |l: f64| ContinuationError::LostBranch { lambda: l };
    let mut t = tangent(&extended_jacobian(field, &y), &e).ok_or(lost(l_start))?;
    let mut ds = opts.initial_step;
    let mut points = vec![point(field, &y, opts.hyperbolic_tol)];

    while points.len() < opts.max_points {
        if ds < opts.min_step {
            return Err(lost(y[n]));
        }
        let pred: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + ds * b).collect();
        if (pred[n] - l_end) * dir > 0.0 {
            // Final point pinned at the end of the range.
            let x = newton(field, &y[..n], l_end, NewtonOptions::default()).ok_or(lost(l_end))?;
            let y_end: Vec<f64> = x.into_iter().chain([l_end]).collect();
            points.push(point(field, &y_end, opts.hyperbolic_tol));
            return Ok(EquilibriumBranch { points, fold: None });
        }
        let Some((y_new, iters)) = correct(field, &pred, &t) else {
            ds *= 0.5;
            continue;
        };
        let Some(t_new) = tangent(&extended_jacobian(field, &y_new), &t) else {
            ds *= 0.5;
            continue;
        };
        if t_new[n] * dir <= 0.0 {
            let fold = locate_fold(field, &y, &t, ds, dir, opts);
            return Ok(EquilibriumBranch { points, fold });
        }
        y = y_new;
        t = t_new;
        points.push(point(field, &y, opts.hyperbolic_tol));
        if iters <= 3 {
            ds = (ds * 1.5).min(opts.max_step);
        }
    }
    Err(lost(y[n]))
}

/// Bisection on the arclength step between a point before the fold and one
/// past it, on the sign of the `λ` component of the tangent.
fn locate_fold(
    field: &dyn VectorField,
    y: &[f64],
    t: &[f64],
    ds: f64,
    dir: f64,
    opts: &ContinuationOptions,
) -> Option<Fold> {
    let n = y.len() - 1;
    let (mut lo, mut hi) = (0.0, ds);
    let mut best = y.to_vec();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-13 {
            break;
        }
        let pred: Vec<f64> = y.iter().zip(t).map(|(a, b)| a + mid * b).collect();
        let Some((ym, _)) = correct(field, &pred, t) else {
            hi = mid;
            continue;
        };
        match tangent(&extended_jacobian(field, &ym), t) {
            Some(tm) if tm[n] * dir > 0.0 => {
                lo = mid;
                best = ym;
            }
            _ => hi = mid,
        }
    }
    let s = sigma_min(field, &best[..n], best[n]);
    (s < opts.fold_tol).then(|| Fold {
        lambda: best[n],
        x: best[..n].to_vec(),
        sigma_min: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    #[test]
    fn canonical_fold_is_located() {
        let f = FnField::new(1, |x: &[f64], l: f64| {
            vec![-(3.0 * x[0] * x[0] - (0.5 - l))]
        });
        let b = continue_branch(&f, (0.0, 1.0), &[0.7], &ContinuationOptions::default()).unwrap();
        let fold = b.fold.expect("fold");
        assert!((fold.lambda - 0.5).abs() < 1e-4, "{}", fold.lambda);
        assert!(fold.x[0].abs() < 1e-3);
        assert!(b
            .points
            .iter()
            .all(|p| p.stability == Stability::Attracting));
        assert!(b
            .points
            .windows(2)
            .all(|w| w[1].equilibrium.lambda > w[0].equilibrium.lambda));
    }

    #[test]
    fn affine_branch_has_no_fold() {
        let f = FnField::new(1, |x: &[f64], l: f64| vec![-x[0] + l]);
        let b = continue_branch(&f, (0.0, 1.0), &[0.0], &ContinuationOptions::default()).unwrap();
        assert!(b.fold.is_none());
        for p in &b.points {
            assert!((p.equilibrium.x[0] - p.equilibrium.lambda).abs() < 1e-10);
        }
        assert_eq!(b.lambda_range(), (0.0, 1.0));
    }

    #[test]
    fn seed_past_the_fold_is_lost() {
        let f = FnField::new(1, |x: &[f64], l: f64| {
            vec![-(3.0 * x[0] * x[0] - (0.5 - l))]
        });
        let r = continue_branch(&f, (0.7, 1.0), &[0.0], &ContinuationOptions::default());
        assert!(matches!(r, Err(ContinuationError::LostBranch { .. })));
    }

    #[test]
    fn tsv_has_one_row_per_point() {
        let f = FnField::new(1, |x: &[f64], l: f64| vec![-x[0] + l]);
        let b = continue_branch(&f, (0.0, 0.1), &[0.0], &ContinuationOptions::default()).unwrap();
        let tsv = b.to_tsv();
        assert!(tsv.starts_with("lambda\tx0\tre0\tim0\n"));
        assert_eq!(tsv.lines().count(), b.points.len() + 1);
    }
}
