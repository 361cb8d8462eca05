//! Newton search for equilibria, finite-difference Jacobians and spectra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::field::VectorField;

/// Residual tolerance `|F(x*)| < NEWTON_TOL` for accepted roots.
pub const NEWTON_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    /// Hyperbolic with `unstable` eigenvalues of positive real part.
    Saddle {
        unstable: usize,
    },
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub residual: f64,
}

impl Equilibrium {
    pub fn at(field: &dyn VectorField, x: Vec<f64>, lambda: f64) -> Self {
        let jacobian = jacobian(field, &x, lambda);
        let eigenvalues = eigenvalues(&jacobian);
        let residual = norm(&field.eval(&x, lambda));
        Self {
            lambda,
            x,
            jacobian,
            eigenvalues,
            residual,
        }
    }

    pub fn unstable_dim(&self) -> usize {
        self.eigenvalues.iter().filter(|e| e.re > 0.0).count()
    }

    /// Hyperbolic when every eigenvalue has `|Re| > tol`.
    pub fn is_hyperbolic(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|e| e.re.abs() > tol)
    }

    pub fn stability(&self, tol: f64) -> Stability {
        if !self.is_hyperbolic(tol) {
            Stability::Degenerate
        } else if self.unstable_dim() == 0 {
            Stability::Attracting
        } else {
            Stability::Saddle {
                unstable: self.unstable_dim(),
            }
        }
    }

    /// Smallest eigenvalue modulus.
    pub fn min_modulus(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.norm())
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Central-difference Jacobian with step `1e-6·(1 + |x_j|)`.
pub fn jacobian(field: &dyn VectorField, x: &[f64], lambda: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for c in 0..n {
        let h = 1e-6 * (1.0 + x[c].abs());
        p[c] = x[c] + h;
        let fp = field.eval(&p, lambda);
        p[c] = x[c] - h;
        let fm = field.eval(&p, lambda);
        p[c] = x[c];
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn eigenvalues(j: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = j.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Least-squares solve of `J d = −r` through the SVD.
fn newton_step(j: &DMatrix<f64>, r: &[f64]) -> Option<Vec<f64>> {
    let rhs = -DVector::from_column_slice(r);
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let d = svd.solve(&rhs, smax * 1e-14).ok()?;
    let d: Vec<f64> = d.iter().copied().collect();
    d.iter().all(|v| v.is_finite()).then_some(d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: NEWTON_TOL,
            max_iter: 200,
        }
    }
}

/// Newton iteration for `F(·, λ) = 0` from `x0`.
///
/// Once the residual is below `tol` the iteration continues while the
/// residual keeps decreasing, which matters at degenerate roots where
/// convergence is only linear.
pub fn newton(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    opts: NewtonOptions,
) -> Option<Vec<f64>> {
    newton_guarded(field, x0, lambda, opts, None)
}

/// Newton that gives up once an iterate leaves `guard`.
fn newton_guarded(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    opts: NewtonOptions,
    guard: Option<&[(f64, f64)]>,
) -> Option<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut r = field.eval(&x, lambda);
    let mut res = norm(&r);
    for _ in 0..opts.max_iter {
        if !res.is_finite() {
            return None;
        }
        let j = jacobian(field, &x, lambda);
        let d = newton_step(&j, &r)?;
        let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        if guard.is_some_and(|g| !super::ode::inside(g, &cand)) {
            return None;
        }
        let rc = field.eval(&cand, lambda);
        let rescand = norm(&rc);
        if res < opts.tol && !(rescand < res) {
            break;
        }
        if norm(&d) <= 1e-15 * (1.0 + norm(&x)) {
            x = cand;
            res = rescand;
            break;
        }
        x = cand;
        r = rc;
        res = rescand;
    }
    (res < opts.tol).then_some(x)
}

/// Uniform seed grid with `per_axis` points per axis at cell centres.
pub fn grid_seeds(bounds: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in bounds {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..per_axis).map(move |i| {
                    let mut q = p.clone();
                    q.push(lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64);
                    q
                })
            })
            .collect();
    }
    pts
}

/// Distance below which two roots are the same equilibrium.
pub const DEDUP_TOL: f64 = 1e-4;

/// Newton roots from every seed that land in `bounds`, deduplicated and
/// sorted lexicographically.
pub fn find_equilibria(
    field: &dyn VectorField,
    lambda: f64,
    bounds: &[(f64, f64)],
    seeds: &[Vec<f64>],
) -> Vec<Equilibrium> {
    find_equilibria_with(
        field,
        lambda,
        bounds,
        seeds,
        NewtonOptions::default(),
        DEDUP_TOL,
    )
}

pub fn find_equilibria_with(
    field: &dyn VectorField,
    lambda: f64,
    bounds: &[(f64, f64)],
    seeds: &[Vec<f64>],
    opts: NewtonOptions,
    dedup: f64,
) -> Vec<Equilibrium> {
    let guard: Vec<(f64, f64)> = bounds
        .iter()
        .map(|&(a, b)| (a - 0.5 * (b - a), b + 0.5 * (b - a)))
        .collect();
    let roots = super::par_map(seeds.len(), |i| {
        newton_guarded(field, &seeds[i], lambda, opts, Some(&guard))
    });
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for r in roots.into_iter().flatten() {
        if !super::ode::inside(bounds, &r) {
            continue;
        }
        if kept.iter().all(|k| dist(k, &r) > dedup) {
            kept.push(r);
        }
    }
    kept.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    kept.into_iter()
        .map(|x| Equilibrium::at(field, x, lambda))
        .collect()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    /// `ż = −(3z² − μ)`, `μ = λ₀ − λ`, `λ₀ = 0.5`.
    fn canonical() -> FnField<impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync> {
        FnField::new(1, |x: &[f64], l: f64| {
            vec![-(3.0 * x[0] * x[0] - (0.5 - l))]
        })
    }

    fn seeds() -> Vec<Vec<f64>> {
        grid_seeds(&[(-2.0, 2.0)], 41)
    }

    #[test]
    fn canonical_roots_at_mu_three() {
        let f = canonical();
        let eq = find_equilibria(&f, 0.5 - 3.0, &[(-2.0, 2.0)], &seeds());
        assert_eq!(eq.len(), 2);
        assert!((eq[0].x[0] + 1.0).abs() < 1e-12);
        assert!((eq[1].x[0] - 1.0).abs() < 1e-12);
        assert_eq!(eq[0].stability(1e-9), Stability::Saddle { unstable: 1 });
        assert_eq!(eq[1].stability(1e-9), Stability::Attracting);
        assert!((eq[1].eigenvalues[0].re + 6.0).abs() < 1e-6);
        assert!(eq.iter().all(|e| e.residual < NEWTON_TOL));
    }

    #[test]
    fn single_degenerate_root_at_fold() {
        let f = canonical();
        let eq = find_equilibria(&f, 0.5, &[(-2.0, 2.0)], &seeds());
        assert_eq!(eq.len(), 1);
        assert!(eq[0].min_modulus() < 1e-6);
    }

    #[test]
    fn no_roots_past_fold() {
        let f = canonical();
        assert!(find_equilibria(&f, 0.6, &[(-2.0, 2.0)], &seeds()).is_empty());
    }

    #[test]
    fn complex_spectrum_of_a_focus() {
        let f = FnField::new(2, |x: &[f64], _| {
            vec![-x[0] - 2.0 * x[1], 2.0 * x[0] - x[1]]
        });
        let eq = find_equilibria(
            &f,
            0.0,
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &grid_seeds(&[(-1.0, 1.0), (-1.0, 1.0)], 3),
        );
        assert_eq!(eq.len(), 1);
        let ev = &eq[0].eigenvalues;
        assert!((ev[0].re + 1.0).abs() < 1e-8 && (ev[0].im.abs() - 2.0).abs() < 1e-8);
        assert_eq!(eq[0].stability(1e-9), Stability::Attracting);
    }

    #[test]
    fn roots_outside_bounds_are_dropped() {
        let f = FnField::new(1, |x: &[f64], _| vec![x[0] - 3.0]);
        assert!(find_equilibria(&f, 0.0, &[(-1.0, 1.0)], &[vec![0.0]]).is_empty());
    }
}
