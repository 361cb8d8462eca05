//! Fixed-step fourth-order Runge–Kutta integration.

use thiserror::Error;

use crate::field::VectorField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("non-finite state at t = {t}")]
    NonFiniteValue { t: f64 },
    #[error("step must be positive and finite")]
    BadStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Set when the orbit left the box before the final time.
    pub exited: bool,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.points.last().expect("trajectories start with x0")
    }
}

/// One RK4 step of size `h` (negative for backward time).
pub fn rk4_step(field: &dyn VectorField, x: &[f64], lambda: f64, h: f64) -> Vec<f64> {
    let n = x.len();
    let shifted = |k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|i| x[i] + c * k[i]).collect() };
    let k1 = field.eval(x, lambda);
    let k2 = field.eval(&shifted(&k1, 0.5 * h), lambda);
    let k3 = field.eval(&shifted(&k2, 0.5 * h), lambda);
    let k4 = field.eval(&shifted(&k3, h), lambda);
    (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

pub fn inside(bounds: &[(f64, f64)], x: &[f64]) -> bool {
    bounds.iter().zip(x).all(|(&(a, b), &v)| v >= a && v <= b)
}

/// Integrates `ẋ = field(x, λ)` to time `t_end` with fixed `step`, halting
/// early when the state leaves `bounds`.
pub fn integrate(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    t_end: f64,
    step: f64,
    bounds: Option<&[(f64, f64)]>,
) -> Result<Trajectory, OdeError> {
    integrate_directed(field, x0, lambda, t_end, step, bounds, Direction::Forward)
}

pub fn integrate_directed(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    t_end: f64,
    step: f64,
    bounds: Option<&[(f64, f64)]>,
    direction: Direction,
) -> Result<Trajectory, OdeError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(OdeError::BadStep);
    }
    let steps = (t_end / step).round().max(0.0) as usize;
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![x0.to_vec()],
        exited: false,
    };
    let mut x = x0.to_vec();
    for i in 1..=steps {
        x = rk4_step(field, &x, lambda, direction.sign() * step);
        let t = i as f64 * step;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteValue { t });
        }
        traj.times.push(t);
        traj.points.push(x.clone());
        if let Some(b) = bounds {
            if !inside(b, &x) {
                traj.exited = true;
                break;
            }
        }
    }
    Ok(traj)
}

/// Time until the orbit leaves `bounds`, capped at `cap`.
pub fn residence_time(
    field: &dyn VectorField,
    x0: &[f64],
    lambda: f64,
    bounds: &[(f64, f64)],
    cap: f64,
    step: f64,
    direction: Direction,
) -> f64 {
    let mut x = x0.to_vec();
    let mut t = 0.0;
    while t < cap {
        x = rk4_step(field, &x, lambda, direction.sign() * step);
        t += step;
        if x.iter().any(|v| !v.is_finite()) || !inside(bounds, &x) {
            return t;
        }
    }
    cap
}
