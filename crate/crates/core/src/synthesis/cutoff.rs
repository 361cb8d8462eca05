//! Flat smooth cutoffs built from `exp(−1/t)`.
//!
//! Every cutoff returns exactly `0.0` outside its outer region and exactly
//! `1.0` on its inner region, so support statements can be checked with `==`.

fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// `C^∞` step: `0` for `t ≤ 0`, `1` for `t ≥ 1`, all derivatives vanishing at both ends.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = flat(t);
        a / (a + flat(1.0 - t))
    }
}

/// Scalar cutoff: `1` on `[inner.0, inner.1]`, `0` outside the open interval `outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalCutoff {
    pub inner: (f64, f64),
    pub outer: (f64, f64),
}

impl IntervalCutoff {
    pub fn new(inner: (f64, f64), outer: (f64, f64)) -> Self {
        assert!(
            outer.0 <= inner.0 && inner.0 <= inner.1 && inner.1 <= outer.1,
            "inner region must lie inside the outer region"
        );
        Self { inner, outer }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (a, b) = self.inner;
        let (c, d) = self.outer;
        if t >= a && t <= b {
            1.0
        } else if t <= c || t >= d {
            0.0
        } else if t < a {
            smooth_step((t - c) / (a - c))
        } else {
            smooth_step((d - t) / (d - b))
        }
    }

    /// True iff the open supports of `self` and `other` are disjoint.
    pub fn disjoint_from(&self, other: &IntervalCutoff) -> bool {
        self.outer.1 <= other.outer.0 || other.outer.1 <= self.outer.0
    }
}

/// `η`: one near `λ = 0`.
pub fn eta_default() -> IntervalCutoff {
    IntervalCutoff::new((-1.0, 0.05), (-2.0, 0.15))
}

/// `ξ`: one near `λ = 1`.
pub fn xi_default() -> IntervalCutoff {
    IntervalCutoff::new((0.95, 2.0), (0.85, 3.0))
}

/// Product cutoff on a box: `1` on the concentric sub-box scaled by
/// `plateau`, `0` on and outside the box boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxCutoff {
    pub axes: Vec<IntervalCutoff>,
    pub plateau: f64,
}

impl BoxCutoff {
    pub fn with_plateau(bounds: &[(f64, f64)], plateau: f64) -> Self {
        assert!(
            plateau > 0.0 && plateau < 1.0,
            "plateau fraction must lie in (0,1)"
        );
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| {
                let c = 0.5 * (lo + hi);
                let r = 0.5 * (hi - lo) * plateau;
                IntervalCutoff::new((c - r, c + r), (lo, hi))
            })
            .collect();
        Self { axes, plateau }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (c, &xi) in self.axes.iter().zip(x) {
            let w = c.eval(xi);
            if w == 0.0 {
                return 0.0;
            }
            v *= w;
        }
        v
    }

    pub fn inner_bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|c| c.inner).collect()
    }

    pub fn outer_bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|c| c.outer).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_flat_and_symmetric() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(-3.0), 0.0);
        for t in [0.1, 0.3, 0.5, 0.77] {
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
        assert!(smooth_step(1e-3) < 1e-300);
    }

    #[test]
    fn interval_regions_are_exact() {
        let c = IntervalCutoff::new((0.2, 0.4), (0.1, 0.6));
        assert_eq!(c.eval(0.3), 1.0);
        assert_eq!(c.eval(0.1), 0.0);
        assert_eq!(c.eval(0.6), 0.0);
        assert_eq!(c.eval(0.9), 0.0);
        let mid = c.eval(0.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert!(eta_default().disjoint_from(&xi_default()));
        assert!(!c.disjoint_from(&IntervalCutoff::new((0.55, 0.7), (0.5, 0.8))));
    }

    #[test]
    fn box_cutoff_vanishes_on_boundary() {
        let b = BoxCutoff::with_plateau(&[(-2.0, 2.0), (-1.0, 1.0)], 0.8);
        assert_eq!(b.eval(&[0.0, 0.0]), 1.0);
        assert_eq!(b.eval(&[1.6, 0.8]), 1.0);
        assert_eq!(b.eval(&[2.0, 0.0]), 0.0);
        assert_eq!(b.eval(&[0.0, -1.0]), 0.0);
        assert_eq!(b.eval(&[5.0, 0.0]), 0.0);
        let v = b.eval(&[1.8, 0.0]);
        assert!(v > 0.0 && v < 1.0);
    }
}
