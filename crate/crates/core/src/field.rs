//! Evaluable vector fields over phase space × parameter.

use std::sync::Arc;

use smallvec::SmallVec;

use crate::ingest::SampledVectorField;
use crate::spatial::{dist2, PointIndex};

/// A parameterized vector field `f(x, λ)` on `ℝⁿ`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], lambda: f64) -> Vec<f64>;
}

/// A two-parameter family `F(x, λ, σ)`.
pub trait Family: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], lambda: f64, sigma: f64) -> Vec<f64>;
}

pub type SharedField = Arc<dyn VectorField>;

/// Closed-form field backed by a closure.
pub struct FnField<F> {
    dim: usize,
    func: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim: usize, func: F) -> Self {
        Self { dim, func }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        (self.func)(x, lambda)
    }
}

/// The `σ`-slice `x ↦ F(x, λ, σ)` of a family, seen as a field in `(x, λ)`.
pub struct SigmaSlice<'a, G: ?Sized> {
    pub family: &'a G,
    pub sigma: f64,
}

impl<G: Family + ?Sized> VectorField for SigmaSlice<'_, G> {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn eval(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        self.family.eval(x, lambda, self.sigma)
    }
}

/// Locally supported Shepard interpolant of sampled data (Franke–Little
/// weights `((R − d)₊ / (R d))²`).
///
/// Reproduces every sample exactly at its own location. Points with no
/// sample inside radius `R` take the value of the nearest sample.
#[derive(Clone, Debug)]
pub struct ShepardField {
    dim: usize,
    radius: f64,
    /// Sample values flattened in the bucket order of `index`.
    values: Vec<f64>,
    index: PointIndex,
}

impl ShepardField {
    pub fn new(svf: &SampledVectorField, radius: f64) -> Self {
        assert!(radius > 0.0, "Shepard radius must be positive");
        assert!(
            !svf.samples.is_empty(),
            "Shepard interpolation needs samples"
        );
        let coords: Vec<Vec<f64>> = svf
            .samples
            .iter()
            .map(|s| s.x.iter().copied().chain([s.lambda]).collect())
            .collect();
        let index = PointIndex::new(&coords, radius);
        let values = index
            .order()
            .iter()
            .flat_map(|&i| svf.samples[i].f.iter().copied())
            .collect();
        Self {
            dim: svf.dim,
            radius,
            values,
            index,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn value(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }
}

impl VectorField for ShepardField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        let mut p: SmallVec<[f64; 8]> = SmallVec::with_capacity(x.len() + 1);
        p.extend_from_slice(x);
        p.push(lambda);
        let cells = &self.index.cells;
        let home = cells.cell_of(&p);
        let mut acc: SmallVec<[f64; 8]> = smallvec::smallvec![0.0; self.dim];
        let mut wsum = 0.0;
        let mut exact = None;
        cells.for_each_near(&home, 1, |c| {
            if exact.is_some() {
                return;
            }
            for j in cells.bucket(c) {
                let d = dist2(&p, self.index.point(j)).sqrt();
                if d == 0.0 {
                    exact = Some(j);
                    return;
                }
                if d >= self.radius {
                    continue;
                }
                let w = ((self.radius - d) / (self.radius * d)).powi(2);
                wsum += w;
                for (a, v) in acc.iter_mut().zip(self.value(j)) {
                    *a += w * v;
                }
            }
        });
        if let Some(i) = exact {
            return self.value(i).to_vec();
        }
        if wsum == 0.0 {
            let j = self
                .index
                .nearest_slot(&p, &home, None)
                .expect("index is nonempty");
            return self.value(j).to_vec();
        }
        acc.iter().map(|a| a / wsum).collect()
    }
}
