//! Construction of the deformation `F(x, λ, σ)` from the data field to the
//! canonical fold model inside a certified box block.

pub mod cutoff;
pub mod family;
pub mod lyapunov;
pub mod model_file;

use std::sync::Arc;

use thiserror::Error;

use crate::block::BlockPair;
use crate::cerf::{
    apply_uniqueness_of_birth_at, canceling_pair, close_right_end, simplify_to_single_death,
    unit_mesh, BirthPlacement, CerfError, CerfGraphic, Chart, WhitneyModel,
};
use crate::field::{SharedField, SigmaSlice};

use cutoff::{eta_default, xi_default, BoxCutoff, IntervalCutoff};
use family::{
    assemble_f1, assemble_f3, compose_final, endpoint_families, StageTwo, SynthesizedFamily,
};
use lyapunov::{build_lyapunov, LyapunovError, LyapunovOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("cutoffs eta and xi have overlapping supports")]
    OverlappingCutoffs,
    #[error("graphic inconsistent with the Whitney model: {0}")]
    InconsistentGraphic(String),
    #[error("stage endpoints differ by {deviation}")]
    StageMismatch { deviation: f64 },
    #[error("unsupported block: {0}")]
    UnsupportedBlock(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Cerf(#[from] CerfError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisConfig {
    /// Fold parameter of the canonical model.
    pub lambda0: f64,
    /// Plateau fraction of the endpoint cutoffs `ρ₀`, `ρ₁`.
    pub endpoint_plateau: f64,
    /// Plateau fraction of `ρ` (the box `B′`).
    pub inner_plateau: f64,
    pub eta: IntervalCutoff,
    pub xi: IntervalCutoff,
    pub lyapunov: LyapunovOptions,
    /// Intervals of the `λ` mesh used for graphics and stage checks.
    pub mesh: usize,
}

impl SynthesisConfig {
    pub fn for_dim(n: usize) -> Self {
        Self {
            lambda0: 0.5,
            endpoint_plateau: 0.9,
            inner_plateau: 0.8,
            eta: eta_default(),
            xi: xi_default(),
            lyapunov: LyapunovOptions::for_dim(n),
            mesh: 40,
        }
    }
}

/// Split axis and orientation of the attractor/repeller pair: `+1` when the
/// repeller lies on the low side.
pub fn pair_orientation(pair: &BlockPair) -> Result<(usize, f64), SynthesisError> {
    let parent = pair.parent.bounds();
    let a = pair.attractor.bounds();
    let r = pair.repeller.bounds();
    let axis = (0..parent.len())
        .find(|&i| a[i] != parent[i])
        .ok_or_else(|| {
            SynthesisError::UnsupportedBlock("attractor block equals the parent".into())
        })?;
    if r[axis].1 <= a[axis].0 {
        Ok((axis, 1.0))
    } else if a[axis].1 <= r[axis].0 {
        Ok((axis, -1.0))
    } else {
        Err(SynthesisError::UnsupportedBlock(
            "attractor and repeller overlap".into(),
        ))
    }
}

/// The single-death graphic at `λ₀` obtained by rewriting two canceling
/// arcs with the critical values of `g₀`.
pub fn target_graphic(lambda0: f64, k: usize, mesh: usize) -> Result<CerfGraphic, SynthesisError> {
    let start = canceling_pair(&unit_mesh(mesh), (k - 1, -2.0), (k, 2.0))?;
    let birth = lambda0 + (1.0 - lambda0) / 3.0;
    let close = lambda0 + 2.0 * (1.0 - lambda0) / 3.0;
    let g = apply_uniqueness_of_birth_at(
        &start,
        BirthPlacement {
            death: lambda0,
            birth,
        },
    )?;
    let g = close_right_end(&g, close)?;
    Ok(simplify_to_single_death(&g)?)
}

/// Grid of probe points over `bounds × Λ` used for stage checks.
pub fn probe_points(bounds: &[(f64, f64)], per_axis: usize, mesh: usize) -> Vec<(Vec<f64>, f64)> {
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in bounds {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..=per_axis).map(move |i| {
                    let mut q = p.clone();
                    q.push(lo + (hi - lo) * i as f64 / per_axis as f64);
                    q
                })
            })
            .collect();
    }
    unit_mesh(mesh)
        .into_iter()
        .flat_map(|l| pts.iter().map(move |p| (p.clone(), l)))
        .collect()
}

/// Builds `F` for a certified pair with unstable dimension `k`.
pub fn synthesize(
    f: SharedField,
    pair: &BlockPair,
    k: usize,
    cfg: &SynthesisConfig,
) -> Result<SynthesizedFamily, SynthesisError> {
    let block = &pair.parent;
    if block.as_box().is_none() {
        return Err(SynthesisError::UnsupportedBlock(
            "synthesis needs a box block".into(),
        ));
    }
    if !(cfg.lambda0 > 0.0 && cfg.lambda0 < 1.0) {
        return Err(SynthesisError::InvalidInput(format!(
            "lambda0 = {} not in (0,1)",
            cfg.lambda0
        )));
    }
    let bounds = block.bounds();
    let (axis, orientation) = pair_orientation(pair)?;
    let chart = Chart::from_bounds(&bounds, axis, orientation);
    let (f0, f1) = endpoint_families(f.clone(), &chart, &bounds, k, cfg.endpoint_plateau)?;
    let stage1 = Arc::new(assemble_f1(f.clone(), f0, f1, cfg.eta, cfg.xi)?);
    let end = SigmaSlice {
        family: stage1.as_ref(),
        sigma: 1.0,
    };
    let lyap = Arc::new(build_lyapunov(block, pair, &end, &cfg.lyapunov)?);
    let rho = BoxCutoff::with_plateau(&bounds, cfg.inner_plateau);
    let stage2 = Arc::new(StageTwo {
        stage1: stage1.clone(),
        lyapunov: lyap.clone(),
        rho: rho.clone(),
    });
    let whitney = WhitneyModel::saddle_node(cfg.lambda0, k, chart)?;
    let graphic = target_graphic(cfg.lambda0, k, cfg.mesh)?;
    let stage3 = Arc::new(assemble_f3(stage1.clone(), lyap, graphic, whitney, rho)?);
    let probes = probe_points(&bounds, 8, cfg.mesh.min(10));
    compose_final(f, stage1, stage2, stage3, k, &probes, 0.0)
}
