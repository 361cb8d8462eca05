//! Stage functions shared by the command-line driver and the tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::block::{
    certify_slab, classify_boundary, split_simple_block, validate_simple_block, BlockError,
    BlockPair, IsolatingBlock, Spacing, TangencyPolicy,
};
use crate::cerf::{unit_mesh, CerfError, CerfGraphic};
use crate::certify::{certify_homological_saddle_node, CertificationOutcome, ConleyIndexReport};
use crate::cubical::CubicalSet;
use crate::dynamics::verify::{verify_c1_c2_c3, VerificationReport, VerifyError, VerifyOptions};
use crate::field::{SharedField, ShepardField};
use crate::homology::HomologyError;
use crate::ingest::{
    assumption_radius, check_block_assumptions, AssumptionReport, Grid, IngestError,
    SampledVectorField,
};
use crate::spatial::PointIndex;
use crate::synthesis::family::SynthesizedFamily;
use crate::synthesis::model_file::ModelFileError;
use crate::synthesis::{synthesize, SynthesisConfig, SynthesisError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Cerf(#[from] CerfError),
}

/// Block description file:
///
/// ```text
/// box=<lo> <hi>; <lo> <hi>; ...
/// resolution=<cells per axis> ... ; <lambda cells>
/// split=<axis> <coordinate>
/// witness=<x_1> ... <x_n>          (optional, defaults to the split point)
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    pub lambda_resolution: usize,
    pub split_axis: usize,
    pub split_coord: f64,
    pub witness: Vec<f64>,
}

fn parse_reals(s: &str) -> Result<Vec<f64>, PipelineError> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| PipelineError::ConfigInvalid(format!("not a number: `{t}`")))
        })
        .collect()
}

impl BlockSpec {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let bad = |m: &str| PipelineError::ConfigInvalid(m.to_string());
        let (mut bounds, mut res, mut split, mut witness) = (None, None, None, None);
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| bad("block lines are `key=value`"))?;
            match key.trim() {
                "box" => {
                    let b = val
                        .split(';')
                        .map(|p| match parse_reals(p)?.as_slice() {
                            [lo, hi] if lo < hi => Ok((*lo, *hi)),
                            _ => Err(bad("box needs `lo hi` pairs with lo < hi")),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    bounds = Some(b);
                }
                "resolution" => {
                    let (phase, lam) = val
                        .split_once(';')
                        .ok_or_else(|| bad("resolution=<phase cells> ; <lambda cells>"))?;
                    let p = phase
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| bad("resolution entries are integers"))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let l = lam
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| bad("lambda resolution is an integer"))?;
                    res = Some((p, l));
                }
                "split" => match parse_reals(val)?.as_slice() {
                    [a, c] if *a >= 0.0 && a.fract() == 0.0 => split = Some((*a as usize, *c)),
                    _ => return Err(bad("split=<axis> <coordinate>")),
                },
                "witness" => witness = Some(parse_reals(val)?),
                other => return Err(bad(&format!("unknown block key `{other}`"))),
            }
        }
        let bounds = bounds.ok_or_else(|| bad("block file lacks `box=`"))?;
        let (resolution, lambda_resolution) =
            res.ok_or_else(|| bad("block file lacks `resolution=`"))?;
        let (split_axis, split_coord) = split.ok_or_else(|| bad("block file lacks `split=`"))?;
        let n = bounds.len();
        if resolution.len() != n || split_axis >= n {
            return Err(bad("box, resolution and split disagree on the dimension"));
        }
        if resolution.iter().any(|&r| r < 2) || lambda_resolution < 2 {
            return Err(bad("resolution must be at least 2 per axis"));
        }
        let witness = witness.unwrap_or_else(|| {
            bounds
                .iter()
                .enumerate()
                .map(|(a, &(lo, hi))| {
                    if a == split_axis {
                        split_coord
                    } else {
                        0.5 * (lo + hi)
                    }
                })
                .collect()
        });
        if witness.len() != n {
            return Err(bad("witness dimension differs from the box"));
        }
        Ok(Self {
            bounds,
            resolution,
            lambda_resolution,
            split_axis,
            split_coord,
            witness,
        })
    }

    pub fn to_text(&self) -> String {
        let b: Vec<String> = self
            .bounds
            .iter()
            .map(|(a, b)| format!("{a} {b}"))
            .collect();
        let r: Vec<String> = self.resolution.iter().map(|r| r.to_string()).collect();
        let w: Vec<String> = self.witness.iter().map(|v| v.to_string()).collect();
        format!(
            "box={}\nresolution={} ; {}\nsplit={} {}\nwitness={}\n",
            b.join("; "),
            r.join(" "),
            self.lambda_resolution,
            self.split_axis,
            self.split_coord,
            w.join(" ")
        )
    }

    pub fn grid(&self) -> Result<Grid, PipelineError> {
        Ok(Grid::new(
            self.bounds.clone(),
            self.resolution.clone(),
            self.lambda_resolution,
        )?)
    }

    /// Grid index of the split hyperplane.
    pub fn split_index(&self) -> Result<i64, PipelineError> {
        let (lo, hi) = self.bounds[self.split_axis];
        let r = self.resolution[self.split_axis] as f64;
        let t = (self.split_coord - lo) / (hi - lo) * r;
        let i = t.round();
        if (t - i).abs() > 1e-9 || i <= 0.0 || i >= r {
            return Err(PipelineError::ConfigInvalid(format!(
                "split coordinate {} is not an interior grid line",
                self.split_coord
            )));
        }
        Ok(i as i64)
    }
}

/// Tolerances, seeds and targets of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub samples: PathBuf,
    pub block: Option<PathBuf>,
    pub out: PathBuf,
    /// Residual tolerance of the equilibrium census.
    pub newton_tol: f64,
    /// Smallest accepted Lyapunov decrease margin.
    pub margin_min: f64,
    /// Smallest singular value below which a fold is declared.
    pub fold_tol: f64,
    pub lambda0: f64,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(samples: PathBuf, block: Option<PathBuf>, out: PathBuf) -> Self {
        Self {
            samples,
            block,
            out,
            newton_tol: 1e-10,
            margin_min: 1e-12,
            fold_tol: 1e-6,
            lambda0: 0.5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, v) in [
            ("newton_tol", self.newton_tol),
            ("margin_min", self.margin_min),
            ("fold_tol", self.fold_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PipelineError::ConfigInvalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.lambda0 > 0.0 && self.lambda0 < 1.0) {
            return Err(PipelineError::ConfigInvalid(format!(
                "lambda0 must lie in (0,1), got {}",
                self.lambda0
            )));
        }
        Ok(())
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn synthesis(&self, n: usize) -> SynthesisConfig {
        let mut cfg = SynthesisConfig::for_dim(n);
        cfg.lambda0 = self.lambda0;
        cfg.lyapunov.seed = self.seed;
        cfg
    }

    pub fn verification(&self, n: usize) -> VerifyOptions {
        let mut v = VerifyOptions::for_dim(n);
        v.newton.tol = self.newton_tol;
        v.continuation.fold_tol = self.fold_tol;
        v.seed = self.seed;
        v
    }
}

pub fn read_artifact(path: &Path) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_artifact(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Radius at which the samples cover every face, the terminal slice and the
/// witness of the block.
pub fn assumption_spacing(svf: &SampledVectorField, spec: &BlockSpec) -> f64 {
    let finest = spec
        .resolution
        .iter()
        .copied()
        .chain([spec.lambda_resolution])
        .max()
        .unwrap_or(1);
    assumption_radius(svf, &spec.bounds, &spec.witness, 4 * finest)
}

/// Largest nearest-neighbour distance between sample locations in `(x, λ)`.
pub fn max_nearest_neighbour(svf: &SampledVectorField) -> f64 {
    if svf.samples.is_empty() {
        return 0.0;
    }
    let pts = svf.locations();
    let index = PointIndex::with_mean_spacing(&pts);
    pts.iter()
        .enumerate()
        .filter_map(|(i, p)| index.nearest_other(i, p))
        .fold(0.0, f64::max)
}

pub fn ingest_stage(
    svf: &SampledVectorField,
    spec: &BlockSpec,
) -> Result<AssumptionReport, PipelineError> {
    let h = assumption_spacing(svf, spec);
    Ok(check_block_assumptions(
        svf,
        &spec.bounds,
        &spec.witness,
        h,
    )?)
}

/// Isolating block over the whole box and its attractor/repeller split.
pub fn block_stage(svf: &SampledVectorField, spec: &BlockSpec) -> Result<BlockPair, PipelineError> {
    let grid = spec.grid()?;
    let lo = vec![0; spec.bounds.len()];
    let hi: Vec<i64> = spec.resolution.iter().map(|&r| r as i64).collect();
    let region = CubicalSet::from_box(&lo, &hi);
    let spacing = Spacing::Probed(4);
    let block: IsolatingBlock =
        classify_boundary(svf, &grid, &region, spacing, TangencyPolicy::Forbid)?;
    let slab = certify_slab(
        svf,
        &block,
        spec.split_axis,
        spec.split_index()?,
        spacing,
        0.0,
    )?;
    Ok(split_simple_block(&block, &slab)?)
}

pub fn index_stage(pair: &BlockPair) -> Result<ConleyIndexReport, PipelineError> {
    Ok(ConleyIndexReport::from_pair(pair)?)
}

pub fn certify_stage(pair: &BlockPair) -> Result<CertificationOutcome, PipelineError> {
    let report = index_stage(pair)?;
    let simple = validate_simple_block(pair)?;
    Ok(certify_homological_saddle_node(&report, pair, &simple))
}

/// Radius of the Shepard interpolant that stands in for `f` between samples.
pub fn reference_radius(svf: &SampledVectorField) -> f64 {
    2.0 * max_nearest_neighbour(svf)
}

pub fn reference_field(svf: &SampledVectorField) -> (SharedField, f64) {
    let r = reference_radius(svf);
    (Arc::new(ShepardField::new(svf, r)), r)
}

pub fn synthesize_stage(
    svf: &SampledVectorField,
    pair: &BlockPair,
    k: usize,
    cfg: &PipelineConfig,
) -> Result<(SynthesizedFamily, f64), PipelineError> {
    let (f, radius) = reference_field(svf);
    let family = synthesize(f, pair, k, &cfg.synthesis(svf.dim))?;
    let margin = family.lyapunov().margin;
    if !(margin >= cfg.margin_min) {
        return Err(PipelineError::Synthesis(SynthesisError::InvalidInput(
            format!(
                "Lyapunov decrease margin {margin} below the required {}",
                cfg.margin_min
            ),
        )));
    }
    Ok((family, radius))
}

pub fn verify_stage(
    family: &SynthesizedFamily,
    cfg: &PipelineConfig,
) -> Result<VerificationReport, PipelineError> {
    let n = family.block_bounds.len();
    let mesh = unit_mesh(SynthesisConfig::for_dim(n).mesh);
    let opts = cfg.verification(n);
    let lambda0 = family.whitney().lambda0;
    Ok(verify_c1_c2_c3(
        family,
        &family.block_bounds,
        family.k,
        &mesh,
        lambda0,
        &opts,
    )?)
}

/// Graphic of the canonical model sampled on the verification mesh, with
/// the exact cusp values at the mesh points appended as a table.
pub fn graphic_stage(family: &SynthesizedFamily) -> Result<(CerfGraphic, String), PipelineError> {
    let w = family.whitney();
    let mesh = unit_mesh(SynthesisConfig::for_dim(w.dim()).mesh);
    let g = CerfGraphic::from_whitney(w, &mesh)?;
    let mut cusp = String::from("lambda\tcritical_values\n");
    for &l in &mesh {
        let vals: Vec<String> = crate::cerf::whitney_critical_values(w, l)
            .iter()
            .map(|v| v.to_string())
            .collect();
        let _ = writeln!(cusp, "{l}\t{}", vals.join(","));
    }
    Ok((g, cusp))
}
