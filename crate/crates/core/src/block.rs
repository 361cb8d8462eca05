//! Isolating blocks on the sample grid: boundary classification into
//! entrance / exit / tangency faces and attractor–repeller splitting.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cubical::{Cube, CubicalSet};
use crate::homology::{relative_homology, HomologyError};
use crate::ingest::{
    certify_face_sign, covering_radius, FaceRegion, Grid, IngestError, Quantity,
    SampledVectorField, Sign, SignCertificate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("not an isolating block: {0}")]
    NotABlock(String),
    #[error("bad attractor/repeller interface: {0}")]
    BadInterface(String),
    #[error("region must be a nonempty union of full-dimensional grid cells")]
    InvalidRegion,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaceRole {
    Entrance,
    Exit,
    Tangency,
}

impl fmt::Display for FaceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaceRole::Entrance => "entrance",
            FaceRole::Exit => "exit",
            FaceRole::Tangency => "tangency",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TangencyPolicy {
    #[default]
    Forbid,
    Allow,
}

/// How the covering radius of each face is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spacing {
    Uniform(f64),
    /// Computed per face from sample locations with this many probes per axis.
    Probed(usize),
}

impl Spacing {
    fn radius(&self, svf: &SampledVectorField, face: &FaceRegion) -> f64 {
        match *self {
            Spacing::Uniform(h) => h,
            Spacing::Probed(m) => covering_radius(svf, face, m),
        }
    }
}

/// One codimension-one boundary cell of a block.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    pub cube: Cube,
    pub axis: usize,
    pub outward_positive: bool,
    pub role: FaceRole,
    /// Certificate for `f·n` with `n` the outward normal.
    pub certificate: SignCertificate,
}

impl BoundaryFace {
    pub fn outward_normal(&self, dim: usize) -> Vec<f64> {
        let mut n = vec![0.0; dim];
        n[self.axis] = if self.outward_positive { 1.0 } else { -1.0 };
        n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsolatingBlock {
    pub grid: Grid,
    pub region: CubicalSet,
    pub faces: Vec<BoundaryFace>,
}

impl IsolatingBlock {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn faces_with(&self, role: FaceRole) -> impl Iterator<Item = &BoundaryFace> {
        self.faces.iter().filter(move |f| f.role == role)
    }

    fn closure_of(&self, role: FaceRole) -> CubicalSet {
        CubicalSet::from_cubes(self.dim(), self.faces_with(role).map(|f| f.cube.clone()))
    }

    /// `∂B⁻` as a closed cubical set.
    pub fn exit_set(&self) -> CubicalSet {
        self.closure_of(FaceRole::Exit)
    }

    /// `∂B⁺` as a closed cubical set.
    pub fn entrance_set(&self) -> CubicalSet {
        self.closure_of(FaceRole::Entrance)
    }

    pub fn tangency_set(&self) -> CubicalSet {
        self.closure_of(FaceRole::Tangency)
    }

    /// Physical bounding box of the region.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let n = self.dim();
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        for c in self.region.cells_of_dim(0) {
            for (a, v) in c.corner().into_iter().enumerate() {
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        (0..n)
            .map(|a| (self.grid.coord(a, lo[a]), self.grid.coord(a, hi[a])))
            .collect()
    }

    /// Integer corners `(lo, hi)` when the region is a full box of grid cells.
    pub fn as_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let n = self.dim();
        let verts = self.region.cells_of_dim(0);
        let first = verts.first()?.corner();
        let (mut lo, mut hi) = (first.clone(), first);
        for c in &verts {
            for (a, v) in c.corner().into_iter().enumerate() {
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        if (0..n).any(|a| lo[a] == hi[a]) {
            return None;
        }
        (CubicalSet::from_box(&lo, &hi) == self.region).then_some((lo, hi))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format=snblock-block-faces v1\n");
        let _ = writeln!(out, "dim={}", self.dim());
        for f in &self.faces {
            let _ = writeln!(
                out,
                "{}\tcorner={:?}\taxis={}\toutward={}\tsign={}\tmargin={}",
                f.role,
                f.cube.corner(),
                f.axis,
                if f.outward_positive { "+" } else { "-" },
                f.certificate.sign,
                f.certificate.margin
            );
        }
        out
    }
}

/// Codimension-one cells lying on exactly one top cell, with their normal axis
/// and whether the outward normal points in the positive axis direction.
pub fn boundary_faces(region: &CubicalSet) -> Result<Vec<(Cube, usize, bool)>, BlockError> {
    let n = region.ambient_dim();
    let tops = region.top_cells();
    if tops.is_empty() || tops.iter().any(|c| c.dim() != n) {
        return Err(BlockError::InvalidRegion);
    }
    let mut seen: std::collections::BTreeMap<Cube, Vec<(usize, bool)>> = Default::default();
    for t in &tops {
        for (axis, &c) in t.doubled().iter().enumerate() {
            for (delta, positive) in [(1, true), (-1, false)] {
                let mut d = t.doubled().to_vec();
                d[axis] = c + delta;
                seen.entry(Cube::from_doubled(d))
                    .or_default()
                    .push((axis, positive));
            }
        }
    }
    Ok(seen
        .into_iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(c, v)| (c, v[0].0, v[0].1))
        .collect())
}

/// Physical `(x, λ)` region of a grid cube over the λ-interval `lambda`.
pub fn face_region(grid: &Grid, cube: &Cube, lambda: (f64, f64)) -> FaceRegion {
    let corner = cube.corner();
    let lo: Vec<f64> = corner
        .iter()
        .enumerate()
        .map(|(a, &c)| grid.coord(a, c))
        .collect();
    let hi: Vec<f64> = corner
        .iter()
        .enumerate()
        .map(|(a, &c)| grid.coord(a, c + i64::from(cube.is_extended(a))))
        .collect();
    FaceRegion::new(format!("{:?}", corner), lo, hi, lambda)
}

fn share_vertex(a: &Cube, b: &Cube) -> bool {
    let va: BTreeSet<Cube> = a.faces().into_iter().filter(|c| c.dim() == 0).collect();
    b.faces().iter().any(|c| c.dim() == 0 && va.contains(c))
}

/// Certifies `f·n` on every boundary face over all of Λ and assigns roles.
pub fn classify_boundary(
    svf: &SampledVectorField,
    grid: &Grid,
    region: &CubicalSet,
    spacing: Spacing,
    policy: TangencyPolicy,
) -> Result<IsolatingBlock, BlockError> {
    let n = grid.dim();
    let mut faces = Vec::new();
    for (cube, axis, outward_positive) in boundary_faces(region)? {
        let geom = face_region(grid, &cube, (0.0, 1.0));
        let h = spacing.radius(svf, &geom);
        let mut normal = vec![0.0; n];
        normal[axis] = if outward_positive { 1.0 } else { -1.0 };
        let certificate = certify_face_sign(svf, &geom, &Quantity::Flux(normal), h)?;
        let role = match certificate.sign {
            Sign::Positive => FaceRole::Exit,
            Sign::Negative => FaceRole::Entrance,
            Sign::Undetermined => FaceRole::Tangency,
        };
        faces.push(BoundaryFace {
            cube,
            axis,
            outward_positive,
            role,
            certificate,
        });
    }
    if faces.iter().all(|f| f.role == FaceRole::Tangency) {
        return Err(BlockError::NotABlock(
            "no boundary face has a certified sign".into(),
        ));
    }
    for f in faces.iter().filter(|f| f.role == FaceRole::Tangency) {
        if policy == TangencyPolicy::Forbid {
            return Err(BlockError::NotABlock(format!(
                "face at {:?} has undetermined sign (margin {})",
                f.cube.corner(),
                f.certificate.margin
            )));
        }
        let touches = |role| {
            faces
                .iter()
                .any(|g| g.role == role && share_vertex(&f.cube, &g.cube))
        };
        if !(touches(FaceRole::Entrance) && touches(FaceRole::Exit)) {
            return Err(BlockError::NotABlock(format!(
                "undetermined face at {:?} is not flanked by entrance and exit faces",
                f.cube.corner()
            )));
        }
    }
    Ok(IsolatingBlock {
        grid: grid.clone(),
        region: region.clone(),
        faces,
    })
}

/// Grid hyperplane `axis = index` separating a block, with the sign of `f_axis`
/// certified at λ = 0 on each of its faces inside the block.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatingSlab {
    pub axis: usize,
    pub index: i64,
    pub faces: Vec<(Cube, SignCertificate)>,
}

/// Certifies `f·e_axis` on the slab faces at a single parameter value.
pub fn certify_slab(
    svf: &SampledVectorField,
    block: &IsolatingBlock,
    axis: usize,
    index: i64,
    spacing: Spacing,
    lambda: f64,
) -> Result<SeparatingSlab, BlockError> {
    let mut faces = Vec::new();
    for c in block.region.cells_of_dim(block.dim() - 1) {
        if c.is_extended(axis) || c.doubled()[axis] != 2 * index {
            continue;
        }
        let geom = face_region(&block.grid, &c, (lambda, lambda));
        let h = spacing.radius(svf, &geom);
        let cert = certify_face_sign(svf, &geom, &Quantity::Component(axis), h)?;
        faces.push((c, cert));
    }
    Ok(SeparatingSlab { axis, index, faces })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockPair {
    pub parent: IsolatingBlock,
    /// `B_A`, entered through the interface.
    pub attractor: IsolatingBlock,
    /// `B_{A*}`, exited through the interface.
    pub repeller: IsolatingBlock,
    pub interface: CubicalSet,
}

impl BlockPair {
    pub fn to_text(&self) -> String {
        let mut out = String::from("format=snblock-block-pair v1\n");
        for (name, b) in [
            ("parent", &self.parent),
            ("attractor", &self.attractor),
            ("repeller", &self.repeller),
        ] {
            let _ = writeln!(out, "[{name}] bounds={:?}", b.bounds());
            for line in b.to_text().lines().skip(2) {
                let _ = writeln!(out, "{line}");
            }
        }
        let _ = writeln!(
            out,
            "[interface] cells={}",
            self.interface.cells_of_dim(self.parent.dim() - 1).len()
        );
        out
    }
}

fn sub_block(
    parent: &IsolatingBlock,
    tops: Vec<Cube>,
    slab: &SeparatingSlab,
    slab_role: FaceRole,
) -> Result<IsolatingBlock, BlockError> {
    let n = parent.dim();
    let region = CubicalSet::from_cubes(n, tops);
    let mut faces = Vec::new();
    for (cube, axis, outward_positive) in boundary_faces(&region)? {
        if let Some(f) = parent
            .faces
            .iter()
            .find(|f| f.cube == cube && f.axis == axis && f.outward_positive == outward_positive)
        {
            faces.push(f.clone());
            continue;
        }
        let Some((_, cert)) = slab.faces.iter().find(|(c, _)| *c == cube) else {
            return Err(BlockError::BadInterface(format!(
                "face at {:?} is neither a parent boundary face nor certified on the slab",
                cube.corner()
            )));
        };
        // the slab certifies f·e_axis; flip it for a face whose outward normal is −e_axis
        let certificate = if outward_positive {
            cert.clone()
        } else {
            cert.negated()
        };
        faces.push(BoundaryFace {
            cube,
            axis,
            outward_positive,
            role: slab_role,
            certificate,
        });
    }
    Ok(IsolatingBlock {
        grid: parent.grid.clone(),
        region,
        faces,
    })
}

/// Splits a block along a certified slab into repeller and attractor sub-blocks.
pub fn split_simple_block(
    block: &IsolatingBlock,
    slab: &SeparatingSlab,
) -> Result<BlockPair, BlockError> {
    if slab.faces.is_empty() {
        return Err(BlockError::BadInterface(
            "slab does not cut the block".into(),
        ));
    }
    let signs: BTreeSet<_> = slab
        .faces
        .iter()
        .map(|(_, c)| format!("{}", c.sign))
        .collect();
    let sign = slab.faces[0].1.sign;
    if signs.len() != 1 || !sign.is_determinate() {
        return Err(BlockError::BadInterface(
            "flow across the slab must have one certified sign".into(),
        ));
    }
    let (low, high): (Vec<Cube>, Vec<Cube>) = block
        .region
        .top_cells()
        .into_iter()
        .partition(|c| c.corner()[slab.axis] < slab.index);
    if low.is_empty() || high.is_empty() {
        return Err(BlockError::BadInterface(
            "slab lies on the block boundary".into(),
        ));
    }
    // positive flux along +e_axis: the low side exits into the high side
    let (rep_tops, att_tops) = if sign == Sign::Positive {
        (low, high)
    } else {
        (high, low)
    };
    let repeller = sub_block(block, rep_tops, slab, FaceRole::Exit)?;
    let attractor = sub_block(block, att_tops, slab, FaceRole::Entrance)?;
    let interface = repeller.region.intersection(&attractor.region);
    let pair = BlockPair {
        parent: block.clone(),
        attractor,
        repeller,
        interface,
    };
    let meet = pair
        .repeller
        .exit_set()
        .intersection(&pair.attractor.entrance_set());
    if pair.repeller.region.union(&pair.attractor.region) != block.region || meet != pair.interface
    {
        return Err(BlockError::BadInterface(
            "sub-blocks do not meet exactly along exit/entrance sets".into(),
        ));
    }
    Ok(pair)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetCheck {
    pub name: String,
    pub components: usize,
    pub h1: usize,
    pub require_connected: bool,
    /// The set is the entire boundary of its block, a closed curve when `n = 2`.
    pub whole_boundary: bool,
}

impl SetCheck {
    pub fn passed(&self) -> bool {
        (self.h1 == 0 || self.whole_boundary) && (!self.require_connected || self.components == 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimpleBlockReport {
    pub checks: Vec<SetCheck>,
}

impl SimpleBlockReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SetCheck::passed)
    }

    pub fn first_failure(&self) -> Option<&SetCheck> {
        self.checks.iter().find(|c| !c.passed())
    }
}

/// Connectivity and first homology of a cubical set.
pub fn check_set(
    name: &str,
    set: &CubicalSet,
    require_connected: bool,
) -> Result<SetCheck, BlockError> {
    let h1 = if set.is_empty() {
        0
    } else {
        relative_homology(set, &CubicalSet::empty(set.ambient_dim()))?.betti(1)
    };
    Ok(SetCheck {
        name: name.to_string(),
        components: set.components(),
        h1,
        require_connected,
        whole_boundary: false,
    })
}

/// Blocks must be connected with `H₁ = 0`; entrance and exit sets only need
/// `H₁ = 0`, or must make up the whole boundary of a disk block.
pub fn validate_simple_block(pair: &BlockPair) -> Result<SimpleBlockReport, BlockError> {
    let mut checks = Vec::new();
    for (name, b) in [
        ("B0", &pair.parent),
        ("B_A", &pair.attractor),
        ("B_Astar", &pair.repeller),
    ] {
        let body = check_set(name, &b.region, true)?;
        let disk = body.passed();
        checks.push(body);
        for (suffix, role, set) in [
            ("+", FaceRole::Entrance, b.entrance_set()),
            ("-", FaceRole::Exit, b.exit_set()),
        ] {
            let mut c = check_set(&format!("{name}{suffix}"), &set, false)?;
            c.whole_boundary = disk && b.faces.iter().all(|f| f.role == role);
            checks.push(c);
        }
    }
    Ok(SimpleBlockReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Sample;

    /// ż = 1 − z² − 2λ sampled on [−2, 2] × [0, 1].
    fn fold_data() -> SampledVectorField {
        let mut samples = Vec::new();
        for i in 0..=40 {
            for j in 0..=20 {
                let z = -2.0 + 0.1 * i as f64;
                let l = j as f64 / 20.0;
                samples.push(Sample {
                    x: vec![z],
                    lambda: l,
                    f: vec![1.0 - z * z - 2.0 * l],
                });
            }
        }
        SampledVectorField::new(1, samples, 0.5).unwrap()
    }

    fn grid1() -> Grid {
        Grid::new(vec![(-2.0, 2.0)], vec![4], 20).unwrap()
    }

    #[test]
    fn interval_block_roles() {
        let region = CubicalSet::from_box(&[0], &[4]);
        let b = classify_boundary(
            &fold_data(),
            &grid1(),
            &region,
            Spacing::Uniform(0.05),
            TangencyPolicy::Forbid,
        )
        .unwrap();
        let exit: Vec<_> = b
            .faces_with(FaceRole::Exit)
            .map(|f| f.cube.corner())
            .collect();
        let ent: Vec<_> = b
            .faces_with(FaceRole::Entrance)
            .map(|f| f.cube.corner())
            .collect();
        assert_eq!(exit, vec![vec![0]]);
        assert_eq!(ent, vec![vec![4]]);
        assert_eq!(b.faces_with(FaceRole::Tangency).count(), 0);
        assert!(b.faces.iter().all(|f| f.certificate.margin > 0.0));
    }

    #[test]
    fn all_undetermined_is_not_a_block() {
        let data = fold_data().with_lipschitz(1e3);
        let region = CubicalSet::from_box(&[0], &[4]);
        for policy in [TangencyPolicy::Forbid, TangencyPolicy::Allow] {
            let e = classify_boundary(&data, &grid1(), &region, Spacing::Uniform(0.05), policy)
                .unwrap_err();
            assert!(matches!(e, BlockError::NotABlock(_)));
        }
    }

    #[test]
    fn split_at_positive_point() {
        let data = fold_data();
        let region = CubicalSet::from_box(&[0], &[4]);
        let b = classify_boundary(
            &data,
            &grid1(),
            &region,
            Spacing::Uniform(0.05),
            TangencyPolicy::Forbid,
        )
        .unwrap();
        let slab = certify_slab(&data, &b, 0, 2, Spacing::Uniform(0.0), 0.0).unwrap();
        let pair = split_simple_block(&b, &slab).unwrap();
        assert_eq!(pair.repeller.bounds(), vec![(-2.0, 0.0)]);
        assert_eq!(pair.attractor.bounds(), vec![(0.0, 2.0)]);
        assert_eq!(
            pair.interface,
            CubicalSet::from_cubes(1, [Cube::vertex(&[2])])
        );
        assert_eq!(pair.repeller.faces_with(FaceRole::Exit).count(), 2);
        assert_eq!(pair.attractor.faces_with(FaceRole::Exit).count(), 0);
        let rep = validate_simple_block(&pair).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn split_on_equilibrium_is_rejected() {
        // z = 1 is an equilibrium at λ = 0
        let data = fold_data();
        let region = CubicalSet::from_box(&[0], &[4]);
        let b = classify_boundary(
            &data,
            &grid1(),
            &region,
            Spacing::Uniform(0.05),
            TangencyPolicy::Forbid,
        )
        .unwrap();
        let slab = certify_slab(&data, &b, 0, 3, Spacing::Uniform(0.0), 0.0).unwrap();
        assert!(matches!(
            split_simple_block(&b, &slab),
            Err(BlockError::BadInterface(_))
        ));
    }

    #[test]
    fn annulus_fails_simple_check() {
        let full = CubicalSet::from_box(&[0, 0], &[3, 3]);
        let tops: Vec<Cube> = full
            .top_cells()
            .into_iter()
            .filter(|c| c.corner() != vec![1, 1])
            .collect();
        let annulus = CubicalSet::from_cubes(2, tops);
        let c = check_set("annulus", &annulus, true).unwrap();
        assert_eq!(c.h1, 1);
        assert!(!c.passed());
    }
}
