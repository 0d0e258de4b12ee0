//! Signature space and fault trajectories.
//!
//! A test vector of `n` frequencies maps every circuit variant to a point
//! in `R^n` holding its dB magnitudes minus the golden magnitudes, so the
//! nominal circuit sits at the origin. Sweeping one component through its
//! deviation grid traces a piecewise-linear trajectory; two faults are
//! indistinguishable where trajectories of different components cross or
//! share a stretch of path.

use rayon::prelude::*;
use thiserror::Error;

use crate::faultlib::{self, FaultConfig, FaultError, FaultSpec};
use crate::geom;
use crate::netlist::Circuit;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("signature length mismatch: golden has {golden}, faulty has {faulty}")]
    LengthMismatch { golden: usize, faulty: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("test vector must hold at least one positive frequency")]
    BadVector,
    #[error(transparent)]
    Fault(#[from] FaultError),
}

/// Test frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVector {
    frequencies: Vec<f64>,
}

impl TestVector {
    pub fn new(frequencies: Vec<f64>) -> Result<Self, TrajectoryError> {
        if frequencies.is_empty() || frequencies.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(TrajectoryError::BadVector);
        }
        Ok(Self { frequencies })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Repeated frequencies collapse the signature space onto a diagonal.
    pub fn is_degenerate(&self) -> bool {
        let f = &self.frequencies;
        (0..f.len()).any(|i| f[i + 1..].contains(&f[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignaturePoint {
    pub coords: Vec<f64>,
    /// 0 for the golden point.
    pub deviation: f64,
}

/// Per-frequency dB difference of a faulty response against the golden one.
pub fn signature(golden_db: &[f64], faulty_db: &[f64]) -> Result<Vec<f64>, TrajectoryError> {
    if golden_db.len() != faulty_db.len() {
        return Err(TrajectoryError::LengthMismatch {
            golden: golden_db.len(),
            faulty: faulty_db.len(),
        });
    }
    Ok(faulty_db.iter().zip(golden_db).map(|(f, g)| f - g).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub component: String,
    /// Ascending deviation; includes the origin at deviation 0.
    pub points: Vec<SignaturePoint>,
    pub degenerate: bool,
}

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, |p| p.coords.len())
    }

    pub fn segment_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn segments(&self) -> impl Iterator<Item = (&SignaturePoint, &SignaturePoint)> {
        self.points.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Builds a trajectory from fault points, inserting the origin at deviation 0.
    pub fn from_points(component: impl Into<String>, mut points: Vec<SignaturePoint>) -> Self {
        let dim = points.first().map_or(0, |p| p.coords.len());
        points.push(SignaturePoint {
            coords: vec![0.0; dim],
            deviation: 0.0,
        });
        points.sort_by(|a, b| a.deviation.total_cmp(&b.deviation));
        Self {
            component: component.into(),
            points,
            degenerate: false,
        }
    }
}

/// Golden magnitudes at `tv`, then one trajectory per target component.
pub fn build_trajectories(
    circuit: &Circuit,
    config: &FaultConfig,
    tv: &TestVector,
) -> Result<Vec<Trajectory>, TrajectoryError> {
    config.validate_for(circuit)?;
    let golden = faultlib::evaluate_at(circuit, None, tv.frequencies())?;
    let faults = faultlib::enumerate_faults(config)?;
    let coords = faults
        .par_iter()
        .map(|f| {
            let mags = faultlib::evaluate_at(circuit, Some(f), tv.frequencies())?;
            signature(&golden, &mags)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let degenerate = tv.is_degenerate();
    Ok(config
        .targets
        .iter()
        .map(|target| {
            let points = faults
                .iter()
                .zip(&coords)
                .filter(|(f, _)| &f.component == target)
                .map(|(f, c)| SignaturePoint {
                    coords: c.clone(),
                    deviation: f.deviation,
                })
                .collect();
            let mut t = Trajectory::from_points(target.clone(), points);
            t.degenerate = degenerate;
            t
        })
        .collect())
}

/// Signature of a single fault at `tv`, useful as a diagnosis query.
pub fn fault_signature(circuit: &Circuit, fault: &FaultSpec, tv: &TestVector) -> Result<Vec<f64>, TrajectoryError> {
    let golden = faultlib::evaluate_at(circuit, None, tv.frequencies())?;
    let mags = faultlib::evaluate_at(circuit, Some(fault), tv.frequencies())?;
    signature(&golden, &mags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncidenceKind {
    Cross,
    Overlap,
}

impl IncidenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cross => "cross",
            Self::Overlap => "overlap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    pub comp_a: String,
    pub seg_a: usize,
    pub comp_b: String,
    pub seg_b: usize,
    pub kind: IncidenceKind,
    /// Crossing point, or the midpoint of the shared stretch for overlaps.
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntersectionReport {
    pub count: usize,
    pub incidences: Vec<Incidence>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Separation below which two segments are considered to meet.
    pub tol: f64,
    /// Radius around the golden point inside which crossings are ignored.
    pub origin_tol: f64,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { tol, origin_tol: tol }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::uniform(DEFAULT_TOL)
    }
}

/// Counts crossings and common pathways between segments of distinct
/// trajectories, ignoring crossings at the shared golden origin.
pub fn count_intersections(trajectories: &[Trajectory], tol: f64) -> Result<IntersectionReport, TrajectoryError> {
    count_intersections_with(trajectories, Tolerances::uniform(tol))
}

pub fn count_intersections_with(
    trajectories: &[Trajectory],
    tols: Tolerances,
) -> Result<IntersectionReport, TrajectoryError> {
    let dim = trajectories.first().map_or(0, Trajectory::dimension);
    count_intersections_about(trajectories, &vec![0.0; dim], tols)
}

/// As [`count_intersections_with`], with the golden point at `center`.
pub fn count_intersections_about(
    trajectories: &[Trajectory],
    center: &[f64],
    tols: Tolerances,
) -> Result<IntersectionReport, TrajectoryError> {
    for t in [tols.tol, tols.origin_tol] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(TrajectoryError::BadTolerance(t));
        }
    }
    let dim = center.len();
    for p in trajectories.iter().flat_map(|t| &t.points) {
        if p.coords.len() != dim {
            return Err(TrajectoryError::DimensionMismatch {
                expected: dim,
                found: p.coords.len(),
            });
        }
    }

    let pairs: Vec<(usize, usize)> = (0..trajectories.len())
        .flat_map(|i| (i + 1..trajectories.len()).map(move |j| (i, j)))
        .collect();
    let per_pair: Vec<Vec<Incidence>> = pairs
        .par_iter()
        .map(|&(i, j)| pair_incidences(&trajectories[i], &trajectories[j], center, tols))
        .collect();
    let incidences: Vec<Incidence> = per_pair.into_iter().flatten().collect();
    Ok(IntersectionReport {
        count: incidences.len(),
        incidences,
    })
}

/// Incidences between the segments of two trajectories.
pub fn pair_incidences(a: &Trajectory, b: &Trajectory, center: &[f64], tols: Tolerances) -> Vec<Incidence> {
    let mut out = Vec::new();
    for (ia, (a0, a1)) in a.segments().enumerate() {
        for (ib, (b0, b1)) in b.segments().enumerate() {
            if let Some((kind, point)) = segment_incidence(&a0.coords, &a1.coords, &b0.coords, &b1.coords, center, tols)
            {
                out.push(Incidence {
                    comp_a: a.component.clone(),
                    seg_a: ia,
                    comp_b: b.component.clone(),
                    seg_b: ib,
                    kind,
                    point,
                });
            }
        }
    }
    out
}

/// Classifies how segment `a0-a1` meets `b0-b1`.
///
/// Collinear segments sharing more than `tol` of length are an overlap and
/// always count. Otherwise the segments count as crossing when they come
/// within `tol` of each other, unless the meeting point lies within
/// `origin_tol` of `center`.
pub fn segment_incidence(
    a0: &[f64],
    a1: &[f64],
    b0: &[f64],
    b1: &[f64],
    center: &[f64],
    tols: Tolerances,
) -> Option<(IncidenceKind, Vec<f64>)> {
    let tol = tols.tol;
    let apart = (0..a0.len()).any(|k| {
        let (alo, ahi) = (a0[k].min(a1[k]), a0[k].max(a1[k]));
        let (blo, bhi) = (b0[k].min(b1[k]), b0[k].max(b1[k]));
        ahi + tol < blo || bhi + tol < alo
    });
    if apart {
        return None;
    }
    let ab = geom::sub(a1, a0);
    let bb = geom::sub(b1, b0);
    let (la, lb) = (geom::norm(&ab), geom::norm(&bb));

    if la > tol && lb > tol {
        let collinear = geom::line_distance(b0, a0, &ab) <= tol
            && geom::line_distance(b1, a0, &ab) <= tol
            && geom::line_distance(a0, b0, &bb) <= tol
            && geom::line_distance(a1, b0, &bb) <= tol;
        if collinear {
            let u = geom::scale(&ab, 1.0 / la);
            let s0 = geom::dot(&geom::sub(b0, a0), &u);
            let s1 = geom::dot(&geom::sub(b1, a0), &u);
            let lo = s0.min(s1).max(0.0);
            let hi = s0.max(s1).min(la);
            if hi - lo > tol {
                let mid = geom::axpy(0.5 * (lo + hi), &u, a0);
                return Some((IncidenceKind::Overlap, mid));
            }
        }
    }

    let crossing = if a0.len() == 2 && la > tol && lb > tol {
        proper_crossing_2d(a0, a1, b0, b1, la, lb, tol)
    } else {
        None
    };
    let point = match crossing {
        Some(p) => p,
        None => {
            let (dist, pa, pb) = geom::segment_closest_points(a0, a1, b0, b1);
            if dist > tol {
                return None;
            }
            geom::midpoint(&pa, &pb)
        }
    };
    if geom::distance(&point, center) <= tols.origin_tol {
        return None;
    }
    Some((IncidenceKind::Cross, point))
}

/// Orientation test with a `tol` guard: each endpoint must sit more than
/// `tol` away from the other segment's supporting line, on opposite sides.
fn proper_crossing_2d(a0: &[f64], a1: &[f64], b0: &[f64], b1: &[f64], la: f64, lb: f64, tol: f64) -> Option<Vec<f64>> {
    let side = |d: f64| if d.abs() <= tol { 0 } else { d.signum() as i32 };
    let d1 = geom::orient2d(a0, a1, b0) / la;
    let d2 = geom::orient2d(a0, a1, b1) / la;
    let d3 = geom::orient2d(b0, b1, a0) / lb;
    let d4 = geom::orient2d(b0, b1, a1) / lb;
    if side(d1) * side(d2) < 0 && side(d3) * side(d4) < 0 {
        let t = d3 / (d3 - d4);
        Some(geom::axpy(t, &geom::sub(a1, a0), a0))
    } else {
        None
    }
}
