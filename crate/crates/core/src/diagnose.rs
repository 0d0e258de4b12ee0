//! Fault classification by perpendicular distance to trajectory segments.
//!
//! A query signature is matched per component: among the segments the
//! query admits an orthogonal drop onto, the nearest wins. A component
//! whose trajectory admits no such drop still gets ranked by its nearest
//! non-golden vertex, flagged `via_perpendicular = false`. The deviation
//! estimate interpolates linearly along the matched segment; it extends the
//! component identification and is reported as an estimate only.

use thiserror::Error;

use crate::geom;
use crate::trajectory::{Trajectory, DEFAULT_TOL};

pub const DEFAULT_AMBIGUITY_MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnoseError {
    #[error("zero-length segment")]
    ZeroLengthSegment,
    #[error("dimension mismatch: query has {query}, trajectories have {trajectory}")]
    DimensionMismatch { query: usize, trajectory: usize },
    #[error("no trajectories to classify against")]
    NoTrajectories,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Parameter of the foot, clamped to `[0, 1]`.
    pub t: f64,
    pub t_unclamped: f64,
    pub distance: f64,
    pub has_perpendicular: bool,
    pub foot: Vec<f64>,
}

/// Orthogonal projection of `point` onto segment `a-b`.
pub fn project(point: &[f64], a: &[f64], b: &[f64]) -> Result<Projection, DiagnoseError> {
    if point.len() != a.len() || a.len() != b.len() {
        return Err(DiagnoseError::DimensionMismatch {
            query: point.len(),
            trajectory: a.len(),
        });
    }
    let ab = geom::sub(b, a);
    let len2 = geom::dot(&ab, &ab);
    if len2 == 0.0 {
        return Err(DiagnoseError::ZeroLengthSegment);
    }
    let t_unclamped = geom::dot(&geom::sub(point, a), &ab) / len2;
    let t = t_unclamped.clamp(0.0, 1.0);
    let foot = geom::axpy(t, &ab, a);
    Ok(Projection {
        t,
        t_unclamped,
        distance: geom::distance(point, &foot),
        has_perpendicular: (0.0..=1.0).contains(&t_unclamped),
        foot,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub component: String,
    pub distance: f64,
    pub estimated_deviation: f64,
    pub segment: usize,
    pub via_perpendicular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisResult {
    /// The query sits on the golden point: no fault.
    pub nominal: bool,
    /// Ascending by distance.
    pub hypotheses: Vec<Hypothesis>,
    pub ambiguous: bool,
}

impl DiagnosisResult {
    pub fn top(&self) -> Option<&Hypothesis> {
        self.hypotheses.first()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnoseOptions {
    pub ambiguity_margin: f64,
    pub origin_tol: f64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            ambiguity_margin: DEFAULT_AMBIGUITY_MARGIN,
            origin_tol: DEFAULT_TOL,
        }
    }
}

pub fn classify(
    point: &[f64],
    trajectories: &[Trajectory],
    opts: DiagnoseOptions,
) -> Result<DiagnosisResult, DiagnoseError> {
    if trajectories.is_empty() {
        return Err(DiagnoseError::NoTrajectories);
    }
    for t in trajectories {
        if let Some(p) = t.points.iter().find(|p| p.coords.len() != point.len()) {
            return Err(DiagnoseError::DimensionMismatch {
                query: point.len(),
                trajectory: p.coords.len(),
            });
        }
    }
    if geom::norm(point) <= opts.origin_tol {
        return Ok(DiagnosisResult {
            nominal: true,
            hypotheses: Vec::new(),
            ambiguous: false,
        });
    }

    let mut hypotheses = trajectories
        .iter()
        .filter_map(|t| best_for_trajectory(point, t, opts.origin_tol))
        .collect::<Vec<_>>();
    hypotheses.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let ambiguous = hypotheses.len() >= 2 && hypotheses[1].distance - hypotheses[0].distance < opts.ambiguity_margin;
    Ok(DiagnosisResult {
        nominal: false,
        hypotheses,
        ambiguous,
    })
}

fn best_for_trajectory(point: &[f64], traj: &Trajectory, origin_tol: f64) -> Option<Hypothesis> {
    let mut best: Option<Hypothesis> = None;
    for (i, (a, b)) in traj.segments().enumerate() {
        let Ok(p) = project(point, &a.coords, &b.coords) else {
            continue;
        };
        if !p.has_perpendicular || geom::norm(&p.foot) <= origin_tol {
            continue;
        }
        if best.as_ref().is_none_or(|h| p.distance < h.distance) {
            best = Some(Hypothesis {
                component: traj.component.clone(),
                distance: p.distance,
                estimated_deviation: a.deviation + p.t * (b.deviation - a.deviation),
                segment: i,
                via_perpendicular: true,
            });
        }
    }
    if best.is_some() {
        return best;
    }

    // Nearest vertex other than the golden point.
    let last_segment = traj.segment_count().saturating_sub(1);
    traj.points
        .iter()
        .enumerate()
        .filter(|(_, p)| geom::norm(&p.coords) > origin_tol)
        .map(|(i, p)| (i, p, geom::distance(point, &p.coords)))
        .min_by(|x, y| x.2.total_cmp(&y.2))
        .map(|(i, p, d)| Hypothesis {
            component: traj.component.clone(),
            distance: d,
            estimated_deviation: p.deviation,
            segment: i.min(last_segment),
            via_perpendicular: false,
        })
}
