//! CSV exports. Every float is written with 17 significant digits so files
//! reproduce bit-for-bit and parse back to the same values.

use std::io::{Read, Write};

use thiserror::Error;

use crate::acsim::{FrequencyUnit, ResponseCurve};
use crate::diagnose::DiagnosisResult;
use crate::evolve::GaLog;
use crate::faultlib::FaultDictionary;
use crate::trajectory::{IntersectionReport, SignaturePoint, Trajectory};

pub const GOLDEN_LABEL: &str = "__golden__";
pub const NOMINAL_LABEL: &str = "__nominal__";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("no trajectory rows")]
    Empty,
}

/// `{:.16e}`: one leading digit plus sixteen decimals.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_curve<W: Write>(w: W, curve: &ResponseCurve, unit: FrequencyUnit) -> Result<(), ExportError> {
    let mut out = writer(w);
    out.write_record(["freq", "mag_db"])?;
    for (f, m) in curve.frequencies.iter().zip(&curve.magnitudes_db) {
        out.write_record([fmt17(unit.from_angular(*f)), fmt17(*m)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dictionary<W: Write>(w: W, dict: &FaultDictionary, unit: FrequencyUnit) -> Result<(), ExportError> {
    let mut out = writer(w);
    out.write_record(["component", "deviation", "freq", "mag_db"])?;
    let groups = std::iter::once((GOLDEN_LABEL, 0.0, &dict.golden))
        .chain(dict.entries.iter().map(|(f, c)| (f.component.as_str(), f.deviation, c)));
    for (name, dev, curve) in groups {
        for (f, m) in curve.frequencies.iter().zip(&curve.magnitudes_db) {
            out.write_record([name.to_string(), fmt17(dev), fmt17(unit.from_angular(*f)), fmt17(*m)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_trajectories<W: Write>(w: W, trajectories: &[Trajectory]) -> Result<(), ExportError> {
    let mut out = writer(w);
    let dim = trajectories.first().map_or(0, Trajectory::dimension);
    let mut header = vec!["component".to_string(), "deviation".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    out.write_record(&header)?;
    for t in trajectories {
        for p in &t.points {
            let mut row = vec![t.component.clone(), fmt17(p.deviation)];
            row.extend(p.coords.iter().map(|c| fmt17(*c)));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `component,deviation,x1,...,xn` rows back into trajectories,
/// grouping consecutive rows by component.
pub fn read_trajectories<R: Read>(r: R) -> Result<Vec<Trajectory>, ExportError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "component" || &headers[1] != "deviation" {
        return Err(ExportError::Malformed {
            row: 0,
            reason: "expected header `component,deviation,x1,...`".into(),
        });
    }
    let mut out: Vec<Trajectory> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let num = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| ExportError::Malformed {
                row,
                reason: format!("`{s}` is not a number"),
            })
        };
        let point = SignaturePoint {
            deviation: num(&rec[1])?,
            coords: rec.iter().skip(2).map(num).collect::<Result<_, _>>()?,
        };
        match out.last_mut() {
            Some(t) if t.component == rec[0] => t.points.push(point),
            _ => out.push(Trajectory {
                component: rec[0].to_string(),
                points: vec![point],
                degenerate: false,
            }),
        }
    }
    if out.is_empty() {
        return Err(ExportError::Empty);
    }
    Ok(out)
}

pub fn write_incidences<W: Write>(w: W, report: &IntersectionReport, dim: usize) -> Result<(), ExportError> {
    let mut out = writer(w);
    let mut header: Vec<String> = ["comp_a", "seg_a", "comp_b", "seg_b", "kind"]
        .map(String::from)
        .to_vec();
    if dim == 2 {
        header.extend(["px".to_string(), "py".to_string()]);
    } else {
        header.extend((1..=dim).map(|i| format!("p{i}")));
    }
    out.write_record(&header)?;
    for inc in &report.incidences {
        let mut row = vec![
            inc.comp_a.clone(),
            inc.seg_a.to_string(),
            inc.comp_b.clone(),
            inc.seg_b.to_string(),
            inc.kind.as_str().to_string(),
        ];
        row.extend(inc.point.iter().map(|c| fmt17(*c)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per generation; the fitness and frequency columns track the
/// best-so-far individual, so `best_fitness` never decreases.
pub fn write_ga_log<W: Write>(w: W, log: &GaLog, unit: FrequencyUnit) -> Result<(), ExportError> {
    let mut out = writer(w);
    let n = log.records.first().map_or(0, |r| r.best.genes.len());
    let mut header: Vec<String> = ["generation", "best_fitness", "mean_fitness"]
        .map(String::from)
        .to_vec();
    header.extend((1..=n).map(|i| format!("best_f{i}")));
    out.write_record(&header)?;
    for r in &log.records {
        let mut row = vec![
            r.generation.to_string(),
            fmt17(r.best_so_far.fitness),
            fmt17(r.mean_fitness),
        ];
        row.extend(
            r.best_so_far
                .chromosome
                .frequencies()
                .iter()
                .map(|f| fmt17(unit.from_angular(*f))),
        );
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_diagnosis<W: Write>(w: W, result: &DiagnosisResult) -> Result<(), ExportError> {
    let mut out = writer(w);
    out.write_record(["rank", "component", "distance_db", "est_deviation", "via_perpendicular"])?;
    if result.nominal {
        out.write_record(["1", NOMINAL_LABEL, &fmt17(0.0), &fmt17(0.0), "false"])?;
    }
    for (i, h) in result.hypotheses.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            h.component.clone(),
            fmt17(h.distance),
            fmt17(h.estimated_deviation),
            h.via_perpendicular.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Human-readable ranking.
pub fn diagnosis_report(result: &DiagnosisResult) -> String {
    if result.nominal {
        return "nominal / no fault\n".to_string();
    }
    let mut s = String::new();
    for (i, h) in result.hypotheses.iter().enumerate() {
        s.push_str(&format!(
            "{:>2}. {:<8} distance {:.6} dB  est. deviation {:+.3} (interpolated){}\n",
            i + 1,
            h.component,
            h.distance,
            h.estimated_deviation,
            if h.via_perpendicular {
                ""
            } else {
                "  [nearest vertex, no perpendicular]"
            }
        ));
    }
    if result.ambiguous {
        s.push_str("warning: top two hypotheses are within the ambiguity margin\n");
    }
    s
}
