//! AC small-signal analysis by modified nodal analysis.
//!
//! Unknowns are the non-ground node voltages (in sorted node-name order)
//! followed by one branch current per voltage source, VCVS and inductor
//! (in netlist order). All frequencies here are angular (rad/s); use
//! [`FrequencyUnit`] to convert at the edges.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::netlist::{Circuit, ElementKind, GROUND};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("frequency grid is not strictly increasing at index {0}")]
    GridNotIncreasing(usize),
    #[error("singular MNA system at {frequency} rad/s (pivot ratio {pivot_ratio:e}); the circuit is ill-formed")]
    Singular { frequency: f64, pivot_ratio: f64 },
    #[error("output response is zero at {0} rad/s")]
    ZeroResponse(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyUnit {
    #[default]
    RadPerSec,
    Hertz,
}

impl FrequencyUnit {
    pub fn to_angular(self, f: f64) -> f64 {
        match self {
            Self::RadPerSec => f,
            Self::Hertz => 2.0 * std::f64::consts::PI * f,
        }
    }

    pub fn from_angular(self, w: f64) -> f64 {
        match self {
            Self::RadPerSec => w,
            Self::Hertz => w / (2.0 * std::f64::consts::PI),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub frequencies: Vec<f64>,
    pub magnitudes_db: Vec<f64>,
}

impl ResponseCurve {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

pub fn magnitude_db(gain: Complex64) -> f64 {
    20.0 * gain.norm().log10()
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<(), SimError> {
    if grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    for (i, &f) in grid.iter().enumerate() {
        if !(f > 0.0 && f.is_finite()) {
            return Err(SimError::BadFrequency(f));
        }
        if i > 0 && f <= grid[i - 1] {
            return Err(SimError::GridNotIncreasing(i));
        }
    }
    Ok(())
}

struct Mna {
    n: usize,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl Mna {
    fn new(n: usize) -> Self {
        Self {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
            b: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    fn add(&mut self, r: Option<usize>, c: Option<usize>, v: Complex64) {
        if let (Some(r), Some(c)) = (r, c) {
            self.a[r * self.n + c] += v;
        }
    }

    fn stamp_admittance(&mut self, p: Option<usize>, m: Option<usize>, y: Complex64) {
        self.add(p, p, y);
        self.add(m, m, y);
        self.add(p, m, -y);
        self.add(m, p, -y);
    }

    /// Branch current `k` flows from `p` through the element to `m`.
    fn stamp_branch_incidence(&mut self, p: Option<usize>, m: Option<usize>, k: usize) {
        let one = Complex64::new(1.0, 0.0);
        self.add(p, Some(k), one);
        self.add(m, Some(k), -one);
        self.add(Some(k), p, one);
        self.add(Some(k), m, -one);
    }
}

/// Complex gain V(output) / V(input source) at angular frequency `omega`.
pub fn solve_ac(circuit: &Circuit, omega: f64) -> Result<Complex64, SimError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(SimError::BadFrequency(omega));
    }
    let index: BTreeMap<&str, usize> = circuit
        .nodes()
        .iter()
        .filter(|n| n.as_str() != GROUND)
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let node = |name: &str| index.get(name).copied();
    let n_nodes = index.len();
    let n_branches = circuit
        .elements()
        .iter()
        .filter(|e| matches!(e.kind, ElementKind::VSource | ElementKind::Vcvs | ElementKind::Inductor))
        .count();
    let mut mna = Mna::new(n_nodes + n_branches);
    let jw = Complex64::new(0.0, omega);

    let mut branch = n_nodes;
    let mut drive = 1.0;
    for e in circuit.elements() {
        let p = node(&e.nodes[0]);
        let m = node(&e.nodes[1]);
        match e.kind {
            ElementKind::Resistor => mna.stamp_admittance(p, m, Complex64::new(1.0 / e.value, 0.0)),
            ElementKind::Capacitor => mna.stamp_admittance(p, m, jw * e.value),
            ElementKind::Inductor => {
                mna.stamp_branch_incidence(p, m, branch);
                mna.add(Some(branch), Some(branch), -jw * e.value);
                branch += 1;
            }
            ElementKind::VSource => {
                mna.stamp_branch_incidence(p, m, branch);
                if e.id == circuit.input_source() {
                    drive = e.value;
                    mna.b[branch] = Complex64::new(e.value, 0.0);
                }
                branch += 1;
            }
            ElementKind::Vcvs => {
                mna.stamp_branch_incidence(p, m, branch);
                let ip = node(&e.nodes[2]);
                let im = node(&e.nodes[3]);
                let g = Complex64::new(e.value, 0.0);
                mna.add(Some(branch), ip, -g);
                mna.add(Some(branch), im, g);
                branch += 1;
            }
        }
    }

    let Mna { n, mut a, mut b } = mna;
    lu_solve(n, &mut a, &mut b).map_err(|pivot_ratio| SimError::Singular {
        frequency: omega,
        pivot_ratio,
    })?;
    let out = node(circuit.output_node()).expect("output node validated at parse time");
    Ok(b[out] / drive)
}

/// In-place LU with partial pivoting; the solution overwrites `b`.
/// On failure returns the smallest-to-largest pivot magnitude ratio seen.
fn lu_solve(n: usize, a: &mut [Complex64], b: &mut [Complex64]) -> Result<(), f64> {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(0.0);
    }
    let threshold = scale * n as f64 * f64::EPSILON;
    let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);

    for k in 0..n {
        let (piv, mag) =
            (k..n)
                .map(|r| (r, a[r * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        pmin = pmin.min(mag);
        pmax = pmax.max(mag);
        if mag <= threshold {
            return Err(pmin / pmax.max(f64::MIN_POSITIVE));
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for r in k + 1..n {
            let f = a[r * n + k] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[r * n + k] = f;
            for c in k + 1..n {
                let t = a[k * n + c];
                a[r * n + c] -= f * t;
            }
            let t = b[k];
            b[r] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(())
}

/// dB magnitude of the gain at `omega`, rejecting a zero response.
pub fn magnitude_db_at(circuit: &Circuit, omega: f64) -> Result<f64, SimError> {
    let db = magnitude_db(solve_ac(circuit, omega)?);
    if db.is_finite() {
        Ok(db)
    } else {
        Err(SimError::ZeroResponse(omega))
    }
}

pub fn sweep(circuit: &Circuit, grid: &[f64]) -> Result<ResponseCurve, SimError> {
    validate_grid(grid)?;
    let magnitudes_db = grid
        .par_iter()
        .map(|&w| magnitude_db_at(circuit, w))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResponseCurve {
        frequencies: grid.to_vec(),
        magnitudes_db,
    })
}
