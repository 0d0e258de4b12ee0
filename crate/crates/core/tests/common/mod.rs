//! Independent oracles shared by the integration and acceptance suites.
//! None of this code calls into the implementation paths it checks.

#![allow(dead_code)]

use ftdiag_core::netlist::Circuit;
use num_complex::Complex64;

/// V(out)/Vin of the shipped multiple-feedback biquad with a finite-gain
/// op-amp, solved symbolically from the four node equations.
///
/// With P = R1 R2 + R1 R3 + R2 R3:
///   H(s) = -A R2 R4 / [ (A+1) (P s^2 C1 C2 R4 R5 + s C2 (P (R4+R5) + R4 R5 (R1+R2)) + P)
///                       + s C1 R4 P + R4 (R1+R2) ]
pub fn biquad_analytic(c: &Circuit, omega: f64) -> Complex64 {
    let v = |id: &str| c.element(id).unwrap_or_else(|| panic!("missing {id}")).value;
    let (r1, r2, r3, r4, r5) = (v("R1"), v("R2"), v("R3"), v("R4"), v("R5"));
    let (c1, c2, a) = (v("C1"), v("C2"), v("E1"));
    let s = Complex64::new(0.0, omega);
    let p = r1 * r2 + r1 * r3 + r2 * r3;
    let loop_poly = s * s * (c1 * c2 * r4 * r5 * p) + s * (c2 * (p * (r4 + r5) + r4 * r5 * (r1 + r2))) + p;
    let den = loop_poly * (a + 1.0) + s * (c1 * r4 * p) + r4 * (r1 + r2);
    Complex64::new(-a * r2 * r4, 0.0) / den
}

/// Ideal-op-amp limit: -k (R4/Rth) / (s^2 C1 C2 R4 R5 + s C2 (R4 + R5 + R4 R5/Rth) + 1).
pub fn biquad_ideal(c: &Circuit, omega: f64) -> Complex64 {
    let v = |id: &str| c.element(id).unwrap().value;
    let (r1, r2, r3, r4, r5, c1, c2) = (v("R1"), v("R2"), v("R3"), v("R4"), v("R5"), v("C1"), v("C2"));
    let k = r2 / (r1 + r2);
    let rth = r3 + r1 * r2 / (r1 + r2);
    let s = Complex64::new(0.0, omega);
    let den = s * s * (c1 * c2 * r4 * r5) + s * (c2 * (r4 + r5 + r4 * r5 / rth)) + 1.0;
    Complex64::new(-k * r4 / rth, 0.0) / den
}

/// 1 / (1 + jwRC)
pub fn rc_analytic(r: f64, c: f64, omega: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) / Complex64::new(1.0, omega * r * c)
}

/// jwL / (R + jwL), output across the inductor.
pub fn rl_analytic(r: f64, l: f64, omega: f64) -> Complex64 {
    let jwl = Complex64::new(0.0, omega * l);
    jwl / (jwl + r)
}

pub fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

pub const SAMPLES: usize = 10_000;

/// Outcome of densely sampling two 2-D segments.
#[derive(Debug, Clone)]
pub struct Sampled {
    /// Smallest distance between any sample of one and any sample of the other.
    pub min_dist: f64,
    /// Midpoint of the closest sample pair.
    pub point: [f64; 2],
    /// Length of `a` whose samples lie within `tol` (resp. `tol / 10`) of `b`.
    pub run_a: (f64, f64),
    pub run_b: (f64, f64),
    /// Sample spacing of the longer segment.
    pub spacing: f64,
    /// |sin| of the angle between the two directions.
    pub sin_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Cross,
    Overlap,
    Unclear,
}

impl Sampled {
    /// Kind is only decided where the geometry leaves no doubt: transversal
    /// pairs cross, and exactly collinear pairs share a stretch when the
    /// samples lying on the other segment cover clearly more than `tol`.
    pub fn kind(&self, tol: f64) -> OracleKind {
        if self.sin_angle > 0.5 {
            return OracleKind::Cross;
        }
        if self.sin_angle < 1e-9 {
            let (a, b) = (self.run_a.1, self.run_b.1);
            if a > 1.5 * tol && b > 1.5 * tol {
                return OracleKind::Overlap;
            }
            if a < 0.7 * tol || b < 0.7 * tol {
                return OracleKind::Cross;
            }
        }
        OracleKind::Unclear
    }
}

fn lerp(p: [f64; 2], q: [f64; 2], t: f64) -> [f64; 2] {
    [p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// For each of `SAMPLES` points on `p0-p1`, the nearest of `SAMPLES` points
/// on `q0-q1`. The squared distance to the lattice `q(j / (N-1))` is a
/// convex parabola in `j`, so its lattice minimum is at one of the indices
/// bracketing the vertex; scanning a small window around it is exact.
fn nearest_samples(p0: [f64; 2], p1: [f64; 2], q0: [f64; 2], q1: [f64; 2]) -> Vec<(f64, [f64; 2], [f64; 2])> {
    let n = SAMPLES;
    let d = [q1[0] - q0[0], q1[1] - q0[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    (0..n)
        .map(|i| {
            let p = lerp(p0, p1, i as f64 / (n - 1) as f64);
            let centre = if dd > 0.0 {
                let t = ((p[0] - q0[0]) * d[0] + (p[1] - q0[1]) * d[1]) / dd;
                (t * (n - 1) as f64).round().clamp(0.0, (n - 1) as f64) as usize
            } else {
                0
            };
            let lo = centre.saturating_sub(2);
            let hi = (centre + 2).min(n - 1);
            (lo..=hi)
                .map(|j| {
                    let q = lerp(q0, q1, j as f64 / (n - 1) as f64);
                    (dist(p, q), p, q)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
        })
        .collect()
}

pub fn sample_pair(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2], tol: f64) -> Sampled {
    let la = dist(a0, a1);
    let lb = dist(b0, b1);
    let step_a = la / (SAMPLES - 1) as f64;
    let step_b = lb / (SAMPLES - 1) as f64;
    let from_a = nearest_samples(a0, a1, b0, b1);
    let from_b = nearest_samples(b0, b1, a0, a1);
    let run = |v: &[(f64, [f64; 2], [f64; 2])], step: f64| {
        let within = |t: f64| v.iter().filter(|x| x.0 <= t).count() as f64 * step;
        (within(tol), within(tol / 10.0))
    };
    let best = from_a
        .iter()
        .chain(from_b.iter())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    Sampled {
        min_dist: best.0,
        point: [(best.1[0] + best.2[0]) / 2.0, (best.1[1] + best.2[1]) / 2.0],
        run_a: run(&from_a, step_a),
        run_b: run(&from_b, step_b),
        spacing: step_a.max(step_b),
        sin_angle: if la > 0.0 && lb > 0.0 {
            let (da, db) = ([a1[0] - a0[0], a1[1] - a0[1]], [b1[0] - b0[0], b1[1] - b0[1]]);
            (da[0] * db[1] - da[1] * db[0]).abs() / (la * lb)
        } else {
            0.0
        },
    }
}

/// What the oracle decides for one instance, or `None` inside a guard band.
pub fn oracle_verdict(s: &Sampled, tol: f64, origin_tol: f64) -> Option<Option<OracleKind>> {
    if s.min_dist > tol / 10.0 && s.min_dist <= 10.0 * tol + s.spacing {
        return None;
    }
    if s.min_dist > tol {
        return Some(None);
    }
    let kind = s.kind(tol);
    if kind == OracleKind::Overlap {
        return Some(Some(kind));
    }
    let r = (s.point[0].powi(2) + s.point[1].powi(2)).sqrt();
    if r >= origin_tol / 10.0 && r <= origin_tol * 10.0 {
        return None;
    }
    if r < origin_tol / 10.0 {
        // Meets at the golden point; only a shared stretch would count.
        return if kind == OracleKind::Unclear { None } else { Some(None) };
    }
    Some(Some(kind))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Generic,
    Collinear,
    Junction,
    Radiating,
}

pub type Segs = ([f64; 2], [f64; 2], [f64; 2], [f64; 2]);

/// Segment pairs in `[-1, 1]^2`, a quarter from each category.
pub fn instances(seed: u64, n: usize) -> Vec<(Category, Segs)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pt = |rng: &mut rand_chacha::ChaCha8Rng| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    (0..n)
        .map(|k| match k % 4 {
            0 => (
                Category::Generic,
                (pt(&mut rng), pt(&mut rng), pt(&mut rng), pt(&mut rng)),
            ),
            1 => {
                let p = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
                let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                let u = [th.cos(), th.sin()];
                // Half of these are shifted sideways off the shared line.
                let off = if rng.gen_bool(0.5) {
                    0.0
                } else {
                    rng.gen_range(0.2..0.6)
                };
                let at = |t: f64, o: f64| [p[0] + t * u[0] - o * u[1], p[1] + t * u[1] + o * u[0]];
                let (s0, s1, t0, t1) = (
                    rng.gen_range(-0.7..0.0),
                    rng.gen_range(0.0..0.7),
                    rng.gen_range(-0.7..0.7),
                    rng.gen_range(-0.7..0.7),
                );
                (
                    Category::Collinear,
                    (at(s0, 0.0), at(s1, 0.0), at(t0, off), at(t1, off)),
                )
            }
            2 => {
                let (a0, a1) = (pt(&mut rng), pt(&mut rng));
                let t: f64 = rng.gen_range(0.0..1.0);
                let b0 = lerp(a0, a1, if rng.gen_bool(0.3) { 1.0 } else { t });
                (Category::Junction, (a0, a1, b0, pt(&mut rng)))
            }
            _ => {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                // Some share a direction, the rest are at least 30 degrees apart.
                let dth = if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(
                        std::f64::consts::FRAC_PI_6..(2.0 * std::f64::consts::PI - std::f64::consts::FRAC_PI_6),
                    )
                };
                let (ra, rb): (f64, f64) = (rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0));
                let a1 = [ra * th.cos(), ra * th.sin()];
                let b1 = [rb * (th + dth).cos(), rb * (th + dth).sin()];
                (Category::Radiating, ([0.0, 0.0], a1, [0.0, 0.0], b1))
            }
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Equivalence {
    pub compared: usize,
    pub guarded: usize,
    pub mismatches: Vec<String>,
}

/// Compares the fast predicate with the sampling oracle on every instance
/// outside the guard bands.
pub fn check_equivalence(insts: &[(Category, Segs)], tol: f64, origin_tol: f64) -> Equivalence {
    use ftdiag_core::trajectory::{segment_incidence, IncidenceKind, Tolerances};
    let tols = Tolerances { tol, origin_tol };
    let mut eq = Equivalence::default();
    for (cat, (a0, a1, b0, b1)) in insts {
        let s = sample_pair(*a0, *a1, *b0, *b1, tol);
        let Some(expected) = oracle_verdict(&s, tol, origin_tol) else {
            eq.guarded += 1;
            continue;
        };
        eq.compared += 1;
        let got = segment_incidence(a0, a1, b0, b1, &[0.0, 0.0], tols).map(|(k, _)| k);
        let agree = matches!(
            (expected, got),
            (None, None)
                | (Some(OracleKind::Overlap), Some(IncidenceKind::Overlap))
                | (Some(OracleKind::Cross), Some(IncidenceKind::Cross))
                | (Some(OracleKind::Unclear), Some(_))
        );
        if !agree {
            eq.mismatches.push(format!(
                "{cat:?} {a0:?} {a1:?} {b0:?} {b1:?}: oracle {expected:?}, predicate {got:?}"
            ));
        }
    }
    eq
}

/// Exhaustive search over ordered pairs `i < j` of `grid`. Returns the
/// smallest count, the first pair reaching it, and how many pairs do.
pub fn grid_oracle(
    circuit: &Circuit,
    config: &ftdiag_core::FaultConfig,
    grid: &[f64],
    tols: ftdiag_core::Tolerances,
) -> (usize, (usize, usize), usize) {
    use ftdiag_core::trajectory::{build_trajectories, count_intersections_with, TestVector};
    use rayon::prelude::*;
    let pairs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (i + 1..grid.len()).map(move |j| (i, j)))
        .collect();
    let counts: Vec<usize> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let tv = TestVector::new(vec![grid[i], grid[j]]).unwrap();
            let trajs = build_trajectories(circuit, config, &tv).unwrap();
            count_intersections_with(&trajs, tols).unwrap().count
        })
        .collect();
    let best = *counts.iter().min().unwrap();
    let first = pairs[counts.iter().position(|&c| c == best).unwrap()];
    let ties = counts.iter().filter(|&&c| c == best).count();
    (best, first, ties)
}
