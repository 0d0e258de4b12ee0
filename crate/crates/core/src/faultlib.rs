//! Parametric fault universe and fault simulation.

use rayon::prelude::*;
use thiserror::Error;

use crate::acsim::{self, ResponseCurve, SimError};
use crate::netlist::{Circuit, NetlistError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaultError {
    #[error("fault config has no target components")]
    NoTargets,
    #[error("invalid fault range: need 0 < range_low ({low}) < 1 < range_high ({high})")]
    BadRange { low: f64, high: f64 },
    #[error("invalid deviation step {0}")]
    BadStep(f64),
    #[error("range {low}..{high} is not aligned to step {step}")]
    Misaligned { low: f64, high: f64, step: f64 },
    #[error("duplicate target `{0}`")]
    DuplicateTarget(String),
    #[error("target `{0}` is not a resistor, capacitor or inductor of the circuit")]
    BadTarget(String),
    #[error("test vector is empty")]
    EmptyVector,
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("{fault}: {source}")]
    Simulation {
        fault: String,
        #[source]
        source: SimError,
    },
}

/// A single-component parametric deviation, e.g. `R3` at `+0.2` (+20 %).
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub component: String,
    pub deviation: f64,
}

impl FaultSpec {
    pub fn new(component: impl Into<String>, deviation: f64) -> Self {
        Self {
            component: component.into(),
            deviation,
        }
    }
}

impl std::fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{:+}", self.component, self.deviation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultConfig {
    pub targets: Vec<String>,
    /// Lowest value multiplier, e.g. 0.6 for 60 % of nominal.
    pub range_low: f64,
    pub range_high: f64,
    pub step: f64,
}

const ALIGN_TOL: f64 = 1e-9;

impl FaultConfig {
    pub fn new(targets: Vec<String>) -> Self {
        Self {
            targets,
            range_low: 0.6,
            range_high: 1.4,
            step: 0.1,
        }
    }

    /// Every passive element of the circuit, default range and step.
    pub fn all_passives(circuit: &Circuit) -> Self {
        Self::new(circuit.passive_ids())
    }

    /// Checks the numeric invariants and returns the (below, above) step counts.
    fn steps(&self) -> Result<(i64, i64), FaultError> {
        let (low, high, step) = (self.range_low, self.range_high, self.step);
        if !(low > 0.0 && low < 1.0 && high > 1.0 && high.is_finite()) {
            return Err(FaultError::BadRange { low, high });
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(FaultError::BadStep(step));
        }
        let below = (1.0 - low) / step;
        let above = (high - 1.0) / step;
        let (nb, na) = (below.round(), above.round());
        let misaligned = (nb * step - (1.0 - low)).abs() > ALIGN_TOL
            || (na * step - (high - 1.0)).abs() > ALIGN_TOL
            || nb < 1.0
            || na < 1.0;
        if misaligned {
            return Err(FaultError::Misaligned { low, high, step });
        }
        Ok((nb as i64, na as i64))
    }

    pub fn validate(&self) -> Result<(), FaultError> {
        if self.targets.is_empty() {
            return Err(FaultError::NoTargets);
        }
        for (i, t) in self.targets.iter().enumerate() {
            if self.targets[..i].contains(t) {
                return Err(FaultError::DuplicateTarget(t.clone()));
            }
        }
        self.steps().map(|_| ())
    }

    /// Also checks that every target is a passive element of `circuit`.
    pub fn validate_for(&self, circuit: &Circuit) -> Result<(), FaultError> {
        self.validate()?;
        for t in &self.targets {
            match circuit.element(t) {
                Some(e) if e.kind.is_passive() => {}
                _ => return Err(FaultError::BadTarget(t.clone())),
            }
        }
        Ok(())
    }

    /// The non-zero deviation grid in ascending order.
    pub fn deviations(&self) -> Result<Vec<f64>, FaultError> {
        let (below, above) = self.steps()?;
        Ok((-below..=above)
            .filter(|&k| k != 0)
            .map(|k| snap(k as f64 * self.step))
            .collect())
    }
}

// Strips accumulated binary noise (3 * 0.1 = 0.30000000000000004).
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// All single faults, ordered by target then ascending deviation.
pub fn enumerate_faults(config: &FaultConfig) -> Result<Vec<FaultSpec>, FaultError> {
    config.validate()?;
    let devs = config.deviations()?;
    Ok(config
        .targets
        .iter()
        .flat_map(|t| devs.iter().map(move |&d| FaultSpec::new(t.clone(), d)))
        .collect())
}

/// The circuit variant for `fault`, or the nominal circuit when `None`.
pub fn faulty_circuit(circuit: &Circuit, fault: Option<&FaultSpec>) -> Result<Circuit, FaultError> {
    match fault {
        None => Ok(circuit.clone()),
        Some(f) => Ok(circuit.apply_deviation(&f.component, f.deviation)?),
    }
}

/// dB magnitudes of the (possibly faulty) circuit at each angular frequency.
pub fn evaluate_at(circuit: &Circuit, fault: Option<&FaultSpec>, frequencies: &[f64]) -> Result<Vec<f64>, FaultError> {
    if frequencies.is_empty() {
        return Err(FaultError::EmptyVector);
    }
    let variant = faulty_circuit(circuit, fault)?;
    frequencies
        .iter()
        .map(|&w| acsim::magnitude_db_at(&variant, w))
        .collect::<Result<_, _>>()
        .map_err(|source| FaultError::Simulation {
            fault: label(fault),
            source,
        })
}

fn label(fault: Option<&FaultSpec>) -> String {
    fault.map_or_else(|| "golden circuit".to_string(), |f| format!("fault {f}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultDictionary {
    pub golden: ResponseCurve,
    /// In [`enumerate_faults`] order.
    pub entries: Vec<(FaultSpec, ResponseCurve)>,
    pub config: FaultConfig,
}

impl FaultDictionary {
    pub fn get(&self, component: &str, deviation: f64) -> Option<&ResponseCurve> {
        self.entries
            .iter()
            .find(|(f, _)| f.component == component && (f.deviation - deviation).abs() < ALIGN_TOL)
            .map(|(_, c)| c)
    }
}

pub fn build_dictionary(circuit: &Circuit, config: &FaultConfig, grid: &[f64]) -> Result<FaultDictionary, FaultError> {
    config.validate_for(circuit)?;
    let faults = enumerate_faults(config)?;
    let sim = |fault: Option<&FaultSpec>| -> Result<ResponseCurve, FaultError> {
        let variant = faulty_circuit(circuit, fault)?;
        acsim::sweep(&variant, grid).map_err(|source| FaultError::Simulation {
            fault: label(fault),
            source,
        })
    };
    let golden = sim(None)?;
    let curves = faults.par_iter().map(|f| sim(Some(f))).collect::<Result<Vec<_>, _>>()?;
    Ok(FaultDictionary {
        golden,
        entries: faults.into_iter().zip(curves).collect(),
        config: config.clone(),
    })
}
