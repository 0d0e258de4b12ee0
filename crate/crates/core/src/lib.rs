//! Fault-trajectory diagnosis of linear analog circuits.
//!
//! The pipeline runs netlist → AC simulation → fault dictionary →
//! signature-space trajectories → genetic test-frequency search →
//! nearest-segment classification.

pub mod acsim;
pub mod circuits;
pub mod diagnose;
pub mod evolve;
pub mod export;
pub mod faultlib;
pub mod geom;
pub mod netlist;
pub mod trajectory;

pub use acsim::{solve_ac, sweep, FrequencyUnit, ResponseCurve, SimError};
pub use diagnose::{classify, project, DiagnoseOptions, DiagnosisResult, Hypothesis};
pub use evolve::{fitness, roulette_select, run_ga, step_generation, GaConfig, GaLog};
pub use faultlib::{build_dictionary, enumerate_faults, evaluate_at, FaultConfig, FaultDictionary, FaultSpec};
pub use netlist::{parse_netlist, Circuit, Element, ElementKind, NetlistError};
pub use trajectory::{
    build_trajectories, count_intersections, signature, IntersectionReport, TestVector, Tolerances, Trajectory,
};
