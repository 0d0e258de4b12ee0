//! Run configuration: built-in defaults, then an optional JSON file, then
//! command-line flags. Every key of the file has a flag of the same name.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use ftdiag_core::acsim::{self, FrequencyUnit};
use ftdiag_core::circuits;
use ftdiag_core::evolve::GaConfig;
use ftdiag_core::trajectory::Tolerances;
use ftdiag_core::{parse_netlist, Circuit, DiagnoseOptions, FaultConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Netlist file; the shipped biquad when absent.
    pub netlist: Option<PathBuf>,
    /// Components to fault; every passive element when absent.
    pub targets: Option<Vec<String>>,
    pub range_low: f64,
    pub range_high: f64,
    pub step: f64,
    /// `rad/s` or `hz`; applies to every frequency read or written.
    pub unit: String,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid: usize,
    pub grid_log: bool,
    pub population: usize,
    pub generations: usize,
    pub reproduction_rate: f64,
    pub mutation_rate: f64,
    pub n_frequencies: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub seed: u64,
    pub workers: usize,
    pub tol: f64,
    pub origin_tol: f64,
    pub ambiguity_margin: f64,
    pub out_dir: PathBuf,
    /// Test vector read by `diagnose`; `<out-dir>/best_vector.json` when absent.
    pub vector: Option<PathBuf>,
    /// Trajectory table read by `plot`; `<out-dir>/trajectories.csv` when absent.
    pub trajectories: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ga = GaConfig::default();
        let fc = FaultConfig::new(Vec::new());
        Self {
            netlist: None,
            targets: None,
            range_low: fc.range_low,
            range_high: fc.range_high,
            step: fc.step,
            unit: "rad/s".into(),
            grid_min: 0.01,
            grid_max: 100.0,
            grid: 201,
            grid_log: true,
            population: ga.population_size,
            generations: ga.generations,
            reproduction_rate: ga.reproduction_rate,
            mutation_rate: ga.mutation_rate,
            n_frequencies: ga.n_frequencies,
            f_min: ga.f_min,
            f_max: ga.f_max,
            seed: ga.seed,
            workers: ga.workers,
            tol: ftdiag_core::trajectory::DEFAULT_TOL,
            origin_tol: ftdiag_core::trajectory::DEFAULT_TOL,
            ambiguity_margin: ftdiag_core::diagnose::DEFAULT_AMBIGUITY_MARGIN,
            out_dir: PathBuf::from("."),
            vector: None,
            trajectories: None,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Comma-separated component ids
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    #[arg(long)]
    pub range_low: Option<f64>,
    #[arg(long)]
    pub range_high: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// rad/s or hz
    #[arg(long)]
    pub unit: Option<String>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Sweep points
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub grid_log: Option<bool>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub reproduction_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub n_frequencies: Option<usize>,
    #[arg(long)]
    pub f_min: Option<f64>,
    #[arg(long)]
    pub f_max: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub origin_tol: Option<f64>,
    #[arg(long)]
    pub ambiguity_margin: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub vector: Option<PathBuf>,
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
}

/// A rejected configuration, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($f:ident),*) => {
        $(if let Some(v) = $ov.$f.clone() { $cfg.$f = v; })*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    /// Defaults, then `--config`, then the remaining flags.
    pub fn load(ov: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match &ov.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
                Self::from_json(&text)?
            }
            None => Self::default(),
        };
        if ov.netlist.is_some() {
            cfg.netlist = ov.netlist.clone();
        }
        if ov.targets.is_some() {
            cfg.targets = ov.targets.clone();
        }
        if ov.vector.is_some() {
            cfg.vector = ov.vector.clone();
        }
        if ov.trajectories.is_some() {
            cfg.trajectories = ov.trajectories.clone();
        }
        apply!(
            cfg,
            ov,
            range_low,
            range_high,
            step,
            unit,
            grid_min,
            grid_max,
            grid,
            grid_log,
            population,
            generations,
            reproduction_rate,
            mutation_rate,
            n_frequencies,
            f_min,
            f_max,
            seed,
            workers,
            tol,
            origin_tol,
            ambiguity_margin,
            out_dir
        );
        Ok(cfg)
    }

    pub fn frequency_unit(&self) -> Result<FrequencyUnit, ConfigError> {
        parse_unit(&self.unit)
            .ok_or_else(|| ConfigError::new("unit", format!("`{}` is not `rad/s` or `hz`", self.unit)))
    }

    /// Checks every numeric field; file and netlist checks happen in
    /// [`RunConfig::circuit`].
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.frequency_unit()?;
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
            }
        };
        self.fault_config(Vec::new()).map(|_| ())?;
        positive("grid-min", self.grid_min)?;
        positive("grid-max", self.grid_max)?;
        if self.grid_min >= self.grid_max {
            return Err(ConfigError::new("grid-max", "must exceed grid-min"));
        }
        if self.grid < 2 {
            return Err(ConfigError::new("grid", "need at least 2 points"));
        }
        if self.population < 2 {
            return Err(ConfigError::new("population", "must be at least 2"));
        }
        for (field, v) in [
            ("reproduction-rate", self.reproduction_rate),
            ("mutation-rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::new(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.n_frequencies == 0 {
            return Err(ConfigError::new("n-frequencies", "must be at least 1"));
        }
        positive("f-min", self.f_min)?;
        positive("f-max", self.f_max)?;
        if self.f_min >= self.f_max {
            return Err(ConfigError::new("f-max", "must exceed f-min"));
        }
        positive("tol", self.tol)?;
        positive("origin-tol", self.origin_tol)?;
        if !(self.ambiguity_margin >= 0.0 && self.ambiguity_margin.is_finite()) {
            return Err(ConfigError::new("ambiguity-margin", "must be non-negative and finite"));
        }
        self.ga_config()?
            .validate()
            .map_err(|e| ConfigError::new("ga", e.to_string()))?;
        Ok(())
    }

    /// Loads the circuit and checks the targets against it.
    pub fn circuit(&self) -> Result<(Circuit, FaultConfig), ConfigError> {
        let circuit = match &self.netlist {
            None => circuits::biquad(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::new("netlist", format!("cannot read {}: {e}", path.display())))?;
                parse_netlist(&text).map_err(|e| ConfigError::new("netlist", format!("{}: {e}", path.display())))?
            }
        };
        let targets = self.targets.clone().unwrap_or_else(|| circuit.passive_ids());
        let fc = self.fault_config(targets)?;
        fc.validate_for(&circuit)
            .map_err(|e| ConfigError::new("targets", e.to_string()))?;
        Ok((circuit, fc))
    }

    fn fault_config(&self, targets: Vec<String>) -> Result<FaultConfig, ConfigError> {
        let fc = FaultConfig {
            targets,
            range_low: self.range_low,
            range_high: self.range_high,
            step: self.step,
        };
        if fc.targets.is_empty() {
            // Range and step only; targets are checked against the circuit.
            let probe = FaultConfig {
                targets: vec!["_".into()],
                ..fc.clone()
            };
            probe
                .validate()
                .map_err(|e| ConfigError::new(range_field(&e), e.to_string()))?;
        } else {
            fc.validate()
                .map_err(|e| ConfigError::new(range_field(&e), e.to_string()))?;
        }
        Ok(fc)
    }

    /// Sweep grid in rad/s.
    pub fn grid_angular(&self) -> Result<Vec<f64>, ConfigError> {
        let unit = self.frequency_unit()?;
        let (lo, hi) = (unit.to_angular(self.grid_min), unit.to_angular(self.grid_max));
        Ok(if self.grid_log {
            acsim::log_grid(lo, hi, self.grid)
        } else {
            acsim::linear_grid(lo, hi, self.grid)
        })
    }

    pub fn ga_config(&self) -> Result<GaConfig, ConfigError> {
        let unit = self.frequency_unit()?;
        Ok(GaConfig {
            population_size: self.population,
            generations: self.generations,
            reproduction_rate: self.reproduction_rate,
            mutation_rate: self.mutation_rate,
            n_frequencies: self.n_frequencies,
            f_min: unit.to_angular(self.f_min),
            f_max: unit.to_angular(self.f_max),
            seed: self.seed,
            workers: self.workers,
        })
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol: self.tol,
            origin_tol: self.origin_tol,
        }
    }

    pub fn diagnose_options(&self) -> DiagnoseOptions {
        DiagnoseOptions {
            ambiguity_margin: self.ambiguity_margin,
            origin_tol: self.origin_tol,
        }
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn vector_path(&self) -> PathBuf {
        self.vector.clone().unwrap_or_else(|| self.out_path("best_vector.json"))
    }

    pub fn trajectories_path(&self) -> PathBuf {
        self.trajectories
            .clone()
            .unwrap_or_else(|| self.out_path("trajectories.csv"))
    }
}

fn range_field(e: &ftdiag_core::faultlib::FaultError) -> &'static str {
    use ftdiag_core::faultlib::FaultError::*;
    match e {
        BadStep(_) => "step",
        Misaligned { .. } => "step",
        BadRange { low, .. } if !(*low > 0.0 && *low < 1.0) => "range-low",
        BadRange { .. } => "range-high",
        _ => "targets",
    }
}

pub fn parse_unit(s: &str) -> Option<FrequencyUnit> {
    match s.to_ascii_lowercase().as_str() {
        "rad/s" => Some(FrequencyUnit::RadPerSec),
        "hz" => Some(FrequencyUnit::Hertz),
        _ => None,
    }
}

pub fn unit_name(u: FrequencyUnit) -> &'static str {
    match u {
        FrequencyUnit::RadPerSec => "rad/s",
        FrequencyUnit::Hertz => "hz",
    }
}

/// Path check used for input files other than the netlist.
pub fn require_file(field: &str, path: &Path) -> Result<(), ConfigError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{} does not exist", path.display())))
    }
}
