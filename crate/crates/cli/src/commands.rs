use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ftdiag_core::export;
use ftdiag_core::trajectory::{self, TestVector, Trajectory};
use ftdiag_core::{build_dictionary, classify, run_ga, FaultSpec};
use serde::{Deserialize, Serialize};

use crate::config::{parse_unit, require_file, unit_name, ConfigError, RunConfig};

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation, configuration or input file: exit code 2.
    Usage(String),
    /// The pipeline itself failed: exit code 1.
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Pipeline(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Pipeline(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Usage(e.to_string())
    }
}

fn pipeline(e: impl std::fmt::Display) -> CliError {
    CliError::Pipeline(e.to_string())
}

/// Contents of `best_vector.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestVector {
    pub frequencies: Vec<f64>,
    pub unit: String,
    pub fitness: f64,
    pub intersections: Option<usize>,
    pub seed: u64,
    pub degenerate: bool,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| pipeline(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| pipeline(format!("cannot write {}: {e}", path.display())))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), export::ExportError>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| pipeline(format!("{}: {e}", path.display())))?;
    w.flush().map_err(|e| pipeline(format!("{}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let (circuit, fc) = cfg.circuit()?;
    let unit = cfg.frequency_unit()?;
    let grid = cfg.grid_angular()?;
    let dict = build_dictionary(&circuit, &fc, &grid).map_err(pipeline)?;
    let path = cfg.out_path("dictionary.csv");
    write_with(&path, |w| export::write_dictionary(w, &dict, unit))?;
    println!(
        "{} fault curves + golden, {} points each -> {}",
        dict.entries.len(),
        grid.len(),
        path.display()
    );
    Ok(())
}

pub fn optimize(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let (circuit, fc) = cfg.circuit()?;
    let unit = cfg.frequency_unit()?;
    let outcome = run_ga(&circuit, &fc, &cfg.ga_config()?, cfg.tolerances()).map_err(pipeline)?;
    let best = &outcome.best;
    let tv = best.chromosome.test_vector().map_err(pipeline)?;

    write_with(&cfg.out_path("ga_log.csv"), |w| {
        export::write_ga_log(w, &outcome.log, unit)
    })?;
    let record = BestVector {
        frequencies: tv.frequencies().iter().map(|f| unit.from_angular(*f)).collect(),
        unit: unit_name(unit).to_string(),
        fitness: best.fitness,
        intersections: best.intersections,
        seed: cfg.seed,
        degenerate: tv.is_degenerate(),
    };
    let json = serde_json::to_string_pretty(&record).map_err(pipeline)? + "\n";
    let mut w = create(&cfg.out_path("best_vector.json"))?;
    w.write_all(json.as_bytes()).and_then(|_| w.flush()).map_err(pipeline)?;

    let trajs = trajectory::build_trajectories(&circuit, &fc, &tv).map_err(pipeline)?;
    write_with(&cfg.out_path("trajectories.csv"), |w| {
        export::write_trajectories(w, &trajs)
    })?;
    let report = trajectory::count_intersections_with(&trajs, cfg.tolerances()).map_err(pipeline)?;
    write_with(&cfg.out_path("intersections.csv"), |w| {
        export::write_incidences(w, &report, tv.len())
    })?;

    let shown: Vec<String> = record.frequencies.iter().map(|f| format!("{f:.6}")).collect();
    println!(
        "best test vector [{}] {}: fitness {} (I = {})",
        shown.join(", "),
        record.unit,
        best.fitness,
        best.intersections.map_or("n/a".to_string(), |i| i.to_string())
    );
    if best.fitness < 1.0 {
        eprintln!(
            "warning: best fitness {} < 1; some fault trajectories still intersect",
            best.fitness
        );
    }
    if outcome.log.failed_evaluations > 0 {
        eprintln!(
            "warning: {} chromosome evaluations failed to simulate",
            outcome.log.failed_evaluations
        );
    }
    Ok(())
}

/// How the measured response is supplied.
pub enum Measurement {
    /// dB magnitudes at the test-vector frequencies.
    Measured(Vec<f64>),
    /// Simulate this fault.
    Inject(String),
}

pub fn parse_fault(s: &str) -> Result<FaultSpec, CliError> {
    let bad = || CliError::Usage(format!("--inject expects component:deviation, e.g. R3:+0.2, got `{s}`"));
    let (comp, dev) = s.split_once(':').ok_or_else(bad)?;
    let dev: f64 = dev.trim().parse().map_err(|_| bad())?;
    if comp.trim().is_empty() || !dev.is_finite() {
        return Err(bad());
    }
    Ok(FaultSpec::new(comp.trim(), dev))
}

pub fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{flag}: `{t}` is not a finite number")))
        })
        .collect()
}

pub fn read_vector(path: &Path) -> Result<TestVector, CliError> {
    require_file("vector", path)?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let bv: BestVector =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let unit = parse_unit(&bv.unit)
        .ok_or_else(|| CliError::Usage(format!("{}: unknown unit `{}`", path.display(), bv.unit)))?;
    TestVector::new(bv.frequencies.iter().map(|f| unit.to_angular(*f)).collect())
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn diagnose(cfg: &RunConfig, m: &Measurement) -> Result<(), CliError> {
    cfg.validate()?;
    let (circuit, fc) = cfg.circuit()?;
    let tv = read_vector(&cfg.vector_path())?;
    let query = match m {
        Measurement::Measured(values) => {
            if values.len() != tv.len() {
                return Err(CliError::Usage(format!(
                    "--measured has {} values but the test vector has {} frequencies",
                    values.len(),
                    tv.len()
                )));
            }
            let golden = ftdiag_core::evaluate_at(&circuit, None, tv.frequencies()).map_err(pipeline)?;
            trajectory::signature(&golden, values).map_err(pipeline)?
        }
        Measurement::Inject(spec) => {
            let fault = parse_fault(spec)?;
            circuit
                .apply_deviation(&fault.component, fault.deviation)
                .map_err(|e| CliError::Usage(format!("--inject: {e}")))?;
            trajectory::fault_signature(&circuit, &fault, &tv).map_err(pipeline)?
        }
    };
    let trajs = trajectory::build_trajectories(&circuit, &fc, &tv).map_err(pipeline)?;
    let result = classify(&query, &trajs, cfg.diagnose_options()).map_err(pipeline)?;
    let coords: Vec<String> = query.iter().map(|c| format!("{c:.6}")).collect();
    print!(
        "signature [{}] dB\n{}",
        coords.join(", "),
        export::diagnosis_report(&result)
    );
    write_with(&cfg.out_path("diagnosis.csv"), |w| export::write_diagnosis(w, &result))
}

pub fn plot(cfg: &RunConfig, query: Option<&str>) -> Result<(), CliError> {
    cfg.validate()?;
    let path = cfg.trajectories_path();
    require_file("trajectories", &path)?;
    let file = File::open(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let trajs: Vec<Trajectory> =
        export::read_trajectories(file).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let query = match query {
        None => None,
        Some(s) => {
            let v = parse_list("--query", s)?;
            if v.len() != 2 {
                return Err(CliError::Usage(format!("--query expects x,y, got `{s}`")));
            }
            Some([v[0], v[1]])
        }
    };
    if trajs.iter().any(|t| t.dimension() > 2) {
        log::warn!("signature space has more than two axes; plotting the first two");
    }
    let svg = crate::svg::render(&trajs, query);
    let out = cfg.out_path("trajectories.svg");
    let mut w = create(&out)?;
    w.write_all(svg.as_bytes()).and_then(|_| w.flush()).map_err(pipeline)?;
    println!("{} trajectories -> {}", trajs.len(), out.display());
    Ok(())
}
