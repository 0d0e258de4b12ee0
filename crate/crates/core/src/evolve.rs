//! Genetic search for test vectors whose fault trajectories do not meet.
//!
//! Chromosomes hold `log10` of the angular test frequencies. Fitness is
//! `1 / (I + 1)` where `I` is the intersection count of the trajectories
//! the vector produces. Each generation keeps `round(reproduction_rate * N)`
//! roulette-selected copies, fills the rest with one-point crossover
//! children of roulette-selected parents, then mutates each individual with
//! probability `mutation_rate` by redrawing one gene uniformly in bounds.
//!
//! Randomness comes from ChaCha8 seeded once per run, with one stream per
//! generation (stream 0 builds the initial population). Fitness evaluation
//! draws nothing, so running it on any number of threads leaves the log
//! unchanged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::faultlib::FaultConfig;
use crate::netlist::Circuit;
use crate::trajectory::{self, TestVector, Tolerances, TrajectoryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("invalid GA config: {0}")]
    Config(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub reproduction_rate: f64,
    pub mutation_rate: f64,
    pub n_frequencies: usize,
    /// Search bounds in rad/s.
    pub f_min: f64,
    pub f_max: f64,
    pub seed: u64,
    /// Threads for fitness evaluation; 0 uses the global rayon pool.
    pub workers: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 128,
            generations: 15,
            reproduction_rate: 0.5,
            mutation_rate: 0.4,
            n_frequencies: 2,
            f_min: 0.01,
            f_max: 100.0,
            seed: 0,
            workers: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::Config(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.reproduction_rate) {
            return bad("reproduction_rate must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        if self.n_frequencies == 0 {
            return bad("n_frequencies must be at least 1");
        }
        if !(self.f_min > 0.0 && self.f_min.is_finite() && self.f_max.is_finite()) {
            return bad("f_min and f_max must be positive and finite");
        }
        if self.f_min >= self.f_max {
            return bad("f_min must be below f_max");
        }
        Ok(())
    }

    pub fn bounds(&self) -> GeneBounds {
        GeneBounds {
            lo: self.f_min.log10(),
            hi: self.f_max.log10(),
        }
    }

    pub fn copies_per_generation(&self) -> usize {
        ((self.reproduction_rate * self.population_size as f64).round() as usize).min(self.population_size)
    }
}

/// Gene bounds in `log10(rad/s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneBounds {
    pub lo: f64,
    pub hi: f64,
}

impl GeneBounds {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<f64>,
}

impl Chromosome {
    pub fn random(n: usize, bounds: GeneBounds, rng: &mut impl Rng) -> Self {
        Self {
            genes: (0..n).map(|_| bounds.draw(rng)).collect(),
        }
    }

    pub fn from_frequencies(freqs: &[f64]) -> Self {
        Self {
            genes: freqs.iter().map(|f| f.log10()).collect(),
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.genes.iter().map(|g| 10f64.powf(*g)).collect()
    }

    pub fn test_vector(&self) -> Result<TestVector, TrajectoryError> {
        TestVector::new(self.frequencies())
    }
}

pub fn fitness_from_count(intersections: usize) -> f64 {
    1.0 / (intersections as f64 + 1.0)
}

/// Fitness and intersection count of one test vector.
pub fn evaluate(
    tv: &TestVector,
    circuit: &Circuit,
    config: &FaultConfig,
    tols: Tolerances,
) -> Result<(f64, usize), TrajectoryError> {
    let trajs = trajectory::build_trajectories(circuit, config, tv)?;
    let report = trajectory::count_intersections_with(&trajs, tols)?;
    Ok((fitness_from_count(report.count), report.count))
}

pub fn fitness(tv: &TestVector, circuit: &Circuit, config: &FaultConfig, tol: f64) -> Result<f64, TrajectoryError> {
    evaluate(tv, circuit, config, Tolerances::uniform(tol)).map(|(f, _)| f)
}

/// Fitness-proportional pick; uniform when every fitness is zero.
pub fn roulette_select(fitnesses: &[f64], rng: &mut impl Rng) -> usize {
    assert!(!fitnesses.is_empty(), "roulette over an empty population");
    let total: f64 = fitnesses.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return rng.gen_range(0..fitnesses.len());
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &f) in fitnesses.iter().enumerate() {
        if f > 0.0 {
            acc += f;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Produces the next population from `population` and its fitnesses.
pub fn step_generation(
    population: &[Chromosome],
    fitnesses: &[f64],
    config: &GaConfig,
    rng: &mut impl Rng,
) -> Vec<Chromosome> {
    assert_eq!(population.len(), fitnesses.len());
    let size = population.len();
    let copies = ((config.reproduction_rate * size as f64).round() as usize).min(size);
    let bounds = config.bounds();

    let mut next = Vec::with_capacity(size);
    for _ in 0..copies {
        next.push(population[roulette_select(fitnesses, rng)].clone());
    }
    while next.len() < size {
        let a = &population[roulette_select(fitnesses, rng)];
        let b = &population[roulette_select(fitnesses, rng)];
        next.push(crossover(a, b, rng));
    }
    for c in &mut next {
        if rng.gen::<f64>() < config.mutation_rate {
            let i = rng.gen_range(0..c.genes.len());
            c.genes[i] = bounds.draw(rng);
        }
    }
    next
}

/// One-point crossover: head of `a`, tail of `b`.
fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut impl Rng) -> Chromosome {
    let n = a.genes.len();
    if n < 2 {
        return a.clone();
    }
    let cut = rng.gen_range(1..n);
    Chromosome {
        genes: a.genes[..cut].iter().chain(&b.genes[cut..]).copied().collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub chromosome: Chromosome,
    pub fitness: f64,
    /// `None` when simulating the vector failed.
    pub intersections: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best individual of this generation's population.
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub population_size: usize,
    pub best: Chromosome,
    pub best_so_far: Evaluated,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaLog {
    pub records: Vec<GenerationRecord>,
    pub failed_evaluations: usize,
}

impl GaLog {
    pub fn best(&self) -> Option<&Evaluated> {
        self.records.last().map(|r| &r.best_so_far)
    }
}

pub struct GaOutcome {
    pub best: Evaluated,
    pub log: GaLog,
}

fn evaluate_population(
    population: &[Chromosome],
    circuit: &Circuit,
    fault_config: &FaultConfig,
    tols: Tolerances,
) -> Vec<Evaluated> {
    population
        .par_iter()
        .map(|c| {
            let result = c
                .test_vector()
                .and_then(|tv| evaluate(&tv, circuit, fault_config, tols));
            match result {
                Ok((fitness, i)) => Evaluated {
                    chromosome: c.clone(),
                    fitness,
                    intersections: Some(i),
                },
                Err(e) => {
                    log::warn!("chromosome {:?} failed to simulate: {e}", c.frequencies());
                    Evaluated {
                        chromosome: c.clone(),
                        fitness: 0.0,
                        intersections: None,
                    }
                }
            }
        })
        .collect()
}

fn generation_rng(seed: u64, generation: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation as u64);
    rng
}

pub fn run_ga(
    circuit: &Circuit,
    fault_config: &FaultConfig,
    config: &GaConfig,
    tols: Tolerances,
) -> Result<GaOutcome, EvolveError> {
    config.validate()?;
    fault_config.validate_for(circuit).map_err(TrajectoryError::from)?;
    if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| EvolveError::Pool(e.to_string()))?;
        pool.install(|| run_ga_inner(circuit, fault_config, config, tols))
    } else {
        run_ga_inner(circuit, fault_config, config, tols)
    }
}

fn run_ga_inner(
    circuit: &Circuit,
    fault_config: &FaultConfig,
    config: &GaConfig,
    tols: Tolerances,
) -> Result<GaOutcome, EvolveError> {
    let bounds = config.bounds();
    let mut rng = generation_rng(config.seed, 0);
    let mut population: Vec<Chromosome> = (0..config.population_size)
        .map(|_| Chromosome::random(config.n_frequencies, bounds, &mut rng))
        .collect();

    let mut log = GaLog::default();
    let mut best_so_far: Option<Evaluated> = None;
    let mut fitnesses: Vec<f64> = Vec::new();
    for generation in 0..=config.generations {
        if generation > 0 {
            let mut rng = generation_rng(config.seed, generation);
            population = step_generation(&population, &fitnesses, config, &mut rng);
        }
        let evaluated = evaluate_population(&population, circuit, fault_config, tols);
        log.failed_evaluations += evaluated.iter().filter(|e| e.intersections.is_none()).count();

        // First individual wins ties.
        let gen_best = evaluated
            .iter()
            .reduce(|b, e| if e.fitness > b.fitness { e } else { b })
            .expect("population is non-empty");
        let mean = evaluated.iter().map(|e| e.fitness).sum::<f64>() / evaluated.len() as f64;
        if best_so_far.as_ref().is_none_or(|b| gen_best.fitness > b.fitness) {
            best_so_far = Some(gen_best.clone());
        }
        log.records.push(GenerationRecord {
            generation,
            best_fitness: gen_best.fitness,
            mean_fitness: mean,
            population_size: evaluated.len(),
            best: gen_best.chromosome.clone(),
            best_so_far: best_so_far.clone().expect("set above"),
        });
        fitnesses = evaluated.iter().map(|e| e.fitness).collect();
    }
    let best = best_so_far.expect("at least one generation evaluated");
    Ok(GaOutcome { best, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn fitness_formula() {
        assert_eq!(fitness_from_count(0), 1.0);
        assert_eq!(fitness_from_count(1), 0.5);
        assert_eq!(fitness_from_count(9), 0.1);
    }

    #[test]
    fn roulette_excludes_zero_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            assert_eq!(roulette_select(&[1.0, 0.0], &mut rng), 0);
            assert_eq!(roulette_select(&[0.0, 0.0, 2.0, 0.0], &mut rng), 2);
        }
    }

    fn frequency_of_zero(weights: &[f64], draws: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hits = (0..draws).filter(|_| roulette_select(weights, &mut rng) == 0).count();
        hits as f64 / draws as f64
    }

    #[test]
    fn roulette_is_fitness_proportional() {
        let p = frequency_of_zero(&[1.0, 1.0], 10_000, 1);
        assert!((p - 0.5).abs() <= 0.02, "{p}");
        let p = frequency_of_zero(&[3.0, 1.0], 10_000, 2);
        assert!((p - 0.75).abs() <= 0.02, "{p}");
    }

    #[test]
    fn roulette_all_zero_is_uniform() {
        let p = frequency_of_zero(&[0.0, 0.0], 10_000, 3);
        assert!((p - 0.5).abs() <= 0.02, "{p}");
    }

    fn population(n: usize, seed: u64) -> Vec<Chromosome> {
        let cfg = GaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Chromosome::random(2, cfg.bounds(), &mut rng)).collect()
    }

    #[test]
    fn step_keeps_size_and_is_deterministic() {
        let cfg = GaConfig::default();
        assert_eq!(cfg.copies_per_generation(), 64);
        let pop = population(128, 4);
        let fit: Vec<f64> = (0..128).map(|i| 1.0 / (1.0 + (i % 5) as f64)).collect();
        let a = step_generation(&pop, &fit, &cfg, &mut generation_rng(9, 1));
        let b = step_generation(&pop, &fit, &cfg, &mut generation_rng(9, 1));
        assert_eq!(a.len(), 128);
        assert_eq!(a, b);
        let c = step_generation(&pop, &fit, &cfg, &mut generation_rng(9, 2));
        assert_ne!(a, c);
        let bounds = cfg.bounds();
        assert!(a
            .iter()
            .flat_map(|c| &c.genes)
            .all(|g| (bounds.lo..=bounds.hi).contains(g)));
    }

    #[test]
    fn without_mutation_genes_are_inherited() {
        let cfg = GaConfig {
            mutation_rate: 0.0,
            ..GaConfig::default()
        };
        let pop = population(128, 5);
        let fit = vec![1.0; 128];
        let next = step_generation(&pop, &fit, &cfg, &mut generation_rng(1, 1));
        for (i, c) in next.iter().enumerate() {
            for (k, g) in c.genes.iter().enumerate() {
                assert!(pop.iter().any(|p| p.genes[k] == *g), "gene {k} of child {i} is new");
            }
        }
        // The first 64 are verbatim copies.
        assert!(next[..64].iter().all(|c| pop.contains(c)));
    }

    #[test]
    fn full_mutation_changes_genes() {
        let cfg = GaConfig {
            mutation_rate: 1.0,
            reproduction_rate: 1.0,
            ..GaConfig::default()
        };
        let pop = population(64, 6);
        let fit = vec![1.0; 64];
        let next = step_generation(&pop, &fit, &cfg, &mut generation_rng(1, 1));
        assert!(next.iter().all(|c| !pop.contains(c)));
    }

    #[test]
    fn crossover_is_one_point() {
        let a = Chromosome { genes: vec![1.0, 2.0] };
        let b = Chromosome { genes: vec![3.0, 4.0] };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(crossover(&a, &b, &mut rng).genes, [1.0, 4.0]);
        let a1 = Chromosome { genes: vec![1.0] };
        assert_eq!(crossover(&a1, &Chromosome { genes: vec![5.0] }, &mut rng).genes, [1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = [
            GaConfig {
                population_size: 1,
                ..GaConfig::default()
            },
            GaConfig {
                reproduction_rate: 1.5,
                ..GaConfig::default()
            },
            GaConfig {
                mutation_rate: -0.1,
                ..GaConfig::default()
            },
            GaConfig {
                n_frequencies: 0,
                ..GaConfig::default()
            },
            GaConfig {
                f_min: 10.0,
                f_max: 1.0,
                ..GaConfig::default()
            },
            GaConfig {
                f_min: 0.0,
                ..GaConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn chromosome_decodes_log_frequencies() {
        let c = Chromosome::from_frequencies(&[0.1, 10.0]);
        assert_eq!(c.genes, [-1.0, 1.0]);
        let f = c.frequencies();
        assert!((f[0] - 0.1).abs() < 1e-15 && (f[1] - 10.0).abs() < 1e-13);
    }

    #[test]
    fn small_run_is_reproducible() {
        let circuit = parse_netlist("V1 1 0 1\nR1 1 2 1\nC1 2 0 1\nR2 2 0 2\n.input V1\n.output 2").unwrap();
        let fc = FaultConfig::new(vec!["R1".into(), "C1".into(), "R2".into()]);
        let cfg = GaConfig {
            population_size: 12,
            generations: 3,
            seed: 11,
            ..GaConfig::default()
        };
        let a = run_ga(&circuit, &fc, &cfg, Tolerances::default()).unwrap();
        let b = run_ga(
            &circuit,
            &fc,
            &GaConfig {
                workers: 2,
                ..cfg.clone()
            },
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.log.records.len(), 4);
        assert!(a
            .log
            .records
            .windows(2)
            .all(|w| w[1].best_so_far.fitness >= w[0].best_so_far.fitness));
        assert_eq!(a.best, *a.log.best().unwrap());
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let circuit = parse_netlist("V1 1 0 1\nR1 1 2 1\nC1 2 0 1\n.input V1\n.output 2").unwrap();
        let fc = FaultConfig::new(vec!["R1".into(), "C1".into()]);
        let cfg = GaConfig {
            population_size: 8,
            generations: 0,
            seed: 3,
            ..GaConfig::default()
        };
        let out = run_ga(&circuit, &fc, &cfg, Tolerances::default()).unwrap();
        assert_eq!(out.log.records.len(), 1);
        assert_eq!(out.best.fitness, out.log.records[0].best_fitness);
    }
}
