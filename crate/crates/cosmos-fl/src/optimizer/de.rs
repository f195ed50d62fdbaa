//! Differential evolution over bounded real vectors.
//!
//! Classic rand/1/bin: each agent is challenged once per generation by a
//! trial built from three donors sampled without replacement (excluding the
//! target), mutated as `a + w_d * (b - c)` under binomial crossover with one
//! forced index, clamped to bounds. Selection is strictly greedy — ties keep
//! the incumbent — so a constant fitness leaves the population untouched.
//!
//! Trial construction is sequential and owns the RNG; evaluations are merged
//! back in population order, so the outcome is independent of how the
//! evaluations are scheduled and is bit-reproducible for a fixed seed.

use std::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Search settings. Defaults mirror the experiment configuration: population
/// 40, 30 generations, differential weight 1.5, crossover probability 0.8,
/// weights searched in `[0, 1]` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub differential_weight: f64,
    /// Per-dimension `[lo, hi]` search bounds; the length is the dimension.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl DeConfig {
    /// Default search over `dimension` voting weights in `[0, 1]`.
    pub fn for_weights(dimension: usize, seed: u64) -> Self {
        DeConfig {
            population_size: 40,
            generations: 30,
            crossover_probability: 0.8,
            differential_weight: 1.5,
            bounds: vec![(0.0, 1.0); dimension],
            seed,
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<(), DeError> {
        if self.population_size < 4 {
            return Err(DeError::InvalidConfig(format!(
                "population size {} is below 4; three distinct donors plus the target must exist",
                self.population_size
            )));
        }
        if self.bounds.is_empty() {
            return Err(DeError::InvalidConfig("empty bounds".to_string()));
        }
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) {
                return Err(DeError::InvalidConfig(format!(
                    "bounds[{i}] = [{lo}, {hi}] must satisfy lo < hi"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(DeError::InvalidConfig(format!(
                "crossover probability {} outside [0, 1]",
                self.crossover_probability
            )));
        }
        if self.differential_weight <= 0.0 {
            return Err(DeError::InvalidConfig(format!(
                "differential weight {} must be positive",
                self.differential_weight
            )));
        }
        Ok(())
    }
}

/// A candidate solution: one genome of voting weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub genome: Vec<f64>,
}

/// Lexicographic fitness: maximise acc@1; break ties by minimising total
/// wasted effort. Greater is better under `Ord`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fitness {
    pub acc1: usize,
    pub total_wasted_effort: usize,
}

impl Fitness {
    pub fn new(acc1: usize, total_wasted_effort: usize) -> Self {
        Fitness {
            acc1,
            total_wasted_effort,
        }
    }

    /// Strictly worse than any fitness over a real evaluation; used for
    /// degenerate genomes that cannot be normalised (all-zero weights).
    pub fn worst() -> Self {
        Fitness {
            acc1: 0,
            total_wasted_effort: usize::MAX,
        }
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        self.acc1
            .cmp(&other.acc1)
            .then_with(|| other.total_wasted_effort.cmp(&self.total_wasted_effort))
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best fitness and genome after each generation; emitted as the
/// line-delimited optimisation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_acc1: usize,
    pub best_wasted_effort: usize,
    pub best_genome: Vec<f64>,
}

/// Result of one optimisation run.
#[derive(Debug, Clone)]
pub struct DeOutcome {
    pub best: Agent,
    pub best_fitness: Fitness,
    pub history: Vec<GenerationRecord>,
}

fn random_agent(cfg: &DeConfig, rng: &mut ChaCha8Rng) -> Agent {
    Agent {
        genome: cfg
            .bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..=hi))
            .collect(),
    }
}

fn initialize_with(cfg: &DeConfig, rng: &mut ChaCha8Rng) -> Vec<Agent> {
    (0..cfg.population_size)
        .map(|_| random_agent(cfg, rng))
        .collect()
}

/// Generate the initial population: every component uniform within its
/// bounds, deterministic for a fixed seed.
pub fn initialize_population(cfg: &DeConfig) -> Result<Vec<Agent>, DeError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(initialize_with(cfg, &mut rng))
}

/// Three distinct donor indices, sampled without replacement and excluding
/// the target.
fn sample_three_excluding(rng: &mut ChaCha8Rng, population: usize, target: usize) -> [usize; 3] {
    debug_assert!(population >= 4);
    let mut picked = [usize::MAX; 3];
    let mut count = 0;
    while count < 3 {
        let candidate = rng.random_range(0..population);
        if candidate != target && !picked[..count].contains(&candidate) {
            picked[count] = candidate;
            count += 1;
        }
    }
    picked
}

/// Build a trial with the forced crossover index already chosen.
///
/// For each index `i`: if `i` equals `forced` or a fresh uniform draw falls
/// below the crossover probability, the trial takes the mutant value
/// `a[i] + w_d * (b[i] - c[i])`; otherwise it keeps the target's value.
/// Mutant components are clamped to the bounds. No uniform is drawn at the
/// forced index.
pub fn make_trial_with_forced(
    target: &Agent,
    a: &Agent,
    b: &Agent,
    c: &Agent,
    cfg: &DeConfig,
    forced: usize,
    rng: &mut ChaCha8Rng,
) -> Agent {
    let dim = cfg.dimension();
    let mut genome = target.genome.clone();
    for i in 0..dim {
        let take_mutant = i == forced || rng.random::<f64>() < cfg.crossover_probability;
        if take_mutant {
            let (lo, hi) = cfg.bounds[i];
            let mutant = a.genome[i] + cfg.differential_weight * (b.genome[i] - c.genome[i]);
            genome[i] = mutant.clamp(lo, hi);
        }
    }
    Agent { genome }
}

/// Build a trial for `target` from donors `a`, `b`, `c`, drawing the forced
/// index uniformly first.
pub fn make_trial(
    target: &Agent,
    a: &Agent,
    b: &Agent,
    c: &Agent,
    cfg: &DeConfig,
    rng: &mut ChaCha8Rng,
) -> Agent {
    let forced = rng.random_range(0..cfg.dimension());
    make_trial_with_forced(target, a, b, c, cfg, forced, rng)
}

/// Run the optimisation. `fitness` must be deterministic for a fixed dataset.
pub fn de_optimize<F>(cfg: &DeConfig, fitness: F) -> Result<DeOutcome, DeError>
where
    F: Fn(&Agent) -> Fitness,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = initialize_with(cfg, &mut rng);
    let mut fitnesses: Vec<Fitness> = population.iter().map(&fitness).collect();

    let mut best_index = argmax(&fitnesses);
    let mut best = population[best_index].clone();
    let mut best_fitness = fitnesses[best_index];

    let mut history = Vec::with_capacity(cfg.generations);
    for generation in 0..cfg.generations {
        // Sequential pass owns the RNG: donors and crossover decisions for
        // every trial come from the generation-start population.
        let trials: Vec<Agent> = (0..population.len())
            .map(|i| {
                let [a, b, c] = sample_three_excluding(&mut rng, population.len(), i);
                make_trial(
                    &population[i],
                    &population[a],
                    &population[b],
                    &population[c],
                    cfg,
                    &mut rng,
                )
            })
            .collect();

        // Evaluations are independent; results merge in population order.
        let trial_fitnesses: Vec<Fitness> = trials.iter().map(&fitness).collect();
        for (i, (trial, trial_fitness)) in
            trials.into_iter().zip(trial_fitnesses).enumerate()
        {
            if fitnesses[i] < trial_fitness {
                population[i] = trial;
                fitnesses[i] = trial_fitness;
            }
        }

        best_index = argmax(&fitnesses);
        if best_fitness < fitnesses[best_index] {
            best = population[best_index].clone();
            best_fitness = fitnesses[best_index];
        }
        if let Some(previous) = history.last() {
            let previous: &GenerationRecord = previous;
            let previous_fitness =
                Fitness::new(previous.best_acc1, previous.best_wasted_effort);
            debug_assert!(
                previous_fitness <= best_fitness,
                "per-generation best fitness regressed"
            );
        }
        history.push(GenerationRecord {
            generation,
            best_acc1: best_fitness.acc1,
            best_wasted_effort: best_fitness.total_wasted_effort,
            best_genome: best.genome.clone(),
        });
    }

    Ok(DeOutcome {
        best,
        best_fitness,
        history,
    })
}

fn argmax(fitnesses: &[Fitness]) -> usize {
    let mut best = 0;
    for (i, fitness) in fitnesses.iter().enumerate() {
        if fitnesses[best] < *fitness {
            best = i;
        }
    }
    best
}
