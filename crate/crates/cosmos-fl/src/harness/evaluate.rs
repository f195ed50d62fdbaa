//! Turn a collected run pool into accuracy/cost rows.
//!
//! Every configuration (each single model, the equal-weight ensemble, and the
//! DE-weighted ensemble, per the plan's mode) is evaluated at every run
//! budget over freshly sampled run subsets: aggregate, rank, compute
//! acc@1..5, wasted effort, confidence, and the summed token/time/energy
//! costs, then aggregate the samples into mean and standard deviation rows.

use std::collections::{BTreeMap, BTreeSet};

use crate::fixtures::BugFixture;
use crate::harness::plan::{EnsembleMode, ExperimentPlan};
use crate::harness::report::{round_sig9, AggregateRow, FoldTrace, Report, SampleRow, Stat};
use crate::harness::sampling::{mix_seed, sample_runs, RunSample};
use crate::harness::storage::RunPool;
use crate::harness::HarnessError;
use crate::optimizer::{cross_validate, DeConfig, FlDataset, ModelRuns};
use crate::scoring::{
    acc_at_k, aggregate_runs, aggregate_weighted, confidence, overlap_regions, rank, region_label,
    score_run, wasted_effort, GroundTruth, RankedList, RegionKey, ScoreMap, WeightVector,
};

/// Settings for the evaluation pass; the DE fields configure the fresh
/// cross-validation that runs when a DE-mode plan has no provided weights.
#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub weights: Option<WeightVector>,
    pub k_folds: usize,
    pub de_population: usize,
    pub de_generations: usize,
    pub de_crossover: f64,
    pub de_weight: f64,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            weights: None,
            k_folds: 10,
            de_population: 40,
            de_generations: 30,
            de_crossover: 0.8,
            de_weight: 1.5,
        }
    }
}

/// One evaluation configuration.
enum Configuration {
    Single(String),
    Ensemble { name: String, weights: WeightVector },
}

impl Configuration {
    fn name(&self) -> &str {
        match self {
            Configuration::Single(model) => model,
            Configuration::Ensemble { name, .. } => name,
        }
    }

    fn models<'a>(&'a self, plan: &'a ExperimentPlan) -> Vec<String> {
        match self {
            Configuration::Single(model) => vec![model.clone()],
            Configuration::Ensemble { .. } => plan.models.clone(),
        }
    }
}

fn truth_of(
    plan: &ExperimentPlan,
    fixtures: &BTreeMap<String, BugFixture>,
) -> Result<BTreeMap<String, GroundTruth>, HarnessError> {
    plan.bugs
        .iter()
        .map(|bug| {
            fixtures
                .get(bug)
                .map(|f| (bug.clone(), f.ground_truth.clone()))
                .ok_or_else(|| {
                    HarnessError::InvalidPlan(format!("bug {bug} has no fixture"))
                })
        })
        .collect()
}

fn check_pool_complete(plan: &ExperimentPlan, pool: &RunPool) -> Result<(), HarnessError> {
    for model in &plan.models {
        for bug in &plan.bugs {
            for run_index in 0..plan.runs_per_model_pool {
                if !pool.contains(bug, model, run_index) {
                    return Err(HarnessError::MissingRun {
                        bug: bug.clone(),
                        model: model.clone(),
                        run_index,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Pre-score the whole pool: bug -> model -> per-index vote maps.
fn score_pool(
    plan: &ExperimentPlan,
    pool: &RunPool,
) -> BTreeMap<String, BTreeMap<String, Vec<ScoreMap>>> {
    plan.bugs
        .iter()
        .map(|bug| {
            let per_model = plan
                .models
                .iter()
                .map(|model| {
                    let scored: Vec<ScoreMap> = (0..plan.runs_per_model_pool)
                        .map(|i| {
                            let record =
                                pool.get(bug, model, i).expect("pool checked complete");
                            score_run(&record.predicted_methods)
                        })
                        .collect();
                    (model.clone(), scored)
                })
                .collect();
            (bug.clone(), per_model)
        })
        .collect()
}

struct SampleMetrics {
    acc: [usize; 5],
    wasted_effort_total: usize,
    confidence_mean: f64,
    tokens_total: u64,
    wall_time_ms: u64,
    energy_j: Option<f64>,
}

fn metrics_for_sample(
    configuration: &Configuration,
    sample: &RunSample,
    plan: &ExperimentPlan,
    pool: &RunPool,
    scored: &BTreeMap<String, BTreeMap<String, Vec<ScoreMap>>>,
    truth: &BTreeMap<String, GroundTruth>,
) -> Result<SampleMetrics, HarnessError> {
    let mut rankings: BTreeMap<String, RankedList> = BTreeMap::new();
    let mut confidence_sum = 0.0;
    for bug in &plan.bugs {
        let aggregated = match configuration {
            Configuration::Single(model) => {
                let runs: Vec<ScoreMap> = sample.indices[model]
                    .iter()
                    .map(|&i| scored[bug][model][i as usize].clone())
                    .collect();
                aggregate_runs(&runs)?
            }
            Configuration::Ensemble { weights, .. } => {
                let per_model: BTreeMap<String, Vec<ScoreMap>> = sample
                    .indices
                    .iter()
                    .map(|(model, indices)| {
                        let runs: Vec<ScoreMap> = indices
                            .iter()
                            .map(|&i| scored[bug][model][i as usize].clone())
                            .collect();
                        (model.clone(), runs)
                    })
                    .collect();
                aggregate_weighted(&per_model, weights)?
            }
        };
        confidence_sum += confidence(&aggregated);
        rankings.insert(bug.clone(), rank(&aggregated));
    }

    let mut acc = [0usize; 5];
    for (i, slot) in acc.iter_mut().enumerate() {
        *slot = acc_at_k(&rankings, truth, i + 1)?;
    }
    let wasted_effort_total = rankings
        .iter()
        .map(|(bug, ranking)| wasted_effort(ranking, &truth[bug]))
        .sum();

    let mut tokens_total = 0u64;
    let mut wall_time_ms = 0u64;
    let mut energy_sum = 0.0f64;
    let mut energy_seen = false;
    for bug in &plan.bugs {
        for (model, indices) in &sample.indices {
            for &index in indices {
                let record = pool.get(bug, model, index).expect("pool checked complete");
                tokens_total += record.tokens_total();
                wall_time_ms += record.wall_time_ms;
                if let Some(j) = record.energy_j {
                    energy_sum += j;
                    energy_seen = true;
                }
            }
        }
    }

    Ok(SampleMetrics {
        acc,
        wasted_effort_total,
        confidence_mean: round_sig9(confidence_sum / plan.bugs.len() as f64),
        tokens_total,
        wall_time_ms,
        energy_j: energy_seen.then_some(round_sig9(energy_sum)),
    })
}

fn stat(values: &[f64]) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt()
    };
    // Reports carry canonically rounded floats so that stored aggregates are
    // exactly recomputable from stored rows after a round-trip.
    Stat {
        mean: round_sig9(mean),
        std: round_sig9(std),
    }
}

pub(crate) fn aggregate_rows(rows: &[SampleRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, usize), Vec<&SampleRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.config.clone(), row.r))
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|((config, r), group)| {
            let col = |f: &dyn Fn(&SampleRow) -> f64| -> Vec<f64> {
                group.iter().map(|row| f(row)).collect()
            };
            let acc: Vec<Stat> = (0..5)
                .map(|i| stat(&col(&|row| row.acc[i] as f64)))
                .collect();
            let energy: Option<Stat> = if group.iter().all(|row| row.energy_j.is_some()) {
                Some(stat(&col(&|row| row.energy_j.expect("checked"))))
            } else {
                None
            };
            AggregateRow {
                config,
                r,
                acc,
                wasted_effort_total: stat(&col(&|row| row.wasted_effort_total as f64)),
                confidence_mean: stat(&col(&|row| row.confidence_mean)),
                tokens_total: stat(&col(&|row| row.tokens_total as f64)),
                wall_time_ms: stat(&col(&|row| row.wall_time_ms as f64)),
                energy_j: energy,
            }
        })
        .collect()
}

/// Per-model top-ranked bug sets from the first `r` pool runs, fed to the
/// Venn region analysis.
pub fn overlap_from_pool(
    pool: &RunPool,
    fixtures: &BTreeMap<String, BugFixture>,
    models: &[String],
    bugs: &[String],
    r: usize,
) -> Result<BTreeMap<RegionKey, usize>, HarnessError> {
    let mut top_ranked: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for model in models {
        let mut top = BTreeSet::new();
        for bug in bugs {
            let records = pool.runs_of(bug, model);
            if records.len() < r {
                return Err(HarnessError::MissingRun {
                    bug: bug.clone(),
                    model: model.clone(),
                    run_index: records.len() as u32,
                });
            }
            let runs: Vec<ScoreMap> = records[..r]
                .iter()
                .map(|record| score_run(&record.predicted_methods))
                .collect();
            let ranking = rank(&aggregate_runs(&runs)?);
            let fixture = fixtures.get(bug).ok_or_else(|| {
                HarnessError::InvalidPlan(format!("bug {bug} has no fixture"))
            })?;
            if wasted_effort(&ranking, &fixture.ground_truth) == 0 {
                top.insert(bug.clone());
            }
        }
        top_ranked.insert(model.clone(), top);
    }
    Ok(overlap_regions(&top_ranked))
}

fn count_overlapping_energy_windows(pool: &RunPool) -> usize {
    let windows: Vec<(u64, u64)> = pool
        .records()
        .filter(|r| r.energy_j.is_some())
        .map(|r| (r.started_ms, r.started_ms + r.wall_time_ms))
        .collect();
    let mut count = 0;
    for (i, a) in windows.iter().enumerate() {
        for b in &windows[i + 1..] {
            if a.0 < b.1 && b.0 < a.1 {
                count += 1;
            }
        }
    }
    count
}

/// Evaluate the plan over a complete pool.
pub fn evaluate(
    plan: &ExperimentPlan,
    pool: &RunPool,
    fixtures: &BTreeMap<String, BugFixture>,
    options: &EvaluateOptions,
) -> Result<Report, HarnessError> {
    plan.validate()?;
    check_pool_complete(plan, pool)?;
    let truth = truth_of(plan, fixtures)?;
    let scored = score_pool(plan, pool);

    // Resolve configurations.
    let mut configurations: Vec<Configuration> = plan
        .models
        .iter()
        .map(|m| Configuration::Single(m.clone()))
        .collect();
    let mut weights_used = None;
    let mut fold_traces: Vec<FoldTrace> = Vec::new();
    if plan.ensemble_mode != EnsembleMode::None {
        configurations.push(Configuration::Ensemble {
            name: "ensemble-equal".to_string(),
            weights: WeightVector::equal(plan.models.clone()),
        });
    }
    if plan.ensemble_mode == EnsembleMode::DeOptimized {
        let weights = match &options.weights {
            Some(weights) => weights.clone(),
            None => {
                let dataset: FlDataset = scored
                    .iter()
                    .map(|(bug, per_model)| {
                        let runs: ModelRuns = per_model
                            .iter()
                            .map(|(m, r)| (m.clone(), r.clone()))
                            .collect();
                        (bug.clone(), runs)
                    })
                    .collect();
                let strata: BTreeMap<String, String> = plan
                    .bugs
                    .iter()
                    .map(|bug| (bug.clone(), fixtures[bug].project.clone()))
                    .collect();
                let de = DeConfig {
                    population_size: options.de_population,
                    generations: options.de_generations,
                    crossover_probability: options.de_crossover,
                    differential_weight: options.de_weight,
                    bounds: vec![(0.0, 1.0); plan.models.len()],
                    seed: plan.rng_seed,
                };
                let outcome =
                    cross_validate(&dataset, &truth, &strata, &de, options.k_folds, None)?;
                fold_traces = outcome
                    .folds
                    .iter()
                    .map(|fold| FoldTrace {
                        fold: fold.fold,
                        records: fold.trace.clone(),
                    })
                    .collect();
                outcome.mean_weights
            }
        };
        weights_used = Some(weights.clone());
        configurations.push(Configuration::Ensemble {
            name: "ensemble-de".to_string(),
            weights,
        });
    }

    // Sample and measure.
    let pool_sizes: BTreeMap<String, usize> = plan
        .models
        .iter()
        .map(|m| (m.clone(), plan.runs_per_model_pool as usize))
        .collect();
    let mut rows = Vec::new();
    for configuration in &configurations {
        let models = configuration.models(plan);
        for &r in &plan.r_values {
            let seed = mix_seed(plan.rng_seed, &[configuration.name()], r as u64);
            let samples = sample_runs(&pool_sizes, &models, r, plan.samples_per_r, seed)?;
            for (sample_index, sample) in samples.iter().enumerate() {
                let metrics =
                    metrics_for_sample(configuration, sample, plan, pool, &scored, &truth)?;
                rows.push(SampleRow {
                    config: configuration.name().to_string(),
                    r,
                    sample: sample_index,
                    acc: metrics.acc,
                    wasted_effort_total: metrics.wasted_effort_total,
                    confidence_mean: metrics.confidence_mean,
                    tokens_total: metrics.tokens_total,
                    wall_time_ms: metrics.wall_time_ms,
                    energy_j: metrics.energy_j,
                });
            }
        }
    }
    let aggregates = aggregate_rows(&rows);

    // Orthogonality table from the run-pool prefix.
    let overlap_r = 5.min(plan.runs_per_model_pool as usize);
    let overlap = overlap_from_pool(pool, fixtures, &plan.models, &plan.bugs, overlap_r)?
        .into_iter()
        .map(|(region, count)| (region_label(&region), count))
        .collect();

    let de_trace_files = (0..fold_traces.len())
        .map(|fold| format!("de_trace_fold_{fold}.jsonl"))
        .collect();

    Ok(Report {
        rows,
        aggregates,
        overlap,
        overlap_r,
        weights_used,
        fold_traces,
        de_trace_files,
        external_baselines: Vec::new(),
        overlapping_energy_windows: count_overlapping_energy_windows(pool),
    })
}
