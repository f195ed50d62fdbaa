//! k-fold cross-validation around the weight optimiser.
//!
//! Folds are stratified by project tag so every fold draws from every
//! project. Each fold trains on all other bugs and is evaluated once, with
//! weights it never saw during training. When the dataset is a large run
//! pool, one fixed run subset per fold (seeded) feeds the optimiser, keeping
//! fitness deterministic within the fold.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::optimizer::de::{de_optimize, DeConfig, Fitness, GenerationRecord};
use crate::optimizer::fitness::{FitnessEvaluator, FlDataset, ModelRuns};
use crate::optimizer::OptimError;
use crate::scoring::{GroundTruth, WeightVector};

/// Assignment of every bug to exactly one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    assignments: BTreeMap<String, usize>,
    k: usize,
}

impl FoldSplit {
    /// Deal bugs into `k` folds, stratum by stratum, shuffled within each
    /// stratum. Dealing continues round-robin across strata, so fold sizes
    /// differ by at most one both overall and within every stratum.
    pub fn stratified(
        strata: &BTreeMap<String, String>,
        k: usize,
        seed: u64,
    ) -> Result<Self, OptimError> {
        if k < 2 {
            return Err(OptimError::TooFewFolds(k));
        }
        if strata.len() < k {
            return Err(OptimError::DatasetSmallerThanFolds {
                bugs: strata.len(),
                folds: k,
            });
        }
        let mut by_stratum: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (bug, stratum) in strata {
            by_stratum.entry(stratum).or_default().push(bug);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignments = BTreeMap::new();
        let mut next_fold = 0usize;
        for bugs in by_stratum.values_mut() {
            bugs.sort_unstable();
            use rand::seq::SliceRandom;
            bugs.shuffle(&mut rng);
            for bug in bugs.iter() {
                assignments.insert((*bug).to_string(), next_fold % k);
                next_fold += 1;
            }
        }
        Ok(FoldSplit { assignments, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, bug: &str) -> Option<usize> {
        self.assignments.get(bug).copied()
    }

    pub fn bugs_in_fold(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(bug, _)| bug.as_str())
            .collect()
    }

    pub fn assignments(&self) -> &BTreeMap<String, usize> {
        &self.assignments
    }
}

/// Outcome of one fold: the weights it learned, how they scored on the
/// held-out bugs, and the optimisation trace.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub weights: WeightVector,
    pub validation: Fitness,
    pub trace: Vec<GenerationRecord>,
}

#[derive(Debug, Clone)]
pub struct CrossValidationOutcome {
    pub folds: Vec<FoldResult>,
    /// Component-wise mean of the fold weights, normalised to sum 1.
    pub mean_weights: WeightVector,
    pub split: FoldSplit,
}

fn subset_runs(
    dataset: &FlDataset,
    bugs: &[&str],
    run_indices: Option<&BTreeMap<String, Vec<usize>>>,
) -> FlDataset {
    bugs.iter()
        .map(|bug| {
            let runs = &dataset[*bug];
            let selected: ModelRuns = runs
                .iter()
                .map(|(model, model_runs)| {
                    let chosen = match run_indices.and_then(|m| m.get(model)) {
                        Some(indices) => indices
                            .iter()
                            .map(|&i| model_runs[i].clone())
                            .collect(),
                        None => model_runs.clone(),
                    };
                    (model.clone(), chosen)
                })
                .collect();
            ((*bug).to_string(), selected)
        })
        .collect()
}

/// Sample one run-index subset per model for a fold.
fn fold_run_indices(
    dataset: &FlDataset,
    runs_per_model: usize,
    seed: u64,
) -> Result<BTreeMap<String, Vec<usize>>, OptimError> {
    let mut pool_sizes: BTreeMap<String, usize> = BTreeMap::new();
    for runs in dataset.values() {
        for (model, model_runs) in runs {
            let entry = pool_sizes.entry(model.clone()).or_insert(model_runs.len());
            if *entry != model_runs.len() {
                return Err(OptimError::UnevenRunPool {
                    model: model.clone(),
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = BTreeMap::new();
    for (model, pool) in pool_sizes {
        if runs_per_model > pool {
            return Err(OptimError::RunsExceedPool {
                model,
                requested: runs_per_model,
                pool,
            });
        }
        let mut sample: Vec<usize> =
            rand::seq::index::sample(&mut rng, pool, runs_per_model).into_vec();
        sample.sort_unstable();
        indices.insert(model, sample);
    }
    Ok(indices)
}

fn mean_weights(folds: &[FoldResult]) -> Result<WeightVector, OptimError> {
    let first = &folds[0].weights;
    let mut sums: BTreeMap<String, f64> =
        first.models().map(|m| (m.to_string(), 0.0)).collect();
    for fold in folds {
        for (model, weight) in fold.weights.iter() {
            *sums.get_mut(model).expect("same model set per fold") += weight;
        }
    }
    let count = folds.len() as f64;
    for value in sums.values_mut() {
        *value /= count;
    }
    Ok(WeightVector::new(sums)?.normalized()?)
}

/// Run `k`-fold cross-validation over the dataset.
///
/// `strata` maps every bug to its project tag. `runs_per_model`, when set,
/// draws that many runs per model (one seeded subset per fold) for both the
/// training fitness and the validation evaluation; `None` uses every run.
pub fn cross_validate(
    dataset: &FlDataset,
    truth: &BTreeMap<String, GroundTruth>,
    strata: &BTreeMap<String, String>,
    de: &DeConfig,
    k_folds: usize,
    runs_per_model: Option<usize>,
) -> Result<CrossValidationOutcome, OptimError> {
    if dataset.len() < k_folds {
        return Err(OptimError::DatasetSmallerThanFolds {
            bugs: dataset.len(),
            folds: k_folds,
        });
    }
    for bug in dataset.keys() {
        if !strata.contains_key(bug) {
            return Err(OptimError::BugWithoutStratum(bug.clone()));
        }
    }
    let bug_strata: BTreeMap<String, String> = dataset
        .keys()
        .map(|bug| (bug.clone(), strata[bug].clone()))
        .collect();
    let split = FoldSplit::stratified(&bug_strata, k_folds, de.seed)?;

    let mut folds = Vec::with_capacity(k_folds);
    for fold in 0..k_folds {
        let validation_bugs = split.bugs_in_fold(fold);
        let training_bugs: Vec<&str> = dataset
            .keys()
            .map(String::as_str)
            .filter(|bug| split.fold_of(bug) != Some(fold))
            .collect();
        assert!(
            validation_bugs.iter().all(|b| !training_bugs.contains(b)),
            "fold {fold} leaked validation bugs into training"
        );

        let run_indices = match runs_per_model {
            Some(r) => Some(fold_run_indices(dataset, r, de.seed.wrapping_add(1_000 + fold as u64))?),
            None => None,
        };
        let training = subset_runs(dataset, &training_bugs, run_indices.as_ref());
        let validation = subset_runs(dataset, &validation_bugs, run_indices.as_ref());

        let train_truth: BTreeMap<String, GroundTruth> = training_bugs
            .iter()
            .map(|bug| ((*bug).to_string(), truth[*bug].clone()))
            .collect();
        let val_truth: BTreeMap<String, GroundTruth> = validation_bugs
            .iter()
            .map(|bug| ((*bug).to_string(), truth[*bug].clone()))
            .collect();

        let train_evaluator = FitnessEvaluator::new(training, train_truth)?;
        if de.dimension() != train_evaluator.models().len() {
            return Err(OptimError::GenomeDimension {
                expected: train_evaluator.models().len(),
                found: de.dimension(),
            });
        }
        let fold_cfg = DeConfig {
            seed: de.seed.wrapping_add(fold as u64),
            ..de.clone()
        };
        let outcome = de_optimize(&fold_cfg, |agent| train_evaluator.evaluate_agent(agent))?;
        let weights = train_evaluator
            .weights_from_genome(&outcome.best.genome)?
            .normalized()?;

        let val_evaluator = FitnessEvaluator::new(validation, val_truth)?;
        let validation_fitness = val_evaluator.evaluate_weights(&weights);

        folds.push(FoldResult {
            fold,
            weights,
            validation: validation_fitness,
            trace: outcome.history,
        });
    }

    let mean = mean_weights(&folds)?;
    Ok(CrossValidationOutcome {
        folds,
        mean_weights: mean,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{score_run, MethodId, PredictionSet, ScoreMap};

    fn mid(s: &str) -> MethodId {
        MethodId::new(s).unwrap()
    }

    fn run_of(methods: &[&str]) -> ScoreMap {
        let prediction: PredictionSet = methods.iter().map(|m| mid(m)).collect();
        score_run(&prediction)
    }

    /// Four bugs; model "good" always names the fault, model "bad" a decoy.
    fn dominated_dataset() -> (
        FlDataset,
        BTreeMap<String, GroundTruth>,
        BTreeMap<String, String>,
    ) {
        let mut dataset = FlDataset::new();
        let mut truth = BTreeMap::new();
        let mut strata = BTreeMap::new();
        for i in 0..4 {
            let bug = format!("bug-{i}");
            let fault = format!("com.p.core.C.f{i}()");
            let decoy = format!("com.p.util.U.d{i}()");
            dataset.insert(
                bug.clone(),
                ModelRuns::from([
                    (
                        "good".to_string(),
                        vec![run_of(&[&fault]), run_of(&[&fault])],
                    ),
                    (
                        "bad".to_string(),
                        vec![run_of(&[&decoy]), run_of(&[&decoy])],
                    ),
                ]),
            );
            truth.insert(
                bug.clone(),
                GroundTruth::new(bug.clone(), [mid(&fault)].into()).unwrap(),
            );
            strata.insert(bug, format!("proj-{}", i % 2));
        }
        (dataset, truth, strata)
    }

    #[test]
    fn stratified_split_balances_within_strata() {
        let strata: BTreeMap<String, String> = (0..9)
            .map(|i| (format!("bug-{i}"), format!("proj-{}", i % 3)))
            .collect();
        let split = FoldSplit::stratified(&strata, 3, 1).unwrap();
        for stratum in ["proj-0", "proj-1", "proj-2"] {
            let mut per_fold = vec![0usize; 3];
            for (bug, tag) in &strata {
                if tag == stratum {
                    per_fold[split.fold_of(bug).unwrap()] += 1;
                }
            }
            let max = per_fold.iter().max().unwrap();
            let min = per_fold.iter().min().unwrap();
            assert!(max - min <= 1, "stratum {stratum}: {per_fold:?}");
        }
    }

    #[test]
    fn split_assigns_every_bug_exactly_once() {
        let strata: BTreeMap<String, String> = (0..12)
            .map(|i| (format!("bug-{i}"), format!("proj-{}", i % 4)))
            .collect();
        let split = FoldSplit::stratified(&strata, 10, 9).unwrap();
        assert_eq!(split.assignments().len(), 12);
        let covered: usize = (0..10).map(|f| split.bugs_in_fold(f).len()).sum();
        assert_eq!(covered, 12);
    }

    #[test]
    fn two_folds_partition_four_bugs() {
        let (dataset, truth, strata) = dominated_dataset();
        let mut de = DeConfig::for_weights(2, 5);
        de.population_size = 8;
        de.generations = 5;
        let outcome = cross_validate(&dataset, &truth, &strata, &de, 2, None).unwrap();
        assert_eq!(outcome.folds.len(), 2);
        let val_bugs: Vec<Vec<&str>> = (0..2)
            .map(|f| outcome.split.bugs_in_fold(f))
            .collect();
        assert_eq!(val_bugs[0].len() + val_bugs[1].len(), 4);
        for bug in &val_bugs[0] {
            assert!(!val_bugs[1].contains(bug));
        }
    }

    #[test]
    fn mean_weights_sum_to_one() {
        let (dataset, truth, strata) = dominated_dataset();
        let mut de = DeConfig::for_weights(2, 5);
        de.population_size = 8;
        de.generations = 5;
        let outcome = cross_validate(&dataset, &truth, &strata, &de, 2, None).unwrap();
        assert!((outcome.mean_weights.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dominant_model_earns_the_greater_mean_weight() {
        // A brute-force sweep of the 2-model weight grid confirms the optimum
        // is good-dominant: any w_good > 0.5*w_bad scores acc@1 = 4, and
        // w_good <= 0.5*w_bad scores strictly worse. DE should land there in
        // every fold, pushing the mean weight of "good" above "bad".
        let (dataset, truth, strata) = dominated_dataset();
        let mut de = DeConfig::for_weights(2, 17);
        de.population_size = 12;
        de.generations = 12;
        let outcome = cross_validate(&dataset, &truth, &strata, &de, 2, None).unwrap();
        let good = outcome.mean_weights.get("good").unwrap();
        let bad = outcome.mean_weights.get("bad").unwrap();
        assert!(
            good > bad,
            "expected good-dominant weights, got good={good} bad={bad}"
        );
        // Good-dominant weights localise every held-out bug.
        for fold in &outcome.folds {
            assert_eq!(
                fold.validation.acc1,
                outcome.split.bugs_in_fold(fold.fold).len()
            );
        }
    }

    #[test]
    fn run_subsets_are_deterministic_per_fold() {
        let (dataset, truth, strata) = dominated_dataset();
        let mut de = DeConfig::for_weights(2, 3);
        de.population_size = 8;
        de.generations = 3;
        let a = cross_validate(&dataset, &truth, &strata, &de, 2, Some(1)).unwrap();
        let b = cross_validate(&dataset, &truth, &strata, &de, 2, Some(1)).unwrap();
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            assert_eq!(fa.weights, fb.weights);
            assert_eq!(fa.validation, fb.validation);
        }
    }

    #[test]
    fn rejects_more_folds_than_bugs() {
        let (dataset, truth, strata) = dominated_dataset();
        let de = DeConfig::for_weights(2, 3);
        let err = cross_validate(&dataset, &truth, &strata, &de, 5, None).unwrap_err();
        assert!(matches!(err, OptimError::DatasetSmallerThanFolds { .. }));
    }
}
