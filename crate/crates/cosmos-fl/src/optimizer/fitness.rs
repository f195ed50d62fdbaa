//! Fault-localisation fitness over a fixed run dataset.
//!
//! The optimisation variable is a vector of per-model voting weights. For a
//! candidate weighting, every bug's runs are aggregated with those weights,
//! ranked, and scored: acc@1 is the primary (maximised) objective, total
//! wasted effort the secondary (minimised) tie-breaker.

use std::collections::BTreeMap;

use crate::optimizer::de::{Agent, Fitness};
use crate::optimizer::OptimError;
use crate::scoring::{
    acc_at_k, aggregate_weighted, rank, wasted_effort, GroundTruth, RankedList, ScoreMap,
    WeightVector,
};

/// Scored runs of one bug, keyed by model name.
pub type ModelRuns = BTreeMap<String, Vec<ScoreMap>>;

/// The whole dataset: bug id -> per-model scored runs.
pub type FlDataset = BTreeMap<String, ModelRuns>;

/// Validated dataset plus ground truth, ready for repeated evaluation.
///
/// Construction checks the dataset once (non-empty, every bug has ground
/// truth and runs for the same model set), so evaluation itself cannot fail
/// and can run inside the optimiser's hot loop.
#[derive(Debug, Clone)]
pub struct FitnessEvaluator {
    dataset: FlDataset,
    truth: BTreeMap<String, GroundTruth>,
    models: Vec<String>,
}

impl FitnessEvaluator {
    pub fn new(
        dataset: FlDataset,
        truth: BTreeMap<String, GroundTruth>,
    ) -> Result<Self, OptimError> {
        if dataset.is_empty() {
            return Err(OptimError::EmptyDataset);
        }
        let models: Vec<String> = dataset
            .values()
            .next()
            .expect("non-empty dataset")
            .keys()
            .cloned()
            .collect();
        for (bug, runs) in &dataset {
            if !truth.contains_key(bug) {
                return Err(OptimError::BugWithoutTruth(bug.clone()));
            }
            let bug_models: Vec<&String> = runs.keys().collect();
            if bug_models.len() != models.len()
                || !models.iter().zip(&bug_models).all(|(a, b)| &a == b)
            {
                return Err(OptimError::InconsistentModels { bug: bug.clone() });
            }
            for (model, model_runs) in runs {
                if model_runs.is_empty() {
                    return Err(OptimError::NoRunsForModel {
                        bug: bug.clone(),
                        model: model.clone(),
                    });
                }
            }
        }
        Ok(FitnessEvaluator {
            dataset,
            truth,
            models,
        })
    }

    /// Model names in genome order (lexicographic).
    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn bug_count(&self) -> usize {
        self.dataset.len()
    }

    /// Zip a genome onto the model order. Components are expected to already
    /// lie in `[0, 1]` (the optimiser clamps).
    pub fn weights_from_genome(&self, genome: &[f64]) -> Result<WeightVector, OptimError> {
        if genome.len() != self.models.len() {
            return Err(OptimError::GenomeDimension {
                expected: self.models.len(),
                found: genome.len(),
            });
        }
        WeightVector::new(
            self.models
                .iter()
                .cloned()
                .zip(genome.iter().copied())
                .collect(),
        )
        .map_err(OptimError::from)
    }

    /// Per-bug rankings under the given weights.
    pub fn rankings(&self, weights: &WeightVector) -> BTreeMap<String, RankedList> {
        self.dataset
            .iter()
            .map(|(bug, runs)| {
                let aggregated =
                    aggregate_weighted(runs, weights).expect("dataset validated at construction");
                (bug.clone(), rank(&aggregated))
            })
            .collect()
    }

    /// Fitness of a weighting: acc@1 maximised, total wasted effort as
    /// tie-breaker.
    pub fn evaluate_weights(&self, weights: &WeightVector) -> Fitness {
        let rankings = self.rankings(weights);
        let acc1 = acc_at_k(&rankings, &self.truth, 1).expect("truth validated at construction");
        let total_wasted: usize = rankings
            .iter()
            .map(|(bug, ranking)| wasted_effort(ranking, &self.truth[bug]))
            .sum();
        Fitness::new(acc1, total_wasted)
    }

    /// Fitness of a raw genome. An all-zero genome cannot be normalised and
    /// evaluates to the worst possible fitness instead of failing.
    pub fn evaluate_agent(&self, agent: &Agent) -> Fitness {
        match self.weights_from_genome(&agent.genome) {
            Ok(weights) if weights.total() > 0.0 => self.evaluate_weights(&weights),
            _ => Fitness::worst(),
        }
    }
}

/// One-shot convenience wrapper around [`FitnessEvaluator`].
pub fn fl_fitness(
    weights: &WeightVector,
    dataset: &FlDataset,
    truth: &BTreeMap<String, GroundTruth>,
) -> Result<Fitness, OptimError> {
    let evaluator = FitnessEvaluator::new(dataset.clone(), truth.clone())?;
    for model in evaluator.models() {
        if weights.get(model).is_none() {
            return Err(OptimError::Scoring(
                crate::scoring::ScoringError::ModelWithoutWeight(model.clone()),
            ));
        }
    }
    Ok(evaluator.evaluate_weights(weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{score_run, MethodId, PredictionSet};

    fn mid(s: &str) -> MethodId {
        MethodId::new(s).unwrap()
    }

    fn set(methods: &[&str]) -> ScoreMap {
        let prediction: PredictionSet = methods.iter().map(|m| mid(m)).collect();
        score_run(&prediction)
    }

    fn truth_for(bug: &str, faulty: &str) -> GroundTruth {
        GroundTruth::new(bug, [mid(faulty)].into()).unwrap()
    }

    #[test]
    fn top_ranked_faulty_method_scores_perfect_fitness() {
        let dataset: FlDataset = [(
            "bug-1".to_string(),
            ModelRuns::from([("m".to_string(), vec![set(&["f"])])]),
        )]
        .into();
        let truth = [("bug-1".to_string(), truth_for("bug-1", "f"))].into();
        let fitness = fl_fitness(&WeightVector::equal(["m"]), &dataset, &truth).unwrap();
        assert_eq!(fitness, Fitness::new(1, 0));
    }

    #[test]
    fn five_run_example_with_equal_weights() {
        // Runs {m1,m2}, {m2}, {m2}, {m2}, {m3} with faulty m2: m2 aggregates
        // to 0.7 and tops the ranking.
        let runs = vec![
            set(&["m1", "m2"]),
            set(&["m2"]),
            set(&["m2"]),
            set(&["m2"]),
            set(&["m3"]),
        ];
        let dataset: FlDataset = [(
            "bug-1".to_string(),
            ModelRuns::from([("solo".to_string(), runs)]),
        )]
        .into();
        let truth = [("bug-1".to_string(), truth_for("bug-1", "m2"))].into();
        let fitness = fl_fitness(&WeightVector::equal(["solo"]), &dataset, &truth).unwrap();
        assert_eq!(fitness, Fitness::new(1, 0));
    }

    #[test]
    fn zeroing_the_informed_model_drops_acc1() {
        // Model a finds the fault; model b votes for a decoy.
        let dataset: FlDataset = [(
            "bug-1".to_string(),
            ModelRuns::from([
                ("a".to_string(), vec![set(&["fault"])]),
                ("b".to_string(), vec![set(&["noise"])]),
            ]),
        )]
        .into();
        let truth: BTreeMap<String, GroundTruth> =
            [("bug-1".to_string(), truth_for("bug-1", "fault"))].into();

        let favour_a =
            WeightVector::new([("a".to_string(), 1.0), ("b".to_string(), 0.0)].into()).unwrap();
        let favour_b =
            WeightVector::new([("a".to_string(), 0.0), ("b".to_string(), 1.0)].into()).unwrap();
        assert_eq!(
            fl_fitness(&favour_a, &dataset, &truth).unwrap(),
            Fitness::new(1, 0)
        );
        // Hand aggregation: only "noise" scores, the fault never appears, so
        // the one listed method is wasted and acc@1 is 0.
        assert_eq!(
            fl_fitness(&favour_b, &dataset, &truth).unwrap(),
            Fitness::new(0, 1)
        );
    }

    #[test]
    fn evaluator_rejects_missing_truth() {
        let dataset: FlDataset = [(
            "bug-1".to_string(),
            ModelRuns::from([("m".to_string(), vec![set(&["f"])])]),
        )]
        .into();
        let err = FitnessEvaluator::new(dataset, BTreeMap::new()).unwrap_err();
        assert!(matches!(err, OptimError::BugWithoutTruth(_)));
    }

    #[test]
    fn evaluator_rejects_inconsistent_model_sets() {
        let dataset: FlDataset = [
            (
                "bug-1".to_string(),
                ModelRuns::from([("a".to_string(), vec![set(&["f"])])]),
            ),
            (
                "bug-2".to_string(),
                ModelRuns::from([("b".to_string(), vec![set(&["f"])])]),
            ),
        ]
        .into();
        let truth = [
            ("bug-1".to_string(), truth_for("bug-1", "f")),
            ("bug-2".to_string(), truth_for("bug-2", "f")),
        ]
        .into();
        let err = FitnessEvaluator::new(dataset, truth).unwrap_err();
        assert!(matches!(err, OptimError::InconsistentModels { .. }));
    }

    #[test]
    fn all_zero_genome_evaluates_to_worst() {
        let dataset: FlDataset = [(
            "bug-1".to_string(),
            ModelRuns::from([("m".to_string(), vec![set(&["f"])])]),
        )]
        .into();
        let truth = [("bug-1".to_string(), truth_for("bug-1", "f"))].into();
        let evaluator = FitnessEvaluator::new(dataset, truth).unwrap();
        let fitness = evaluator.evaluate_agent(&Agent { genome: vec![0.0] });
        assert_eq!(fitness, Fitness::worst());
    }
}
