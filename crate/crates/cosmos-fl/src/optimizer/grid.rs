//! Exhaustive weight landscape for two-model ensembles.
//!
//! Sweeps `(w_a, w_b)` along the `w_a + w_b = 1` line at a fixed step and
//! records acc@1 at every point, producing the plot-ready landscape data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::optimizer::fitness::{FitnessEvaluator, FlDataset, ModelRuns};
use crate::optimizer::OptimError;
use crate::scoring::{GroundTruth, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub weight_a: f64,
    pub weight_b: f64,
    pub acc1: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseLandscape {
    pub model_a: String,
    pub model_b: String,
    pub runs_per_model: usize,
    pub points: Vec<GridPoint>,
}

impl PairwiseLandscape {
    pub fn max_acc1(&self) -> usize {
        self.points.iter().map(|p| p.acc1).max().unwrap_or(0)
    }

    /// acc@1 at the `w_a = 1` and `w_b = 1` endpoints.
    pub fn endpoints(&self) -> (usize, usize) {
        let a_only = self
            .points
            .iter()
            .find(|p| p.weight_a == 1.0)
            .map(|p| p.acc1)
            .unwrap_or(0);
        let b_only = self
            .points
            .iter()
            .find(|p| p.weight_b == 1.0)
            .map(|p| p.acc1)
            .unwrap_or(0);
        (a_only, b_only)
    }
}

/// Evaluate acc@1 on every grid point of the pairwise simplex.
///
/// `step` must divide 1 evenly; `runs_per_model` takes the first runs of each
/// model's pool (1 to 5) so the landscape is deterministic.
pub fn grid_search_pairwise(
    model_a: &str,
    model_b: &str,
    runs_per_model: usize,
    step: f64,
    dataset: &FlDataset,
    truth: &BTreeMap<String, GroundTruth>,
) -> Result<PairwiseLandscape, OptimError> {
    if !(1..=5).contains(&runs_per_model) {
        return Err(OptimError::InvalidGrid(format!(
            "runs_per_model {runs_per_model} outside [1, 5]"
        )));
    }
    if !(step > 0.0) || step > 1.0 {
        return Err(OptimError::InvalidGrid(format!("step {step} outside (0, 1]")));
    }
    let divisions = (1.0 / step).round();
    if (divisions * step - 1.0).abs() > 1e-9 {
        return Err(OptimError::InvalidGrid(format!(
            "step {step} does not divide 1 evenly"
        )));
    }
    let divisions = divisions as usize;

    // Restrict every bug to the pair of models and the first runs of each.
    let mut restricted = FlDataset::new();
    for (bug, runs) in dataset {
        let mut pair = ModelRuns::new();
        for model in [model_a, model_b] {
            let model_runs = runs
                .get(model)
                .ok_or_else(|| OptimError::NoRunsForModel {
                    bug: bug.clone(),
                    model: model.to_string(),
                })?;
            if model_runs.len() < runs_per_model {
                return Err(OptimError::RunsExceedPool {
                    model: model.to_string(),
                    requested: runs_per_model,
                    pool: model_runs.len(),
                });
            }
            pair.insert(model.to_string(), model_runs[..runs_per_model].to_vec());
        }
        restricted.insert(bug.clone(), pair);
    }
    let restricted_truth: BTreeMap<String, GroundTruth> = restricted
        .keys()
        .map(|bug| {
            truth
                .get(bug)
                .map(|t| (bug.clone(), t.clone()))
                .ok_or_else(|| OptimError::BugWithoutTruth(bug.clone()))
        })
        .collect::<Result<_, _>>()?;
    let evaluator = FitnessEvaluator::new(restricted, restricted_truth)?;

    let mut points = Vec::with_capacity(divisions + 1);
    for i in 0..=divisions {
        let weight_a = i as f64 / divisions as f64;
        let weight_b = 1.0 - weight_a;
        let weights = WeightVector::new(
            [
                (model_a.to_string(), weight_a),
                (model_b.to_string(), weight_b),
            ]
            .into(),
        )?;
        let fitness = evaluator.evaluate_weights(&weights);
        points.push(GridPoint {
            weight_a,
            weight_b,
            acc1: fitness.acc1,
        });
    }

    Ok(PairwiseLandscape {
        model_a: model_a.to_string(),
        model_b: model_b.to_string(),
        runs_per_model,
        points,
    })
}
