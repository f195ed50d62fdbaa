//! Experiment plans.

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;

/// How ensemble configurations are evaluated alongside the single models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleMode {
    /// Single models only.
    None,
    /// Single models plus the uniform-weight ensemble.
    Equal,
    /// Single models, the uniform ensemble, and the DE-optimised ensemble.
    DeOptimized,
}

/// Sampling configuration for one experiment.
///
/// The pool holds `runs_per_model_pool` runs per (model, bug); for each run
/// budget in `r_values`, `samples_per_r` subsets are drawn. Ensemble
/// configurations allocate equal runs per member, so their run budgets must
/// be divisible by the member count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub models: Vec<String>,
    pub bugs: Vec<String>,
    pub runs_per_model_pool: u32,
    pub r_values: Vec<usize>,
    pub samples_per_r: usize,
    pub ensemble_mode: EnsembleMode,
    pub rng_seed: u64,
}

impl ExperimentPlan {
    pub fn new(models: Vec<String>, bugs: Vec<String>) -> Self {
        ExperimentPlan {
            models,
            bugs,
            runs_per_model_pool: 30,
            r_values: vec![4, 8, 12, 16, 20, 24],
            samples_per_r: 20,
            ensemble_mode: EnsembleMode::Equal,
            rng_seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: EnsembleMode) -> Self {
        self.ensemble_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.models.is_empty() {
            return Err(HarnessError::InvalidPlan("no models".to_string()));
        }
        if self.bugs.is_empty() {
            return Err(HarnessError::InvalidPlan("no bugs".to_string()));
        }
        let mut unique = self.models.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != self.models.len() {
            return Err(HarnessError::InvalidPlan(
                "duplicate model names".to_string(),
            ));
        }
        if self.r_values.is_empty() {
            return Err(HarnessError::InvalidPlan("no run budgets".to_string()));
        }
        if self.samples_per_r == 0 {
            return Err(HarnessError::InvalidPlan(
                "samples_per_r must be positive".to_string(),
            ));
        }
        let max_r = *self.r_values.iter().max().expect("non-empty r_values");
        if (self.runs_per_model_pool as usize) < max_r {
            return Err(HarnessError::InvalidPlan(format!(
                "runs_per_model_pool {} is below the largest run budget {max_r}",
                self.runs_per_model_pool
            )));
        }
        if self.ensemble_mode != EnsembleMode::None {
            let members = self.models.len();
            for &r in &self.r_values {
                if r % members != 0 {
                    return Err(HarnessError::InvalidPlan(format!(
                        "run budget R={r} is not divisible by the {members} ensemble members; \
                         ensembles allocate R_M runs per member with R_M x M = R"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_plan() -> ExperimentPlan {
        ExperimentPlan::new(
            vec!["a".to_string(), "b".to_string()],
            vec!["bug-1".to_string()],
        )
    }

    #[test]
    fn default_plan_validates() {
        base_plan().validate().unwrap();
    }

    #[test]
    fn ensemble_rejects_indivisible_budgets() {
        let mut plan = base_plan();
        plan.r_values = vec![4, 7];
        let err = plan.validate().unwrap_err();
        let message = err.to_string();
        assert!(message.contains("R=7"));
        assert!(message.contains("R_M x M = R"));
    }

    #[test]
    fn single_model_plans_permit_any_budget() {
        let mut plan = ExperimentPlan::new(vec!["a".to_string()], vec!["bug-1".to_string()])
            .with_mode(EnsembleMode::None);
        plan.r_values = vec![5, 7, 23];
        plan.validate().unwrap();
    }

    #[test]
    fn pool_must_cover_largest_budget() {
        let mut plan = base_plan();
        plan.runs_per_model_pool = 20;
        assert!(plan.validate().is_err());
    }
}
