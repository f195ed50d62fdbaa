//! Voting-weight optimisation: differential evolution over the weight
//! simplex, the lexicographic FL fitness, k-fold cross-validation, and the
//! exhaustive pairwise weight landscape.

mod cross_validation;
mod de;
mod fitness;
mod grid;

pub use cross_validation::{cross_validate, CrossValidationOutcome, FoldResult, FoldSplit};
pub use de::{
    de_optimize, initialize_population, make_trial, make_trial_with_forced, Agent, DeConfig,
    DeError, DeOutcome, Fitness, GenerationRecord,
};
pub use fitness::{fl_fitness, FitnessEvaluator, FlDataset, ModelRuns};
pub use grid::{grid_search_pairwise, GridPoint, PairwiseLandscape};

use crate::scoring::ScoringError;

/// Errors from fitness evaluation, cross-validation, and grid search.
#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error(transparent)]
    De(#[from] DeError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("bug {0} has no ground truth")]
    BugWithoutTruth(String),
    #[error("bug {bug} has runs for a different model set than the rest of the dataset")]
    InconsistentModels { bug: String },
    #[error("bug {bug} has no runs for model {model}")]
    NoRunsForModel { bug: String, model: String },
    #[error("genome has {found} components but the dataset has {expected} models")]
    GenomeDimension { expected: usize, found: usize },
    #[error("cross-validation needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("dataset of {bugs} bugs cannot be split into {folds} folds")]
    DatasetSmallerThanFolds { bugs: usize, folds: usize },
    #[error("bug {0} has no project stratum")]
    BugWithoutStratum(String),
    #[error("model {model} has different run counts across bugs")]
    UnevenRunPool { model: String },
    #[error("requested {requested} runs for model {model} but the pool holds {pool}")]
    RunsExceedPool {
        model: String,
        requested: usize,
        pool: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
