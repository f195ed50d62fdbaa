//! Experiment orchestration: plans, run pools, sampling, evaluation, reports.

pub mod collect;
pub mod evaluate;
pub mod plan;
pub mod report;
pub mod sampling;
pub mod storage;

pub use collect::{collect, CollectOptions, CollectSummary};
pub use evaluate::{evaluate, overlap_from_pool, EvaluateOptions};
pub use plan::{EnsembleMode, ExperimentPlan};
pub use report::{report_emit, AggregateRow, Report, SampleRow};
pub use sampling::{sample_runs, RunSample};
pub use storage::RunPool;

use crate::agent::EndpointError;
use crate::cost::CostError;
use crate::fixtures::FixtureError;
use crate::optimizer::OptimError;
use crate::scoring::ScoringError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("missing run: bug {bug}, model {model}, run index {run_index}")]
    MissingRun {
        bug: String,
        model: String,
        run_index: u32,
    },
    #[error("sample of {requested} runs exceeds the pool of {pool} for model {model}")]
    SampleExceedsPool {
        model: String,
        requested: usize,
        pool: usize,
    },
    #[error("endpoint failure budget of {budget} exceeded: {failures} failed runs")]
    FailureBudgetExceeded { budget: usize, failures: usize },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error("{path}: {message}")]
    Storage { path: String, message: String },
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
