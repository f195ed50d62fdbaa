//! Ensemble fault localisation over language-model endpoints.
//!
//! A bug's failing-test context is handed to an instruction-following,
//! tool-calling agent loop; each inference run yields a set of suspect
//! methods. Runs are aggregated by voting — optionally across an ensemble of
//! models with per-model weights — and the weights themselves can be
//! optimised with differential evolution under cross-validation. The harness
//! orchestrates collection, sampling, evaluation, and reporting of the
//! accuracy/cost trade-off (tokens, wall time, GPU energy).
//!
//! Modules:
//! * [`scoring`] — voting scores, ranking, acc@k, wasted effort, overlap.
//! * [`optimizer`] — differential evolution, FL fitness, cross-validation,
//!   pairwise weight landscapes.
//! * [`agent`] — wire protocol, endpoints (HTTP and scripted mock), the
//!   tool-calling loop.
//! * [`fixtures`] — recorded bug bundles and the bundled desk-d4j corpus.
//! * [`cost`] — token/time/energy accounting.
//! * [`harness`] — experiment plans, run pools, evaluation, reports.

pub mod agent;
pub mod cli;
pub mod cost;
pub mod fixtures;
pub mod harness;
pub mod optimizer;
pub mod scoring;
