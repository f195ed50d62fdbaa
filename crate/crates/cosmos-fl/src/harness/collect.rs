//! Run collection: fill the pool with `runs_per_model_pool` records per
//! (model, bug).
//!
//! Work fans out across a bounded worker pool (the in-flight limit); records
//! flow back over a channel to the collecting thread, which is the only
//! writer. Collection is resumable: keys already on disk are skipped, so an
//! interrupted collection picks up where it stopped without duplicating any
//! (bug, model, run index) triple.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::agent::{run_inference, ChatEndpoint, RunConfig, RunStatus, ToolRegistry};
use crate::fixtures::BugFixture;
use crate::harness::sampling::mix_seed;
use crate::harness::storage::RunPool;
use crate::harness::HarnessError;

#[derive(Debug, Clone)]
pub struct CollectOptions {
    pub runs_per_model_pool: u32,
    pub base_seed: u64,
    /// Template for per-run loop settings (seed/index are filled per run).
    pub run_config: RunConfig,
    /// Maximum concurrent inferences.
    pub in_flight_limit: usize,
    /// Abort threshold: collection still records every failure, but returns
    /// an error once more than this many runs end in endpoint-error.
    pub failure_budget: Option<usize>,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            runs_per_model_pool: 30,
            base_seed: 0,
            run_config: RunConfig::default(),
            in_flight_limit: 4,
            failure_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectSummary {
    pub written: usize,
    pub skipped: usize,
    pub status_counts: BTreeMap<String, usize>,
}

fn status_name(status: RunStatus) -> String {
    serde_json::to_value(status)
        .expect("status serializes")
        .as_str()
        .expect("status is a string")
        .to_string()
}

struct WorkItem {
    model: String,
    bug: String,
    run_index: u32,
    seed: u64,
}

/// Deterministic per-run seed: a pure function of (base, model, bug, index).
pub fn run_seed(base: u64, model: &str, bug: &str, run_index: u32) -> u64 {
    mix_seed(base, &[model, bug], u64::from(run_index))
}

/// Collect any missing runs into `out_dir`, returning a summary of what was
/// written and skipped.
pub fn collect(
    fixtures: &BTreeMap<String, BugFixture>,
    endpoints: &BTreeMap<String, Arc<dyn ChatEndpoint>>,
    tools: &ToolRegistry,
    options: &CollectOptions,
    out_dir: &Path,
) -> Result<CollectSummary, HarnessError> {
    let mut pool = RunPool::load(out_dir)?;
    let session_start = Instant::now();

    let mut queue: Vec<WorkItem> = Vec::new();
    let mut skipped = 0usize;
    for model in endpoints.keys() {
        for bug in fixtures.keys() {
            for run_index in 0..options.runs_per_model_pool {
                if pool.contains(bug, model, run_index) {
                    skipped += 1;
                    continue;
                }
                queue.push(WorkItem {
                    model: model.clone(),
                    bug: bug.clone(),
                    run_index,
                    seed: run_seed(options.base_seed, model, bug, run_index),
                });
            }
        }
    }

    let total = queue.len();
    let queue = Arc::new(Mutex::new(queue));
    let (sender, receiver) = mpsc::channel();
    let workers = options.in_flight_limit.max(1).min(total.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let queue = Arc::clone(&queue);
            let sender = sender.clone();
            scope.spawn(|| {
                let queue = queue;
                let sender = sender;
                loop {
                    let item = match queue.lock().expect("work queue").pop() {
                        Some(item) => item,
                        None => break,
                    };
                    let fixture = &fixtures[&item.bug];
                    let endpoint = endpoints[&item.model].as_ref();
                    let cfg = RunConfig {
                        seed: item.seed,
                        run_index: item.run_index,
                        started_ms: session_start.elapsed().as_millis() as u64,
                        ..options.run_config.clone()
                    };
                    let record = run_inference(fixture, endpoint, tools, &cfg);
                    if sender.send(record).is_err() {
                        break;
                    }
                }
            });
        }
        drop(sender);

        // Single-writer: only this thread touches the pool and the disk.
        let mut status_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut written = 0usize;
        for record in receiver {
            *status_counts.entry(status_name(record.status)).or_insert(0) += 1;
            RunPool::save_record(out_dir, &record)?;
            pool.insert(record);
            written += 1;
        }
        pool.write_index(out_dir)?;

        let failures = status_counts
            .get(&status_name(RunStatus::EndpointError))
            .copied()
            .unwrap_or(0);
        if let Some(budget) = options.failure_budget {
            if failures > budget {
                return Err(HarnessError::FailureBudgetExceeded { budget, failures });
            }
        }
        Ok(CollectSummary {
            written,
            skipped,
            status_counts,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{ScriptedEndpoint, ToolRegistry};
    use crate::fixtures::{desk_d4j_fixtures, desk_d4j_scripts};

    fn desk_endpoints() -> BTreeMap<String, Arc<dyn ChatEndpoint>> {
        desk_d4j_scripts()
            .into_iter()
            .map(|(name, script)| {
                (
                    name,
                    Arc::new(ScriptedEndpoint::new(script)) as Arc<dyn ChatEndpoint>,
                )
            })
            .collect()
    }

    fn small_fixtures(n: usize) -> BTreeMap<String, BugFixture> {
        desk_d4j_fixtures().into_iter().take(n).collect()
    }

    #[test]
    fn collects_the_full_grid_of_runs() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = small_fixtures(3);
        let endpoints = desk_endpoints();
        let options = CollectOptions {
            runs_per_model_pool: 5,
            ..CollectOptions::default()
        };
        let summary = collect(
            &fixtures,
            &endpoints,
            &ToolRegistry::standard(),
            &options,
            dir.path(),
        )
        .unwrap();
        // 4 models x 3 bugs x 5 runs.
        assert_eq!(summary.written, 60);
        assert_eq!(summary.skipped, 0);
        assert_eq!(summary.status_counts["ok"], 60);
        let pool = RunPool::load(dir.path()).unwrap();
        assert_eq!(pool.len(), 60);
    }

    #[test]
    fn resume_skips_existing_keys() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = small_fixtures(2);
        let endpoints = desk_endpoints();
        let options = CollectOptions {
            runs_per_model_pool: 3,
            ..CollectOptions::default()
        };
        let tools = ToolRegistry::standard();
        let first = collect(&fixtures, &endpoints, &tools, &options, dir.path()).unwrap();
        assert_eq!(first.written, 24);
        let second = collect(&fixtures, &endpoints, &tools, &options, dir.path()).unwrap();
        assert_eq!(second.written, 0);
        assert_eq!(second.skipped, 24);
        // No duplicate (bug, model, index) triples.
        let pool = RunPool::load(dir.path()).unwrap();
        assert_eq!(pool.len(), 24);
    }

    #[test]
    fn injected_failures_show_up_in_status_counts() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = small_fixtures(1);
        let bug = fixtures.keys().next().unwrap().clone();
        let mut scripts = desk_d4j_scripts();
        // Poison one specific run of mock-a.
        let poisoned_seed = run_seed(0, "mock-a", &bug, 1);
        let script = scripts
            .remove("mock-a")
            .unwrap()
            .failing_on_seeds([poisoned_seed]);
        let mut endpoints: BTreeMap<String, Arc<dyn ChatEndpoint>> = BTreeMap::new();
        endpoints.insert(
            "mock-a".to_string(),
            Arc::new(ScriptedEndpoint::new(script)),
        );
        let options = CollectOptions {
            runs_per_model_pool: 3,
            ..CollectOptions::default()
        };
        let summary = collect(
            &fixtures,
            &endpoints,
            &ToolRegistry::standard(),
            &options,
            dir.path(),
        )
        .unwrap();
        assert_eq!(summary.status_counts["endpoint-error"], 1);
        assert_eq!(summary.status_counts["ok"], 2);
    }

    #[test]
    fn failure_budget_aborts_with_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = small_fixtures(1);
        let mut endpoints: BTreeMap<String, Arc<dyn ChatEndpoint>> = BTreeMap::new();
        endpoints.insert(
            "mock-a".to_string(),
            Arc::new(ScriptedEndpoint::new(
                desk_d4j_scripts().remove("mock-a").unwrap().failing_always(),
            )),
        );
        let options = CollectOptions {
            runs_per_model_pool: 4,
            failure_budget: Some(2),
            ..CollectOptions::default()
        };
        let err = collect(
            &fixtures,
            &endpoints,
            &ToolRegistry::standard(),
            &options,
            dir.path(),
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::FailureBudgetExceeded { .. }));
        // The failed records were still written.
        let pool = RunPool::load(dir.path()).unwrap();
        assert_eq!(pool.len(), 4);
    }

    #[test]
    fn concurrent_and_serial_collections_agree() {
        let fixtures = small_fixtures(2);
        let endpoints = desk_endpoints();
        let tools = ToolRegistry::standard();
        let collect_with = |limit: usize| {
            let dir = tempfile::tempdir().unwrap();
            let options = CollectOptions {
                runs_per_model_pool: 3,
                in_flight_limit: limit,
                ..CollectOptions::default()
            };
            collect(&fixtures, &endpoints, &tools, &options, dir.path()).unwrap();
            let pool = RunPool::load(dir.path()).unwrap();
            // Drop the wall-clock start offsets before comparing.
            let mut records: Vec<_> = pool.records().cloned().collect();
            for record in &mut records {
                record.started_ms = 0;
            }
            records
        };
        assert_eq!(collect_with(1), collect_with(8));
    }
}
