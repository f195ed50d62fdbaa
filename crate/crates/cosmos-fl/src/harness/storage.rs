//! On-disk run pool.
//!
//! Layout: one directory per model, one JSON document per (bug, run index):
//! `<out>/runs/<model>/<bug>__<index>.json`, plus a sorted `index.json` that
//! speeds up resumption. Records are immutable once written; resuming a
//! collection skips any (bug, model, index) key already present.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::RunRecord;
use crate::harness::HarnessError;

/// Key of one run in the pool.
pub type RunKey = (String, String, u32); // (bug, model, run_index)

/// All collected runs, indexed by (bug, model, run index).
#[derive(Debug, Default, Clone)]
pub struct RunPool {
    runs: BTreeMap<RunKey, RunRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    bug_id: String,
    model: String,
    run_index: u32,
    status: crate::agent::RunStatus,
    file: String,
}

fn io_error(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl RunPool {
    pub fn new() -> Self {
        RunPool::default()
    }

    pub fn insert(&mut self, record: RunRecord) {
        self.runs.insert(
            (record.bug_id.clone(), record.model.clone(), record.run_index),
            record,
        );
    }

    pub fn contains(&self, bug: &str, model: &str, run_index: u32) -> bool {
        self.runs
            .contains_key(&(bug.to_string(), model.to_string(), run_index))
    }

    pub fn get(&self, bug: &str, model: &str, run_index: u32) -> Option<&RunRecord> {
        self.runs
            .get(&(bug.to_string(), model.to_string(), run_index))
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.values()
    }

    pub fn records_mut(&mut self) -> impl Iterator<Item = &mut RunRecord> {
        self.runs.values_mut()
    }

    /// Runs of one (bug, model), ordered by run index.
    pub fn runs_of(&self, bug: &str, model: &str) -> Vec<&RunRecord> {
        self.runs
            .range(
                (bug.to_string(), model.to_string(), 0)
                    ..=(bug.to_string(), model.to_string(), u32::MAX),
            )
            .map(|(_, record)| record)
            .collect()
    }

    fn runs_dir(out_dir: &Path) -> PathBuf {
        out_dir.join("runs")
    }

    fn record_path(out_dir: &Path, record: &RunRecord) -> PathBuf {
        Self::runs_dir(out_dir)
            .join(&record.model)
            .join(format!("{}__{}.json", record.bug_id, record.run_index))
    }

    /// Persist one record (the single-writer append path).
    pub fn save_record(out_dir: &Path, record: &RunRecord) -> Result<PathBuf, HarnessError> {
        let path = Self::record_path(out_dir, record);
        let parent = path.parent().expect("record path has a parent");
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        let json = serde_json::to_string_pretty(record).expect("record serialization");
        std::fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    /// Write the sorted resumption index.
    pub fn write_index(&self, out_dir: &Path) -> Result<(), HarnessError> {
        let dir = Self::runs_dir(out_dir);
        std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let entries: Vec<IndexEntry> = self
            .runs
            .values()
            .map(|record| IndexEntry {
                bug_id: record.bug_id.clone(),
                model: record.model.clone(),
                run_index: record.run_index,
                status: record.status,
                file: format!("{}/{}__{}.json", record.model, record.bug_id, record.run_index),
            })
            .collect();
        let path = dir.join("index.json");
        let json = serde_json::to_string_pretty(&entries).expect("index serialization");
        std::fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
        Ok(())
    }

    /// Load every record under `<out>/runs/`. Missing directory loads an
    /// empty pool (nothing collected yet).
    pub fn load(out_dir: &Path) -> Result<Self, HarnessError> {
        let dir = Self::runs_dir(out_dir);
        let mut pool = RunPool::new();
        if !dir.exists() {
            return Ok(pool);
        }
        let model_dirs = std::fs::read_dir(&dir).map_err(|e| io_error(&dir, e))?;
        for model_dir in model_dirs {
            let model_dir = model_dir.map_err(|e| io_error(&dir, e))?.path();
            if !model_dir.is_dir() {
                continue;
            }
            let files = std::fs::read_dir(&model_dir).map_err(|e| io_error(&model_dir, e))?;
            for file in files {
                let path = file.map_err(|e| io_error(&model_dir, e))?.path();
                if path.extension().is_none_or(|ext| ext != "json") {
                    continue;
                }
                let text =
                    std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
                let record: RunRecord =
                    serde_json::from_str(&text).map_err(|e| HarnessError::Storage {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                pool.insert(record);
            }
        }
        Ok(pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{RunRecord, RunStatus};
    use crate::scoring::PredictionSet;

    fn record(bug: &str, model: &str, index: u32) -> RunRecord {
        RunRecord {
            bug_id: bug.to_string(),
            model: model.to_string(),
            run_index: index,
            status: RunStatus::Ok,
            predicted_methods: PredictionSet::new(),
            tokens_in: 10,
            tokens_out: 5,
            wall_time_ms: 3,
            energy_j: None,
            power_mean_w: None,
            started_ms: 0,
            prompt_version: "v1".to_string(),
            steps: vec![],
        }
    }

    #[test]
    fn save_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut pool = RunPool::new();
        for index in 0..3 {
            let r = record("Bug-1", "model-x", index);
            RunPool::save_record(dir.path(), &r).unwrap();
            pool.insert(r);
        }
        pool.write_index(dir.path()).unwrap();
        let loaded = RunPool::load(dir.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert!(loaded.contains("Bug-1", "model-x", 2));
        assert_eq!(loaded.runs_of("Bug-1", "model-x").len(), 3);
    }

    #[test]
    fn loading_an_empty_directory_gives_an_empty_pool() {
        let dir = tempfile::tempdir().unwrap();
        let pool = RunPool::load(dir.path()).unwrap();
        assert!(pool.is_empty());
    }

    #[test]
    fn runs_of_orders_by_index() {
        let mut pool = RunPool::new();
        pool.insert(record("b", "m", 2));
        pool.insert(record("b", "m", 0));
        pool.insert(record("b", "m", 1));
        let indices: Vec<u32> = pool.runs_of("b", "m").iter().map(|r| r.run_index).collect();
        assert_eq!(indices, vec![0, 1, 2]);
    }
}
