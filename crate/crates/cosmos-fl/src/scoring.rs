//! Voting-based suspiciousness scoring and fault-localisation metrics.
//!
//! Each inference run names a set of suspicious methods; the run's vote is
//! split evenly across them (`1/|set|` each). Votes are averaged across runs,
//! optionally with per-model weights, and the resulting score map is ranked to
//! produce the final suspiciousness ordering. Metrics over those rankings
//! (acc@k, wasted effort, confidence, overlap regions) live here too.
//!
//! Everything in this module is a pure function over immutable inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Errors from scoring and metric computation.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScoringError {
    #[error("method identifier must be non-empty")]
    EmptyMethodId,
    #[error("ground truth for {0} must name at least one faulty method")]
    EmptyGroundTruth(String),
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("model {0} has no runs")]
    ModelWithoutRuns(String),
    #[error("model {0} present in runs but absent from the weight vector")]
    ModelWithoutWeight(String),
    #[error("weight for model {model} is {value}, outside [0, 1]")]
    WeightOutOfRange { model: String, value: f64 },
    #[error("weights sum to zero")]
    ZeroTotalWeight,
    #[error("no ground truth for bug {0}")]
    MissingGroundTruth(String),
}

/// Opaque method identifier: fully qualified name plus signature.
///
/// Equality is exact string equality; the total order is lexicographic and is
/// what every tie-break in this crate falls back to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodId(String);

impl MethodId {
    pub fn new(id: impl Into<String>) -> Result<Self, ScoringError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ScoringError::EmptyMethodId);
        }
        Ok(MethodId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for MethodId {
    type Error = ScoringError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        MethodId::new(value)
    }
}

impl From<MethodId> for String {
    fn from(id: MethodId) -> String {
        id.0
    }
}

/// The set of methods one inference run names as suspicious. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionSet(BTreeSet<MethodId>);

impl PredictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, method: MethodId) -> bool {
        self.0.insert(method)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, method: &MethodId) -> bool {
        self.0.contains(method)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MethodId> {
        self.0.iter()
    }
}

impl FromIterator<MethodId> for PredictionSet {
    fn from_iter<I: IntoIterator<Item = MethodId>>(iter: I) -> Self {
        PredictionSet(iter.into_iter().collect())
    }
}

/// Map from method to suspiciousness score. Scores are non-negative; a map
/// produced by [`aggregate_runs`] over non-empty runs sums to 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreMap(BTreeMap<MethodId, f64>);

impl ScoreMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Score of `method`, defaulting to 0 for absent methods.
    pub fn score(&self, method: &MethodId) -> f64 {
        self.0.get(method).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MethodId, f64)> {
        self.0.iter().map(|(m, s)| (m, *s))
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    fn add(&mut self, method: &MethodId, amount: f64) {
        *self.0.entry(method.clone()).or_insert(0.0) += amount;
    }

    fn scale(&mut self, factor: f64) {
        for score in self.0.values_mut() {
            *score *= factor;
        }
    }
}

impl FromIterator<(MethodId, f64)> for ScoreMap {
    fn from_iter<I: IntoIterator<Item = (MethodId, f64)>>(iter: I) -> Self {
        ScoreMap(iter.into_iter().collect())
    }
}

/// Per-model voting weights in `[0, 1]`.
///
/// Model order is fixed: lexicographic by model name, the iteration order of
/// the underlying map. The optimizer's genome uses the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(BTreeMap<String, f64>);

impl WeightVector {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self, ScoringError> {
        for (model, &value) in &weights {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ScoringError::WeightOutOfRange {
                    model: model.clone(),
                    value,
                });
            }
        }
        Ok(WeightVector(weights))
    }

    /// Uniform weights (1.0 each) over the given models.
    pub fn equal<I, S>(models: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        WeightVector(models.into_iter().map(|m| (m.into(), 1.0)).collect())
    }

    pub fn get(&self, model: &str) -> Option<f64> {
        self.0.get(model).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Model names in their fixed (lexicographic) order.
    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(m, w)| (m.as_str(), *w))
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// Same models with weights rescaled to sum to 1.
    pub fn normalized(&self) -> Result<Self, ScoringError> {
        let total = self.total();
        if total <= 0.0 {
            return Err(ScoringError::ZeroTotalWeight);
        }
        Ok(WeightVector(
            self.0.iter().map(|(m, w)| (m.clone(), w / total)).collect(),
        ))
    }
}

/// Methods ordered by (score desc, method id asc). Construct via [`rank`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedList(Vec<(MethodId, f64)>);

impl RankedList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(MethodId, f64)> {
        self.0.iter()
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodId> {
        self.0.iter().map(|(m, _)| m)
    }

    pub fn get(&self, index: usize) -> Option<&(MethodId, f64)> {
        self.0.get(index)
    }
}

/// A bug's known faulty methods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bug_id: String,
    pub faulty_methods: BTreeSet<MethodId>,
}

impl GroundTruth {
    pub fn new(
        bug_id: impl Into<String>,
        faulty_methods: BTreeSet<MethodId>,
    ) -> Result<Self, ScoringError> {
        let bug_id = bug_id.into();
        if faulty_methods.is_empty() {
            return Err(ScoringError::EmptyGroundTruth(bug_id));
        }
        Ok(GroundTruth {
            bug_id,
            faulty_methods,
        })
    }

    pub fn is_faulty(&self, method: &MethodId) -> bool {
        self.faulty_methods.contains(method)
    }
}

/// Score a single run: each predicted method gets `1/|set|`.
///
/// An empty run yields an empty map; it still counts toward the averaging
/// denominator in [`aggregate_runs`].
pub fn score_run(run: &PredictionSet) -> ScoreMap {
    if run.is_empty() {
        return ScoreMap::new();
    }
    let share = 1.0 / run.len() as f64;
    run.iter().map(|m| (m.clone(), share)).collect()
}

/// Average per-run scores across all runs: `score(m) = Σ_r s_r(m) / |runs|`
/// with absent methods scoring 0 in a run.
pub fn aggregate_runs(runs: &[ScoreMap]) -> Result<ScoreMap, ScoringError> {
    if runs.is_empty() {
        return Err(ScoringError::NoRuns);
    }
    let mut sums = ScoreMap::new();
    for run in runs {
        for (method, score) in run.iter() {
            sums.add(method, score);
        }
    }
    sums.scale(1.0 / runs.len() as f64);
    Ok(sums)
}

/// Weighted ensemble aggregation: normalise the weights, average each model's
/// runs, then sum `ŵ_model · avg_model`.
///
/// Averaging per model first means unequal run counts cannot skew the vote.
/// With uniform weights and equal run counts this equals [`aggregate_runs`]
/// over the pooled runs.
pub fn aggregate_weighted(
    per_model_runs: &BTreeMap<String, Vec<ScoreMap>>,
    weights: &WeightVector,
) -> Result<ScoreMap, ScoringError> {
    for model in per_model_runs.keys() {
        if weights.get(model).is_none() {
            return Err(ScoringError::ModelWithoutWeight(model.clone()));
        }
    }
    let normalized = weights.normalized()?;
    let mut combined = ScoreMap::new();
    for (model, weight) in normalized.iter() {
        let runs = per_model_runs
            .get(model)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| ScoringError::ModelWithoutRuns(model.to_string()))?;
        let averaged = aggregate_runs(runs)?;
        for (method, score) in averaged.iter() {
            combined.add(method, weight * score);
        }
    }
    Ok(combined)
}

/// Maximum score in the map; 0 for an empty map. Measures cross-run agreement.
pub fn confidence(scores: &ScoreMap) -> f64 {
    scores.iter().map(|(_, s)| s).fold(0.0, f64::max)
}

/// Order methods by (score desc, method id asc). Deterministic: the same map
/// always yields the identical list.
pub fn rank(scores: &ScoreMap) -> RankedList {
    let mut entries: Vec<(MethodId, f64)> =
        scores.iter().map(|(m, s)| (m.clone(), s)).collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    RankedList(entries)
}

/// Number of bugs whose ranking places a faulty method within the top `k`
/// positions (1-based). `k` must be ≥ 1.
pub fn acc_at_k(
    results: &BTreeMap<String, RankedList>,
    truth: &BTreeMap<String, GroundTruth>,
    k: usize,
) -> Result<usize, ScoringError> {
    debug_assert!(k >= 1, "acc@k is defined for k >= 1");
    let mut hits = 0;
    for (bug_id, ranking) in results {
        let gt = truth
            .get(bug_id)
            .ok_or_else(|| ScoringError::MissingGroundTruth(bug_id.clone()))?;
        if ranking.iter().take(k).any(|(m, _)| gt.is_faulty(m)) {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Number of non-faulty methods inspected before reaching the first faulty
/// one: the 0-based position of the first faulty method, or `|ranking|` when
/// no faulty method appears at all.
pub fn wasted_effort(ranking: &RankedList, truth: &GroundTruth) -> usize {
    ranking
        .iter()
        .position(|(m, _)| truth.is_faulty(m))
        .unwrap_or_else(|| ranking.len())
}

/// A Venn region: the exact subset of models that top-ranked a bug.
pub type RegionKey = BTreeSet<String>;

/// Human-readable label for a region, e.g. `"mock-a&mock-c"`.
pub fn region_label(region: &RegionKey) -> String {
    region.iter().cloned().collect::<Vec<_>>().join("&")
}

/// Venn region counts over per-model top-ranked bug sets: for every non-empty
/// subset of models, the number of bugs top-ranked by exactly that subset.
/// Zero-count regions are included so the full Venn structure is reported.
pub fn overlap_regions(
    top_ranked: &BTreeMap<String, BTreeSet<String>>,
) -> BTreeMap<RegionKey, usize> {
    let models: Vec<&String> = top_ranked.keys().collect();
    assert!(
        models.len() <= 16,
        "overlap analysis enumerates 2^M - 1 regions; {} models is too many",
        models.len()
    );

    let mut regions: BTreeMap<RegionKey, usize> = BTreeMap::new();
    for mask in 1u32..(1 << models.len()) {
        let key: RegionKey = models
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, m)| (*m).clone())
            .collect();
        regions.insert(key, 0);
    }

    let all_bugs: BTreeSet<&String> = top_ranked.values().flatten().collect();
    for bug in all_bugs {
        let key: RegionKey = top_ranked
            .iter()
            .filter(|(_, bugs)| bugs.contains(bug.as_str()))
            .map(|(model, _)| model.clone())
            .collect();
        *regions.entry(key).or_insert(0) += 1;
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mid(s: &str) -> MethodId {
        MethodId::new(s).unwrap()
    }

    fn set(methods: &[&str]) -> PredictionSet {
        methods.iter().map(|m| mid(m)).collect()
    }

    fn truth(bug: &str, faulty: &[&str]) -> GroundTruth {
        GroundTruth::new(bug, faulty.iter().map(|m| mid(m)).collect()).unwrap()
    }

    #[test]
    fn method_id_rejects_empty() {
        assert_eq!(MethodId::new(""), Err(ScoringError::EmptyMethodId));
    }

    #[test]
    fn score_run_splits_vote_evenly() {
        let scores = score_run(&set(&["m1", "m2"]));
        assert_eq!(scores.score(&mid("m1")), 0.5);
        assert_eq!(scores.score(&mid("m2")), 0.5);
    }

    #[test]
    fn score_run_singleton_gets_full_vote() {
        let scores = score_run(&set(&["m1"]));
        assert_eq!(scores.score(&mid("m1")), 1.0);
        assert_eq!(scores.len(), 1);
    }

    #[test]
    fn score_run_empty_set_yields_empty_map() {
        assert!(score_run(&PredictionSet::new()).is_empty());
    }

    #[test]
    fn aggregate_runs_five_run_example() {
        // Five runs {m1,m2}, {m2}, {m2}, {m2}, {m3}:
        // m2 = (1/2 + 1 + 1 + 1 + 0) / 5 = 0.7, m1 = 0.1, m3 = 0.2.
        let runs: Vec<ScoreMap> = [
            set(&["m1", "m2"]),
            set(&["m2"]),
            set(&["m2"]),
            set(&["m2"]),
            set(&["m3"]),
        ]
        .iter()
        .map(score_run)
        .collect();
        let agg = aggregate_runs(&runs).unwrap();
        assert!((agg.score(&mid("m2")) - 0.7).abs() < 1e-12);
        assert!((agg.score(&mid("m1")) - 0.1).abs() < 1e-12);
        assert!((agg.score(&mid("m3")) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn aggregate_runs_single_run_is_identity() {
        let runs = vec![score_run(&set(&["m1"]))];
        let agg = aggregate_runs(&runs).unwrap();
        assert_eq!(agg.score(&mid("m1")), 1.0);
    }

    #[test]
    fn aggregate_runs_empty_runs_dilute() {
        // (0 + 0 + 1 + 1 + 1) / 5 = 0.6
        let runs = vec![
            score_run(&PredictionSet::new()),
            score_run(&PredictionSet::new()),
            score_run(&set(&["m1"])),
            score_run(&set(&["m1"])),
            score_run(&set(&["m1"])),
        ];
        let agg = aggregate_runs(&runs).unwrap();
        assert!((agg.score(&mid("m1")) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn aggregate_runs_rejects_empty_list() {
        assert_eq!(aggregate_runs(&[]), Err(ScoringError::NoRuns));
    }

    #[test]
    fn aggregate_weighted_symmetric_models() {
        let mut runs = BTreeMap::new();
        runs.insert("a".to_string(), vec![score_run(&set(&["m1"]))]);
        runs.insert("b".to_string(), vec![score_run(&set(&["m2"]))]);
        let agg = aggregate_weighted(&runs, &WeightVector::equal(["a", "b"])).unwrap();
        assert!((agg.score(&mid("m1")) - 0.5).abs() < 1e-12);
        assert!((agg.score(&mid("m2")) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_weighted_averages_per_model_first() {
        // Model a: two runs of {m1} average to 1.0; model b: one run of {m2}.
        // Equal weights normalise to 0.5 each.
        let mut runs = BTreeMap::new();
        runs.insert(
            "a".to_string(),
            vec![score_run(&set(&["m1"])), score_run(&set(&["m1"]))],
        );
        runs.insert("b".to_string(), vec![score_run(&set(&["m2"]))]);
        let agg = aggregate_weighted(&runs, &WeightVector::equal(["a", "b"])).unwrap();
        assert!((agg.score(&mid("m1")) - 0.5).abs() < 1e-12);
        assert!((agg.score(&mid("m2")) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_weighted_is_scale_invariant() {
        let mut runs = BTreeMap::new();
        runs.insert("a".to_string(), vec![score_run(&set(&["m1", "m2"]))]);
        runs.insert("b".to_string(), vec![score_run(&set(&["m2"]))]);
        let half: BTreeMap<String, f64> =
            [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into();
        let full: BTreeMap<String, f64> =
            [("a".to_string(), 1.0), ("b".to_string(), 1.0)].into();
        let lhs = aggregate_weighted(&runs, &WeightVector::new(half).unwrap()).unwrap();
        let rhs = aggregate_weighted(&runs, &WeightVector::new(full).unwrap()).unwrap();
        for (method, score) in lhs.iter() {
            assert!((score - rhs.score(method)).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_weighted_rejects_zero_weights() {
        let mut runs = BTreeMap::new();
        runs.insert("a".to_string(), vec![score_run(&set(&["m1"]))]);
        let zero = WeightVector::new([("a".to_string(), 0.0)].into()).unwrap();
        assert_eq!(
            aggregate_weighted(&runs, &zero),
            Err(ScoringError::ZeroTotalWeight)
        );
    }

    #[test]
    fn aggregate_weighted_rejects_unweighted_model() {
        let mut runs = BTreeMap::new();
        runs.insert("a".to_string(), vec![score_run(&set(&["m1"]))]);
        runs.insert("b".to_string(), vec![score_run(&set(&["m2"]))]);
        let only_a = WeightVector::equal(["a"]);
        assert_eq!(
            aggregate_weighted(&runs, &only_a),
            Err(ScoringError::ModelWithoutWeight("b".to_string()))
        );
    }

    #[test]
    fn aggregate_weighted_rejects_runless_model() {
        let mut runs = BTreeMap::new();
        runs.insert("a".to_string(), vec![score_run(&set(&["m1"]))]);
        runs.insert("b".to_string(), Vec::new());
        let weights = WeightVector::equal(["a", "b"]);
        assert_eq!(
            aggregate_weighted(&runs, &weights),
            Err(ScoringError::ModelWithoutRuns("b".to_string()))
        );
    }

    #[test]
    fn weight_vector_rejects_out_of_range() {
        let err = WeightVector::new([("a".to_string(), 1.5)].into());
        assert!(matches!(err, Err(ScoringError::WeightOutOfRange { .. })));
    }

    #[test]
    fn confidence_is_max_score() {
        let agg: ScoreMap = [
            (mid("m1"), 0.1),
            (mid("m2"), 0.7),
            (mid("m3"), 0.2),
        ]
        .into_iter()
        .collect();
        assert_eq!(confidence(&agg), 0.7);
        assert_eq!(confidence(&ScoreMap::new()), 0.0);
        let single: ScoreMap = [(mid("m1"), 0.6)].into_iter().collect();
        assert_eq!(confidence(&single), 0.6);
    }

    #[test]
    fn rank_orders_by_score_then_id() {
        let agg: ScoreMap = [
            (mid("m1"), 0.1),
            (mid("m2"), 0.7),
            (mid("m3"), 0.2),
        ]
        .into_iter()
        .collect();
        let ranking = rank(&agg);
        let order: Vec<&str> = ranking.methods().map(MethodId::as_str).collect();
        assert_eq!(order, vec!["m2", "m3", "m1"]);
    }

    #[test]
    fn rank_breaks_ties_lexicographically() {
        let agg: ScoreMap = [(mid("b"), 0.5), (mid("a"), 0.5)].into_iter().collect();
        let ranking = rank(&agg);
        let order: Vec<&str> = ranking.methods().map(MethodId::as_str).collect();
        assert_eq!(order, vec!["a", "b"]);
    }

    #[test]
    fn rank_of_empty_map_is_empty() {
        assert!(rank(&ScoreMap::new()).is_empty());
    }

    #[test]
    fn acc_at_k_counts_top_k_hits() {
        let agg: ScoreMap = [
            (mid("m1"), 0.1),
            (mid("m2"), 0.7),
            (mid("m3"), 0.2),
        ]
        .into_iter()
        .collect();
        let results: BTreeMap<String, RankedList> =
            [("bug".to_string(), rank(&agg))].into();
        let truths: BTreeMap<String, GroundTruth> =
            [("bug".to_string(), truth("bug", &["m3"]))].into();
        assert_eq!(acc_at_k(&results, &truths, 1).unwrap(), 0);
        assert_eq!(acc_at_k(&results, &truths, 2).unwrap(), 1);
    }

    #[test]
    fn acc_at_k_saturates_at_list_length() {
        let agg: ScoreMap = [(mid("m1"), 0.4), (mid("m2"), 0.6)].into_iter().collect();
        let results: BTreeMap<String, RankedList> =
            [("bug".to_string(), rank(&agg))].into();
        let truths: BTreeMap<String, GroundTruth> =
            [("bug".to_string(), truth("bug", &["m1"]))].into();
        assert_eq!(acc_at_k(&results, &truths, 100).unwrap(), 1);
    }

    #[test]
    fn acc_at_k_empty_ranking_never_hits() {
        let results: BTreeMap<String, RankedList> =
            [("bug".to_string(), rank(&ScoreMap::new()))].into();
        let truths: BTreeMap<String, GroundTruth> =
            [("bug".to_string(), truth("bug", &["m1"]))].into();
        for k in 1..=5 {
            assert_eq!(acc_at_k(&results, &truths, k).unwrap(), 0);
        }
    }

    #[test]
    fn acc_at_k_requires_ground_truth() {
        let results: BTreeMap<String, RankedList> =
            [("mystery".to_string(), rank(&ScoreMap::new()))].into();
        assert_eq!(
            acc_at_k(&results, &BTreeMap::new(), 1),
            Err(ScoringError::MissingGroundTruth("mystery".to_string()))
        );
    }

    #[test]
    fn wasted_effort_counts_methods_before_first_faulty() {
        let agg: ScoreMap = [
            (mid("m1"), 0.1),
            (mid("m2"), 0.7),
            (mid("m3"), 0.2),
        ]
        .into_iter()
        .collect();
        let ranking = rank(&agg); // m2, m3, m1
        assert_eq!(wasted_effort(&ranking, &truth("b", &["m2"])), 0);
        assert_eq!(wasted_effort(&ranking, &truth("b", &["m1"])), 2);
    }

    #[test]
    fn wasted_effort_absent_method_costs_whole_list() {
        let agg: ScoreMap = [(mid("m2"), 0.6), (mid("m3"), 0.4)].into_iter().collect();
        let ranking = rank(&agg);
        assert_eq!(wasted_effort(&ranking, &truth("b", &["m9"])), 2);
    }

    #[test]
    fn overlap_regions_two_models() {
        let sets: BTreeMap<String, BTreeSet<String>> = [
            (
                "A".to_string(),
                ["1", "2", "3"].iter().map(|s| s.to_string()).collect(),
            ),
            (
                "B".to_string(),
                ["2", "3", "4"].iter().map(|s| s.to_string()).collect(),
            ),
        ]
        .into();
        let regions = overlap_regions(&sets);
        let only_a: RegionKey = ["A".to_string()].into();
        let only_b: RegionKey = ["B".to_string()].into();
        let both: RegionKey = ["A".to_string(), "B".to_string()].into();
        assert_eq!(regions[&only_a], 1);
        assert_eq!(regions[&only_b], 1);
        assert_eq!(regions[&both], 2);
    }

    #[test]
    fn overlap_regions_identical_sets_share_everything() {
        let bugs: BTreeSet<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let sets: BTreeMap<String, BTreeSet<String>> = [
            ("A".to_string(), bugs.clone()),
            ("B".to_string(), bugs.clone()),
        ]
        .into();
        let regions = overlap_regions(&sets);
        let both: RegionKey = ["A".to_string(), "B".to_string()].into();
        assert_eq!(regions[&both], 2);
        assert_eq!(regions.values().sum::<usize>(), 2);
    }

    #[test]
    fn overlap_regions_disjoint_singletons() {
        let sets: BTreeMap<String, BTreeSet<String>> = ["A", "B", "C", "D"]
            .iter()
            .enumerate()
            .map(|(i, m)| (m.to_string(), [format!("bug-{i}")].into()))
            .collect();
        let regions = overlap_regions(&sets);
        for model in ["A", "B", "C", "D"] {
            let exclusive: RegionKey = [model.to_string()].into();
            assert_eq!(regions[&exclusive], 1);
        }
        assert_eq!(regions.values().sum::<usize>(), 4);
        // All shared regions are present but empty.
        assert_eq!(regions.len(), 15);
    }

    #[test]
    fn region_label_joins_sorted_names() {
        let key: RegionKey = ["B".to_string(), "A".to_string()].into();
        assert_eq!(region_label(&key), "A&B");
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_method() -> impl Strategy<Value = MethodId> {
        "[a-e][0-9]{0,2}".prop_map(|s| MethodId::new(s).unwrap())
    }

    fn arb_prediction_set(min: usize) -> impl Strategy<Value = PredictionSet> {
        prop::collection::btree_set(arb_method(), min..8)
            .prop_map(|s| s.into_iter().collect())
    }

    fn arb_runs() -> impl Strategy<Value = Vec<ScoreMap>> {
        prop::collection::vec(
            arb_prediction_set(1).prop_map(|s| score_run(&s)),
            1..12,
        )
    }

    proptest! {
        #[test]
        fn score_run_sums_to_one(set in arb_prediction_set(1)) {
            let total = score_run(&set).total();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn aggregate_runs_sums_to_one(runs in arb_runs()) {
            let total = aggregate_runs(&runs).unwrap().total();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn pooled_equals_weighted_with_equal_weights(
            runs_per_model in prop::collection::vec(
                prop::collection::vec(arb_prediction_set(0), 3),
                2..5,
            ),
        ) {
            let mut per_model = BTreeMap::new();
            let mut pooled = Vec::new();
            for (i, runs) in runs_per_model.iter().enumerate() {
                let scored: Vec<ScoreMap> = runs.iter().map(score_run).collect();
                pooled.extend(scored.clone());
                per_model.insert(format!("model-{i}"), scored);
            }
            let weights = WeightVector::equal(per_model.keys().cloned());
            let weighted = aggregate_weighted(&per_model, &weights).unwrap();
            let pooled_agg = aggregate_runs(&pooled).unwrap();
            for (method, score) in weighted.iter() {
                prop_assert!((score - pooled_agg.score(method)).abs() < 1e-9);
            }
            for (method, score) in pooled_agg.iter() {
                prop_assert!((score - weighted.score(method)).abs() < 1e-9);
            }
        }

        #[test]
        fn weight_scaling_does_not_change_scores(
            sets in prop::collection::vec(arb_prediction_set(1), 2),
            base in 0.05f64..1.0,
            scale in 0.01f64..1.0,
        ) {
            let mut runs = BTreeMap::new();
            runs.insert("a".to_string(), vec![score_run(&sets[0])]);
            runs.insert("b".to_string(), vec![score_run(&sets[1])]);
            let w1 = WeightVector::new(
                [("a".to_string(), base), ("b".to_string(), base / 2.0)].into(),
            ).unwrap();
            let w2 = WeightVector::new(
                [
                    ("a".to_string(), base * scale),
                    ("b".to_string(), base / 2.0 * scale),
                ].into(),
            ).unwrap();
            let lhs = aggregate_weighted(&runs, &w1).unwrap();
            let rhs = aggregate_weighted(&runs, &w2).unwrap();
            for (method, score) in lhs.iter() {
                prop_assert!((score - rhs.score(method)).abs() < 1e-12);
            }
        }

        #[test]
        fn rank_is_deterministic(set in arb_prediction_set(0)) {
            let scores = score_run(&set);
            let a = rank(&scores);
            let b = rank(&scores);
            prop_assert_eq!(
                serde_json::to_vec(&a).unwrap(),
                serde_json::to_vec(&b).unwrap()
            );
        }

        #[test]
        fn acc_at_k_is_monotone_and_bounded(
            bugs in prop::collection::btree_map(
                "[a-z]{1,4}",
                (arb_prediction_set(0), arb_prediction_set(1)),
                1..10,
            ),
        ) {
            let mut results = BTreeMap::new();
            let mut truths = BTreeMap::new();
            for (bug, (prediction, faulty)) in &bugs {
                results.insert(bug.clone(), rank(&score_run(prediction)));
                truths.insert(
                    bug.clone(),
                    GroundTruth::new(bug.clone(), faulty.iter().cloned().collect())
                        .unwrap(),
                );
            }
            let mut previous = 0;
            for k in 1..=8 {
                let hits = acc_at_k(&results, &truths, k).unwrap();
                prop_assert!(hits >= previous);
                prop_assert!(hits <= results.len());
                previous = hits;
            }
        }

        #[test]
        fn wasted_effort_zero_iff_top_is_faulty(
            set in arb_prediction_set(1),
            faulty in arb_method(),
        ) {
            let ranking = rank(&score_run(&set));
            let gt = GroundTruth::new("b", [faulty.clone()].into()).unwrap();
            let zero = wasted_effort(&ranking, &gt) == 0;
            let top_is_faulty = ranking
                .get(0)
                .map(|(m, _)| *m == faulty)
                .unwrap_or(false);
            prop_assert_eq!(zero, top_is_faulty);
        }

        #[test]
        fn overlap_counts_sum_to_union(
            sets in prop::collection::btree_map(
                "[A-D]",
                prop::collection::btree_set("[a-z][0-9]", 0..6),
                2..5,
            ),
        ) {
            let union: BTreeSet<&String> = sets.values().flatten().collect();
            let regions = overlap_regions(&sets);
            prop_assert_eq!(regions.values().sum::<usize>(), union.len());
        }
    }
}
