//! Recorded bug fixtures: the offline, deterministic stand-in for a live
//! benchmark checkout.
//!
//! A fixture bundles everything one bug's inference needs — failing tests,
//! method-level coverage, source snippets, doc comments, and ground truth —
//! so experiments replay without compiling or running any project code. The
//! three agent tools are pure lookups into this data.
//!
//! Fixture files are JSON, one file per project, format tag
//! `cosmos-fixture/1`.

mod desk_d4j;

pub use desk_d4j::{desk_d4j_fixtures, desk_d4j_scripts, designed_overlap_counts, DESK_D4J_MODELS};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scoring::{GroundTruth, MethodId};

pub const FIXTURE_FORMAT: &str = "cosmos-fixture/1";

/// Errors from fixture loading and validation.
#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unsupported format {found:?}, expected {FIXTURE_FORMAT:?}")]
    WrongFormat { path: String, found: String },
    #[error("duplicate bug id {0}")]
    DuplicateBugId(String),
    #[error("bug {bug}: ground-truth method {method} is not covered by any class")]
    GroundTruthNotCovered { bug: String, method: String },
    #[error("bug {bug}: covered method {method} has no snippet")]
    MissingSnippet { bug: String, method: String },
    #[error("bug {0}: ground truth names no faulty methods")]
    EmptyGroundTruth(String),
    #[error("bug {bug}: no failing tests recorded")]
    NoFailingTests { bug: String },
    #[error("fixture file {path} contains no bugs")]
    EmptyFile { path: String },
}

/// One failing test and the evidence the agent is shown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailingTest {
    pub test: String,
    pub message: String,
    pub stack_trace: String,
}

/// A recorded bug: the complete offline context for one localisation task.
#[derive(Debug, Clone, PartialEq)]
pub struct BugFixture {
    pub bug_id: String,
    pub project: String,
    pub failing_tests: Vec<FailingTest>,
    /// Class name -> methods of that class covered by the failing tests.
    pub coverage: BTreeMap<String, Vec<MethodId>>,
    /// Source text per covered method.
    pub snippets: BTreeMap<MethodId, String>,
    /// Documentation text per method; absent entries mean "no comments".
    pub comments: BTreeMap<MethodId, String>,
    pub ground_truth: GroundTruth,
}

impl BugFixture {
    /// Covered methods of `class_name`, if the class is covered at all.
    pub fn covered_methods(&self, class_name: &str) -> Option<&[MethodId]> {
        self.coverage.get(class_name).map(Vec::as_slice)
    }

    pub fn all_covered_methods(&self) -> impl Iterator<Item = &MethodId> {
        self.coverage.values().flatten()
    }

    fn validate(&self) -> Result<(), FixtureError> {
        if self.failing_tests.is_empty() {
            return Err(FixtureError::NoFailingTests {
                bug: self.bug_id.clone(),
            });
        }
        let covered: BTreeSet<&MethodId> = self.all_covered_methods().collect();
        for method in &self.ground_truth.faulty_methods {
            if !covered.contains(method) {
                return Err(FixtureError::GroundTruthNotCovered {
                    bug: self.bug_id.clone(),
                    method: method.to_string(),
                });
            }
        }
        for method in &covered {
            if !self.snippets.contains_key(*method) {
                return Err(FixtureError::MissingSnippet {
                    bug: self.bug_id.clone(),
                    method: method.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// On-disk shape of a single bug entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawBug {
    bug_id: String,
    failing_tests: Vec<FailingTest>,
    coverage: BTreeMap<String, Vec<MethodId>>,
    snippets: BTreeMap<MethodId, String>,
    #[serde(default)]
    comments: BTreeMap<MethodId, String>,
    faulty_methods: Vec<MethodId>,
}

/// On-disk shape of a project fixture file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureFile {
    format: String,
    project: String,
    bugs: Vec<RawBug>,
}

fn fixture_from_raw(project: &str, raw: RawBug) -> Result<BugFixture, FixtureError> {
    let ground_truth =
        GroundTruth::new(raw.bug_id.clone(), raw.faulty_methods.into_iter().collect())
            .map_err(|_| FixtureError::EmptyGroundTruth(raw.bug_id.clone()))?;
    let fixture = BugFixture {
        bug_id: raw.bug_id,
        project: project.to_string(),
        failing_tests: raw.failing_tests,
        coverage: raw.coverage,
        snippets: raw.snippets,
        comments: raw.comments,
        ground_truth,
    };
    fixture.validate()?;
    Ok(fixture)
}

fn load_one_file(
    path: &Path,
    into: &mut BTreeMap<String, BugFixture>,
) -> Result<(), FixtureError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: display.clone(),
        source,
    })?;
    let file: FixtureFile = serde_json::from_str(&text).map_err(|source| FixtureError::Json {
        path: display.clone(),
        source,
    })?;
    if file.format != FIXTURE_FORMAT {
        return Err(FixtureError::WrongFormat {
            path: display,
            found: file.format,
        });
    }
    if file.bugs.is_empty() {
        return Err(FixtureError::EmptyFile { path: display });
    }
    for raw in file.bugs {
        let fixture = fixture_from_raw(&file.project, raw)?;
        if into.contains_key(&fixture.bug_id) {
            return Err(FixtureError::DuplicateBugId(fixture.bug_id));
        }
        into.insert(fixture.bug_id.clone(), fixture);
    }
    Ok(())
}

/// Load and validate a fixture set from a single file or a directory of
/// `*.json` project files.
pub fn load_fixture_set(path: &Path) -> Result<BTreeMap<String, BugFixture>, FixtureError> {
    let mut fixtures = BTreeMap::new();
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .map_err(|source| FixtureError::Io {
                path: path.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        entries.sort();
        for entry in entries {
            load_one_file(&entry, &mut fixtures)?;
        }
    } else {
        load_one_file(path, &mut fixtures)?;
    }
    Ok(fixtures)
}

/// Serialise fixtures back to one JSON file per project under `dir`.
pub fn write_fixture_files(
    fixtures: &BTreeMap<String, BugFixture>,
    dir: &Path,
) -> Result<(), FixtureError> {
    let mut by_project: BTreeMap<String, Vec<&BugFixture>> = BTreeMap::new();
    for fixture in fixtures.values() {
        by_project
            .entry(fixture.project.clone())
            .or_default()
            .push(fixture);
    }
    for (project, bugs) in by_project {
        let file = FixtureFile {
            format: FIXTURE_FORMAT.to_string(),
            project: project.clone(),
            bugs: bugs
                .into_iter()
                .map(|f| RawBug {
                    bug_id: f.bug_id.clone(),
                    failing_tests: f.failing_tests.clone(),
                    coverage: f.coverage.clone(),
                    snippets: f.snippets.clone(),
                    comments: f.comments.clone(),
                    faulty_methods: f.ground_truth.faulty_methods.iter().cloned().collect(),
                })
                .collect(),
        };
        let path = dir.join(format!("{}.json", project.to_lowercase()));
        let text = serde_json::to_string_pretty(&file).expect("fixture serialization");
        std::fs::write(&path, text + "\n").map_err(|source| FixtureError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Coverage tool reply: the method list plus an explanatory note for the
/// agent when the class is unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReply {
    pub methods: Vec<MethodId>,
    pub note: Option<String>,
}

impl CoverageReply {
    /// In-band text payload handed back to the model.
    pub fn to_text(&self) -> String {
        match &self.note {
            Some(note) => note.clone(),
            None => self
                .methods
                .iter()
                .map(MethodId::as_str)
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }
}

/// Method-level coverage of one class under the failing tests.
pub fn tool_method_coverage(fixture: &BugFixture, class_name: &str) -> CoverageReply {
    match fixture.covered_methods(class_name) {
        Some(methods) => CoverageReply {
            methods: methods.to_vec(),
            note: None,
        },
        None => CoverageReply {
            methods: Vec::new(),
            note: Some(format!("class not covered: {class_name}")),
        },
    }
}

/// Source snippet of a method, or an in-band not-found message.
pub fn tool_code_snippet(fixture: &BugFixture, method: &MethodId) -> String {
    match fixture.snippets.get(method) {
        Some(snippet) => snippet.clone(),
        None => format!("method not found: {method}"),
    }
}

/// Documentation comments of a method, or an in-band sentinel.
pub fn tool_comments(fixture: &BugFixture, method: &MethodId) -> String {
    if !fixture.snippets.contains_key(method) {
        return format!("method not found: {method}");
    }
    match fixture.comments.get(method) {
        Some(comment) => comment.clone(),
        None => "no comments available".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn mid(s: &str) -> MethodId {
        MethodId::new(s).unwrap()
    }

    fn sample_fixture() -> BugFixture {
        let faulty = mid("com.ex.core.Foo.bar(int)");
        let other = mid("com.ex.util.Baz.qux()");
        BugFixture {
            bug_id: "Ex-1".to_string(),
            project: "Ex".to_string(),
            failing_tests: vec![FailingTest {
                test: "com.ex.FooTest.testBar".to_string(),
                message: "expected 2 but was 3".to_string(),
                stack_trace: "at com.ex.core.Foo.bar(Foo.java:10)".to_string(),
            }],
            coverage: [
                ("com.ex.core.Foo".to_string(), vec![faulty.clone()]),
                ("com.ex.util.Baz".to_string(), vec![other.clone()]),
            ]
            .into(),
            snippets: [
                (faulty.clone(), "int bar(int x) { return x + 1; }".to_string()),
                (other.clone(), "void qux() {}".to_string()),
            ]
            .into(),
            comments: [(faulty.clone(), "Increments x.".to_string())].into(),
            ground_truth: GroundTruth::new("Ex-1", [faulty].into()).unwrap(),
        }
    }

    fn write_fixture_json(fixtures: &[BugFixture]) -> tempfile::NamedTempFile {
        let file = FixtureFile {
            format: FIXTURE_FORMAT.to_string(),
            project: fixtures[0].project.clone(),
            bugs: fixtures
                .iter()
                .map(|f| RawBug {
                    bug_id: f.bug_id.clone(),
                    failing_tests: f.failing_tests.clone(),
                    coverage: f.coverage.clone(),
                    snippets: f.snippets.clone(),
                    comments: f.comments.clone(),
                    faulty_methods: f.ground_truth.faulty_methods.iter().cloned().collect(),
                })
                .collect(),
        };
        let mut tmp = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        write!(tmp, "{}", serde_json::to_string_pretty(&file).unwrap()).unwrap();
        tmp
    }

    #[test]
    fn loads_a_valid_file() {
        let mut a = sample_fixture();
        let mut b = sample_fixture();
        let mut c = sample_fixture();
        b.bug_id = "Ex-2".to_string();
        b.ground_truth.bug_id = "Ex-2".to_string();
        c.bug_id = "Ex-3".to_string();
        c.ground_truth.bug_id = "Ex-3".to_string();
        a.bug_id = "Ex-1".to_string();
        let tmp = write_fixture_json(&[a, b, c]);
        let loaded = load_fixture_set(tmp.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert!(loaded.contains_key("Ex-2"));
    }

    #[test]
    fn rejects_uncovered_ground_truth() {
        let mut fixture = sample_fixture();
        fixture.coverage.remove("com.ex.core.Foo");
        let tmp = write_fixture_json(&[fixture]);
        let err = load_fixture_set(tmp.path()).unwrap_err();
        assert!(matches!(err, FixtureError::GroundTruthNotCovered { .. }));
    }

    #[test]
    fn rejects_duplicate_bug_ids() {
        let fixture = sample_fixture();
        let tmp = write_fixture_json(&[fixture.clone(), fixture]);
        let err = load_fixture_set(tmp.path()).unwrap_err();
        assert!(matches!(err, FixtureError::DuplicateBugId(_)));
    }

    #[test]
    fn rejects_missing_snippet() {
        let mut fixture = sample_fixture();
        fixture.snippets.remove(&mid("com.ex.util.Baz.qux()"));
        let tmp = write_fixture_json(&[fixture]);
        let err = load_fixture_set(tmp.path()).unwrap_err();
        assert!(matches!(err, FixtureError::MissingSnippet { .. }));
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let fixture = sample_fixture();
        let tmp = write_fixture_json(&[fixture]);
        let text = std::fs::read_to_string(tmp.path())
            .unwrap()
            .replace(FIXTURE_FORMAT, "cosmos-fixture/999");
        std::fs::write(tmp.path(), text).unwrap();
        let err = load_fixture_set(tmp.path()).unwrap_err();
        assert!(matches!(err, FixtureError::WrongFormat { .. }));
    }

    #[test]
    fn coverage_tool_lists_methods_in_stable_order() {
        let fixture = sample_fixture();
        let reply = tool_method_coverage(&fixture, "com.ex.core.Foo");
        assert_eq!(reply.methods, vec![mid("com.ex.core.Foo.bar(int)")]);
        assert!(reply.note.is_none());
        assert_eq!(reply.to_text(), "com.ex.core.Foo.bar(int)");
        // Repeated calls are byte-identical.
        assert_eq!(
            tool_method_coverage(&fixture, "com.ex.core.Foo").to_text(),
            reply.to_text()
        );
    }

    #[test]
    fn coverage_tool_reports_unknown_class_in_band() {
        let fixture = sample_fixture();
        let reply = tool_method_coverage(&fixture, "com.ex.Nope");
        assert!(reply.methods.is_empty());
        assert_eq!(reply.to_text(), "class not covered: com.ex.Nope");
    }

    #[test]
    fn snippet_tool_round_trips_source_text() {
        let fixture = sample_fixture();
        let method = mid("com.ex.core.Foo.bar(int)");
        assert_eq!(
            tool_code_snippet(&fixture, &method),
            "int bar(int x) { return x + 1; }"
        );
        assert_eq!(
            tool_code_snippet(&fixture, &mid("no.such.Method()")),
            "method not found: no.such.Method()"
        );
    }

    #[test]
    fn comments_tool_falls_back_to_sentinel() {
        let fixture = sample_fixture();
        assert_eq!(
            tool_comments(&fixture, &mid("com.ex.core.Foo.bar(int)")),
            "Increments x."
        );
        assert_eq!(
            tool_comments(&fixture, &mid("com.ex.util.Baz.qux()")),
            "no comments available"
        );
        assert_eq!(
            tool_comments(&fixture, &mid("no.such.Method()")),
            "method not found: no.such.Method()"
        );
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures: BTreeMap<String, BugFixture> =
            [("Ex-1".to_string(), sample_fixture())].into();
        write_fixture_files(&fixtures, dir.path()).unwrap();
        let loaded = load_fixture_set(dir.path()).unwrap();
        assert_eq!(loaded, fixtures);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    #[derive(Debug, Clone)]
    enum Mutation {
        None,
        DropGroundTruthCoverage,
        DropSnippet,
        ClearFailingTests,
    }

    fn arb_mutation() -> impl Strategy<Value = Mutation> {
        prop_oneof![
            Just(Mutation::None),
            Just(Mutation::DropGroundTruthCoverage),
            Just(Mutation::DropSnippet),
            Just(Mutation::ClearFailingTests),
        ]
    }

    fn build_fixture(n_methods: usize) -> BugFixture {
        let methods: Vec<MethodId> = (0..n_methods)
            .map(|i| MethodId::new(format!("com.p.C.m{i}()")).unwrap())
            .collect();
        let faulty = methods[0].clone();
        BugFixture {
            bug_id: "P-1".to_string(),
            project: "P".to_string(),
            failing_tests: vec![FailingTest {
                test: "com.p.CTest.t".to_string(),
                message: "boom".to_string(),
                stack_trace: "at com.p.C.m0".to_string(),
            }],
            coverage: [("com.p.C".to_string(), methods.clone())].into(),
            snippets: methods
                .iter()
                .map(|m| (m.clone(), format!("void {m}() {{}}")))
                .collect(),
            comments: BTreeMap::new(),
            ground_truth: GroundTruth::new("P-1", [faulty].into()).unwrap(),
        }
    }

    proptest! {
        /// The validator accepts a fixture exactly when its invariants hold.
        #[test]
        fn validator_matches_invariants(
            n_methods in 1usize..6,
            mutation in arb_mutation(),
        ) {
            let mut fixture = build_fixture(n_methods);
            let should_pass = matches!(mutation, Mutation::None);
            match mutation {
                Mutation::None => {}
                Mutation::DropGroundTruthCoverage => {
                    fixture.coverage.clear();
                }
                Mutation::DropSnippet => {
                    let victim = fixture.all_covered_methods().next().unwrap().clone();
                    fixture.snippets.remove(&victim);
                }
                Mutation::ClearFailingTests => {
                    fixture.failing_tests.clear();
                }
            }
            prop_assert_eq!(fixture.validate().is_ok(), should_pass);
        }
    }
}
