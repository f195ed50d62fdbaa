//! desk-d4j: the bundled synthetic mini-corpus.
//!
//! Twelve bugs across four project tags, engineered so the four scripted mock
//! models top-rank partially disjoint bug subsets:
//!
//! * every bug has a designated set of *solver* models that answer its faulty
//!   method with a full vote;
//! * every non-solver answers two project-plausible decoy methods, so each
//!   decoy carries half a vote and any single solver outvotes it;
//! * decoys are distinct per (bug, model) and live in `.util.` classes, which
//!   sort after the `.core.` faulty methods whenever scores tie.
//!
//! The region structure this induces — each model one exclusive bug, every
//! model pair one shared bug, one three-model bug, one bug solved by all
//! four — is what the overlap and ensemble-benefit checks assert against.

use std::collections::BTreeMap;

use serde_json::json;

use crate::agent::scripted::{BugScript, ModelScript, ScriptSet};
use crate::agent::tools::{TOOL_CODE_SNIPPET, TOOL_COMMENTS, TOOL_METHOD_COVERAGE};
use crate::agent::wire::ToolCall;
use crate::fixtures::{BugFixture, FailingTest};
use crate::scoring::{GroundTruth, MethodId, RegionKey};

/// Mock ensemble members, in their fixed (lexicographic) order.
pub const DESK_D4J_MODELS: [&str; 4] = ["mock-a", "mock-b", "mock-c", "mock-d"];

const UTIL_METHOD_NAMES: [&str; 8] = [
    "clamp(int,int)",
    "digest(String)",
    "emit(String)",
    "flush()",
    "merge(int[])",
    "pad(String,int)",
    "scale(double)",
    "trim(String)",
];

struct BugPlan {
    bug_id: &'static str,
    project: &'static str,
    package: &'static str,
    core_class: &'static str,
    faulty_method: &'static str,
    sibling_method: &'static str,
    util_class: &'static str,
    test_method: &'static str,
    failure_message: &'static str,
    /// Indices into [`DESK_D4J_MODELS`] of the models that localise this bug.
    solvers: &'static [usize],
}

const PLANS: [BugPlan; 12] = [
    BugPlan {
        bug_id: "Basket-1",
        project: "Basket",
        package: "com.basket",
        core_class: "Cart",
        faulty_method: "addItem(int)",
        sibling_method: "total()",
        util_class: "Pricing",
        test_method: "com.basket.CartTest.testAddItem",
        failure_message: "expected quantity 3 but was 4",
        solvers: &[0],
    },
    BugPlan {
        bug_id: "Basket-2",
        project: "Basket",
        package: "com.basket",
        core_class: "Order",
        faulty_method: "applyDiscount(double)",
        sibling_method: "subtotal()",
        util_class: "Labels",
        test_method: "com.basket.OrderTest.testDiscountRounding",
        failure_message: "expected 9.90 but was 9.91",
        solvers: &[0, 1],
    },
    BugPlan {
        bug_id: "Basket-3",
        project: "Basket",
        package: "com.basket",
        core_class: "Stock",
        faulty_method: "reserve(int)",
        sibling_method: "release(int)",
        util_class: "Audit",
        test_method: "com.basket.StockTest.testReserveNegative",
        failure_message: "IllegalStateException: stock below zero",
        solvers: &[0, 1, 2, 3],
    },
    BugPlan {
        bug_id: "Chrono-1",
        project: "Chrono",
        package: "com.chrono",
        core_class: "Clock",
        faulty_method: "advance(long)",
        sibling_method: "now()",
        util_class: "Format",
        test_method: "com.chrono.ClockTest.testAdvanceOverflow",
        failure_message: "expected 00:00 but was 23:59",
        solvers: &[1],
    },
    BugPlan {
        bug_id: "Chrono-2",
        project: "Chrono",
        package: "com.chrono",
        core_class: "Span",
        faulty_method: "between(long,long)",
        sibling_method: "days()",
        util_class: "Parse",
        test_method: "com.chrono.SpanTest.testBetweenDst",
        failure_message: "expected 24h but was 23h",
        solvers: &[1, 2],
    },
    BugPlan {
        bug_id: "Chrono-3",
        project: "Chrono",
        package: "com.chrono",
        core_class: "Zone",
        faulty_method: "offsetAt(long)",
        sibling_method: "id()",
        util_class: "Table",
        test_method: "com.chrono.ZoneTest.testOffsetTransition",
        failure_message: "expected +01:00 but was +02:00",
        solvers: &[0, 2],
    },
    BugPlan {
        bug_id: "Matrix-1",
        project: "Matrix",
        package: "com.matrix",
        core_class: "Grid",
        faulty_method: "multiply(Grid)",
        sibling_method: "transpose()",
        util_class: "Norms",
        test_method: "com.matrix.GridTest.testMultiplyIdentity",
        failure_message: "expected identity but cell (1,1) was 0",
        solvers: &[2],
    },
    BugPlan {
        bug_id: "Matrix-2",
        project: "Matrix",
        package: "com.matrix",
        core_class: "Lu",
        faulty_method: "decompose()",
        sibling_method: "pivot(int)",
        util_class: "Random",
        test_method: "com.matrix.LuTest.testSingular",
        failure_message: "expected SingularMatrixException",
        solvers: &[2, 3],
    },
    BugPlan {
        bug_id: "Matrix-3",
        project: "Matrix",
        package: "com.matrix",
        core_class: "Band",
        faulty_method: "solve(double[])",
        sibling_method: "width()",
        util_class: "Sparse",
        test_method: "com.matrix.BandTest.testSolveUpper",
        failure_message: "residual 0.3 exceeds 1e-9",
        solvers: &[1, 3],
    },
    BugPlan {
        bug_id: "Parser-1",
        project: "Parser",
        package: "com.parser",
        core_class: "Lexer",
        faulty_method: "nextToken()",
        sibling_method: "peek()",
        util_class: "Buffers",
        test_method: "com.parser.LexerTest.testUnterminatedString",
        failure_message: "expected SyntaxError but token was EOF",
        solvers: &[3],
    },
    BugPlan {
        bug_id: "Parser-2",
        project: "Parser",
        package: "com.parser",
        core_class: "Ast",
        faulty_method: "fold(Node)",
        sibling_method: "walk(Node)",
        util_class: "Pretty",
        test_method: "com.parser.AstTest.testConstantFolding",
        failure_message: "expected 6 but expression folded to 5",
        solvers: &[0, 3],
    },
    BugPlan {
        bug_id: "Parser-3",
        project: "Parser",
        package: "com.parser",
        core_class: "Scan",
        faulty_method: "escape(String)",
        sibling_method: "raw()",
        util_class: "Tables",
        test_method: "com.parser.ScanTest.testUnicodeEscape",
        failure_message: "expected \\u0041 to decode to A",
        solvers: &[0, 1, 2],
    },
];

impl BugPlan {
    fn core_class_fqn(&self) -> String {
        format!("{}.core.{}", self.package, self.core_class)
    }

    fn util_class_fqn(&self) -> String {
        format!("{}.util.{}", self.package, self.util_class)
    }

    fn faulty_id(&self) -> MethodId {
        MethodId::new(format!("{}.{}", self.core_class_fqn(), self.faulty_method)).unwrap()
    }

    fn sibling_id(&self) -> MethodId {
        MethodId::new(format!("{}.{}", self.core_class_fqn(), self.sibling_method)).unwrap()
    }

    fn util_ids(&self) -> Vec<MethodId> {
        UTIL_METHOD_NAMES
            .iter()
            .map(|name| MethodId::new(format!("{}.{name}", self.util_class_fqn())).unwrap())
            .collect()
    }

    fn is_solver(&self, model_index: usize) -> bool {
        self.solvers.contains(&model_index)
    }

    /// The two decoys a given non-solver answers: non-solvers take
    /// consecutive pairs from the util pool in model order.
    fn decoys_for(&self, model_index: usize) -> (MethodId, MethodId) {
        let position = (0..DESK_D4J_MODELS.len())
            .filter(|i| !self.is_solver(*i))
            .position(|i| i == model_index)
            .expect("model is a non-solver");
        let utils = self.util_ids();
        (utils[2 * position].clone(), utils[2 * position + 1].clone())
    }
}

/// Build the full 12-bug fixture set.
pub fn desk_d4j_fixtures() -> BTreeMap<String, BugFixture> {
    PLANS
        .iter()
        .map(|plan| {
            let faulty = plan.faulty_id();
            let sibling = plan.sibling_id();
            let utils = plan.util_ids();

            let mut coverage = BTreeMap::new();
            coverage.insert(plan.core_class_fqn(), vec![faulty.clone(), sibling.clone()]);
            coverage.insert(plan.util_class_fqn(), utils.clone());

            let mut snippets = BTreeMap::new();
            snippets.insert(
                faulty.clone(),
                format!(
                    "public {sig} {{\n    // off-by-one slipped in here\n    return state.update(value + 1);\n}}",
                    sig = plan.faulty_method
                ),
            );
            snippets.insert(
                sibling.clone(),
                format!("public {sig} {{\n    return state.snapshot();\n}}", sig = plan.sibling_method),
            );
            for (i, util) in utils.iter().enumerate() {
                snippets.insert(
                    util.clone(),
                    format!(
                        "static {name} {{\n    return Helper.table[{i}].apply(input);\n}}",
                        name = UTIL_METHOD_NAMES[i]
                    ),
                );
            }

            let mut comments = BTreeMap::new();
            comments.insert(
                faulty.clone(),
                format!("Updates the {} state for the given value.", plan.core_class),
            );
            comments.insert(
                utils[0].clone(),
                "Utility helper; exhaustively unit-tested.".to_string(),
            );

            let fixture = BugFixture {
                bug_id: plan.bug_id.to_string(),
                project: plan.project.to_string(),
                failing_tests: vec![FailingTest {
                    test: plan.test_method.to_string(),
                    message: plan.failure_message.to_string(),
                    stack_trace: format!(
                        "at {}.{}\nat {}",
                        plan.core_class_fqn(),
                        plan.faulty_method,
                        plan.test_method
                    ),
                }],
                coverage,
                snippets,
                comments,
                ground_truth: GroundTruth::new(plan.bug_id, [faulty].into()).unwrap(),
            };
            (plan.bug_id.to_string(), fixture)
        })
        .collect()
}

fn answer_lines(methods: &[MethodId]) -> String {
    methods
        .iter()
        .map(|m| format!("Answer: {m}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn script_for_model(model_index: usize) -> ModelScript {
    let mut script = ModelScript::new(DESK_D4J_MODELS[model_index]);
    for plan in &PLANS {
        let targets: Vec<MethodId> = if plan.is_solver(model_index) {
            vec![plan.faulty_id()]
        } else {
            let (d1, d2) = plan.decoys_for(model_index);
            vec![d1, d2]
        };

        // Each mock has its own working style so the loop sees varied traffic.
        let tool_turns = match model_index {
            0 => vec![ToolCall {
                name: TOOL_METHOD_COVERAGE.to_string(),
                arguments: json!({"class_name": plan.core_class_fqn()}),
            }],
            1 => vec![
                ToolCall {
                    name: TOOL_METHOD_COVERAGE.to_string(),
                    arguments: json!({"class_name": plan.core_class_fqn()}),
                },
                ToolCall {
                    name: TOOL_CODE_SNIPPET.to_string(),
                    arguments: json!({"method_id": targets[0].as_str()}),
                },
            ],
            2 => vec![],
            _ => vec![
                ToolCall {
                    name: TOOL_METHOD_COVERAGE.to_string(),
                    arguments: json!({"class_name": plan.util_class_fqn()}),
                },
                ToolCall {
                    name: TOOL_COMMENTS.to_string(),
                    arguments: json!({"method_id": targets[0].as_str()}),
                },
            ],
        };

        let preamble = format!(
            "The failure in {} points at the following method(s).",
            plan.test_method
        );
        script = script.with_bug(BugScript {
            match_key: plan.test_method.to_string(),
            tool_turns,
            answer: Some(format!("{preamble}\n{}", answer_lines(&targets))),
        });
    }
    script
}

/// Scripts for all four mock models, keyed by model name.
pub fn desk_d4j_scripts() -> ScriptSet {
    (0..DESK_D4J_MODELS.len())
        .map(|i| (DESK_D4J_MODELS[i].to_string(), script_for_model(i)))
        .collect()
}

/// The Venn region counts the corpus is designed to produce when each model's
/// top-ranked bug set is computed from its own runs (any run count — the
/// scripts are deterministic).
pub fn designed_overlap_counts() -> BTreeMap<RegionKey, usize> {
    let models: Vec<String> = DESK_D4J_MODELS.iter().map(|m| m.to_string()).collect();
    let mut counts: BTreeMap<RegionKey, usize> = BTreeMap::new();
    for mask in 1u32..(1 << models.len()) {
        let key: RegionKey = models
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, m)| m.clone())
            .collect();
        counts.insert(key, 0);
    }
    for plan in &PLANS {
        let key: RegionKey = plan
            .solvers
            .iter()
            .map(|&i| DESK_D4J_MODELS[i].to_string())
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}
