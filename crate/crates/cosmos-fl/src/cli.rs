//! Command-line interface.
//!
//! Subcommands: `collect`, `sample`, `optimize`, `evaluate`, `report`,
//! `overlap`, `grid`. Settings come from defaults, then an optional TOML
//! config file (`--config`), then flags — later layers win.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 endpoint
//! failure budget exceeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::agent::{
    ChatEndpoint, HttpEndpoint, ModelEndpoint, RunConfig, ScriptedEndpoint, ToolRegistry,
};
use crate::cost::{attach_costs, ingest_power_csv, CostError};
use crate::fixtures::{desk_d4j_fixtures, desk_d4j_scripts, load_fixture_set, BugFixture, FixtureError};
use crate::harness::{
    collect, evaluate, overlap_from_pool, report_emit, sample_runs, CollectOptions,
    EnsembleMode, EvaluateOptions, ExperimentPlan, HarnessError, Report, RunPool,
};
use crate::optimizer::{cross_validate, grid_search_pairwise, DeConfig, Fitness, FlDataset, ModelRuns};
use crate::scoring::{region_label, score_run, GroundTruth, WeightVector};

#[derive(Parser)]
#[command(
    name = "cosmos-fl",
    version,
    about = "Ensemble fault localisation over language-model endpoints"
)]
struct Cli {
    /// TOML config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixture file/directory, or "desk-d4j" for the bundled corpus.
    #[arg(long, global = true)]
    fixtures: Option<String>,
    /// Output directory (run pool and reports).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated model names (defaults to the endpoint file's names).
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// JSON endpoint definitions.
    #[arg(long, global = true)]
    endpoint_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct DeFlags {
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    k_folds: usize,
    /// DE population size.
    #[arg(long, default_value_t = 40)]
    pop: usize,
    /// DE generations.
    #[arg(long, default_value_t = 30)]
    gens: usize,
    /// DE differential weight.
    #[arg(long, default_value_t = 1.5)]
    diff_weight: f64,
    /// DE crossover probability.
    #[arg(long, default_value_t = 0.8)]
    cx_prob: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Fill the run pool: runs-per-model-pool records per (model, bug).
    Collect {
        #[arg(long)]
        runs: Option<u32>,
        /// Maximum concurrent inferences.
        #[arg(long)]
        in_flight: Option<usize>,
        /// Power samples CSV to integrate into per-run energy.
        #[arg(long)]
        power_csv: Option<PathBuf>,
        /// Abort (exit 3) when more endpoint-error runs than this occur.
        #[arg(long)]
        failure_budget: Option<usize>,
    },
    /// Draw seeded run-index subsets and write them as JSON.
    Sample {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// DE-optimise voting weights under cross-validation.
    Optimize {
        #[command(flatten)]
        de: DeFlags,
        /// Runs per model fed to each fold (default: the whole pool).
        #[arg(long)]
        runs_per_model: Option<usize>,
    },
    /// Evaluate configurations over the pool and emit the report files.
    Evaluate {
        /// Weights JSON from `optimize` (mean weights drive the DE ensemble).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Ensemble mode: none | equal | de-optimized.
        #[arg(long)]
        mode: Option<String>,
        #[command(flatten)]
        de: DeFlags,
    },
    /// Re-render report files from an existing report.json.
    Report {
        /// Source report.json (default: <out>/report.json).
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Venn region counts of per-model top-ranked bugs.
    Overlap {
        /// Runs per model (pool prefix).
        #[arg(long, default_value_t = 5)]
        r: usize,
    },
    /// Pairwise weight-grid landscape for two models.
    Grid {
        #[arg(long)]
        model_a: String,
        #[arg(long)]
        model_b: String,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 5)]
        runs_per_model: usize,
    },
}

/// Keys of the TOML config file. Every key has a flag counterpart where one
/// exists; flags win.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    fixtures: Option<String>,
    out: Option<PathBuf>,
    models: Option<Vec<String>>,
    endpoint_file: Option<PathBuf>,
    runs_per_model_pool: Option<u32>,
    r_values: Option<Vec<usize>>,
    samples_per_r: Option<usize>,
    /// "none" | "equal" | "de-optimized"
    ensemble_mode: Option<String>,
    in_flight_limit: Option<usize>,
    max_endpoint_failures: Option<usize>,
    temperature: Option<f64>,
    max_steps: Option<usize>,
    output_token_cap: Option<u64>,
    power_csv: Option<PathBuf>,
    /// Cadence of the external power collector, for documentation/ops; the
    /// core only ingests whatever cadence the CSV has.
    collector_cadence_ms: Option<u64>,
    collector_command: Option<String>,
}

/// One endpoint definition in the endpoint file: either a live HTTP endpoint
/// or a scripted mock (`"scripted": "desk-d4j"`).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EndpointSpec {
    Scripted {
        name: String,
        scripted: String,
        #[serde(default)]
        fail_seeds: Vec<u64>,
        #[serde(default)]
        fail_always: bool,
    },
    Http(ModelEndpoint),
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Harness(e) => match e {
                HarnessError::FailureBudgetExceeded { .. } => 3,
                HarnessError::Io { .. } | HarnessError::Storage { .. } => 2,
                HarnessError::Fixture(FixtureError::Io { .. }) => 2,
                HarnessError::Cost(CostError::Io { .. }) => 2,
                _ => 1,
            },
        }
    }
}

struct Context {
    fixtures: BTreeMap<String, BugFixture>,
    out: PathBuf,
    seed: u64,
    models: Vec<String>,
    endpoints: Option<BTreeMap<String, Arc<dyn ChatEndpoint>>>,
    config: FileConfig,
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("failed to read {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => toml::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
    }
}

fn load_endpoints(
    path: &Path,
) -> Result<BTreeMap<String, Arc<dyn ChatEndpoint>>, CliError> {
    let specs: Vec<EndpointSpec> = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut endpoints: BTreeMap<String, Arc<dyn ChatEndpoint>> = BTreeMap::new();
    for spec in specs {
        let (name, endpoint): (String, Arc<dyn ChatEndpoint>) = match spec {
            EndpointSpec::Scripted {
                name,
                scripted,
                fail_seeds,
                fail_always,
            } => {
                if scripted != "desk-d4j" {
                    return Err(CliError::Validation(format!(
                        "unknown script set {scripted:?} for endpoint {name}; only \"desk-d4j\" is bundled"
                    )));
                }
                let mut script = desk_d4j_scripts().remove(&name).ok_or_else(|| {
                    CliError::Validation(format!(
                        "desk-d4j has no scripted model named {name}"
                    ))
                })?;
                if !fail_seeds.is_empty() {
                    script = script.failing_on_seeds(fail_seeds);
                }
                if fail_always {
                    script = script.failing_always();
                }
                (name, Arc::new(ScriptedEndpoint::new(script)))
            }
            EndpointSpec::Http(endpoint) => (
                endpoint.name.clone(),
                Arc::new(HttpEndpoint::new(endpoint)),
            ),
        };
        if endpoints.insert(name.clone(), endpoint).is_some() {
            return Err(CliError::Validation(format!(
                "duplicate endpoint name {name}"
            )));
        }
    }
    Ok(endpoints)
}

fn build_context(cli: &Cli) -> Result<Context, CliError> {
    let config = load_config(cli.config.as_deref())?;
    let fixtures_ref = cli
        .fixtures
        .clone()
        .or_else(|| config.fixtures.clone())
        .ok_or_else(|| CliError::Validation("no fixtures given (--fixtures)".to_string()))?;
    let fixtures = if fixtures_ref == "desk-d4j" {
        desk_d4j_fixtures()
    } else {
        load_fixture_set(Path::new(&fixtures_ref)).map_err(HarnessError::from)?
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| CliError::Validation("no output directory given (--out)".to_string()))?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);

    let endpoint_file = cli.endpoint_file.clone().or_else(|| config.endpoint_file.clone());
    let endpoints = match endpoint_file {
        Some(path) => Some(load_endpoints(&path)?),
        None if fixtures_ref == "desk-d4j" => {
            // Bundled corpus: default to its four scripted mocks.
            let endpoints = desk_d4j_scripts()
                .into_iter()
                .map(|(name, script)| {
                    (
                        name,
                        Arc::new(ScriptedEndpoint::new(script)) as Arc<dyn ChatEndpoint>,
                    )
                })
                .collect();
            Some(endpoints)
        }
        None => None,
    };

    let models = cli
        .models
        .clone()
        .or_else(|| config.models.clone())
        .or_else(|| {
            endpoints
                .as_ref()
                .map(|e| e.keys().cloned().collect::<Vec<_>>())
        })
        .ok_or_else(|| {
            CliError::Validation("no models given (--models or an endpoint file)".to_string())
        })?;

    Ok(Context {
        fixtures,
        out,
        seed,
        models,
        endpoints,
        config,
    })
}

fn ensemble_mode(raw: &str) -> Result<EnsembleMode, CliError> {
    match raw {
        "none" => Ok(EnsembleMode::None),
        "equal" => Ok(EnsembleMode::Equal),
        "de-optimized" => Ok(EnsembleMode::DeOptimized),
        other => Err(CliError::Validation(format!(
            "unknown ensemble mode {other:?}; expected none | equal | de-optimized"
        ))),
    }
}

fn plan_from(ctx: &Context, mode_flag: Option<&str>) -> Result<ExperimentPlan, CliError> {
    let mut plan = ExperimentPlan::new(
        ctx.models.clone(),
        ctx.fixtures.keys().cloned().collect(),
    )
    .with_seed(ctx.seed);
    if let Some(pool) = ctx.config.runs_per_model_pool {
        plan.runs_per_model_pool = pool;
    }
    if let Some(r_values) = &ctx.config.r_values {
        plan.r_values = r_values.clone();
    }
    if let Some(samples) = ctx.config.samples_per_r {
        plan.samples_per_r = samples;
    }
    let mode = mode_flag
        .map(str::to_string)
        .or_else(|| ctx.config.ensemble_mode.clone());
    if let Some(mode) = mode {
        plan.ensemble_mode = ensemble_mode(&mode)?;
    }
    Ok(plan)
}

fn run_config_from(ctx: &Context) -> RunConfig {
    let mut run_config = RunConfig::default();
    if let Some(t) = ctx.config.temperature {
        run_config.temperature = t;
    }
    if let Some(steps) = ctx.config.max_steps {
        run_config.max_steps = steps;
    }
    if let Some(cap) = ctx.config.output_token_cap {
        run_config.output_token_cap = cap;
    }
    run_config
}

/// Depth of the collected pool: the smallest run count over every
/// (bug, model) cell the context cares about.
fn pool_depth(ctx: &Context, pool: &RunPool) -> Result<u32, CliError> {
    let mut depth = u32::MAX;
    for bug in ctx.fixtures.keys() {
        for model in &ctx.models {
            let available = pool.runs_of(bug, model).len() as u32;
            if available == 0 {
                return Err(HarnessError::MissingRun {
                    bug: bug.clone(),
                    model: model.clone(),
                    run_index: 0,
                }
                .into());
            }
            depth = depth.min(available);
        }
    }
    Ok(depth)
}

/// Scored FL dataset (the first `pool_size` runs per model) plus truth and
/// strata, for the optimizer-facing commands.
fn dataset_from_pool(
    ctx: &Context,
    pool: &RunPool,
    pool_size: u32,
) -> Result<
    (
        FlDataset,
        BTreeMap<String, GroundTruth>,
        BTreeMap<String, String>,
    ),
    CliError,
> {
    let mut dataset = FlDataset::new();
    let mut truth = BTreeMap::new();
    let mut strata = BTreeMap::new();
    for (bug, fixture) in &ctx.fixtures {
        let mut runs = ModelRuns::new();
        for model in &ctx.models {
            let records = pool.runs_of(bug, model);
            if (records.len() as u32) < pool_size {
                return Err(HarnessError::MissingRun {
                    bug: bug.clone(),
                    model: model.clone(),
                    run_index: records.len() as u32,
                }
                .into());
            }
            runs.insert(
                model.clone(),
                records[..pool_size as usize]
                    .iter()
                    .map(|r| score_run(&r.predicted_methods))
                    .collect(),
            );
        }
        dataset.insert(bug.clone(), runs);
        truth.insert(bug.clone(), fixture.ground_truth.clone());
        strata.insert(bug.clone(), fixture.project.clone());
    }
    Ok((dataset, truth, strata))
}

/// Persisted output of `optimize`, consumed by `evaluate --weights`.
#[derive(Debug, Serialize, Deserialize)]
struct WeightsFile {
    fold_weights: Vec<WeightVector>,
    fold_validation: Vec<Fitness>,
    mean_weights: WeightVector,
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_collect(
    ctx: &Context,
    runs: Option<u32>,
    in_flight: Option<usize>,
    power_csv: Option<&Path>,
    failure_budget: Option<usize>,
) -> Result<(), CliError> {
    if power_csv.is_none() && ctx.config.power_csv.is_none() {
        if let Some(command) = &ctx.config.collector_command {
            let cadence = ctx.config.collector_cadence_ms.unwrap_or(100);
            println!(
                "hint: no power CSV configured; start the collector alongside this run, e.g.\n  {command} (cadence {cadence} ms)"
            );
        }
    }
    let endpoints = ctx.endpoints.as_ref().ok_or_else(|| {
        CliError::Validation("collect needs endpoints (--endpoint-file)".to_string())
    })?;
    for model in &ctx.models {
        if !endpoints.contains_key(model) {
            return Err(CliError::Validation(format!(
                "model {model} has no endpoint definition"
            )));
        }
    }
    let selected: BTreeMap<String, Arc<dyn ChatEndpoint>> = endpoints
        .iter()
        .filter(|(name, _)| ctx.models.contains(name))
        .map(|(name, endpoint)| (name.clone(), Arc::clone(endpoint)))
        .collect();

    let options = CollectOptions {
        runs_per_model_pool: runs
            .or(ctx.config.runs_per_model_pool)
            .unwrap_or(30),
        base_seed: ctx.seed,
        run_config: run_config_from(ctx),
        in_flight_limit: in_flight.or(ctx.config.in_flight_limit).unwrap_or(4),
        failure_budget: failure_budget.or(ctx.config.max_endpoint_failures),
    };
    let summary = collect(
        &ctx.fixtures,
        &selected,
        &ToolRegistry::standard(),
        &options,
        &ctx.out,
    )?;

    let power_path = power_csv.map(Path::to_path_buf).or_else(|| ctx.config.power_csv.clone());
    if let Some(power_path) = power_path {
        let samples = ingest_power_csv(&power_path).map_err(HarnessError::from)?;
        let mut pool = RunPool::load(&ctx.out)?;
        let records: Vec<_> = pool.records().cloned().collect();
        for record in records {
            let updated = attach_costs(record, &samples).map_err(HarnessError::from)?;
            RunPool::save_record(&ctx.out, &updated)?;
            pool.insert(updated);
        }
        pool.write_index(&ctx.out)?;
        println!("attached energy from {}", power_path.display());
    }

    println!(
        "collected {} runs ({} already present)",
        summary.written, summary.skipped
    );
    for (status, count) in &summary.status_counts {
        println!("  {status}: {count}");
    }
    Ok(())
}

fn cmd_sample(ctx: &Context, r: usize, samples: Option<usize>) -> Result<(), CliError> {
    let pool_size = ctx.config.runs_per_model_pool.unwrap_or(30) as usize;
    let pool_sizes: BTreeMap<String, usize> = ctx
        .models
        .iter()
        .map(|m| (m.clone(), pool_size))
        .collect();
    let samples_per_r = samples.or(ctx.config.samples_per_r).unwrap_or(20);
    let drawn = sample_runs(&pool_sizes, &ctx.models, r, samples_per_r, ctx.seed)?;
    let as_json: Vec<&BTreeMap<String, Vec<u32>>> =
        drawn.iter().map(|s| &s.indices).collect();
    let path = ctx.out.join(format!("samples_r{r}.json"));
    write_out(
        &path,
        &(serde_json::to_string_pretty(&as_json).expect("sample serialization") + "\n"),
    )?;
    println!("wrote {} subsets to {}", drawn.len(), path.display());
    Ok(())
}

fn cmd_optimize(
    ctx: &Context,
    de: &DeFlags,
    runs_per_model: Option<usize>,
) -> Result<(), CliError> {
    let pool = RunPool::load(&ctx.out)?;
    let pool_size = match ctx.config.runs_per_model_pool {
        Some(size) => size,
        None => pool_depth(ctx, &pool)?,
    };
    let (dataset, truth, strata) = dataset_from_pool(ctx, &pool, pool_size)?;
    let config = DeConfig {
        population_size: de.pop,
        generations: de.gens,
        crossover_probability: de.cx_prob,
        differential_weight: de.diff_weight,
        bounds: vec![(0.0, 1.0); ctx.models.len()],
        seed: ctx.seed,
    };
    let outcome = cross_validate(&dataset, &truth, &strata, &config, de.k_folds, runs_per_model)
        .map_err(HarnessError::from)?;

    for fold in &outcome.folds {
        let mut lines = String::new();
        for record in &fold.trace {
            lines.push_str(&serde_json::to_string(record).expect("trace serialization"));
            lines.push('\n');
        }
        write_out(
            &ctx.out.join(format!("de_trace_fold_{}.jsonl", fold.fold)),
            &lines,
        )?;
    }

    let weights_file = WeightsFile {
        fold_weights: outcome.folds.iter().map(|f| f.weights.clone()).collect(),
        fold_validation: outcome.folds.iter().map(|f| f.validation).collect(),
        mean_weights: outcome.mean_weights.clone(),
    };
    let path = ctx.out.join("weights.json");
    write_out(
        &path,
        &(serde_json::to_string_pretty(&weights_file).expect("weights serialization") + "\n"),
    )?;
    println!("wrote {}", path.display());
    for (model, weight) in outcome.mean_weights.iter() {
        println!("  {model}: {weight:.4}");
    }
    Ok(())
}

fn cmd_evaluate(
    ctx: &Context,
    weights: Option<&Path>,
    mode: Option<&str>,
    de: &DeFlags,
) -> Result<(), CliError> {
    let mut plan = plan_from(ctx, mode)?;
    let pool = RunPool::load(&ctx.out)?;
    if ctx.config.runs_per_model_pool.is_none() {
        plan.runs_per_model_pool = pool_depth(ctx, &pool)?;
    }
    let mut options = EvaluateOptions {
        k_folds: de.k_folds,
        de_population: de.pop,
        de_generations: de.gens,
        de_crossover: de.cx_prob,
        de_weight: de.diff_weight,
        ..EvaluateOptions::default()
    };
    if let Some(path) = weights {
        let file: WeightsFile = serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        options.weights = Some(file.mean_weights);
    }
    let report = evaluate(&plan, &pool, &ctx.fixtures, &options)?;
    report_emit(&report, &ctx.out)?;
    println!(
        "evaluated {} configurations x {} budgets x {} samples -> {}",
        plan.models.len()
            + match plan.ensemble_mode {
                EnsembleMode::None => 0,
                EnsembleMode::Equal => 1,
                EnsembleMode::DeOptimized => 2,
            },
        plan.r_values.len(),
        plan.samples_per_r,
        ctx.out.join("report.json").display()
    );
    Ok(())
}

fn cmd_report(ctx: &Context, from: Option<&Path>) -> Result<(), CliError> {
    let source = from
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.out.join("report.json"));
    let report = Report::from_json(&read_to_string(&source)?)?;
    report_emit(&report, &ctx.out)?;
    println!(
        "re-rendered {} rows into {}",
        report.rows.len(),
        ctx.out.display()
    );
    Ok(())
}

fn cmd_overlap(ctx: &Context, r: usize) -> Result<(), CliError> {
    let pool = RunPool::load(&ctx.out)?;
    let bugs: Vec<String> = ctx.fixtures.keys().cloned().collect();
    let regions = overlap_from_pool(&pool, &ctx.fixtures, &ctx.models, &bugs, r)?;
    let mut csv = String::from("region,count\n");
    for (region, count) in &regions {
        csv.push_str(&format!("{},{count}\n", region_label(region)));
    }
    let path = ctx.out.join("overlap.csv");
    write_out(&path, &csv)?;
    for (region, count) in &regions {
        if *count > 0 {
            println!("{}: {count}", region_label(region));
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_grid(
    ctx: &Context,
    model_a: &str,
    model_b: &str,
    step: f64,
    runs_per_model: usize,
) -> Result<(), CliError> {
    let pool = RunPool::load(&ctx.out)?;
    let pool_size = match ctx.config.runs_per_model_pool {
        Some(size) => size,
        None => pool_depth(ctx, &pool)?,
    };
    let (dataset, truth, _strata) = dataset_from_pool(ctx, &pool, pool_size)?;
    let landscape = grid_search_pairwise(model_a, model_b, runs_per_model, step, &dataset, &truth)
        .map_err(HarnessError::from)?;
    let mut csv = String::from("weight_a,weight_b,acc1\n");
    for point in &landscape.points {
        csv.push_str(&format!(
            "{},{},{}\n",
            crate::harness::report::float_str(point.weight_a),
            crate::harness::report::float_str(point.weight_b),
            point.acc1
        ));
    }
    let path = ctx
        .out
        .join(format!("grid_{model_a}_{model_b}_r{runs_per_model}.csv"));
    write_out(&path, &csv)?;
    println!(
        "landscape max acc@1 = {} over {} points -> {}",
        landscape.max_acc1(),
        landscape.points.len(),
        path.display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let ctx = build_context(cli)?;
    match &cli.command {
        Command::Collect {
            runs,
            in_flight,
            power_csv,
            failure_budget,
        } => cmd_collect(&ctx, *runs, *in_flight, power_csv.as_deref(), *failure_budget),
        Command::Sample { r, samples } => cmd_sample(&ctx, *r, *samples),
        Command::Optimize { de, runs_per_model } => cmd_optimize(&ctx, de, *runs_per_model),
        Command::Evaluate { weights, mode, de } => {
            cmd_evaluate(&ctx, weights.as_deref(), mode.as_deref(), de)
        }
        Command::Report { from } => cmd_report(&ctx, from.as_deref()),
        Command::Overlap { r } => cmd_overlap(&ctx, *r),
        Command::Grid {
            model_a,
            model_b,
            step,
            runs_per_model,
        } => cmd_grid(&ctx, model_a, model_b, *step, *runs_per_model),
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
