//! The `disco` command line.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 domain error (null
//! evidence, positivity, failed identity, infeasible policy), 3 internal
//! invariant breach.

use std::ffi::OsString;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::exact::{collapse_noises_to_mode, Engine, EngineError};
use crate::model::{Coupling, DiscoModel, ModelError};
use crate::optimizer::{self, AllocationProblem, OptimizerError};
use crate::query::{Query, Target};
use crate::rational::{fmt_decimal, fmt_fraction, fmt_value, parse_big, parse_value, ExactJson, Value};
use crate::report::VerificationReport;
use crate::sampling::{self, ipw, SamplingError, Sidecar};
use crate::scenario::{self, ScenarioError};

/// Environment variable for fault-injection fixtures.
pub const FAULT_VAR: &str = "DISCO_FAULT";

#[derive(Debug, Parser)]
#[command(name = "disco", version, about = "Exact and sampled counterfactual inference under disco and scm coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a probability or expectation query.
    Eval(EvalArgs),
    /// Check an identity exactly.
    Verify(VerifyArgs),
    /// Sample a factual dataset.
    Simulate(SimulateArgs),
    /// Inverse-propensity estimate from a dataset.
    Estimate(EstimateArgs),
    /// Allocate treatments under a budget.
    Optimize(OptimizeArgs),
    /// List or show built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Subcommand)]
enum ScenarioAction {
    List,
    Show { name: String },
}

#[derive(Debug, Args)]
struct Source {
    /// Built-in scenario (or one in $DISCO_SCENARIO_DIR).
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    scenario: Option<String>,
    /// Path to a `.dscm` model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Coupling semantics; defaults to the model's own declaration (disco for builtins).
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Coupling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    query: String,
    #[arg(long, value_enum, default_value = "exact")]
    engine: EngineKind,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short = 'n', long = "samples")]
    n: Option<u64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Layer12,
    #[value(name = "degenerate-l3")]
    DegenerateL3,
    Mixture,
    Propensity,
    Ipw,
    #[value(name = "ipw-cond")]
    IpwCond,
    #[value(name = "ipw-post")]
    IpwPost,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value = "T")]
    treatment: String,
    #[arg(long, default_value = "Y")]
    outcome: String,
    #[arg(long, default_value = "X")]
    feature: String,
    #[arg(long, value_parser = parse_val, allow_negative_numbers = true)]
    t: Option<Value>,
    #[arg(long, value_parser = parse_val, allow_negative_numbers = true)]
    x: Option<Value>,
    #[arg(long, value_parser = parse_val, allow_negative_numbers = true)]
    y: Option<Value>,
    /// Replace every noise by a point mass at its mode first (degenerate-l3).
    #[arg(long)]
    collapse: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(short = 'n', long = "samples")]
    n: u64,
    #[arg(long)]
    seed: u64,
    /// CSV path; a `<path>.json` sidecar is written next to it. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "T")]
    treatment: String,
    #[arg(long, default_value = "Y")]
    outcome: String,
    #[arg(long, value_parser = parse_val, allow_negative_numbers = true)]
    t: Value,
    /// Condition on a feature value (`--feature X --x v`).
    #[arg(long)]
    feature: Option<String>,
    #[arg(long, value_parser = parse_val, requires = "feature", allow_negative_numbers = true)]
    x: Option<Value>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Greedy,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Score {
    Uplift,
    Complier,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_parser = parse_rational)]
    budget: BigRational,
    /// CSV `unit,treatment,cost`.
    #[arg(long)]
    costs: PathBuf,
    #[arg(long, default_value = "T")]
    treatment: String,
    #[arg(long, default_value = "Y")]
    outcome: String,
    /// Control arm; defaults to the smallest treatment value.
    #[arg(long, value_parser = parse_val, allow_negative_numbers = true)]
    control: Option<Value>,
    #[arg(long, value_enum, default_value = "exact")]
    solver: Solver,
    #[arg(long, value_enum, default_value = "uplift")]
    score: Score,
    /// Estimate uplift from this dataset instead of the model.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Coupling, String> {
    s.parse()
}

fn parse_val(s: &str) -> Result<Value, String> {
    parse_value(s).ok_or_else(|| format!("`{s}` is not a number"))
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    parse_big(s).ok_or_else(|| format!("`{s}` is not a number"))
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure { code: 1, message: message.to_string() }
}

fn domain(message: impl ToString) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

fn internal(message: impl ToString) -> Failure {
    Failure { code: 3, message: format!("internal error: {}", message.to_string()) }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidQuery(_) | EngineError::Model(ModelError::UnknownVariable(_)) => usage(e),
            EngineError::Solve(_) => internal(e),
            _ => domain(e),
        }
    }
}

impl From<SamplingError> for Failure {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::Engine(inner) => inner.into(),
            SamplingError::InvalidQuery(_) | SamplingError::Dataset(_) | SamplingError::EmptyRun => usage(e),
            SamplingError::NoAcceptedSamples { .. } => domain(e),
            SamplingError::Solve(_) => internal(e),
        }
    }
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::Engine(inner) => inner.into(),
            OptimizerError::Invalid(_) | OptimizerError::Io(_) => usage(e),
            _ => domain(e),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        usage(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        usage(e)
    }
}

type Outcome = Result<(), Failure>;

/// Run the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = catch_unwind(AssertUnwindSafe(|| dispatch(cli, out)));
    let outcome = match result {
        Ok(r) => r,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(internal(msg))
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Outcome {
    if std::env::var(FAULT_VAR).as_deref() == Ok("panic") {
        panic!("fault injected");
    }
    match cli.command {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Optimize(a) => cmd_optimize(a, out),
        Command::Scenarios { action } => cmd_scenarios(action, out),
    }
}

fn load(source: &Source) -> Result<(DiscoModel, String), Failure> {
    let (model, label) = match (&source.scenario, &source.model) {
        (Some(name), _) => {
            let s = scenario::lookup(name)?;
            let m = s.model().map_err(usage)?.clone();
            (m, name.clone())
        }
        (None, Some(path)) => (scenario::load_model(path)?, path.display().to_string()),
        (None, None) => return Err(usage("either --scenario or --model is required")),
    };
    let model = match source.mode {
        Some(mode) => model.with_coupling(mode),
        None => model,
    };
    Ok((model, label))
}

fn write_line(out: &mut dyn Write, text: &str) -> Outcome {
    writeln!(out, "{text}").map_err(usage)
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Outcome {
    write_line(out, &serde_json::to_string(value).map_err(internal)?)
}

#[derive(Serialize)]
struct ExactOutput {
    query: String,
    mode: String,
    value: ExactJson,
    decimal: String,
}

#[derive(Serialize)]
struct McOutput {
    query: String,
    mode: String,
    engine: &'static str,
    estimate: f64,
    stderr: f64,
    n: u64,
    seed: u64,
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Outcome {
    let (model, _) = load(&a.source)?;
    let query = Query::parse(&a.query).map_err(|e| usage(format!("invalid query: {e}")))?;
    let mode = model.coupling().to_string();
    match a.engine {
        EngineKind::Exact => {
            let mut value = Engine::new(&model).evaluate(&query)?;
            if std::env::var(FAULT_VAR).as_deref() == Ok("eval-result") {
                value += BigRational::from_integer(2.into());
            }
            if matches!(query.target, Target::Probability(_)) && (value < BigRational::zero() || value > BigRational::one()) {
                return Err(internal(format!("probability {} outside [0, 1]", fmt_fraction(&value))));
            }
            match a.format {
                Format::Table => write_line(out, &format!("{} ({})", fmt_fraction(&value), fmt_decimal(&value, 5))),
                Format::Json => {
                    json_line(out, &ExactOutput { query: query.to_string(), mode, value: ExactJson::from(&value), decimal: fmt_decimal(&value, 5) })
                }
            }
        }
        EngineKind::Mc => {
            let seed = a.seed.ok_or_else(|| usage("--engine mc requires --seed"))?;
            let n = a.n.ok_or_else(|| usage("--engine mc requires -n"))?;
            let e = sampling::mc_valuation(&model, &query, n, seed)?;
            match a.format {
                Format::Table => write_line(out, &format!("{:.5} ± {:.5} (n={}, seed={})", e.point, e.stderr, e.n, e.seed)),
                Format::Json => json_line(
                    out,
                    &McOutput { query: query.to_string(), mode, engine: "mc", estimate: e.point, stderr: e.stderr, n: e.n, seed: e.seed },
                ),
            }
        }
    }
}

fn need(v: Option<Value>, flag: &str, suite: &str) -> Result<Value, Failure> {
    v.ok_or_else(|| usage(format!("suite {suite} requires --{flag}")))
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let (mut model, _) = load(&a.source)?;
    if a.collapse {
        let coupling = model.coupling();
        model =
            collapse_noises_to_mode(model.spec()).build().map_err(|e| domain(format!("collapsed model is invalid: {e}")))?.with_coupling(coupling);
    }
    let (t, y) = (a.treatment.as_str(), a.outcome.as_str());
    let report: VerificationReport = match a.suite {
        Suite::Layer12 => crate::exact::verify_layer12_equivalence(&model)?,
        Suite::DegenerateL3 => crate::exact::verify_degenerate_l3_equivalence(&model)?,
        Suite::Mixture => crate::exact::verify_mixture_lemma(&model, t, y)?,
        Suite::Propensity => {
            let tv = need(a.t, "t", "propensity")?;
            ipw::check_propensity_independence(&model, t, y, tv)?
        }
        Suite::Ipw => ipw::ipw_ate_check(&model, t, y, need(a.t, "t", "ipw")?)?,
        Suite::IpwCond => ipw::ipw_conditional_check(&model, t, y, &a.feature, need(a.t, "t", "ipw-cond")?, need(a.x, "x", "ipw-cond")?)?,
        Suite::IpwPost => ipw::ipw_posttreatment_check(
            &model,
            &a.feature,
            t,
            y,
            need(a.x, "x", "ipw-post")?,
            need(a.t, "t", "ipw-post")?,
            need(a.y, "y", "ipw-post")?,
        )?,
    };
    match a.format {
        Format::Table => out.write_all(report.to_string().as_bytes()).map_err(usage)?,
        Format::Json => json_line(out, &report)?,
    }
    if report.passed() {
        Ok(())
    } else {
        Err(domain(format!("{}: {} of {} checks failed", report.suite, report.mismatches.len(), report.checked)))
    }
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Outcome {
    let (model, label) = load(&a.source)?;
    let data = sampling::sample_dataset(&model, a.n, a.seed)?;
    match &a.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            sampling::write_csv(&data, std::io::BufWriter::new(file))?;
            let side = std::fs::File::create(sidecar_path(path))?;
            sampling::write_sidecar(&Sidecar { seed: a.seed, n: a.n, model: label }, side)?;
            write_line(out, &format!("wrote {} records to {}", data.len(), path.display()))
        }
        None => sampling::write_csv(&data, out).map_err(Failure::from),
    }
}

#[derive(Serialize)]
struct EstimateOutput {
    target: String,
    estimate: f64,
    stderr: f64,
    n: u64,
}

fn read_dataset(path: &Path, model: &DiscoModel) -> Result<sampling::Dataset, Failure> {
    let file = std::fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let data = sampling::read_csv(file).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    data.check_against(model).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(data)
}

fn cmd_estimate(a: EstimateArgs, out: &mut dyn Write) -> Outcome {
    let (model, _) = load(&a.source)?;
    let data = read_dataset(&a.data, &model)?;
    let prop = ipw::propensity(&model, &a.treatment)?;
    ipw::require_positivity(&model, &prop, &a.treatment, &a.t)?;
    let ts = fmt_value(&a.t);
    let (target, e) = match (&a.feature, a.x) {
        (Some(f), Some(x)) => (
            format!("E[{}[{}={ts}] | {f}={}]", a.outcome, a.treatment, fmt_value(&x)),
            ipw::ipw_conditional_estimate(&data, &prop, &a.treatment, &a.outcome, f, a.t, x)?,
        ),
        (Some(_), None) => return Err(usage("--feature requires --x")),
        _ => (format!("E[{}[{}={ts}]]", a.outcome, a.treatment), ipw::ipw_ate_estimate(&data, &prop, &a.treatment, &a.outcome, a.t)?),
    };
    match a.format {
        Format::Table => write_line(out, &format!("{target} ≈ {:.5} ± {:.5} (n={})", e.point, e.stderr, e.n)),
        Format::Json => json_line(out, &EstimateOutput { target, estimate: e.point, stderr: e.stderr, n: e.n }),
    }
}

fn cmd_optimize(a: OptimizeArgs, out: &mut dyn Write) -> Outcome {
    let (model, _) = load(&a.source)?;
    let ti = model.var_index(&a.treatment).ok_or_else(|| usage(format!("unknown variable `{}`", a.treatment)))?;
    let yi = model.var_index(&a.outcome).ok_or_else(|| usage(format!("unknown variable `{}`", a.outcome)))?;
    let mut arms = model.domain(ti).to_vec();
    let control = a.control.unwrap_or(arms[0]);
    let pos = arms.iter().position(|v| *v == control).ok_or_else(|| usage(format!("control {} is not a treatment value", fmt_value(&control))))?;
    let c = arms.remove(pos);
    arms.insert(0, c);
    let tau = match (a.score, &a.data) {
        (Score::Uplift, None) => optimizer::estimate_tau(&model, &a.treatment, &arms, &a.outcome)?,
        (Score::Uplift, Some(path)) => {
            let data = read_dataset(path, &model)?;
            optimizer::estimate_tau_from_dataset(&model, &data, &a.treatment, &arms, &a.outcome)?
        }
        (Score::Complier, _) => {
            let d = model.domain(yi);
            optimizer::complier_scores(&model, &a.treatment, &arms, &a.outcome, d[0], d[d.len() - 1])?
        }
    };
    let file = std::fs::File::open(&a.costs).map_err(|e| usage(format!("{}: {e}", a.costs.display())))?;
    let costs = optimizer::read_costs(file)?;
    let problem = AllocationProblem::new(arms, &tau, &costs, a.budget)?;
    let policy = match a.solver {
        Solver::Greedy => optimizer::allocate_greedy(&problem),
        Solver::Exact => optimizer::allocate_exact(&problem)?,
    };
    if !problem.is_feasible(&policy) {
        return Err(internal("allocator returned a policy over budget"));
    }
    let summary = optimizer::policy_summary_json(&policy);
    if let Some(path) = &a.summary {
        std::fs::write(path, &summary)?;
    }
    match &a.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            optimizer::write_policy_csv(&policy, std::io::BufWriter::new(file))?;
            out.write_all(summary.as_bytes()).map_err(usage)
        }
        None => optimizer::write_policy_csv(&policy, out).map_err(Failure::from),
    }
}

fn cmd_scenarios(action: ScenarioAction, out: &mut dyn Write) -> Outcome {
    match action {
        ScenarioAction::List => {
            for name in scenario::available() {
                let s = scenario::lookup(&name)?;
                let kind = if s.model.is_some() { "exact" } else { "sampling only" };
                write_line(out, &format!("{name}\t{kind}"))?;
            }
            Ok(())
        }
        ScenarioAction::Show { name } => {
            let s = scenario::lookup(&name)?;
            write_line(out, &format!("# {}", s.name))?;
            write_line(out, &s.description)?;
            if let Some(text) = s.model_text() {
                write_line(out, "")?;
                out.write_all(text.as_bytes()).map_err(usage)?;
            }
            if !s.expected.is_empty() {
                write_line(out, "")?;
                write_line(out, "expected values:")?;
                for e in &s.expected {
                    write_line(out, &format!("  {e}"))?;
                }
            }
            Ok(())
        }
    }
}
