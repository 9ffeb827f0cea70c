//! Built-in scenarios and `.dscm` model files.
//!
//! Every finite scenario is shipped twice: constructed in code here, and as
//! `scenarios/<name>.dscm` plus `scenarios/<name>.expected.json`. Setting
//! `DISCO_SCENARIO_DIR` makes [`lookup`] read from another directory first.

mod linear_gaussian;

use std::fmt;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::exact::{Engine, EngineError};
use crate::lexer::SyntaxError;
use crate::model::{parse_model, print_model, Coupling, DiscoModel, ModelError, ModelSpec, StructuralEquation, UnitId};
use crate::pmf::FinitePmf;
use crate::query::Query;
use crate::rational::{frac, int, ExactJson, Value};
use crate::sampling::{Dataset, Provenance, Record};

pub use linear_gaussian::{GaussianRecord, LinearGaussian};

pub const BUILTIN_NAMES: &[&str] = &["paper200", "paper200-sprime", "incentive", "surrogate", "exam-luck", "linear-gaussian"];

/// Environment variable naming a directory searched before the builtins.
pub const SCENARIO_DIR_VAR: &str = "DISCO_SCENARIO_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (builtins: {list})", list = BUILTIN_NAMES.join(", "))]
    Unknown(String),
    #[error("scenario `{0}` has no exact dataset")]
    NoDataset(String),
    #[error("{path}:{err}")]
    Syntax { path: String, err: SyntaxError },
    #[error("{path}: {err}")]
    Model { path: String, err: ModelError },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// One row of a scenario's expected-values table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedValue {
    pub query: String,
    pub mode: Coupling,
    pub value: BigRational,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// `None` for the continuous linear-Gaussian scenario.
    pub model: Option<DiscoModel>,
    pub gaussian: Option<LinearGaussian>,
    pub dataset: Option<Dataset>,
    pub expected: Vec<ExpectedValue>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpectedFile {
    scenario: String,
    description: String,
    expected: Vec<ExpectedEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpectedEntry {
    query: String,
    mode: String,
    value: ExactJson,
}

/// Outcome of re-evaluating one expected value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCheck {
    pub expected: ExpectedValue,
    pub actual: Result<BigRational, String>,
}

impl GoldenCheck {
    pub fn passed(&self) -> bool {
        self.actual.as_ref().is_ok_and(|v| *v == self.expected.value)
    }
}

impl Scenario {
    pub fn model(&self) -> Result<&DiscoModel, EngineError> {
        self.model
            .as_ref()
            .ok_or_else(|| EngineError::Precondition(format!("scenario `{}` is sampling-only; the exact engine does not support it", self.name)))
    }

    /// Re-evaluate every expected value with the exact engine.
    pub fn check_expected(&self) -> Vec<GoldenCheck> {
        self.expected
            .iter()
            .map(|e| {
                let actual = self
                    .model()
                    .and_then(|m| {
                        let q = Query::parse(&e.query).map_err(|err| EngineError::Precondition(err.to_string()))?;
                        Engine::new(&m.with_coupling(e.mode)).evaluate(&q)
                    })
                    .map_err(|err| err.to_string());
                GoldenCheck { expected: e.clone(), actual }
            })
            .collect()
    }

    /// Canonical `.dscm` text, if the scenario is finite.
    pub fn model_text(&self) -> Option<String> {
        self.model.as_ref().map(|m| print_model(m.spec()))
    }

    pub fn expected_json(&self) -> String {
        let file = ExpectedFile {
            scenario: self.name.clone(),
            description: self.description.clone(),
            expected: self
                .expected
                .iter()
                .map(|e| ExpectedEntry { query: e.query.clone(), mode: e.mode.to_string(), value: ExactJson::from(&e.value) })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable") + "\n"
    }

    /// Write `<name>.dscm` (finite scenarios) and `<name>.expected.json` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(), ScenarioError> {
        if let Some(text) = self.model_text() {
            write_text(&dir.join(format!("{}.dscm", self.name)), &text)?;
        }
        write_text(&dir.join(format!("{}.expected.json", self.name)), &self.expected_json())
    }
}

impl fmt::Display for ExpectedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} = {}", self.mode, self.query, crate::rational::fmt_fraction(&self.value))
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), ScenarioError> {
    std::fs::write(path, text).map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn read_text(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn parse_spec(text: &str, path: &str) -> Result<ModelSpec, ScenarioError> {
    parse_model(text).map_err(|err| ScenarioError::Syntax { path: path.into(), err })
}

pub fn load_model(path: &Path) -> Result<DiscoModel, ScenarioError> {
    let shown = path.display().to_string();
    let spec = parse_spec(&read_text(path)?, &shown)?;
    spec.build().map_err(|err| ScenarioError::Model { path: shown, err })
}

pub fn save_model(model: &DiscoModel, path: &Path) -> Result<(), ScenarioError> {
    write_text(path, &print_model(model.spec()))
}

/// Directory shipped with the crate.
pub fn shipped_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Load `<name>.dscm` and `<name>.expected.json` from `dir`, if present.
pub fn load_from_dir(dir: &Path, name: &str) -> Result<Option<Scenario>, ScenarioError> {
    let model_path = dir.join(format!("{name}.dscm"));
    let expected_path = dir.join(format!("{name}.expected.json"));
    if !model_path.exists() && !expected_path.exists() {
        return Ok(None);
    }
    let model = if model_path.exists() { Some(load_model(&model_path)?) } else { None };
    let (description, expected) = if expected_path.exists() {
        let shown = expected_path.display().to_string();
        let file: ExpectedFile =
            serde_json::from_str(&read_text(&expected_path)?).map_err(|e| ScenarioError::Io { path: shown.clone(), message: e.to_string() })?;
        let mut rows = Vec::new();
        for e in file.expected {
            let bad = |message: String| ScenarioError::Io { path: shown.clone(), message };
            let mode = e.mode.parse().map_err(|_| bad(format!("unknown mode `{}`", e.mode)))?;
            let value = e.value.to_big().ok_or_else(|| bad(format!("invalid value for `{}`", e.query)))?;
            rows.push(ExpectedValue { query: e.query, mode, value });
        }
        (file.description, rows)
    } else {
        (String::new(), Vec::new())
    };
    let fallback = builtin(name).ok();
    Ok(Some(Scenario {
        name: name.to_string(),
        description,
        gaussian: if model.is_none() { fallback.as_ref().and_then(|s| s.gaussian.clone()) } else { None },
        dataset: fallback.and_then(|s| s.dataset),
        model,
        expected,
    }))
}

/// `DISCO_SCENARIO_DIR` first, then the builtins.
pub fn lookup(name: &str) -> Result<Scenario, ScenarioError> {
    if let Some(dir) = std::env::var_os(SCENARIO_DIR_VAR) {
        if let Some(s) = load_from_dir(Path::new(&dir), name)? {
            return Ok(s);
        }
    }
    builtin(name)
}

/// Names available to [`lookup`]: builtins plus any `.dscm` in the override directory.
pub fn available() -> Vec<String> {
    let mut names: Vec<String> = BUILTIN_NAMES.iter().map(|s| s.to_string()).collect();
    if let Some(dir) = std::env::var_os(SCENARIO_DIR_VAR) {
        if let Ok(entries) = std::fs::read_dir(dir) {
            let mut extra: Vec<String> = entries
                .filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().to_str().and_then(|f| f.strip_suffix(".dscm")).map(str::to_string))
                .filter(|n| !names.contains(n))
                .collect();
            extra.sort();
            names.extend(extra);
        }
    }
    names
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "paper200" => Ok(paper200()),
        "paper200-sprime" => Ok(paper200_sprime()),
        "incentive" => Ok(incentive()),
        "surrogate" => Ok(surrogate()),
        "exam-luck" => Ok(exam_luck()),
        "linear-gaussian" => Ok(linear_gaussian()),
        _ => Err(ScenarioError::Unknown(name.into())),
    }
}

/// The 200-record dataset of observed (T, Y) counts for `paper200`.
pub fn exact_table_dataset(name: &str) -> Result<Dataset, ScenarioError> {
    match name {
        "paper200" | "paper200-table1" => Ok(table1()),
        _ if BUILTIN_NAMES.contains(&name) => Err(ScenarioError::NoDataset(name.into())),
        _ => Err(ScenarioError::Unknown(name.into())),
    }
}

fn build(spec: ModelSpec) -> DiscoModel {
    spec.build().expect("builtin scenarios are valid")
}

fn range(lo: i64, hi: i64) -> Vec<Value> {
    (lo..=hi).map(int).collect()
}

fn expected(rows: &[(&str, &str, BigRational)]) -> Vec<ExpectedValue> {
    rows.iter()
        .map(|(q, mode, v)| ExpectedValue {
            query: Query::parse(q).expect("builtin query parses").to_string(),
            mode: mode.parse().expect("mode"),
            value: v.clone(),
        })
        .collect()
}

/// Both modes with the same value.
fn both(q: &'static str, v: BigRational) -> [(&'static str, &'static str, BigRational); 2] {
    [(q, "disco", v.clone()), (q, "scm", v)]
}

fn paper200_spec(units: u32, with_s: bool) -> ModelSpec {
    let mut spec = ModelSpec::new(units);
    let (t_body, y_body) = ("C", "T + (E <= 5)");
    if with_s {
        spec = spec.group("S", 1, 100).group("Sprime", 101, 200);
    } else {
        spec = spec.group("Sprime", 1, units);
    }
    spec = spec
        .noise("C", FinitePmf::new(vec![(int(-1), frac(1, 2)), (int(1), frac(1, 2))]).expect("pmf"))
        .noise("E", FinitePmf::uniform_range(1, 10))
        .variable("T", vec![int(-1), int(1)])
        .variable("Y", range(-2, 3));
    let mut t = StructuralEquation::new("T").noises(["C"]);
    let mut y = StructuralEquation::new("Y").parents(["T"]).noises(["E"]);
    if with_s {
        t = t.when("S", "-1");
        y = y.when("S", "2*T + (E <= 2)");
    }
    spec.equation(t.when("Sprime", t_body)).equation(y.when("Sprime", y_body))
}

fn paper200() -> Scenario {
    let mut rows = Vec::new();
    rows.extend(both("P(Y=-1 | T=-1)", frac(3, 10)));
    rows.extend(both("P(Y[T=-1]=-1)", frac(7, 20)));
    rows.push(("P(Y[]=-1 | T=-1)", "disco", frac(13, 60)));
    rows.push(("P(Y[]=-1 | T=-1)", "scm", frac(3, 10)));
    rows.push(("P(Y[T=-1]=-1 | T=-1, Y=-1)", "disco", frac(11, 30)));
    rows.push(("P(Y[T=-1]=-1 | T=-1, Y=-1)", "scm", frac(1, 1)));
    rows.extend(both("E[Y[T=1] ; group=S]", frac(11, 5)));
    rows.extend(both("E[Y[T=-1] ; group=S]", frac(-9, 5)));
    rows.extend(both("E[Y[T=1] ; group=Sprime]", frac(3, 2)));
    rows.extend(both("E[Y[T=-1] ; group=Sprime]", frac(-1, 2)));
    rows.push(("P(Y[T=1]=1, Y[T=-1]=-1 ; group=Sprime)", "disco", frac(1, 4)));
    rows.push(("P(Y[T=1]=1, Y[T=-1]=-1 ; group=Sprime)", "scm", frac(1, 2)));
    Scenario {
        name: "paper200".into(),
        description: "200 equally likely units. Group S (units 1-100) is never treated (T=-1) and has Y = 2T + 1{E<=2}; \
                      group Sprime (units 101-200) gets T = +-1 from a fair coin and has Y = T + 1{E<=5}; E is uniform on 1..10."
            .into(),
        model: Some(build(paper200_spec(200, true))),
        gaussian: None,
        dataset: Some(table1()),
        expected: expected(&rows),
    }
}

fn paper200_sprime() -> Scenario {
    let mut rows = Vec::new();
    rows.extend(both("P(T=1)", frac(1, 2)));
    rows.extend(both("P(Y=-1 | T=-1)", frac(1, 2)));
    rows.extend(both("E[Y[T=1]]", frac(3, 2)));
    rows.extend(both("E[Y[T=-1]]", frac(-1, 2)));
    rows.push(("P(Y[T=-1]=-1 | T=-1, Y=-1)", "disco", frac(1, 2)));
    rows.push(("P(Y[T=-1]=-1 | T=-1, Y=-1)", "scm", frac(1, 1)));
    Scenario {
        name: "paper200-sprime".into(),
        description: "The Sprime half of paper200 on its own: 100 units, T = +-1 from a fair coin, Y = T + 1{E<=5}. \
                      Every unit can receive either treatment, so inverse-propensity identities apply."
            .into(),
        model: Some(build(paper200_spec(100, false))),
        gaussian: None,
        dataset: None,
        expected: expected(&rows),
    }
}

fn table1() -> Dataset {
    let cells: [(u32, u32, i64, i64); 6] =
        [(1, 20, -1, -1), (21, 100, -1, -2), (101, 125, -1, 0), (126, 150, -1, -1), (151, 175, 1, 1), (176, 200, 1, 2)];
    let mut records = Vec::with_capacity(200);
    for (lo, hi, t, y) in cells {
        for u in lo..=hi {
            records.push(Record { unit: UnitId(u), values: vec![int(t), int(y)] });
        }
    }
    Dataset { variables: vec!["T".into(), "Y".into()], records, provenance: Provenance::Exact("paper200-table1".into()) }
}

/// P(T=1 | s=2, x) for the mixed-strategy group, in hundredths.
pub const MIXED_POLICY: &str = "E_T <= 100*max(1/20, min(19/20, 1/5 + 3/5*X))";

fn incentive() -> Scenario {
    let xbar: Vec<Value> = (0..3).flat_map(|_| (0..=10).map(|k| Value::new(k, 10))).collect();
    let spec = ModelSpec::new(33)
        .group("random", 1, 11)
        .group("pure", 12, 22)
        .group("mixed", 23, 33)
        .feature("xbar", xbar)
        .noise("E_T", FinitePmf::uniform_range(1, 100))
        .noise("E_Y", FinitePmf::uniform_range(1, 100))
        .variable("S", range(0, 2))
        .variable("X", (0..=10).map(|k| Value::new(k, 10)).collect())
        .variable("T", range(0, 1))
        .variable("Y", range(0, 1))
        .equation(StructuralEquation::new("S").when("random", "0").when("pure", "1").when("mixed", "2"))
        .equation(StructuralEquation::new("X").otherwise("feature(xbar)"))
        .equation(
            StructuralEquation::new("T")
                .parents(["S", "X"])
                .noises(["E_T"])
                .otherwise(&format!("if S == 0 then (E_T <= 50) else if S == 1 then (X >= 1/2) else ({MIXED_POLICY})")),
        )
        .equation(StructuralEquation::new("Y").parents(["X", "T"]).noises(["E_Y"]).otherwise("E_Y <= 20 + 30*X + T*(10 + 40*X)"));
    let mut rows = Vec::new();
    rows.extend(both("P(T=1 ; group=random)", frac(1, 2)));
    rows.extend(both("P(T=1 ; group=pure)", frac(6, 11)));
    rows.extend(both("E[Y[T=0] ; unit=1]", frac(1, 5)));
    rows.extend(both("E[Y[T=1] ; unit=1]", frac(3, 10)));
    rows.extend(both("E[Y[T=1] ; unit=33]", frac(1, 1)));
    rows.push(("P(T[S=0]=1 | S=0, T=1 ; unit=1)", "disco", frac(1, 2)));
    rows.push(("P(T[S=0]=1 | S=0, T=1 ; unit=1)", "scm", frac(1, 1)));
    rows.push(("P(T[S=2]=1 | S=2, T=1 ; unit=23)", "disco", frac(1, 5)));
    rows.push(("P(T[S=2]=1 | S=2, T=1 ; unit=23)", "scm", frac(1, 1)));
    Scenario {
        name: "incentive".into(),
        description: "Personalized incentives: 33 users in three strategy groups (S=0 random, S=1 pure, S=2 mixed), \
                      each with a synthetic scalar feature X in {0, 1/10, ..., 1}. Random users are treated by a fair coin, \
                      pure users exactly when X >= 1/2, mixed users with probability clamp(1/5 + 3/5 X, 1/20, 19/20). \
                      P(Y=1) = 1/5 + 3/10 X + T (1/10 + 2/5 X). Feature values and response curves are synthetic."
            .into(),
        model: Some(build(spec)),
        gaussian: None,
        dataset: None,
        expected: expected(&rows),
    }
}

fn surrogate() -> Scenario {
    let spec = ModelSpec::new(10)
        .group("A", 1, 5)
        .group("Aprime", 6, 10)
        .noise("G", FinitePmf::uniform_range(0, 1))
        .variable("T", range(0, 1))
        .variable("S", range(0, 1))
        .variable("Y", range(0, 1))
        .equation(StructuralEquation::new("T").noises(["G"]).otherwise("G"))
        .equation(StructuralEquation::new("S").parents(["T"]).otherwise("T*in_group(A)"))
        .equation(StructuralEquation::new("Y").parents(["S"]).otherwise("S*in_group(Aprime)"));
    let mut rows = Vec::new();
    rows.extend(both("E[S[T=1]]", frac(1, 2)));
    rows.extend(both("E[S[T=0]]", frac(0, 1)));
    rows.extend(both("E[Y[S=1]]", frac(1, 2)));
    rows.extend(both("E[Y[S=0]]", frac(0, 1)));
    rows.extend(both("E[Y[T=1]]", frac(0, 1)));
    rows.extend(both("E[Y[T=0]]", frac(0, 1)));
    Scenario {
        name: "surrogate".into(),
        description: "Surrogate paradox: T is a fair coin, S = T on group A only, Y = S on group Aprime only. \
                      T raises S and S raises Y on average, yet T has no effect on Y."
            .into(),
        model: Some(build(spec)),
        gaussian: None,
        dataset: None,
        expected: expected(&rows),
    }
}

fn exam_luck() -> Scenario {
    let spec = ModelSpec::new(1)
        .group("student", 1, 1)
        .noise("E", FinitePmf::uniform_range(1, 10))
        .variable("Y", vec![int(70), int(90)])
        .equation(StructuralEquation::new("Y").noises(["E"]).otherwise("70 + 20*(E <= 1)"));
    let mut rows = Vec::new();
    rows.extend(both("P(Y=90)", frac(1, 10)));
    rows.push(("E[Y[] | Y=90]", "disco", frac(72, 1)));
    rows.push(("E[Y[] | Y=90]", "scm", frac(90, 1)));
    rows.push(("P(Y[]=90 | Y=90)", "disco", frac(1, 10)));
    rows.push(("P(Y[]=90 | Y=90)", "scm", frac(1, 1)));
    Scenario {
        name: "exam-luck".into(),
        description: "One student of ability 70 who scores 90 when lucky (E <= 1, probability 1/10). \
                      Having seen a 90, a retake under identical conditions is expected to score 72 with fresh luck, \
                      or exactly 90 when the luck is carried over."
            .into(),
        model: Some(build(spec)),
        gaussian: None,
        dataset: None,
        expected: expected(&rows),
    }
}

fn linear_gaussian() -> Scenario {
    Scenario {
        name: "linear-gaussian".into(),
        description: "X = U + E1, Y = X + U + E2 with standard normal E1, E2 and units u in {-2, -1, 0, 1, 2}. \
                      Y^d(x) for unit u is x + u + E2(x): still random, with mean x + u. Sampling only."
            .into(),
        model: None,
        gaussian: Some(LinearGaussian::default()),
        dataset: None,
        expected: Vec::new(),
    }
}
