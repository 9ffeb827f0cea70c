//! Budget-constrained treatment allocation: each user gets one arm, arm 0
//! is control, and the total cost may not exceed the budget.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::exact::{Engine, EngineError};
use crate::model::{DiscoModel, Intervention, UnitId};
use crate::rational::{fmt_fraction, fmt_value, parse_big, parse_value, to_big, to_f64, Value};
use crate::sampling::Dataset;

/// Largest DP table (users × budget steps) `allocate_exact` will build.
pub const MAX_DP_CELLS: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptimizerError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("stratum of unit {unit} has no records with {treatment}={arm}")]
    EmptyArm { unit: UnitId, treatment: String, arm: String },
    #[error("instance too large for the exact solver ({cells} table cells, limit {limit}); use the greedy allocator")]
    TooLarge { cells: u64, limit: u64 },
    #[error("infeasible policy: cost {cost} exceeds budget {budget}")]
    Infeasible { cost: String, budget: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Io(String),
}

/// Uplift per unit and arm; entry 0 (control) is always zero.
pub type Tau = BTreeMap<UnitId, Vec<BigRational>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserOptions {
    pub unit: UnitId,
    pub tau: Vec<BigRational>,
    /// `None` when the arm is not offered to this user.
    pub cost: Vec<Option<BigRational>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationProblem {
    /// Treatment values; `arms[0]` is control.
    pub arms: Vec<Value>,
    pub users: Vec<UserOptions>,
    pub budget: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub assignment: BTreeMap<UnitId, Value>,
    pub cost: BigRational,
    pub expected_uplift: BigRational,
}

impl AllocationProblem {
    /// Costs are keyed by (unit, treatment value); missing pairs are not offered.
    pub fn new(arms: Vec<Value>, tau: &Tau, costs: &BTreeMap<(UnitId, Value), BigRational>, budget: BigRational) -> Result<Self, OptimizerError> {
        let bad = |m: String| Err(OptimizerError::Invalid(m));
        if arms.is_empty() {
            return bad("no treatments".into());
        }
        if budget.is_negative() {
            return bad(format!("negative budget {}", fmt_fraction(&budget)));
        }
        for ((u, a), c) in costs {
            if !arms.contains(a) {
                return bad(format!("cost given for unit {u} and unknown treatment {}", fmt_value(a)));
            }
            if !tau.contains_key(u) {
                return bad(format!("cost given for unit {u}, which has no uplift estimate"));
            }
            if c.is_negative() {
                return bad(format!("negative cost for unit {u}, treatment {}", fmt_value(a)));
            }
            if *a == arms[0] && !c.is_zero() {
                return bad(format!("control must cost 0 (unit {u})"));
            }
        }
        let mut users = Vec::with_capacity(tau.len());
        for (u, t) in tau {
            if t.len() != arms.len() {
                return bad(format!("unit {u} has {} uplift entries for {} treatments", t.len(), arms.len()));
            }
            if !t[0].is_zero() {
                return bad(format!("unit {u} has nonzero control uplift"));
            }
            let cost = arms.iter().enumerate().map(|(j, a)| if j == 0 { Some(BigRational::zero()) } else { costs.get(&(*u, *a)).cloned() }).collect();
            users.push(UserOptions { unit: *u, tau: t.clone(), cost });
        }
        Ok(AllocationProblem { arms, users, budget })
    }

    /// Uniform cost per arm for every user.
    pub fn with_uniform_costs(arms: Vec<Value>, tau: &Tau, arm_costs: &[BigRational], budget: BigRational) -> Result<Self, OptimizerError> {
        let costs = tau.keys().flat_map(|u| arms.iter().zip(arm_costs).map(move |(a, c)| ((*u, *a), c.clone()))).collect();
        AllocationProblem::new(arms, tau, &costs, budget)
    }

    fn policy(&self, choice: &[usize]) -> Policy {
        let mut cost = BigRational::zero();
        let mut uplift = BigRational::zero();
        let mut assignment = BTreeMap::new();
        for (user, &j) in self.users.iter().zip(choice) {
            cost += user.cost[j].as_ref().expect("offered arm");
            uplift += &user.tau[j];
            assignment.insert(user.unit, self.arms[j]);
        }
        Policy { assignment, cost, expected_uplift: uplift }
    }

    /// Cost and uplift of an arbitrary assignment (units missing from it get control).
    pub fn score(&self, assignment: &BTreeMap<UnitId, Value>) -> Result<Policy, OptimizerError> {
        let mut choice = Vec::with_capacity(self.users.len());
        for user in &self.users {
            let v = assignment.get(&user.unit).copied().unwrap_or(self.arms[0]);
            let j = self
                .arms
                .iter()
                .position(|a| *a == v)
                .ok_or_else(|| OptimizerError::Invalid(format!("unit {} assigned unknown treatment {}", user.unit, fmt_value(&v))))?;
            if user.cost[j].is_none() {
                return Err(OptimizerError::Invalid(format!("treatment {} is not offered to unit {}", fmt_value(&v), user.unit)));
            }
            choice.push(j);
        }
        Ok(self.policy(&choice))
    }

    pub fn is_feasible(&self, policy: &Policy) -> bool {
        policy.cost <= self.budget
    }
}

/// (uplift, cost, unit, arm, user index)
type Candidate = (BigRational, BigRational, UnitId, usize, usize);

fn ratio_order(a: &Candidate, b: &Candidate) -> Ordering {
    let (ta, ca, ua, ja, _) = a;
    let (tb, cb, ub, jb, _) = b;
    let by_ratio = match (ca.is_zero(), cb.is_zero()) {
        (true, true) => tb.cmp(ta),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => (tb * ca).cmp(&(ta * cb)),
    };
    by_ratio.then_with(|| ca.cmp(cb)).then_with(|| ua.cmp(ub)).then_with(|| ja.cmp(jb))
}

/// Candidates in uplift/cost order (ties: lower cost, then lower unit id);
/// each is taken when it beats the user's current arm and the extra cost fits.
pub fn allocate_greedy(problem: &AllocationProblem) -> Policy {
    let mut candidates: Vec<Candidate> = Vec::new();
    for (i, user) in problem.users.iter().enumerate() {
        for j in 1..problem.arms.len() {
            if let Some(c) = &user.cost[j] {
                if user.tau[j].is_positive() {
                    candidates.push((user.tau[j].clone(), c.clone(), user.unit, j, i));
                }
            }
        }
    }
    candidates.sort_by(ratio_order);
    let mut choice = vec![0usize; problem.users.len()];
    let mut remaining = problem.budget.clone();
    for (tau, cost, _, j, i) in candidates {
        let user = &problem.users[i];
        let current = choice[i];
        let extra = &cost - user.cost[current].as_ref().expect("offered arm");
        if tau > user.tau[current] && extra <= remaining {
            remaining -= extra;
            choice[i] = j;
        }
    }
    problem.policy(&choice)
}

/// Multiple-choice knapsack by dynamic programming over integer-scaled costs.
/// Among optimal policies the cheapest is returned.
pub fn allocate_exact(problem: &AllocationProblem) -> Result<Policy, OptimizerError> {
    let mut scale = problem.budget.denom().clone();
    for user in &problem.users {
        for c in user.cost.iter().flatten() {
            scale = scale.lcm(c.denom());
        }
    }
    let to_steps = |r: &BigRational| -> BigInt { (r * BigRational::from_integer(scale.clone())).to_integer() };
    let total_max: BigInt = problem.users.iter().map(|u| u.cost.iter().flatten().map(to_steps).max().unwrap_or_else(BigInt::zero)).sum();
    let cap_big = to_steps(&problem.budget).min(total_max);
    let n = problem.users.len() as u64;
    let cells = cap_big.to_u64().and_then(|c| c.checked_add(1)).and_then(|c| c.checked_mul(n.max(1))).unwrap_or(u64::MAX);
    if cells > MAX_DP_CELLS {
        return Err(OptimizerError::TooLarge { cells, limit: MAX_DP_CELLS });
    }
    let cap = cap_big.to_usize().expect("bounded");
    let steps: Vec<Vec<Option<usize>>> =
        problem.users.iter().map(|u| u.cost.iter().map(|c| c.as_ref().map(|c| to_steps(c).to_usize().unwrap_or(usize::MAX))).collect()).collect();

    // best[c]: maximal uplift with total cost exactly c.
    let mut best: Vec<Option<BigRational>> = vec![None; cap + 1];
    best[0] = Some(BigRational::zero());
    let mut choice: Vec<Vec<u8>> = Vec::with_capacity(problem.users.len());
    for (i, user) in problem.users.iter().enumerate() {
        let mut next: Vec<Option<BigRational>> = vec![None; cap + 1];
        let mut pick = vec![0u8; cap + 1];
        for (c, slot) in best.iter().enumerate() {
            let Some(base) = slot else { continue };
            for (j, s) in steps[i].iter().enumerate() {
                let Some(s) = *s else { continue };
                let Some(total) = c.checked_add(s).filter(|t| *t <= cap) else { continue };
                let value = base + &user.tau[j];
                if next[total].as_ref().is_none_or(|v| value > *v) {
                    next[total] = Some(value);
                    pick[total] = j as u8;
                }
            }
        }
        best = next;
        choice.push(pick);
    }
    let mut end = 0;
    for c in 0..=cap {
        if let Some(v) = &best[c] {
            if best[end].as_ref().is_none_or(|b| v > b) {
                end = c;
            }
        }
    }
    let mut picks = vec![0usize; problem.users.len()];
    let mut c = end;
    for i in (0..problem.users.len()).rev() {
        let j = choice[i][c] as usize;
        picks[i] = j;
        c -= steps[i][j].expect("reachable");
    }
    Ok(problem.policy(&picks))
}

/// Per-unit uplift of each arm over `arms[0]`, computed exactly for every
/// unit class (units sharing group and features share a value).
pub fn estimate_tau(model: &DiscoModel, treatment: &str, arms: &[Value], outcome: &str) -> Result<Tau, OptimizerError> {
    let engine = Engine::new(model);
    let mut by_class = Vec::with_capacity(model.classes().len());
    for class in model.classes() {
        let u = class.members[0];
        let mut row = vec![BigRational::zero()];
        for a in &arms[1..] {
            row.push(engine.ite(u, treatment, *a, arms[0], outcome)?);
        }
        by_class.push(row);
    }
    Ok(model.units().map(|u| (u, by_class[model.class_of(u)].clone())).collect())
}

/// Arm-mean differences per unit class from observed records.
pub fn estimate_tau_from_dataset(
    model: &DiscoModel,
    dataset: &Dataset,
    treatment: &str,
    arms: &[Value],
    outcome: &str,
) -> Result<Tau, OptimizerError> {
    let col = |n: &str| dataset.column(n).ok_or_else(|| OptimizerError::Invalid(format!("dataset has no column `{n}`")));
    let (tc, yc) = (col(treatment)?, col(outcome)?);
    // per class, per arm: (sum of outcomes, count)
    let mut sums = vec![vec![(BigRational::zero(), 0u64); arms.len()]; model.classes().len()];
    for r in &dataset.records {
        if !model.contains_unit(r.unit) {
            return Err(OptimizerError::Invalid(format!("record names unit {} outside the population", r.unit)));
        }
        if let Some(j) = arms.iter().position(|a| *a == r.values[tc]) {
            let cell = &mut sums[model.class_of(r.unit)][j];
            cell.0 += to_big(&r.values[yc]);
            cell.1 += 1;
        }
    }
    let mut by_class = Vec::with_capacity(sums.len());
    for (k, cells) in sums.iter().enumerate() {
        let mean = |j: usize| -> Result<BigRational, OptimizerError> {
            let (s, n) = &cells[j];
            if *n == 0 {
                return Err(OptimizerError::EmptyArm {
                    unit: model.classes()[k].members[0],
                    treatment: treatment.to_string(),
                    arm: fmt_value(&arms[j]),
                });
            }
            Ok(s / BigRational::from_integer(BigInt::from(*n)))
        };
        let control = mean(0)?;
        let mut row = vec![BigRational::zero()];
        for j in 1..arms.len() {
            row.push(mean(j)? - &control);
        }
        by_class.push(row);
    }
    Ok(model.units().map(|u| (u, by_class[model.class_of(u)].clone())).collect())
}

/// Complier probability P(Y^d(control)=y0, Y^d(arm)=y1; u) in place of uplift,
/// as an alternative ranking score.
pub fn complier_scores(model: &DiscoModel, treatment: &str, arms: &[Value], outcome: &str, y0: Value, y1: Value) -> Result<Tau, OptimizerError> {
    let engine = Engine::new(model);
    let mut by_class = Vec::with_capacity(model.classes().len());
    for class in model.classes() {
        let u = class.members[0];
        let mut row = vec![BigRational::zero()];
        for a in &arms[1..] {
            row.push(engine.complier_probability(u, treatment, arms[0], *a, outcome, y0, y1)?);
        }
        by_class.push(row);
    }
    Ok(model.units().map(|u| (u, by_class[model.class_of(u)].clone())).collect())
}

/// Expected outcome of a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyValue {
    /// Σ_u E[Y^d(π(u)); u]
    pub total: BigRational,
    /// Σ_u weight(u)·E[Y^d(π(u)); u]
    pub mean: BigRational,
}

/// Exact value of `policy`; rejected if it costs more than the budget.
pub fn evaluate_policy(
    model: &DiscoModel,
    problem: &AllocationProblem,
    policy: &Policy,
    treatment: &str,
    outcome: &str,
) -> Result<PolicyValue, OptimizerError> {
    let scored = problem.score(&policy.assignment)?;
    if !problem.is_feasible(&scored) {
        return Err(OptimizerError::Infeasible { cost: fmt_fraction(&scored.cost), budget: fmt_fraction(&problem.budget) });
    }
    let engine = Engine::new(model);
    let mut cache: BTreeMap<(usize, Value), BigRational> = BTreeMap::new();
    let mut total = BigRational::zero();
    let mut mean = BigRational::zero();
    for u in model.units() {
        let t = policy.assignment.get(&u).copied().unwrap_or(problem.arms[0]);
        let key = (model.class_of(u), t);
        let v = match cache.get(&key) {
            Some(v) => v.clone(),
            None => {
                let iv: Intervention = [(treatment.to_string(), t)].into();
                let v = engine.interventional_mean(u, &iv, outcome)?;
                cache.insert(key, v.clone());
                v
            }
        };
        mean += model.weight(u) * &v;
        total += v;
    }
    Ok(PolicyValue { total, mean })
}

/// Everyone on control.
pub fn control_policy(problem: &AllocationProblem) -> Policy {
    problem.policy(&vec![0; problem.users.len()])
}

pub fn read_costs<R: Read>(input: R) -> Result<BTreeMap<(UnitId, Value), BigRational>, OptimizerError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rd.headers().map_err(|e| OptimizerError::Io(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["unit", "treatment", "cost"] {
        return Err(OptimizerError::Io("costs header must be `unit,treatment,cost`".into()));
    }
    let mut out = BTreeMap::new();
    for (k, row) in rd.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| OptimizerError::Io(e.to_string()))?;
        let bad = |what: &str| OptimizerError::Io(format!("costs line {line}: invalid {what}"));
        let unit: u32 = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("unit"))?;
        let t = row.get(1).and_then(parse_value).ok_or_else(|| bad("treatment"))?;
        let c = row.get(2).and_then(parse_big).ok_or_else(|| bad("cost"))?;
        if out.insert((UnitId(unit), t), c).is_some() {
            return Err(OptimizerError::Io(format!("costs line {line}: duplicate entry")));
        }
    }
    Ok(out)
}

pub fn write_policy_csv<W: Write>(policy: &Policy, out: W) -> Result<(), OptimizerError> {
    let io = |e: csv::Error| OptimizerError::Io(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["unit", "treatment"]).map_err(io)?;
    for (u, t) in &policy.assignment {
        w.write_record([u.0.to_string(), fmt_value(t)]).map_err(io)?;
    }
    w.flush().map_err(|e| OptimizerError::Io(e.to_string()))
}

#[derive(Debug, Serialize)]
struct Summary {
    cost: String,
    expected_uplift: String,
    cost_decimal: f64,
    expected_uplift_decimal: f64,
}

/// `{"cost": "p/q", "expected_uplift": "p/q", ...}` followed by a newline.
pub fn policy_summary_json(policy: &Policy) -> String {
    let s = Summary {
        cost: fmt_fraction(&policy.cost),
        expected_uplift: fmt_fraction(&policy.expected_uplift),
        cost_decimal: to_f64(&policy.cost),
        expected_uplift_decimal: to_f64(&policy.expected_uplift),
    };
    serde_json::to_string(&s).expect("serializable") + "\n"
}
