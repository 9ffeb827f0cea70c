//! Exact rational evaluation by enumerating noise assignments.
//!
//! Worlds are grouped into *banks* of shared noise. The factual world
//! always uses the factual bank. Under scm coupling every counterfactual
//! world joins that bank; under disco coupling each counterfactual world
//! gets a fresh bank (or, with [`CrossWorldCoupling::Shared`], all of them
//! share one fresh bank). Banks are independent given the unit, so a
//! unit's joint law over all queried slots is the product of per-bank
//! laws, each found by enumerating only the noises that can reach a slot.

mod verify;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::model::{Coupling, DiscoModel, Intervention, ModelError, SolveError, UnitId};
use crate::query::{Event, Query, Target, UnitRef, WorldRef};
use crate::rational::{fmt_value, to_big, Value};
use crate::report::ValidationReport;

pub use verify::{
    collapse_noises_to_mode, treatment_outcome_unconfounded, verify_degenerate_l3_equivalence, verify_degenerate_l3_equivalence_with,
    verify_individual_consistency, verify_layer12_equivalence, verify_layer12_equivalence_with, verify_mixture_lemma, Evaluator, ExactEvaluator,
};

/// Exact probability: a non-negative rational in lowest terms.
pub type ExactProb = BigRational;

/// Upper bound on noise assignments enumerated for one bank and unit.
pub const MAX_ASSIGNMENTS: u64 = 50_000_000;

/// How distinct counterfactual worlds of one query relate under disco coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossWorldCoupling {
    /// Each distinct intervention draws its own noise copy.
    #[default]
    Independent,
    /// All counterfactual worlds share one copy, still independent of the factual noise.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid query: {0}")]
    InvalidQuery(ValidationReport),
    #[error("conditioning on null event: {0}")]
    NullEvidence(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
}

/// One (world, variable) coordinate of a joint law.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub world: WorldRef,
    pub var: String,
}

impl Slot {
    pub fn new(world: WorldRef, var: &str) -> Slot {
        Slot { world, var: var.to_string() }
    }
}

/// A unit's exact joint law over some slots. Rows are sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTable {
    pub slots: Vec<Slot>,
    pub rows: Vec<(Vec<Value>, BigRational)>,
}

impl JointTable {
    pub fn prob(&self, pred: impl Fn(&[Value]) -> bool) -> BigRational {
        self.rows.iter().filter(|(r, _)| pred(r)).fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn slot_index(&self, world: &WorldRef, var: &str) -> Option<usize> {
        self.slots.iter().position(|s| &s.world == world && s.var == var)
    }

    /// Law of one slot.
    pub fn marginal(&self, slot: usize) -> BTreeMap<Value, BigRational> {
        let mut out = BTreeMap::new();
        for (row, p) in &self.rows {
            *out.entry(row[slot]).or_insert_with(BigRational::zero) += p;
        }
        out
    }
}

/// P(u | e) for every unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitPosterior {
    pub mass: BTreeMap<UnitId, BigRational>,
}

impl UnitPosterior {
    pub fn of(&self, unit: UnitId) -> BigRational {
        self.mass.get(&unit).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn group_mass(&self, model: &DiscoModel, group: &str) -> BigRational {
        self.mass.iter().filter(|(u, _)| model.group_name_of(**u) == group).fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn total(&self) -> BigRational {
        self.mass.values().fold(BigRational::zero(), |acc, p| acc + p)
    }
}

struct WorldPlan {
    model: DiscoModel,
    /// (position in the joint row, variable index)
    outputs: Vec<(usize, usize)>,
}

struct BankPlan {
    worlds: Vec<WorldPlan>,
    noises: Vec<usize>,
}

/// Per-axis integer numerators over per-axis common denominators, when the
/// product of those denominators fits in a `u128`. Every count stays below
/// that product because each axis's numerators sum to its denominator.
fn integer_weights(axes: &[Vec<(Value, BigRational)>]) -> Option<(Vec<Vec<u128>>, u128)> {
    let mut weights = Vec::with_capacity(axes.len());
    let mut denom: u128 = 1;
    for axis in axes {
        let d = axis.iter().fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
        let d = d.to_u64()? as u128;
        denom = denom.checked_mul(d)?;
        let nums: Option<Vec<u128>> =
            axis.iter().map(|(_, p)| (p * BigRational::from_integer(BigInt::from(d))).to_integer().to_u64().map(u128::from)).collect();
        weights.push(nums?);
    }
    Some((weights, denom))
}

/// A compiled slot set: submodels built once, reused for every unit.
pub(crate) struct Plan {
    slots: Vec<Slot>,
    banks: Vec<BankPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum BankKey {
    Factual,
    Fresh(Option<Intervention>),
}

impl Plan {
    pub(crate) fn new(model: &DiscoModel, slots: &[Slot], cross: CrossWorldCoupling) -> Result<Plan, EngineError> {
        let mut banks: BTreeMap<BankKey, BTreeMap<WorldRef, Vec<(usize, usize)>>> = BTreeMap::new();
        for (pos, slot) in slots.iter().enumerate() {
            let var = model.var_index(&slot.var).ok_or_else(|| ModelError::UnknownVariable(slot.var.clone()))?;
            let key = match (&slot.world, model.coupling(), cross) {
                (WorldRef::Factual, _, _) | (_, Coupling::Scm, _) => BankKey::Factual,
                (WorldRef::Counterfactual(iv), Coupling::Disco, CrossWorldCoupling::Independent) => BankKey::Fresh(Some(iv.clone())),
                (WorldRef::Counterfactual(_), Coupling::Disco, CrossWorldCoupling::Shared) => BankKey::Fresh(None),
            };
            banks.entry(key).or_default().entry(slot.world.clone()).or_default().push((pos, var));
        }
        let mut plans = Vec::new();
        for (_, worlds) in banks {
            let mut wplans = Vec::new();
            let mut noises = BTreeSet::new();
            for (world, outputs) in worlds {
                let sub = match &world {
                    WorldRef::Factual => model.clone(),
                    WorldRef::Counterfactual(iv) => model.apply_do(iv)?,
                };
                let vars: Vec<usize> = outputs.iter().map(|&(_, v)| v).collect();
                noises.extend(sub.relevant_noises(&vars));
                wplans.push(WorldPlan { model: sub, outputs });
            }
            plans.push(BankPlan { worlds: wplans, noises: noises.into_iter().collect() });
        }
        Ok(Plan { slots: slots.to_vec(), banks: plans })
    }

    fn bank_law(&self, model: &DiscoModel, bank: &BankPlan, unit: UnitId) -> Result<HashMap<Vec<(usize, Value)>, BigRational>, EngineError> {
        let decls = model.noises();
        let axes: Vec<Vec<(Value, BigRational)>> =
            bank.noises.iter().map(|&k| decls[k].pmf.entries().iter().filter(|(_, p)| !p.is_zero()).cloned().collect()).collect();
        let total: u64 = axes.iter().try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64)).unwrap_or(u64::MAX);
        if total > MAX_ASSIGNMENTS {
            return Err(EngineError::TooLarge(format!("{total} noise assignments for one unit; use the sampling engine")));
        }
        // Integer weights over a common denominator keep rational arithmetic out of the loop.
        let scaled = integer_weights(&axes);
        let mut noise_values: Vec<Value> = decls.iter().map(|d| d.pmf.entries()[0].0).collect();
        let mut vars = vec![Value::zero(); model.var_count()];
        let mut law: HashMap<Vec<(usize, Value)>, BigRational> = HashMap::new();
        let mut counts: HashMap<Vec<(usize, Value)>, u128> = HashMap::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            for (a, &i) in idx.iter().enumerate() {
                noise_values[bank.noises[a]] = axes[a][i].0;
            }
            let mut key = Vec::new();
            for w in &bank.worlds {
                w.model.solve_into(unit, &noise_values, &mut vars)?;
                key.extend(w.outputs.iter().map(|&(pos, v)| (pos, vars[v])));
            }
            match &scaled {
                Some((weights, _)) => {
                    let w: u128 = idx.iter().enumerate().map(|(a, &i)| weights[a][i]).product();
                    *counts.entry(key).or_insert(0) += w;
                }
                None => {
                    let mass = idx.iter().enumerate().fold(BigRational::one(), |acc, (a, &i)| acc * &axes[a][i].1);
                    *law.entry(key).or_insert_with(BigRational::zero) += mass;
                }
            }
            let mut a = axes.len();
            loop {
                if a == 0 {
                    if let Some((_, denom)) = &scaled {
                        let d = BigInt::from(*denom);
                        law.extend(counts.into_iter().map(|(k, c)| (k, BigRational::new(BigInt::from(c), d.clone()))));
                    }
                    return Ok(law);
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub(crate) fn joint(&self, model: &DiscoModel, unit: UnitId) -> Result<JointTable, EngineError> {
        if !model.contains_unit(unit) {
            return Err(SolveError::UnknownUnit(unit).into());
        }
        let mut rows: Vec<(Vec<Value>, BigRational)> = vec![(vec![Value::zero(); self.slots.len()], BigRational::one())];
        for bank in &self.banks {
            let law = self.bank_law(model, bank, unit)?;
            let mut next = Vec::with_capacity(rows.len() * law.len());
            for (row, p) in &rows {
                for (assign, q) in &law {
                    let mut r = row.clone();
                    for &(pos, v) in assign {
                        r[pos] = v;
                    }
                    next.push((r, p * q));
                }
            }
            rows = next;
        }
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(JointTable { slots: self.slots.clone(), rows })
    }
}

fn events_hold(events: &[(usize, &Event)], row: &[Value]) -> bool {
    events.iter().all(|(pos, e)| e.holds(&row[*pos]))
}

fn describe(events: &[Event]) -> String {
    if events.is_empty() {
        return "empty evidence".to_string();
    }
    events.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

/// Slot list and positions for a target plus evidence.
struct Layout {
    slots: Vec<Slot>,
    target: Vec<(usize, Event)>,
    evidence: Vec<(usize, Event)>,
    expectation: Option<usize>,
}

impl Layout {
    fn new(target: &Target, evidence: &[Event]) -> Layout {
        let mut slots: Vec<Slot> = Vec::new();
        let mut place = |world: &WorldRef, var: &str| -> usize {
            let s = Slot::new(world.clone(), var);
            match slots.iter().position(|x| *x == s) {
                Some(i) => i,
                None => {
                    slots.push(s);
                    slots.len() - 1
                }
            }
        };
        let mut tgt = Vec::new();
        let mut expectation = None;
        match target {
            Target::Probability(events) => {
                for e in events {
                    tgt.push((place(&e.world, &e.var), e.clone()));
                }
            }
            Target::Expectation { world, var } => expectation = Some(place(world, var)),
        }
        let ev = evidence.iter().map(|e| (place(&e.world, &e.var), e.clone())).collect();
        Layout { slots, target: tgt, evidence: ev, expectation }
    }

    /// (mass of evidence, mass of target and evidence, or evidence-weighted sum of the expectation slot)
    fn masses(&self, table: &JointTable) -> (BigRational, BigRational) {
        let ev: Vec<(usize, &Event)> = self.evidence.iter().map(|(p, e)| (*p, e)).collect();
        let tg: Vec<(usize, &Event)> = self.target.iter().map(|(p, e)| (*p, e)).collect();
        let mut me = BigRational::zero();
        let mut mt = BigRational::zero();
        for (row, p) in &table.rows {
            if !events_hold(&ev, row) {
                continue;
            }
            me += p;
            match self.expectation {
                Some(slot) => mt += p * to_big(&row[slot]),
                None if events_hold(&tg, row) => mt += p,
                None => {}
            }
        }
        (me, mt)
    }
}

/// Exact evaluator bound to one model.
#[derive(Clone, Copy)]
pub struct Engine<'m> {
    model: &'m DiscoModel,
    cross_world: CrossWorldCoupling,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m DiscoModel) -> Self {
        Engine { model, cross_world: CrossWorldCoupling::default() }
    }

    pub fn with_cross_world(mut self, cross_world: CrossWorldCoupling) -> Self {
        self.cross_world = cross_world;
        self
    }

    pub fn model(&self) -> &'m DiscoModel {
        self.model
    }

    /// The unit's exact joint law over `slots`.
    pub fn joint(&self, unit: UnitId, slots: &[Slot]) -> Result<JointTable, EngineError> {
        Plan::new(self.model, slots, self.cross_world)?.joint(self.model, unit)
    }

    fn check(&self, query: &Query) -> Result<(), EngineError> {
        let report = query.validate(self.model);
        if report.is_valid() {
            Ok(())
        } else {
            Err(EngineError::InvalidQuery(report))
        }
    }

    fn individual(&self, unit: UnitId, target: &Target, evidence: &[Event]) -> Result<BigRational, EngineError> {
        let layout = Layout::new(target, evidence);
        let table = self.joint(unit, &layout.slots)?;
        let (me, mt) = layout.masses(&table);
        if me.is_zero() {
            return Err(EngineError::NullEvidence(format!("{} has probability 0 for unit {unit}", describe(evidence))));
        }
        Ok(mt / me)
    }

    /// P(outcome | condition; u) with factual events only.
    pub fn layer1(&self, unit: UnitId, outcome: &[Event], condition: &[Event]) -> Result<ExactProb, EngineError> {
        if let Some(e) = outcome.iter().chain(condition).find(|e| !e.world.is_factual()) {
            return Err(EngineError::Precondition(format!("layer-1 events must be factual, got `{e}`")));
        }
        self.individual(unit, &Target::Probability(outcome.to_vec()), condition)
    }

    /// P(outcome in the world of do(intervention); u). Outcome events are
    /// given untagged and read in that world.
    pub fn layer2(&self, unit: UnitId, intervention: &Intervention, outcome: &[Event]) -> Result<ExactProb, EngineError> {
        let world = WorldRef::Counterfactual(intervention.clone());
        let events: Vec<Event> = outcome.iter().map(|e| Event { world: world.clone(), ..e.clone() }).collect();
        self.model.apply_do(intervention)?;
        self.individual(unit, &Target::Probability(events), &[])
    }

    /// The query's target for one unit, conditioned on its evidence; any
    /// unit restriction in the query is ignored.
    pub fn layer3_individual(&self, unit: UnitId, query: &Query) -> Result<ExactProb, EngineError> {
        self.check(query)?;
        self.individual(unit, &query.target, &query.evidence)
    }

    /// E[var in world | evidence; u].
    pub fn expectation(&self, unit: UnitId, world: &WorldRef, var: &str, evidence: &[Event]) -> Result<BigRational, EngineError> {
        let target = Target::Expectation { world: world.clone(), var: var.to_string() };
        self.individual(unit, &target, evidence)
    }

    /// E[var^d(do intervention); u].
    pub fn interventional_mean(&self, unit: UnitId, intervention: &Intervention, var: &str) -> Result<BigRational, EngineError> {
        self.expectation(unit, &WorldRef::Counterfactual(intervention.clone()), var, &[])
    }

    fn units_of(&self, restriction: Option<&UnitRef>) -> Result<Vec<UnitId>, EngineError> {
        let m = self.model;
        Ok(match restriction {
            None => m.units().collect(),
            Some(UnitRef::Unit(u)) => {
                if !m.contains_unit(*u) {
                    return Err(SolveError::UnknownUnit(*u).into());
                }
                vec![*u]
            }
            Some(UnitRef::Group(g)) => {
                let gi = m.group_index(g).ok_or_else(|| EngineError::Precondition(format!("unknown group `{g}`")))?;
                m.units().filter(|u| m.group_of(*u) == gi).collect()
            }
        })
    }

    /// Σ_u w(u)·(evidence mass, target mass) over `units`, one enumeration per unit class.
    fn population_masses(&self, units: &[UnitId], target: &Target, evidence: &[Event]) -> Result<(BigRational, BigRational), EngineError> {
        let m = self.model;
        let layout = Layout::new(target, evidence);
        let plan = Plan::new(m, &layout.slots, self.cross_world)?;
        let mut class_weight: BTreeMap<usize, (UnitId, BigRational)> = BTreeMap::new();
        for &u in units {
            let e = class_weight.entry(m.class_of(u)).or_insert_with(|| (u, BigRational::zero()));
            e.1 += m.weight(u);
        }
        let parts: Vec<Result<(BigRational, BigRational), EngineError>> = class_weight
            .into_par_iter()
            .map(|(_, (rep, w))| {
                let table = plan.joint(m, rep)?;
                let (me, mt) = layout.masses(&table);
                Ok((me * &w, mt * &w))
            })
            .collect();
        let mut den = BigRational::zero();
        let mut num = BigRational::zero();
        for p in parts {
            let (me, mt) = p?;
            den += me;
            num += mt;
        }
        Ok((den, num))
    }

    /// Population-level value of a query: P(target | evidence) or E[target | evidence],
    /// mixing unit-level values by P(u | evidence) within the unit restriction.
    pub fn evaluate(&self, query: &Query) -> Result<BigRational, EngineError> {
        self.check(query)?;
        let units = self.units_of(query.unit.as_ref())?;
        let (den, num) = self.population_masses(&units, &query.target, &query.evidence)?;
        if den.is_zero() {
            return Err(EngineError::NullEvidence(format!("{} has probability 0", describe(&query.evidence))));
        }
        Ok(num / den)
    }

    /// Same value as [`Engine::evaluate`], computed literally as
    /// Σ_u P(u|e)·P(target|e;u).
    pub fn evaluate_by_abduction(&self, query: &Query) -> Result<BigRational, EngineError> {
        self.check(query)?;
        let units = self.units_of(query.unit.as_ref())?;
        let posterior = self.abduce_within(&units, &query.evidence)?;
        let mut total = BigRational::zero();
        let mut cache: HashMap<usize, BigRational> = HashMap::new();
        for (u, p) in &posterior.mass {
            if p.is_zero() {
                continue;
            }
            let class = self.model.class_of(*u);
            let v = match cache.get(&class) {
                Some(v) => v.clone(),
                None => {
                    let v = self.individual(*u, &query.target, &query.evidence)?;
                    cache.insert(class, v.clone());
                    v
                }
            };
            total += p * v;
        }
        Ok(total)
    }

    fn abduce_within(&self, units: &[UnitId], evidence: &[Event]) -> Result<UnitPosterior, EngineError> {
        if let Some(e) = evidence.iter().find(|e| !e.world.is_factual()) {
            return Err(EngineError::Precondition(format!("evidence must be factual, got `{e}`")));
        }
        let m = self.model;
        let layout = Layout::new(&Target::Probability(Vec::new()), evidence);
        let plan = Plan::new(m, &layout.slots, self.cross_world)?;
        let mut by_class: HashMap<usize, BigRational> = HashMap::new();
        let mut raw = BTreeMap::new();
        let mut total = BigRational::zero();
        for &u in units {
            let c = m.class_of(u);
            let pe = match by_class.get(&c) {
                Some(p) => p.clone(),
                None => {
                    let (me, _) = layout.masses(&plan.joint(m, u)?);
                    by_class.insert(c, me.clone());
                    me
                }
            };
            let mass = pe * m.weight(u);
            total += &mass;
            raw.insert(u, mass);
        }
        if total.is_zero() {
            return Err(EngineError::NullEvidence(format!("{} is impossible in the population", describe(evidence))));
        }
        for v in raw.values_mut() {
            *v /= &total;
        }
        Ok(UnitPosterior { mass: raw })
    }

    /// P(u | evidence) over the whole population.
    pub fn abduce(&self, evidence: &[Event]) -> Result<UnitPosterior, EngineError> {
        let units: Vec<UnitId> = self.model.units().collect();
        self.abduce_within(&units, evidence)
    }

    /// P(Y[X=x]=y | X=x, Y=y; u).
    pub fn probability_of_consistency(&self, unit: UnitId, treatment: &str, x: Value, outcome: &str, y: Value) -> Result<ExactProb, EngineError> {
        let target = Target::Probability(vec![Event::counterfactual(&[(treatment, x)], outcome, y)]);
        let evidence = vec![Event::factual(treatment, x), Event::factual(outcome, y)];
        let q = Query { target: target.clone(), evidence: evidence.clone(), unit: None };
        self.check(&q)?;
        self.individual(unit, &target, &evidence)
    }

    /// E[Y^d(t1); u] − E[Y^d(t0); u].
    pub fn ite(&self, unit: UnitId, treatment: &str, t1: Value, t0: Value, outcome: &str) -> Result<BigRational, EngineError> {
        let iv1: Intervention = [(treatment.to_string(), t1)].into();
        let iv0: Intervention = [(treatment.to_string(), t0)].into();
        Ok(self.interventional_mean(unit, &iv1, outcome)? - self.interventional_mean(unit, &iv0, outcome)?)
    }

    /// Weight-normalized average ITE over the units `select` accepts.
    pub fn cate(&self, select: impl Fn(UnitId) -> bool, treatment: &str, t1: Value, t0: Value, outcome: &str) -> Result<BigRational, EngineError> {
        let m = self.model;
        let mut by_class: HashMap<usize, BigRational> = HashMap::new();
        let mut weight = BigRational::zero();
        let mut total = BigRational::zero();
        for u in m.units().filter(|u| select(*u)) {
            let c = m.class_of(u);
            if let std::collections::hash_map::Entry::Vacant(slot) = by_class.entry(c) {
                slot.insert(self.ite(u, treatment, t1, t0, outcome)?);
            }
            weight += m.weight(u);
            total += m.weight(u) * &by_class[&c];
        }
        if weight.is_zero() {
            return Err(EngineError::Precondition("the condition selects no units with positive weight".into()));
        }
        Ok(total / weight)
    }

    /// P(outcome[t0]=y0, outcome[t1]=y1; u); with y0=0, y1=1 this is the complier probability.
    #[allow(clippy::too_many_arguments)]
    pub fn complier_probability(
        &self,
        unit: UnitId,
        treatment: &str,
        t0: Value,
        t1: Value,
        outcome: &str,
        y0: Value,
        y1: Value,
    ) -> Result<ExactProb, EngineError> {
        let target =
            Target::Probability(vec![Event::counterfactual(&[(treatment, t0)], outcome, y0), Event::counterfactual(&[(treatment, t1)], outcome, y1)]);
        self.check(&Query { target: target.clone(), evidence: Vec::new(), unit: None })?;
        self.individual(unit, &target, &[])
    }
}

/// Population value of `query` with independent cross-world noise.
pub fn evaluate(model: &DiscoModel, query: &Query) -> Result<BigRational, EngineError> {
    Engine::new(model).evaluate(query)
}

pub fn abduce(model: &DiscoModel, evidence: &[Event]) -> Result<UnitPosterior, EngineError> {
    Engine::new(model).abduce(evidence)
}

/// Render a table for humans, one row per line.
pub fn format_table(table: &JointTable) -> String {
    let header: Vec<String> = table.slots.iter().map(|s| format!("{}{}", s.var, s.world)).collect();
    let mut out = header.join("\t") + "\tP\n";
    for (row, p) in &table.rows {
        let cells: Vec<String> = row.iter().map(fmt_value).collect();
        out.push_str(&format!("{}\t{}\n", cells.join("\t"), crate::rational::fmt_fraction(p)));
    }
    out
}
