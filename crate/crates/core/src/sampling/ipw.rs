//! Inverse-propensity identities: exact checks by enumeration and
//! estimators on datasets.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::Zero;

use super::{mean_estimate, Dataset, Estimate, SamplingError};
use crate::exact::{treatment_outcome_unconfounded, Engine, EngineError, JointTable, Slot};
use crate::model::{Coupling, DiscoModel, UnitId};
use crate::query::{Event, Query, WorldRef};
use crate::rational::{fmt_fraction, fmt_value, to_big, Value};
use crate::report::VerificationReport;

/// P(T=t | u) for every unit and treatment value.
pub type Propensity = BTreeMap<UnitId, BTreeMap<Value, BigRational>>;

fn var(model: &DiscoModel, name: &str) -> Result<usize, EngineError> {
    model.var_index(name).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{name}`")))
}

fn check_value(model: &DiscoModel, name: &str, v: &Value) -> Result<(), EngineError> {
    if model.in_domain(var(model, name)?, v) {
        Ok(())
    } else {
        Err(EngineError::Precondition(format!("{} is outside the domain of `{name}`", fmt_value(v))))
    }
}

/// One joint table per unit class, keyed by class index.
fn class_tables(model: &DiscoModel, slots: &[Slot]) -> Result<BTreeMap<usize, JointTable>, EngineError> {
    let engine = Engine::new(model);
    let mut out = BTreeMap::new();
    for (c, class) in model.classes().iter().enumerate() {
        out.insert(c, engine.joint(class.members[0], slots)?);
    }
    Ok(out)
}

fn expect_in(table: &JointTable, pred: impl Fn(&[Value]) -> bool, value: impl Fn(&[Value]) -> BigRational) -> BigRational {
    table.rows.iter().filter(|(r, _)| pred(r)).fold(BigRational::zero(), |acc, (r, p)| acc + p * value(r))
}

pub fn propensity(model: &DiscoModel, treatment: &str) -> Result<Propensity, EngineError> {
    var(model, treatment)?;
    let tables = class_tables(model, &[Slot::new(WorldRef::Factual, treatment)])?;
    Ok(model.units().map(|u| (u, tables[&model.class_of(u)].marginal(0))).collect())
}

fn group_summary(model: &DiscoModel, units: &[UnitId]) -> String {
    let mut by_group: BTreeMap<&str, usize> = BTreeMap::new();
    for u in units {
        *by_group.entry(model.group_name_of(*u)).or_default() += 1;
    }
    by_group
        .iter()
        .map(|(g, k)| {
            let size = model.units().filter(|u| model.group_name_of(*u) == *g).count();
            format!("group {g} ({k} of {size} units)")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn require_positivity(model: &DiscoModel, prop: &Propensity, treatment: &str, t: &Value) -> Result<(), EngineError> {
    let bad: Vec<UnitId> =
        prop.iter().filter(|(u, p)| !model.weight(**u).is_zero() && p.get(t).is_none_or(|q| q.is_zero())).map(|(u, _)| *u).collect();
    if bad.is_empty() {
        return Ok(());
    }
    Err(EngineError::Precondition(format!("positivity violated: P({treatment}={}|u) = 0 for {}", fmt_value(t), group_summary(model, &bad))))
}

fn require_unconfounded(model: &DiscoModel, treatment: &str, outcome: &str) -> Result<(), EngineError> {
    if treatment_outcome_unconfounded(model, treatment, outcome)? {
        Ok(())
    } else {
        Err(EngineError::Precondition(format!("`{treatment}` and `{outcome}` share exogenous noise given the unit")))
    }
}

/// X reads only the unit and (optionally) a private noise, and if it has
/// noise it feeds neither T nor Y.
pub fn require_feature_independence(model: &DiscoModel, feature: &str, treatment: &str, outcome: &str) -> Result<(), EngineError> {
    let x = var(model, feature)?;
    let t = var(model, treatment)?;
    let y = var(model, outcome)?;
    if !model.parents_of(x).is_empty() {
        let ps: Vec<&str> = model.parents_of(x).iter().map(|&p| model.var_name(p)).collect();
        return Err(EngineError::Precondition(format!(
            "structural independence violated: `{feature}` reads {}; it may read only the unit and a private noise",
            ps.join(", ")
        )));
    }
    let anc = model.ancestral_closure(&[t, y]);
    if !model.noises_of(x).is_empty() && anc[x] {
        return Err(EngineError::Precondition(format!(
            "structural independence violated: `{feature}` carries noise and feeds `{treatment}` or `{outcome}`"
        )));
    }
    Ok(())
}

fn report_sides(report: &mut VerificationReport, lhs_label: String, lhs: &BigRational, rhs_label: String, rhs: &BigRational) {
    report.notes.push(format!("{lhs_label} = {}", fmt_fraction(lhs)));
    report.notes.push(format!("{rhs_label} = {}", fmt_fraction(rhs)));
    report.check(lhs == rhs, || format!("{lhs_label} = {} but {rhs_label} = {}", fmt_fraction(lhs), fmt_fraction(rhs)));
}

/// E[Y^d(t*)] = E[Y·1{T=t*}/P(t*|U)], both sides exact.
pub fn ipw_ate_check(model: &DiscoModel, treatment: &str, outcome: &str, t_star: Value) -> Result<VerificationReport, EngineError> {
    check_value(model, treatment, &t_star)?;
    var(model, outcome)?;
    let prop = propensity(model, treatment)?;
    require_positivity(model, &prop, treatment, &t_star)?;
    require_unconfounded(model, treatment, outcome)?;
    let lhs = Engine::new(model).evaluate(&Query::expectation(WorldRef::under(&[(treatment, t_star)]), outcome))?;
    let tables = class_tables(model, &[Slot::new(WorldRef::Factual, treatment), Slot::new(WorldRef::Factual, outcome)])?;
    let mut rhs = BigRational::zero();
    for u in model.units() {
        let table = &tables[&model.class_of(u)];
        let num = expect_in(table, |r| r[0] == t_star, |r| to_big(&r[1]));
        rhs += model.weight(u) * num / &prop[&u][&t_star];
    }
    let mut report = VerificationReport::new("ipw");
    let t = fmt_value(&t_star);
    report_sides(
        &mut report,
        format!("E[{outcome}[{treatment}={t}]]"),
        &lhs,
        format!("E[{outcome}*1{{{treatment}={t}}}/P({treatment}={t}|U)]"),
        &rhs,
    );
    Ok(report)
}

/// E[Y^d(t') | X=x'] = E[Y·1{T=t', X=x'} / (P(t'|U)·P(x'))].
pub fn ipw_conditional_check(
    model: &DiscoModel,
    treatment: &str,
    outcome: &str,
    feature: &str,
    t: Value,
    x: Value,
) -> Result<VerificationReport, EngineError> {
    check_value(model, treatment, &t)?;
    check_value(model, feature, &x)?;
    var(model, outcome)?;
    require_feature_independence(model, feature, treatment, outcome)?;
    let prop = propensity(model, treatment)?;
    require_positivity(model, &prop, treatment, &t)?;
    require_unconfounded(model, treatment, outcome)?;
    let slots = [Slot::new(WorldRef::Factual, treatment), Slot::new(WorldRef::Factual, outcome), Slot::new(WorldRef::Factual, feature)];
    let tables = class_tables(model, &slots)?;
    let px = model.units().map(|u| model.weight(u) * tables[&model.class_of(u)].prob(|r| r[2] == x)).fold(BigRational::zero(), |a, b| a + b);
    if px.is_zero() {
        return Err(EngineError::NullEvidence(format!("P({feature}={}) = 0", fmt_value(&x))));
    }
    let query = Query::expectation(WorldRef::under(&[(treatment, t)]), outcome).given(vec![Event::factual(feature, x)]);
    let lhs = Engine::new(model).evaluate(&query)?;
    let mut rhs = BigRational::zero();
    for u in model.units() {
        let table = &tables[&model.class_of(u)];
        let num = expect_in(table, |r| r[0] == t && r[2] == x, |r| to_big(&r[1]));
        rhs += model.weight(u) * num / &prop[&u][&t];
    }
    rhs /= &px;
    let mut report = VerificationReport::new("ipw-cond");
    let (ts, xs) = (fmt_value(&t), fmt_value(&x));
    report_sides(
        &mut report,
        format!("E[{outcome}[{treatment}={ts}] | {feature}={xs}]"),
        &lhs,
        format!("E[{outcome}*1{{{treatment}={ts},{feature}={xs}}}/(P({treatment}={ts}|U)P({feature}={xs}))]"),
        &rhs,
    );
    Ok(report)
}

/// E[Y^d(t) | X=x, T=t, Y=y] = E[Y·1{T=t,X=x}/P(t,x) · P(y|t;U)/P(y|t,x)].
pub fn ipw_posttreatment_check(
    model: &DiscoModel,
    feature: &str,
    treatment: &str,
    outcome: &str,
    x: Value,
    t: Value,
    y: Value,
) -> Result<VerificationReport, EngineError> {
    if model.coupling() != Coupling::Disco {
        return Err(EngineError::Precondition(
            "the post-treatment identity is defined for disco coupling only; under scm the left side collapses to the observed outcome".into(),
        ));
    }
    check_value(model, treatment, &t)?;
    check_value(model, feature, &x)?;
    check_value(model, outcome, &y)?;
    require_feature_independence(model, feature, treatment, outcome)?;
    require_unconfounded(model, treatment, outcome)?;
    let slots = [Slot::new(WorldRef::Factual, treatment), Slot::new(WorldRef::Factual, outcome), Slot::new(WorldRef::Factual, feature)];
    let tables = class_tables(model, &slots)?;
    let pop = |pred: &dyn Fn(&[Value]) -> bool| {
        model.units().map(|u| model.weight(u) * tables[&model.class_of(u)].prob(pred)).fold(BigRational::zero(), |a, b| a + b)
    };
    let p_tx = pop(&|r| r[0] == t && r[2] == x);
    let p_txy = pop(&|r| r[0] == t && r[2] == x && r[1] == y);
    if p_txy.is_zero() {
        return Err(EngineError::NullEvidence(format!(
            "P({feature}={}, {treatment}={}, {outcome}={}) = 0",
            fmt_value(&x),
            fmt_value(&t),
            fmt_value(&y)
        )));
    }
    let p_y_given_tx = &p_txy / &p_tx;
    let query = Query::expectation(WorldRef::under(&[(treatment, t)]), outcome).given(vec![
        Event::factual(feature, x),
        Event::factual(treatment, t),
        Event::factual(outcome, y),
    ]);
    let lhs = Engine::new(model).evaluate(&query)?;
    let mut rhs = BigRational::zero();
    for u in model.units() {
        let table = &tables[&model.class_of(u)];
        let pt = table.prob(|r| r[0] == t);
        if pt.is_zero() {
            continue;
        }
        let py_t = table.prob(|r| r[0] == t && r[1] == y) / &pt;
        let num = expect_in(table, |r| r[0] == t && r[2] == x, |r| to_big(&r[1]));
        rhs += model.weight(u) * num * py_t;
    }
    rhs /= p_tx * p_y_given_tx;
    let mut report = VerificationReport::new("ipw-post");
    let (xs, ts, ys) = (fmt_value(&x), fmt_value(&t), fmt_value(&y));
    report_sides(
        &mut report,
        format!("E[{outcome}[{treatment}={ts}] | {feature}={xs}, {treatment}={ts}, {outcome}={ys}]"),
        &lhs,
        format!("E[{outcome}*1{{{treatment}={ts},{feature}={xs}}}/P({treatment}={ts},{feature}={xs}) * P({outcome}={ys}|{treatment}={ts};U)/P({outcome}={ys}|{treatment}={ts},{feature}={xs})]"),
        &rhs,
    );
    Ok(report)
}

/// Within every stratum of e(u) = P(T=hi|u), P(T=hi | Y^d(t)=y, e(U)=p) = p.
///
/// `hi` is the larger of the two treatment values. The report's notes also
/// give the unconditional P(T=hi | Y^d(t)=y), which in general varies with y.
pub fn check_propensity_independence(model: &DiscoModel, treatment: &str, outcome: &str, t: Value) -> Result<VerificationReport, EngineError> {
    if model.coupling() != Coupling::Disco {
        return Err(EngineError::Precondition("the propensity-independence check is defined for disco coupling".into()));
    }
    let ti = var(model, treatment)?;
    let yi = var(model, outcome)?;
    let arms = model.domain(ti);
    if arms.len() != 2 {
        return Err(EngineError::Precondition(format!("treatment `{treatment}` is not binary (domain has {} values)", arms.len())));
    }
    check_value(model, treatment, &t)?;
    let hi = arms[1];
    let slots = [Slot::new(WorldRef::Factual, treatment), Slot::new(WorldRef::under(&[(treatment, t)]), outcome)];
    let tables = class_tables(model, &slots)?;
    let e = |u: UnitId| tables[&model.class_of(u)].prob(|r| r[0] == hi);
    let strata: BTreeSet<BigRational> = model.units().map(e).collect();
    let mut report = VerificationReport::new("propensity");
    let (hs, ts) = (fmt_value(&hi), fmt_value(&t));
    for p in &strata {
        let members: Vec<UnitId> = model.units().filter(|u| &e(*u) == p).collect();
        for yv in model.domain(yi) {
            let mut joint = BigRational::zero();
            let mut marg = BigRational::zero();
            for u in &members {
                let table = &tables[&model.class_of(*u)];
                joint += model.weight(*u) * table.prob(|r| r[0] == hi && r[1] == *yv);
                marg += model.weight(*u) * table.prob(|r| r[1] == *yv);
            }
            if marg.is_zero() {
                continue;
            }
            let lhs = joint / marg;
            let ys = fmt_value(yv);
            report.check(&lhs == p, || {
                format!("stratum e={}: P({treatment}={hs} | {outcome}[{treatment}={ts}]={ys}) = {}", fmt_fraction(p), fmt_fraction(&lhs))
            });
        }
        report.notes.push(format!("stratum e={}: {} unit(s)", fmt_fraction(p), members.len()));
    }
    for yv in model.domain(yi) {
        let mut joint = BigRational::zero();
        let mut marg = BigRational::zero();
        for u in model.units() {
            let table = &tables[&model.class_of(u)];
            joint += model.weight(u) * table.prob(|r| r[0] == hi && r[1] == *yv);
            marg += model.weight(u) * table.prob(|r| r[1] == *yv);
        }
        if !marg.is_zero() {
            report.notes.push(format!(
                "unstratified: P({treatment}={hs} | {outcome}[{treatment}={ts}]={}) = {}",
                fmt_value(yv),
                fmt_fraction(&(joint / marg))
            ));
        }
    }
    Ok(report)
}

fn columns(dataset: &Dataset, names: &[&str]) -> Result<Vec<usize>, SamplingError> {
    names.iter().map(|n| dataset.column(n).ok_or_else(|| SamplingError::Dataset(format!("dataset has no column `{n}`")))).collect()
}

fn seed_of(dataset: &Dataset) -> u64 {
    match dataset.provenance {
        super::Provenance::Sampled { seed, .. } => seed,
        super::Provenance::Exact(_) => 0,
    }
}

fn unit_propensity(propensity: &Propensity, unit: UnitId, t: &Value) -> Result<f64, SamplingError> {
    let p = propensity.get(&unit).and_then(|m| m.get(t)).cloned().unwrap_or_else(BigRational::zero);
    if p.is_zero() {
        return Err(SamplingError::Dataset(format!("positivity violated: P(t|u) = 0 for unit {unit}")));
    }
    Ok(crate::rational::to_f64(&p))
}

/// Sample mean of Y·1{T=t*}/P(t*|u).
pub fn ipw_ate_estimate(
    dataset: &Dataset,
    propensity: &Propensity,
    treatment: &str,
    outcome: &str,
    t_star: Value,
) -> Result<Estimate, SamplingError> {
    let c = columns(dataset, &[treatment, outcome])?;
    let mut xs = Vec::with_capacity(dataset.len());
    for r in &dataset.records {
        let e = unit_propensity(propensity, r.unit, &t_star)?;
        let hit = r.values[c[0]] == t_star;
        xs.push(if hit { crate::rational::to_f64(&to_big(&r.values[c[1]])) / e } else { 0.0 });
    }
    mean_estimate(xs.into_iter(), seed_of(dataset)).ok_or_else(|| SamplingError::Dataset("empty dataset".into()))
}

/// Sample mean of Y·1{T=t',X=x'}/(P(t'|u)·P̂(x')), with P̂(x') the empirical frequency.
pub fn ipw_conditional_estimate(
    dataset: &Dataset,
    propensity: &Propensity,
    treatment: &str,
    outcome: &str,
    feature: &str,
    t: Value,
    x: Value,
) -> Result<Estimate, SamplingError> {
    let c = columns(dataset, &[treatment, outcome, feature])?;
    let nx = dataset.records.iter().filter(|r| r.values[c[2]] == x).count();
    if nx == 0 {
        return Err(SamplingError::Dataset(format!("no record has {feature}={}", fmt_value(&x))));
    }
    let px = nx as f64 / dataset.len() as f64;
    let mut xs = Vec::with_capacity(dataset.len());
    for r in &dataset.records {
        let e = unit_propensity(propensity, r.unit, &t)?;
        let hit = r.values[c[0]] == t && r.values[c[2]] == x;
        xs.push(if hit { crate::rational::to_f64(&to_big(&r.values[c[1]])) / (e * px) } else { 0.0 });
    }
    mean_estimate(xs.into_iter(), seed_of(dataset)).ok_or_else(|| SamplingError::Dataset("empty dataset".into()))
}

/// Sample mean of Y·1{T=t,X=x}/P̂(t,x) · P(y|t;u)/P̂(y|t,x), with `outcome_given_treatment`
/// supplying P(y|t;u) per unit.
#[allow(clippy::too_many_arguments)]
pub fn ipw_posttreatment_estimate(
    dataset: &Dataset,
    outcome_given_treatment: &BTreeMap<UnitId, BigRational>,
    feature: &str,
    treatment: &str,
    outcome: &str,
    x: Value,
    t: Value,
    y: Value,
) -> Result<Estimate, SamplingError> {
    let c = columns(dataset, &[treatment, outcome, feature])?;
    let n_tx = dataset.records.iter().filter(|r| r.values[c[0]] == t && r.values[c[2]] == x).count();
    let n_txy = dataset.records.iter().filter(|r| r.values[c[0]] == t && r.values[c[2]] == x && r.values[c[1]] == y).count();
    if n_txy == 0 {
        return Err(SamplingError::Dataset("no record matches the conditioning values".into()));
    }
    let p_tx = n_tx as f64 / dataset.len() as f64;
    let p_y = n_txy as f64 / n_tx as f64;
    let xs = dataset.records.iter().map(|r| {
        if r.values[c[0]] == t && r.values[c[2]] == x {
            let w = outcome_given_treatment.get(&r.unit).map(crate::rational::to_f64).unwrap_or(0.0);
            crate::rational::to_f64(&to_big(&r.values[c[1]])) / p_tx * w / p_y
        } else {
            0.0
        }
    });
    mean_estimate(xs, seed_of(dataset)).ok_or_else(|| SamplingError::Dataset("empty dataset".into()))
}

/// P(Y=y | T=t; u) per unit (0 where P(T=t|u) = 0).
pub fn outcome_given_treatment(
    model: &DiscoModel,
    treatment: &str,
    outcome: &str,
    t: Value,
    y: Value,
) -> Result<BTreeMap<UnitId, BigRational>, EngineError> {
    let tables = class_tables(model, &[Slot::new(WorldRef::Factual, treatment), Slot::new(WorldRef::Factual, outcome)])?;
    Ok(model
        .units()
        .map(|u| {
            let table = &tables[&model.class_of(u)];
            let pt = table.prob(|r| r[0] == t);
            let v = if pt.is_zero() { BigRational::zero() } else { table.prob(|r| r[0] == t && r[1] == y) / pt };
            (u, v)
        })
        .collect())
}
