//! Exact dual-mode identity checks.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::{Engine, EngineError, JointTable, Slot};
use crate::model::{Coupling, DiscoModel, Intervention, ModelSpec, NoiseLaw, UnitId};
use crate::pmf::FinitePmf;
use crate::query::{Event, WorldRef};
use crate::rational::{fmt_fraction, fmt_value, Value};
use crate::report::VerificationReport;

/// Source of joint tables; the harness compares two calls of it.
pub trait Evaluator: Sync {
    fn joint(&self, model: &DiscoModel, unit: UnitId, slots: &[Slot]) -> Result<JointTable, EngineError>;
}

pub struct ExactEvaluator;

impl Evaluator for ExactEvaluator {
    fn joint(&self, model: &DiscoModel, unit: UnitId, slots: &[Slot]) -> Result<JointTable, EngineError> {
        Engine::new(model).joint(unit, slots)
    }
}

/// One representative unit per behavioural class.
fn representatives(model: &DiscoModel) -> Vec<UnitId> {
    model.classes().iter().map(|c| c.members[0]).collect()
}

/// Factual, `do()`, and every single-variable intervention.
fn all_worlds(model: &DiscoModel) -> Vec<WorldRef> {
    let mut out = vec![WorldRef::Factual, WorldRef::empty_intervention()];
    for v in model.variables() {
        for c in &v.domain {
            out.push(WorldRef::Counterfactual([(v.name.clone(), *c)].into()));
        }
    }
    out
}

fn world_slots(model: &DiscoModel, world: &WorldRef) -> Vec<Slot> {
    model.variables().iter().map(|v| Slot::new(world.clone(), &v.name)).collect()
}

fn as_map(t: &JointTable) -> BTreeMap<Vec<Value>, BigRational> {
    let mut out = BTreeMap::new();
    for (r, p) in &t.rows {
        if !p.is_zero() {
            *out.entry(r.clone()).or_insert_with(BigRational::zero) += p;
        }
    }
    out
}

fn compare(report: &mut VerificationReport, what: String, a: &JointTable, b: &JointTable) {
    let (ma, mb) = (as_map(a), as_map(b));
    report.check(ma == mb, || {
        let diff = ma
            .iter()
            .find(|(k, v)| mb.get(*k) != Some(v))
            .map(|(k, v)| (k.clone(), v.clone(), mb.get(k).cloned().unwrap_or_else(BigRational::zero)))
            .or_else(|| mb.iter().find(|(k, _)| !ma.contains_key(*k)).map(|(k, v)| (k.clone(), BigRational::zero(), v.clone())));
        match diff {
            Some((row, x, y)) => {
                let cells: Vec<String> = row.iter().map(fmt_value).collect();
                format!("{what}: row ({}) has disco {} vs scm {}", cells.join(", "), fmt_fraction(&x), fmt_fraction(&y))
            }
            None => what,
        }
    });
}

/// Single-world laws (factual and every single intervention) agree between couplings.
pub fn verify_layer12_equivalence(model: &DiscoModel) -> Result<VerificationReport, EngineError> {
    verify_layer12_equivalence_with(model, &ExactEvaluator)
}

pub fn verify_layer12_equivalence_with(model: &DiscoModel, eval: &dyn Evaluator) -> Result<VerificationReport, EngineError> {
    let disco = model.with_coupling(Coupling::Disco);
    let scm = model.with_coupling(Coupling::Scm);
    let mut report = VerificationReport::new("layer12");
    for unit in representatives(model) {
        for world in all_worlds(model) {
            let slots = world_slots(model, &world);
            let a = eval.joint(&disco, unit, &slots)?;
            let b = eval.joint(&scm, unit, &slots)?;
            compare(&mut report, format!("unit {unit}, world {}", world_label(&world)), &a, &b);
        }
    }
    Ok(report)
}

fn world_label(w: &WorldRef) -> String {
    match w {
        WorldRef::Factual => "factual".to_string(),
        other => format!("{other}"),
    }
}

/// Copy of `spec` with every noise replaced by a point mass at its mode.
pub fn collapse_noises_to_mode(spec: &ModelSpec) -> ModelSpec {
    let mut out = spec.clone();
    for noise in &mut out.noises {
        let collapse = |p: &FinitePmf| FinitePmf::point(p.mode().expect("non-empty pmf"));
        noise.law = match &noise.law {
            NoiseLaw::Shared(p) => NoiseLaw::Shared(collapse(p)),
            NoiseLaw::ByGroup(laws) => NoiseLaw::ByGroup(laws.iter().map(|(g, p)| (g.clone(), collapse(p))).collect()),
        };
    }
    out
}

/// With point-mass noise, every multi-world joint agrees between couplings.
pub fn verify_degenerate_l3_equivalence(model: &DiscoModel) -> Result<VerificationReport, EngineError> {
    verify_degenerate_l3_equivalence_with(model, &ExactEvaluator)
}

pub fn verify_degenerate_l3_equivalence_with(model: &DiscoModel, eval: &dyn Evaluator) -> Result<VerificationReport, EngineError> {
    if let Some(n) = model.noises().iter().find(|n| !n.pmf.is_point_mass()) {
        return Err(EngineError::Precondition(format!("noise `{}` is not a point mass ({}); collapse the noise first", n.name, n.pmf)));
    }
    let disco = model.with_coupling(Coupling::Disco);
    let scm = model.with_coupling(Coupling::Scm);
    let mut report = VerificationReport::new("degenerate-l3");
    let worlds = all_worlds(model);
    let slots: Vec<Slot> = worlds.iter().flat_map(|w| world_slots(model, w)).collect();
    for unit in representatives(model) {
        let a = eval.joint(&disco, unit, &slots)?;
        let b = eval.joint(&scm, unit, &slots)?;
        compare(&mut report, format!("unit {unit}, joint over {} worlds", worlds.len()), &a, &b);
    }
    Ok(report)
}

fn binary_domain(model: &DiscoModel, var: &str) -> Result<(usize, Vec<Value>), EngineError> {
    let i = model.var_index(var).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{var}`")))?;
    let d = model.domain(i).to_vec();
    if d.len() != 2 {
        return Err(EngineError::Precondition(format!("treatment `{var}` is not binary (domain has {} values)", d.len())));
    }
    Ok((i, d))
}

/// Given the unit, the treatment shares no noise with the outcome's
/// mechanism once the treatment is set.
pub fn treatment_outcome_unconfounded(model: &DiscoModel, treatment: &str, outcome: &str) -> Result<bool, EngineError> {
    let t = model.var_index(treatment).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{treatment}`")))?;
    let y = model.var_index(outcome).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{outcome}`")))?;
    let t_noise = model.relevant_noises(&[t]);
    let iv: Intervention = [(treatment.to_string(), model.domain(t)[0])].into();
    let sub = model.with_coupling(Coupling::Scm).apply_do(&iv)?;
    let y_noise = sub.relevant_noises(&[y]);
    Ok(t_noise.iter().all(|k| !y_noise.contains(k)))
}

fn require_unconfounded(model: &DiscoModel, treatment: &str, outcome: &str) -> Result<(), EngineError> {
    if treatment_outcome_unconfounded(model, treatment, outcome)? {
        Ok(())
    } else {
        Err(EngineError::Precondition(format!("`{treatment}` and `{outcome}` share exogenous noise given the unit, so the identity does not apply")))
    }
}

/// P(Y=y|u) = Σ_x P(T=x|u)·P(Y^d(x)=y|u) for a binary treatment.
pub fn verify_mixture_lemma(model: &DiscoModel, treatment: &str, outcome: &str) -> Result<VerificationReport, EngineError> {
    let (_, arms) = binary_domain(model, treatment)?;
    require_unconfounded(model, treatment, outcome)?;
    let y = model.var_index(outcome).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{outcome}`")))?;
    let engine = Engine::new(model);
    let mut report = VerificationReport::new("mixture");
    for unit in representatives(model) {
        let mut slots = vec![Slot::new(WorldRef::Factual, treatment), Slot::new(WorldRef::Factual, outcome)];
        for x in &arms {
            slots.push(Slot::new(WorldRef::under(&[(treatment, *x)]), outcome));
        }
        let table = engine.joint(unit, &slots)?;
        let pt = table.marginal(0);
        let py = table.marginal(1);
        for yv in model.domain(y) {
            let lhs = py.get(yv).cloned().unwrap_or_else(BigRational::zero);
            let mut rhs = BigRational::zero();
            for (k, x) in arms.iter().enumerate() {
                let px = pt.get(x).cloned().unwrap_or_else(BigRational::zero);
                let pyx = table.marginal(2 + k).get(yv).cloned().unwrap_or_else(BigRational::zero);
                rhs += px * pyx;
            }
            report
                .check(lhs == rhs, || format!("unit {unit}, {outcome}={}: {} vs mixture {}", fmt_value(yv), fmt_fraction(&lhs), fmt_fraction(&rhs)));
        }
    }
    Ok(report)
}

/// P(Y^d(x)=y | T=x; u) = P(Y=y | T=x; u) for every x with positive probability.
pub fn verify_individual_consistency(model: &DiscoModel, treatment: &str, outcome: &str) -> Result<VerificationReport, EngineError> {
    if model.coupling() == Coupling::Disco {
        require_unconfounded(model, treatment, outcome)?;
    }
    let t = model.var_index(treatment).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{treatment}`")))?;
    let y = model.var_index(outcome).ok_or_else(|| EngineError::Precondition(format!("unknown variable `{outcome}`")))?;
    let engine = Engine::new(model);
    let mut report = VerificationReport::new("individual-consistency");
    for unit in representatives(model) {
        let factual = engine.joint(unit, &[Slot::new(WorldRef::Factual, treatment)])?.marginal(0);
        for x in model.domain(t) {
            if factual.get(x).is_none_or(|p| p.is_zero()) {
                continue;
            }
            for yv in model.domain(y) {
                let cf = Event::counterfactual(&[(treatment, *x)], outcome, *yv);
                let lhs = engine.individual(unit, &crate::query::Target::Probability(vec![cf]), &[Event::factual(treatment, *x)])?;
                let rhs = engine.layer1(unit, &[Event::factual(outcome, *yv)], &[Event::factual(treatment, *x)])?;
                report.check(lhs == rhs, || {
                    format!(
                        "unit {unit}, {treatment}={}, {outcome}={}: {} vs {}",
                        fmt_value(x),
                        fmt_value(yv),
                        fmt_fraction(&lhs),
                        fmt_fraction(&rhs)
                    )
                });
            }
        }
    }
    Ok(report)
}
