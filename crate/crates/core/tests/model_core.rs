use std::collections::BTreeMap;

use discoscm::model::{Coupling, Intervention, ModelError, ModelSpec, StructuralEquation, UnitId};
use discoscm::pmf::{FinitePmf, PmfError};
use discoscm::rational::{frac, int, Value};
use discoscm::report::ViolationKind;
use discoscm::scenario::builtin;
use discoscm::{exact, DiscoModel, Query};

fn paper200() -> DiscoModel {
    builtin("paper200").unwrap().model().unwrap().clone()
}

fn noise(pairs: &[(&str, i64)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), int(*v))).collect()
}

fn bernoulli(p: (i64, i64)) -> FinitePmf {
    FinitePmf::new(vec![(int(0), frac(p.1 - p.0, p.1)), (int(1), frac(p.0, p.1))]).unwrap()
}

/// The two-group model written with a per-group Bernoulli noise, before any rewriting.
fn paper200_with_group_noise() -> ModelSpec {
    ModelSpec::new(200)
        .group("S", 1, 100)
        .group("Sprime", 101, 200)
        .noise("C", FinitePmf::new(vec![(int(-1), frac(1, 2)), (int(1), frac(1, 2))]).unwrap())
        .group_noise("E", vec![("S", bernoulli((1, 5))), ("Sprime", bernoulli((1, 2)))])
        .variable("T", vec![int(-1), int(1)])
        .variable("Y", (-2..=3).map(int).collect())
        .equation(StructuralEquation::new("T").noises(["C"]).when("S", "-1").when("Sprime", "C"))
        .equation(StructuralEquation::new("Y").parents(["T"]).noises(["E"]).when("S", "2 * T + E").when("Sprime", "T + E"))
}

#[test]
fn builtin_model_is_valid() {
    let report = paper200().spec().validate();
    assert!(report.is_valid(), "{report}");
    assert!(report.violations.is_empty());
}

#[test]
fn cycle_is_reported() {
    let spec = ModelSpec::new(1)
        .group("G", 1, 1)
        .variable("A", vec![int(0)])
        .variable("B", vec![int(0)])
        .equation(StructuralEquation::new("A").parents(["B"]).otherwise("B"))
        .equation(StructuralEquation::new("B").parents(["A"]).otherwise("A"));
    let report = spec.validate();
    assert!(report.has(ViolationKind::CyclicDependency));
    assert!(report.to_string().contains("cyclic dependency"));
    let err = spec.build().unwrap_err();
    assert!(err.to_string().contains("cyclic dependency"), "{err}");
}

#[test]
fn unnormalized_pmf_is_reported() {
    let pmf = FinitePmf::from_entries_unchecked(vec![(int(0), frac(1, 2)), (int(1), frac(2, 5))]);
    assert!(pmf.problems().iter().any(|p| matches!(p, PmfError::NotNormalized(_))));
    let spec = ModelSpec::new(1)
        .group("G", 1, 1)
        .noise("N", pmf)
        .variable("A", vec![int(0), int(1)])
        .equation(StructuralEquation::new("A").noises(["N"]).otherwise("N"));
    let report = spec.validate();
    assert!(report.has(ViolationKind::PmfNotNormalized));
    assert!(report.to_string().contains("pmf not normalized"));
}

#[test]
fn topological_orders() {
    assert_eq!(paper200().topological_order(), vec!["T", "Y"]);
    let reversed = ModelSpec::new(1)
        .group("G", 1, 1)
        .variable("Y", vec![int(0), int(1)])
        .variable("T", vec![int(0), int(1)])
        .equation(StructuralEquation::new("Y").parents(["T"]).otherwise("T"))
        .equation(StructuralEquation::new("T").otherwise("1"));
    assert_eq!(reversed.topological_order().unwrap(), vec!["T", "Y"]);
}

#[test]
fn solve_examples() {
    let m = paper200();
    let out = m.solve(UnitId(150), &noise(&[("C", 1), ("E", 1)])).unwrap();
    assert_eq!(out, noise(&[("T", 1), ("Y", 2)]));
    // E = 3 lies above the 1/5 threshold of group S, the rewritten form of a zero draw.
    let out = m.solve(UnitId(7), &noise(&[("C", 1), ("E", 3)])).unwrap();
    assert_eq!(out, noise(&[("T", -1), ("Y", -2)]));

    let constant = ModelSpec::new(3)
        .group("G", 1, 3)
        .noise("N", FinitePmf::uniform_range(1, 4))
        .variable("Y", vec![int(3)])
        .equation(StructuralEquation::new("Y").noises(["N"]).otherwise("3"))
        .build()
        .unwrap();
    for u in 1..=3 {
        for e in 1..=4 {
            assert_eq!(constant.solve(UnitId(u), &noise(&[("N", e)])).unwrap()["Y"], int(3));
        }
    }
}

#[test]
fn do_replaces_the_treatment_equation() {
    let m = paper200();
    let iv: Intervention = [("T".to_string(), int(1))].into();
    let sub = m.apply_do(&iv).unwrap();
    let t = sub.var_index("T").unwrap();
    let y = sub.var_index("Y").unwrap();
    assert!(sub.is_intervened(t));
    assert!(!sub.is_intervened(y));
    assert!(sub.parents_of(t).is_empty());
    assert_eq!(sub.parents_of(y), m.parents_of(y));
    for c in [-1, 1] {
        let out = sub.solve(UnitId(3), &noise(&[("C", c), ("E", 1)])).unwrap();
        assert_eq!(out, noise(&[("T", 1), ("Y", 3)]));
    }
}

#[test]
fn empty_do_keeps_equations_with_fresh_noise() {
    let m = paper200();
    let sub = m.apply_do(&Intervention::new()).unwrap();
    assert_eq!(sub.spec().equations, m.spec().equations);
    assert_eq!(sub.qualified_noise_name(m.noise_index("E").unwrap()), "E(do)");
    let scm = m.with_coupling(Coupling::Scm).apply_do(&Intervention::new()).unwrap();
    assert_eq!(scm.qualified_noise_name(m.noise_index("E").unwrap()), "E");
}

#[test]
fn do_rejects_unknown_and_out_of_domain() {
    let m = paper200();
    assert!(matches!(m.apply_do(&[("Z".to_string(), int(1))].into()), Err(ModelError::UnknownVariable(_))));
    assert!(matches!(m.apply_do(&[("T".to_string(), int(0))].into()), Err(ModelError::OutOfDomain { .. })));
}

#[test]
fn group_noise_rewrite_preserves_valuations() {
    let direct = paper200_with_group_noise().build().unwrap();
    assert!(direct.noises().iter().all(|n| n.pmf.len() > 1));
    let shipped = paper200();
    for text in
        ["P(Y=-1 | T=-1)", "P(Y[T=-1]=-1)", "P(Y[]=-1 | T=-1)", "P(Y[T=-1]=-1 | T=-1, Y=-1)", "P(Y[T=1]=3, Y[T=-1]=-1 ; group=S)", "E[Y[T=1]]"]
    {
        let q = Query::parse(text).unwrap();
        let a = exact::evaluate(&direct, &q).unwrap();
        let b = exact::evaluate(&shipped, &q).unwrap();
        assert_eq!(a, b, "{text}");
    }
}

#[test]
fn group_noise_becomes_unit_independent() {
    let m = paper200_with_group_noise().build().unwrap();
    let e = &m.noises()[m.noise_index("E").unwrap()];
    let first = e.pmf.entries()[0].1.clone();
    assert!(e.pmf.entries().iter().all(|(_, p)| *p == first));
    assert_eq!(e.pmf.len(), 10);
}
