use discoscm::model::UnitId;
use discoscm::query::{validate_query, Event, Target, UnitRef, WorldRef};
use discoscm::rational::int;
use discoscm::report::ViolationKind;
use discoscm::scenario::builtin;
use discoscm::{DiscoModel, Query};

fn paper200() -> DiscoModel {
    builtin("paper200").unwrap().model().unwrap().clone()
}

#[test]
fn conditional_counterfactual_maps_to_target_and_evidence() {
    let q = Query::parse("P(Y[T=-1]=-1 | T=-1, Y=-1)").unwrap();
    let want = Query::probability(vec![Event::counterfactual(&[("T", int(-1))], "Y", int(-1))])
        .given(vec![Event::factual("T", int(-1)), Event::factual("Y", int(-1))]);
    assert_eq!(q, want);
}

#[test]
fn empty_brackets_name_the_fresh_noise_world() {
    let q = Query::parse("P(Y[]=-1 | T=-1)").unwrap();
    let Target::Probability(events) = &q.target else { panic!("expected a probability") };
    assert_eq!(events[0].world, WorldRef::empty_intervention());
    assert!(!events[0].world.is_factual());
    assert_eq!(q.worlds(), vec![WorldRef::Factual, WorldRef::empty_intervention()]);
}

#[test]
fn two_world_joint_with_group() {
    let q = Query::parse("P(Y[T=1]=1, Y[T=-1]=-1 ; group=Sprime)").unwrap();
    let Target::Probability(events) = &q.target else { panic!("expected a probability") };
    assert_eq!(events.len(), 2);
    assert_ne!(events[0].world, events[1].world);
    assert_eq!(q.unit, Some(UnitRef::Group("Sprime".into())));
    let unit = Query::parse("P(Y=1 ; unit=12)").unwrap();
    assert_eq!(unit.unit, Some(UnitRef::Unit(UnitId(12))));
}

#[test]
fn expectation_and_value_sets() {
    let q = Query::parse("E[Y[T=1] | T=-1]").unwrap();
    assert_eq!(q, Query::expectation(WorldRef::under(&[("T", int(1))]), "Y").given(vec![Event::factual("T", int(-1))]));
    let q = Query::parse("P(Y in {-2, -1})").unwrap();
    let Target::Probability(events) = &q.target else { panic!("expected a probability") };
    assert_eq!(events[0].values.len(), 2);
}

#[test]
fn display_reparses_to_the_same_query() {
    for text in
        ["P(Y[T=-1]=-1 | T=-1, Y=-1)", "P(Y[]=-1 | T=-1)", "P(Y[T=1]=1, Y[T=-1]=-1 ; group=Sprime)", "E[Y[T=1] ; unit=3]", "P(Y in {-2, 3} | T=1)"]
    {
        let q = Query::parse(text).unwrap();
        let again = Query::parse(&q.to_string()).unwrap();
        assert_eq!(again.to_string(), q.to_string(), "{text}");
        assert_eq!(again.evidence.len(), q.evidence.len());
        assert_eq!(again.unit, q.unit);
        assert_eq!(again.worlds(), q.worlds());
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let err = Query::parse("P(Y[T=-1]=-1 | T=").unwrap_err();
    assert_eq!(err.line, 1);
    assert!(err.column > 1);
    assert!(Query::parse("P(Y=1").is_err());
    assert!(Query::parse("Q(Y=1)").is_err());
}

#[test]
fn validation_against_the_model() {
    let m = paper200();
    let ok = Query::parse("P(Y[T=-1]=-1 | T=-1, Y=-1)").unwrap();
    assert!(validate_query(&ok, &m).is_valid());

    let unknown = Query::parse("P(Z=1)").unwrap();
    let report = validate_query(&unknown, &m);
    assert!(report.has(ViolationKind::Query));
    assert!(report.to_string().contains("Z"), "{report}");

    let outside = Query::parse("P(Y=7 | T=-1)").unwrap();
    let report = validate_query(&outside, &m);
    assert!(!report.is_valid());
    assert!(report.to_string().contains('7'), "{report}");

    let bad_group = Query::parse("P(Y=1 ; group=Nowhere)").unwrap();
    assert!(!validate_query(&bad_group, &m).is_valid());
}
