use num_traits::ToPrimitive;

use discoscm::model::parse_model;
use discoscm::rational::{frac, int};
use discoscm::sampling::{frequencies, mc_valuation, read_csv, sample_dataset, write_csv, Provenance, SamplingError};
use discoscm::scenario::{builtin, exact_table_dataset};
use discoscm::{exact, DiscoModel, Query};

fn paper200() -> DiscoModel {
    builtin("paper200").unwrap().model().unwrap().clone()
}

const DETERMINISTIC: &str = "\
[units]
count: 3
group G: 1..3

[noise N]
pmf: 4:1

[var X]
domain: 0..9

[var Y]
domain: 0..20

[eq X]
parents:
noises: N
*: N + 1

[eq Y]
parents: X
noises:
*: 2 * X
";

#[test]
fn same_seed_same_dataset() {
    let m = paper200();
    let a = sample_dataset(&m, 1000, 7).unwrap();
    let b = sample_dataset(&m, 1000, 7).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.provenance, Provenance::Sampled { seed: 7, n: 1000 });
    assert_ne!(a, sample_dataset(&m, 1000, 8).unwrap());
}

#[test]
fn thread_count_does_not_change_draws() {
    let m = paper200();
    let q = Query::parse("P(Y[]=-1 | T=-1)").unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (sample_dataset(&m, 30_000, 11).unwrap(), mc_valuation(&m, &q, 30_000, 11).unwrap()))
    };
    let (d1, e1) = run(1);
    let (d4, e4) = run(4);
    assert_eq!(d1, d4);
    assert_eq!(e1.point.to_bits(), e4.point.to_bits());
    assert_eq!(e1.stderr.to_bits(), e4.stderr.to_bits());
}

#[test]
fn empirical_layer1_frequency() {
    let d = sample_dataset(&paper200(), 100_000, 3).unwrap();
    let n = d.count(&[("T", int(-1))]) as f64;
    let p = d.count(&[("T", int(-1)), ("Y", int(-1))]) as f64 / n;
    let se = (0.3 * 0.7 / n).sqrt();
    assert!((p - 0.3).abs() <= 4.0 * se, "{p}");
}

#[test]
fn point_mass_noise_repeats_per_unit() {
    let m = parse_model(DETERMINISTIC).unwrap().build().unwrap();
    let d = sample_dataset(&m, 500, 1).unwrap();
    assert!(d.records.iter().all(|r| r.values == vec![int(5), int(10)]));
    let e = mc_valuation(&m, &Query::parse("E[Y[X=3]]").unwrap(), 1000, 5).unwrap();
    assert_eq!(e.stderr, 0.0);
    assert_eq!(e.point, 6.0);
}

#[test]
fn table1_dataset() {
    let d = exact_table_dataset("paper200-table1").unwrap();
    assert_eq!(d.len(), 200);
    assert_eq!(d.count(&[("T", int(-1)), ("Y", int(-1))]), 45);
    assert_eq!(d.conditional_frequency(&[("Y", int(-1))], &[("T", int(-1))]), Some(frac(3, 10)));
    assert!(matches!(d.provenance, Provenance::Exact(_)));
    d.check_against(&paper200()).unwrap();
    let t = frequencies(&d, "T");
    assert_eq!(t[&int(-1)], 150);
    assert_eq!(t[&int(1)], 50);
}

#[test]
fn mc_matches_exact_values() {
    let m = paper200();
    for (text, seed) in [("P(Y[T=-1]=-1)", 1), ("P(Y[]=-1 | T=-1)", 2), ("E[Y[T=1] ; group=Sprime]", 3)] {
        let q = Query::parse(text).unwrap();
        let exact = exact::evaluate(&m, &q).unwrap().to_f64().unwrap();
        let est = mc_valuation(&m, &q, 100_000, seed).unwrap();
        assert!(est.within(exact, 4.0), "{text}: {est:?} vs {exact}");
        assert_eq!(est.seed, seed);
    }
}

#[test]
fn impossible_evidence_points_to_the_exact_engine() {
    let m = paper200();
    let q = Query::parse("P(Y=1 | T=-1, Y=3)").unwrap();
    let err = mc_valuation(&m, &q, 2_000, 4).unwrap_err();
    assert!(matches!(err, SamplingError::NoAcceptedSamples { proposals: 2_000 }));
    assert!(err.to_string().contains("exact engine"));
    assert!(matches!(mc_valuation(&m, &q, 0, 4), Err(SamplingError::EmptyRun)));
}

#[test]
fn csv_round_trip() {
    let d = sample_dataset(&paper200(), 250, 9).unwrap();
    let mut buf = Vec::new();
    write_csv(&d, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("unit,T,Y\n"));
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.variables, d.variables);
    assert_eq!(back.records, d.records);
}

#[test]
fn sampled_records_respect_the_model() {
    let m = paper200();
    let d = sample_dataset(&m, 5_000, 21).unwrap();
    d.check_against(&m).unwrap();
    for r in &d.records {
        if m.group_name_of(r.unit) == "S" {
            assert_eq!(r.values[0], int(-1));
        }
    }
}
