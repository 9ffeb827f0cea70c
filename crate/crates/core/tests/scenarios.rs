use std::path::Path;

use discoscm::exact::Engine;
use discoscm::query::Query;
use discoscm::rational::{frac, int};
use discoscm::scenario::{builtin, exact_table_dataset, load_from_dir, load_model, save_model, shipped_dir, BUILTIN_NAMES};

#[test]
fn shipped_files_match_builtins() {
    let dir = shipped_dir();
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        if std::env::var_os("DISCO_BLESS").is_some() {
            s.write_files(&dir).unwrap();
        }
        if let Some(text) = s.model_text() {
            let shipped = std::fs::read_to_string(dir.join(format!("{name}.dscm"))).unwrap();
            assert_eq!(shipped, text, "{name}.dscm is stale");
        }
        let shipped = std::fs::read_to_string(dir.join(format!("{name}.expected.json"))).unwrap();
        assert_eq!(shipped, s.expected_json(), "{name}.expected.json is stale");
    }
}

#[test]
fn shipped_tables_pass_from_files() {
    for name in BUILTIN_NAMES {
        let s = load_from_dir(&shipped_dir(), name).unwrap().unwrap();
        assert_eq!(s.expected, builtin(name).unwrap().expected);
        for c in s.check_expected() {
            assert!(c.passed(), "{name}: {} got {:?}", c.expected, c.actual);
        }
    }
}

#[test]
fn save_then_load_keeps_valuations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.dscm");
    let original = builtin("paper200").unwrap().model.unwrap();
    save_model(&original, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    for q in ["P(Y[T=-1]=-1)", "P(Y[]=-1 | T=-1)", "P(Y[T=-1]=-1 | T=-1, Y=-1)", "E[Y[T=1] ; group=S]"] {
        let q = Query::parse(q).unwrap();
        assert_eq!(Engine::new(&original).evaluate(&q).unwrap(), Engine::new(&loaded).evaluate(&q).unwrap());
    }
}

#[test]
fn malformed_and_cyclic_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dscm");
    std::fs::write(&bad, "[units]\ncount: 1\ngroup G: 1..1\n\n[noise E]\npmf: 0:1/2 1:1/3\n").unwrap();
    let err = load_model(&bad).unwrap_err().to_string();
    assert!(err.contains("pmf not normalized"), "{err}");

    let cyc = dir.path().join("cyc.dscm");
    std::fs::write(
        &cyc,
        "[units]\ncount: 1\ngroup G: 1..1\n\n[var A]\ndomain: 0 1\n\n[var B]\ndomain: 0 1\n\n[eq A]\nparents: B\n*: B\n\n[eq B]\nparents: A\n*: A\n",
    )
    .unwrap();
    let err = load_model(&cyc).unwrap_err().to_string();
    assert!(err.contains("cyclic dependency"), "{err}");
}

#[test]
fn table1_matches_cell_for_cell() {
    let d = exact_table_dataset("paper200-table1").unwrap();
    let cells = [(-1, 0, 25), (-1, -1, 45), (-1, -2, 80), (1, 1, 25), (1, 2, 25)];
    for (t, y, n) in cells {
        assert_eq!(d.count(&[("T", int(t)), ("Y", int(y))]), n, "cell T={t}, Y={y}");
    }
    assert_eq!(d.records.len(), 200);
    let s_rows = d.records.iter().filter(|r| r.unit.0 <= 100).count();
    assert_eq!(s_rows, 100);
    assert_eq!(d.conditional_frequency(&[("Y", int(-1))], &[("T", int(-1))]), Some(frac(3, 10)));
}

#[test]
fn unknown_scenario() {
    assert!(builtin("paper300").unwrap_err().to_string().contains("paper300"));
    assert!(load_from_dir(Path::new("/nonexistent"), "paper200").unwrap().is_none());
}
