//! Acceptance run: one line per criterion, nonzero exit on any failure.
//!
//! Wall-clock limits assume the optimized test profile set in the workspace
//! manifest.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use discoscm::exact::{
    collapse_noises_to_mode, verify_degenerate_l3_equivalence, verify_individual_consistency, verify_layer12_equivalence, verify_mixture_lemma,
};
use discoscm::model::{Coupling, Intervention};
use discoscm::optimizer::{allocate_exact, allocate_greedy};
use discoscm::query::Query;
use discoscm::rational::{frac, int, Value};
use discoscm::sampling::{ipw, mc_valuation};
use discoscm::scenario::{builtin, LinearGaussian, SCENARIO_DIR_VAR};
use discoscm::{DiscoModel, Engine, EngineError};

type Outcome = Result<String, String>;

struct Criterion {
    title: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { title: "headline exact values", limit: Duration::from_secs(1), run: table1 },
    Criterion { title: "consistency contrast", limit: Duration::from_secs(1), run: consistency_contrast },
    Criterion { title: "individual effects", limit: Duration::from_secs(1), run: individual_effects },
    Criterion { title: "probability of consistency", limit: Duration::from_secs(1), run: probability_of_consistency },
    Criterion { title: "identity suites on random models", limit: Duration::from_secs(60), run: identity_suites },
    Criterion { title: "surrogate effects", limit: Duration::from_secs(1), run: surrogate },
    Criterion { title: "monte-carlo calibration", limit: Duration::from_secs(300), run: mc_calibration },
    Criterion { title: "linear-gaussian means", limit: Duration::from_secs(10), run: linear_gaussian },
    Criterion { title: "optimizer against brute force", limit: Duration::from_secs(30), run: optimizer_oracle },
    Criterion { title: "reproducibility", limit: Duration::from_secs(60), run: reproducibility },
];

const TABLE1: [(&str, i64, i64); 4] =
    [("P(Y=-1 | T=-1)", 3, 10), ("P(Y[T=-1]=-1)", 7, 20), ("P(Y[]=-1 | T=-1)", 13, 60), ("P(Y[T=-1]=-1 | T=-1, Y=-1)", 11, 30)];

fn main() {
    std::env::remove_var(SCENARIO_DIR_VAR);
    std::env::remove_var(discoscm::cli::FAULT_VAR);
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| Err(panic_text(p)));
        let took = start.elapsed();
        let result =
            result.and_then(|detail| if took > c.limit { Err(format!("{detail}; over the {}s limit", c.limit.as_secs())) } else { Ok(detail) });
        let secs = took.as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2}: PASS  {} ({secs:.2}s): {detail}", i + 1, c.title),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2}: FAIL  {} ({secs:.2}s): {why}", i + 1, c.title);
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
    format!("panicked: {}", msg.unwrap_or_default())
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn scenario(name: &str) -> DiscoModel {
    builtin(name).unwrap().model().unwrap().clone()
}

fn eval(m: &DiscoModel, text: &str) -> Result<BigRational, EngineError> {
    Engine::new(m).evaluate(&Query::parse(text).unwrap())
}

fn table1() -> Outcome {
    let m = scenario("paper200");
    let mut got = Vec::new();
    for (text, n, d) in TABLE1 {
        let v = eval(&m, text).map_err(|e| format!("{text}: {e}"))?;
        ensure(v == frac(n, d), || format!("{text} = {v}, want {n}/{d}"))?;
        got.push(v.to_string());
    }
    Ok(got.join(", "))
}

fn consistency_contrast() -> Outcome {
    let disco = scenario("paper200");
    let scm = disco.with_coupling(Coupling::Scm);
    let (text, ..) = TABLE1[3];
    let v = eval(&scm, text).map_err(|e| e.to_string())?;
    ensure(v.is_one(), || format!("scm {text} = {v}"))?;

    let mut compared = 0;
    for t in [-1, 1] {
        for y in -2..=3 {
            for q in [format!("P(Y={y} | T={t})"), format!("P(Y[T={t}]={y})"), format!("P(T={t}, Y={y})")] {
                match (eval(&disco, &q), eval(&scm, &q)) {
                    (Ok(a), Ok(b)) => ensure(a == b, || format!("{q}: disco {a}, scm {b}"))?,
                    (Err(EngineError::NullEvidence(_)), Err(EngineError::NullEvidence(_))) => {}
                    (a, b) => return Err(format!("{q}: {a:?} vs {b:?}")),
                }
                compared += 1;
            }
        }
    }
    let report = verify_layer12_equivalence(&disco).map_err(|e| e.to_string())?;
    ensure(report.passed(), || format!("{report}"))?;
    Ok(format!("scm gives 1; {compared} queries and {} per-unit laws agree", report.checked))
}

fn individual_effects() -> Outcome {
    let m = scenario("paper200");
    let e = Engine::new(&m);
    for u in m.units() {
        let want = if m.group_name_of(u) == "S" { 4 } else { 2 };
        let got = e.ite(u, "T", int(1), int(-1), "Y").map_err(|e| e.to_string())?;
        ensure(got == frac(want, 1), || format!("unit {u}: ite {got}, want {want}"))?;
    }
    Ok(format!("{} units: 4 on S, 2 on S'", m.unit_count()))
}

fn probability_of_consistency() -> Outcome {
    let m = scenario("incentive");
    let scm = m.with_coupling(Coupling::Scm);
    let mut counts = [0; 3];
    for u in m.units() {
        let s = m.solve(u, &[("E_T".to_string(), int(1)), ("E_Y".to_string(), int(1))].into()).unwrap()["S"];
        for t in [0, 1] {
            let text = format!("P(T[S={s}]={t} | S={s}, T={t} ; unit={u})");
            let v = match eval(&m, &text) {
                Ok(v) => v,
                Err(EngineError::NullEvidence(_)) if m.group_name_of(u) == "pure" => continue,
                Err(e) => return Err(format!("{text}: {e}")),
            };
            let (slot, ok) = match m.group_name_of(u) {
                "random" => (0, v == frac(1, 2)),
                "pure" => (1, v.is_one()),
                _ => (2, v > BigRational::zero() && v < BigRational::one()),
            };
            ensure(ok, || format!("{text} = {v}"))?;
            counts[slot] += 1;
            let c = eval(&scm, &text).map_err(|e| format!("scm {text}: {e}"))?;
            ensure(c.is_one(), || format!("scm {text} = {c}"))?;
        }
    }
    ensure(counts[2] == 22, || format!("mixed group gave {} defined (t,x) cells", counts[2]))?;
    Ok(format!("{} at 1/2, {} at 1, {} strictly inside (0,1); scm 1 throughout", counts[0], counts[1], counts[2]))
}

#[derive(Default)]
struct Tally {
    checked: usize,
    skipped: usize,
}

impl Tally {
    fn record(&mut self, name: &str, r: Result<discoscm::report::VerificationReport, EngineError>) -> Result<(), String> {
        match r {
            Ok(report) => {
                ensure(report.passed(), || format!("{name}: {report}"))?;
                self.checked += 1;
            }
            Err(EngineError::Precondition(_) | EngineError::NullEvidence(_)) => self.skipped += 1,
            Err(e) => return Err(format!("{name}: {e}")),
        }
        Ok(())
    }
}

fn identity_suites() -> Outcome {
    const MODELS: u64 = 200;
    let names = ["layer12", "degenerate-l3", "mixture", "consistency", "propensity", "ipw-ate", "ipw-cond", "ipw-post"];
    let mut tallies: Vec<Tally> = names.iter().map(|_| Tally::default()).collect();
    let mut queries = 0;
    for seed in 0..MODELS {
        let m = common::random_model(seed);
        for q in 0..4 {
            let query = common::random_query(&m, seed * 31 + q);
            let want = common::oracle(&m, &query);
            match Engine::new(&m).evaluate(&query) {
                Ok(v) => ensure(Some(&v) == want.as_ref(), || format!("model {seed}, {query}: {v} vs {want:?}"))?,
                Err(EngineError::NullEvidence(_)) => ensure(want.is_none(), || format!("model {seed}, {query}: null vs {want:?}"))?,
                Err(e) => return Err(format!("model {seed}, {query}: {e}")),
            }
            queries += 1;
        }
        tallies[0].record("layer12", verify_layer12_equivalence(&m))?;
        let collapsed = collapse_noises_to_mode(m.spec()).build().map_err(|e| e.to_string())?;
        tallies[1].record("degenerate-l3", verify_degenerate_l3_equivalence(&collapsed))?;

        let tm = common::random_treatment_model(seed).with_coupling(Coupling::Disco);
        tallies[2].record("mixture", verify_mixture_lemma(&tm, "T", "Y"))?;
        tallies[3].record("consistency", verify_individual_consistency(&tm, "T", "Y"))?;
        let xs: Vec<Value> = tm.domain(tm.var_index("X").unwrap()).to_vec();
        let ys: Vec<Value> = tm.domain(tm.var_index("Y").unwrap()).to_vec();
        for t in [int(0), int(1)] {
            tallies[4].record("propensity", ipw::check_propensity_independence(&tm, "T", "Y", t))?;
            tallies[5].record("ipw-ate", ipw::ipw_ate_check(&tm, "T", "Y", t))?;
            for &x in &xs {
                tallies[6].record("ipw-cond", ipw::ipw_conditional_check(&tm, "T", "Y", "X", t, x))?;
                for &y in &ys {
                    tallies[7].record("ipw-post", ipw::ipw_posttreatment_check(&tm, "X", "T", "Y", x, t, y))?;
                }
            }
        }
    }
    for (name, t) in names.iter().zip(&tallies) {
        ensure(t.checked > 0, || format!("{name}: no instance passed its preconditions"))?;
    }
    let parts: Vec<String> = names.iter().zip(&tallies).map(|(n, t)| format!("{n} {}/{}", t.checked, t.checked + t.skipped)).collect();
    Ok(format!("{MODELS} models, {queries} oracle queries, 0 violations; checked {}", parts.join(", ")))
}

fn surrogate() -> Outcome {
    let m = scenario("surrogate");
    let e = Engine::new(&m);
    let mut got = Vec::new();
    for (cause, effect, n, d) in [("T", "S", 1, 2), ("S", "Y", 1, 2), ("T", "Y", 0, 1)] {
        let engine = e.cate(|_| true, cause, int(1), int(0), effect).map_err(|e| e.to_string())?;
        let do1: Intervention = [(cause.to_string(), int(1))].into();
        let do0: Intervention = [(cause.to_string(), int(0))].into();
        let brute = m
            .units()
            .map(|u| {
                (common::oracle_interventional_mean(&m, u, &do1, effect) - common::oracle_interventional_mean(&m, u, &do0, effect)) * m.weight(u)
            })
            .fold(BigRational::zero(), |a, b| a + b);
        ensure(engine == brute, || format!("{cause}->{effect}: engine {engine}, enumeration {brute}"))?;
        ensure(engine == frac(n, d), || format!("{cause}->{effect}: {engine}, want {n}/{d}"))?;
        got.push(format!("{cause}->{effect} {engine}"));
    }
    Ok(got.join(", "))
}

fn mc_calibration() -> Outcome {
    const SEEDS: u64 = 100;
    let m = scenario("paper200");
    let mut got = Vec::new();
    for (k, (text, n, d)) in TABLE1.iter().enumerate() {
        let q = Query::parse(text).unwrap();
        let exact = frac(*n, *d).to_f64().unwrap();
        let mut hits = 0;
        for s in 0..SEEDS {
            let seed = 1_000 * k as u64 + s;
            let est = mc_valuation(&m, &q, 100_000, seed).map_err(|e| format!("{text}, seed {seed}: {e}"))?;
            hits += est.within(exact, 4.0) as u32;
        }
        ensure(hits >= 95, || format!("{text}: only {hits}/{SEEDS} within 4 stderr"))?;
        got.push(format!("{hits}/{SEEDS}"));
    }
    Ok(format!("within 4 stderr: {}", got.join(", ")))
}

fn linear_gaussian() -> Outcome {
    let lg = LinearGaussian::default();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (i, &u) in lg.units.iter().enumerate() {
        for (j, x) in [-1.5, 0.0, 2.0].into_iter().enumerate() {
            let est = lg.mc_interventional_mean(u, x, 100_000, (10 * i + j) as u64).map_err(|e| e.to_string())?;
            let z = (est.point - (x + u)).abs() / est.stderr;
            ensure(est.within(x + u, 4.0), || format!("u={u}, x={x}: {} vs {} (z={z:.2})", est.point, x + u))?;
            worst = worst.max(z);
            checked += 1;
        }
    }
    Ok(format!("{checked} (u,x) pairs, largest |z| {worst:.2}"))
}

fn optimizer_oracle() -> Outcome {
    let mut gaps = 0;
    for seed in 0..100 {
        let p = common::random_allocation(seed);
        let (best, _) = common::brute_force_allocation(&p);
        let e = allocate_exact(&p).map_err(|e| format!("instance {seed}: {e}"))?;
        ensure(e.expected_uplift == best, || format!("instance {seed}: exact {} vs brute force {best}", e.expected_uplift))?;
        ensure(p.is_feasible(&e), || format!("instance {seed}: exact policy over budget"))?;
        let g = allocate_greedy(&p);
        ensure(p.is_feasible(&g), || format!("instance {seed}: greedy over budget"))?;
        ensure(g.expected_uplift <= e.expected_uplift, || {
            format!("instance {seed}: greedy {} beats exact {}", g.expected_uplift, e.expected_uplift)
        })?;
        gaps += (g.expected_uplift < e.expected_uplift) as u32;
    }
    Ok(format!("100 instances exact; greedy feasible, strictly below exact on {gaps}"))
}

/// Runs the binary under a given rayon pool size; returns stdout plus the named output files.
fn run_disco(args: &[String], threads: usize, files: &[&Path]) -> Result<Vec<Vec<u8>>, String> {
    for f in files {
        let _ = std::fs::remove_file(f);
    }
    let out = Command::new(env!("CARGO_BIN_EXE_disco"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .env_remove(SCENARIO_DIR_VAR)
        .env_remove(discoscm::cli::FAULT_VAR)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let mut bytes = vec![out.stdout];
    for f in files {
        bytes.push(std::fs::read(f).map_err(|e| format!("{}: {e}", f.display()))?);
    }
    Ok(bytes)
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("sprime.csv");
    let out = dir.path().join("out.csv");
    let sidecar = dir.path().join("out.csv.json");
    let costs = dir.path().join("costs.csv");
    let p = |p: &Path| p.to_str().unwrap().to_string();

    let mut text = String::from("unit,treatment,cost\n");
    for u in 1..=100 {
        text.push_str(&format!("{u},1,{}\n", 1 + u % 3));
    }
    std::fs::write(&costs, text).map_err(|e| e.to_string())?;
    run_disco(&words(&format!("simulate --scenario paper200-sprime -n 40000 --seed 5 --out {}", p(&data))), 4, &[])?;

    let commands: Vec<(Vec<String>, Vec<&Path>)> = vec![
        (mc_args("P(Y[T=-1]=-1 | T=-1, Y=-1)", "table"), vec![]),
        (mc_args("P(Y[]=-1 | T=-1)", "json"), vec![]),
        (words("simulate --scenario incentive -n 30000 --seed 17"), vec![]),
        (words(&format!("simulate --scenario paper200 -n 50000 --seed 9 --out {}", p(&out))), vec![&out, &sidecar]),
        (words(&format!("estimate --scenario paper200-sprime --data {} --t 1 --format json", p(&data))), vec![]),
        (words(&format!("optimize --scenario paper200-sprime --data {} --costs {} --budget 40", p(&data), p(&costs))), vec![]),
    ];
    let mut runs = 0;
    for (args, files) in &commands {
        let reference = run_disco(args, 1, files)?;
        for threads in [1, 2, 8, 8] {
            let again = run_disco(args, threads, files)?;
            ensure(again == reference, || format!("`disco {}` differs with {threads} threads", args.join(" ")))?;
            runs += 1;
        }
    }
    Ok(format!("{} commands, {runs} reruns at 1/2/8 threads, all byte-identical", commands.len()))
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn mc_args(query: &str, format: &str) -> Vec<String> {
    let mut a = words("eval --scenario paper200 --engine mc --seed 11 -n 200000 --format");
    a.push(format.into());
    a.push("--query".into());
    a.push(query.into());
    a
}
