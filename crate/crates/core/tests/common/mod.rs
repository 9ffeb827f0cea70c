//! Random model generators and a brute-force counterfactual oracle that
//! shares nothing with the exact engine beyond `apply_do` and `solve`.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use discoscm::model::{Coupling, DiscoModel, Intervention, ModelSpec, StructuralEquation, UnitId};
use discoscm::pmf::FinitePmf;
use discoscm::query::{Event, Query, Target, UnitRef, WorldRef};
use discoscm::rational::{int, to_big, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Random pmf on `0..k` with positive integer weights.
pub fn random_pmf(r: &mut ChaCha8Rng, k: usize) -> FinitePmf {
    let w: Vec<i64> = (0..k).map(|_| r.random_range(1..=4)).collect();
    let total: i64 = w.iter().sum();
    FinitePmf::new(w.iter().enumerate().map(|(i, x)| (int(i as i64), q(*x, total))).collect()).unwrap()
}

/// `if A == 0 && N == 1 then 2 else if ... else v` over every combination.
pub fn table_body(r: &mut ChaCha8Rng, inputs: &[(String, usize)], out_domain: usize) -> String {
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for (_, k) in inputs {
        combos = combos.into_iter().flat_map(|c| (0..*k).map(move |v| [c.clone(), vec![v]].concat())).collect();
    }
    let outs: Vec<usize> = combos.iter().map(|_| r.random_range(0..out_domain)).collect();
    let mut body = outs[outs.len() - 1].to_string();
    for (c, o) in combos.iter().zip(&outs).rev().skip(1) {
        let cond: Vec<String> = inputs.iter().zip(c).map(|((n, _), v)| format!("{n} == {v}")).collect();
        body = format!("if {} then {o} else {body}", cond.join(" && "));
    }
    body
}

fn population(r: &mut ChaCha8Rng, spec: ModelSpec, units: u32) -> (ModelSpec, Vec<String>) {
    let mut spec = spec;
    let groups = if units >= 2 && r.random_bool(0.6) {
        let cut = r.random_range(1..units);
        spec = spec.group("G1", 1, cut).group("G2", cut + 1, units);
        vec!["G1".to_string(), "G2".to_string()]
    } else {
        spec = spec.group("G1", 1, units);
        vec!["G1".to_string()]
    };
    if r.random_bool(0.5) {
        let w: Vec<i64> = (0..units).map(|_| r.random_range(1..=3)).collect();
        let total: i64 = w.iter().sum();
        spec = spec.weights(w.iter().map(|x| q(*x, total)).collect());
    }
    (spec, groups)
}

fn equation(
    r: &mut ChaCha8Rng,
    target: &str,
    parents: &[(String, usize)],
    noise: Option<(String, usize)>,
    groups: &[String],
    domain: usize,
) -> StructuralEquation {
    let mut inputs: Vec<(String, usize)> = parents.to_vec();
    if let Some(n) = &noise {
        inputs.push(n.clone());
    }
    let mut eq = StructuralEquation::new(target).parents(parents.iter().map(|p| p.0.clone())).noises(noise.iter().map(|n| n.0.clone()));
    if groups.len() > 1 && r.random_bool(0.7) {
        for g in groups {
            eq = eq.when(g, &table_body(r, &inputs, domain));
        }
    } else {
        eq = eq.otherwise(&table_body(r, &inputs, domain));
    }
    eq
}

/// Up to 4 variables, 6 units, 8 values per noise; arbitrary DAG.
pub fn random_model(seed: u64) -> DiscoModel {
    let mut r = rng(seed);
    let units = r.random_range(1..=6);
    let (mut spec, groups) = population(&mut r, ModelSpec::new(units), units);
    let nvars = r.random_range(2..=4);
    let mut vars: Vec<(String, usize)> = Vec::new();
    let mut noise_id = 0;
    // joint noise support, kept small so the oracle stays cheap
    let mut support = 1;
    for i in 0..nvars {
        let name = format!("V{i}");
        let d = r.random_range(2..=3);
        spec = spec.variable(&name, (0..d as i64).map(int).collect());
        let mut parents = vars.clone();
        parents.shuffle(&mut r);
        parents.truncate(r.random_range(0..=2.min(vars.len())));
        parents.sort();
        let room = (64 / support).min(if parents.len() == 2 { 4 } else { 8 });
        let noise = if room >= 2 && r.random_bool(0.75) {
            let k = r.random_range(2..=room);
            support *= k;
            let n = format!("N{noise_id}");
            noise_id += 1;
            spec = spec.noise(&n, random_pmf(&mut r, k));
            Some((n, k))
        } else {
            None
        };
        spec = spec.equation(equation(&mut r, &name, &parents, noise, &groups, d));
        vars.push((name, d));
    }
    let coupling = if r.random_bool(0.5) { Coupling::Disco } else { Coupling::Scm };
    spec.coupling(coupling).build().expect("generated model is valid")
}

/// Treatment-style model: feature X, binary treatment T, outcome Y, with
/// private noises. X is either unit-determined (and may feed T and Y) or
/// noisy (and feeds nothing).
pub fn random_treatment_model(seed: u64) -> DiscoModel {
    let mut r = rng(seed);
    let units = r.random_range(1..=6);
    let (mut spec, groups) = population(&mut r, ModelSpec::new(units), units);
    let dx = r.random_range(2..=3);
    let dy = r.random_range(2..=3);
    spec = spec.variable("X", (0..dx as i64).map(int).collect()).variable("T", vec![int(0), int(1)]).variable("Y", (0..dy as i64).map(int).collect());
    let x_noisy = r.random_bool(0.5);
    let x_noise = if x_noisy {
        let k = r.random_range(2..=4);
        spec = spec.noise("NX", random_pmf(&mut r, k));
        Some(("NX".to_string(), k))
    } else {
        None
    };
    spec = spec.equation(equation(&mut r, "X", &[], x_noise, &groups, dx));
    let kt = r.random_range(2..=6);
    spec = spec.noise("NT", random_pmf(&mut r, kt));
    let ky = r.random_range(2..=6);
    spec = spec.noise("NY", random_pmf(&mut r, ky));
    let x_parent = if x_noisy { vec![] } else { vec![("X".to_string(), dx)] };
    spec = spec.equation(equation(&mut r, "T", &x_parent, Some(("NT".into(), kt)), &groups, 2));
    let mut y_parents = vec![("T".to_string(), 2)];
    y_parents.extend(x_parent.iter().cloned());
    y_parents.sort();
    spec = spec.equation(equation(&mut r, "Y", &y_parents, Some(("NY".into(), ky)), &groups, dy));
    spec.build().expect("generated model is valid")
}

/// A random query over `model` with at most one intervened world.
pub fn random_query(model: &DiscoModel, seed: u64) -> Query {
    let mut r = rng(seed);
    let vars = model.variables();
    let pick = |r: &mut ChaCha8Rng| {
        let v = &vars[r.random_range(0..vars.len())];
        (v.name.clone(), v.domain[r.random_range(0..v.domain.len())])
    };
    let world = match r.random_range(0..3) {
        0 => WorldRef::Factual,
        1 => WorldRef::empty_intervention(),
        _ => {
            let (n, v) = pick(&mut r);
            WorldRef::Counterfactual([(n, v)].into())
        }
    };
    let mut evidence = Vec::new();
    for _ in 0..r.random_range(0..=2) {
        let (n, v) = pick(&mut r);
        evidence.push(Event::factual(&n, v));
    }
    let mut query = if r.random_bool(0.3) {
        let v = &vars[r.random_range(0..vars.len())];
        Query::expectation(world, &v.name)
    } else {
        let mut events = Vec::new();
        for _ in 0..r.random_range(1..=2) {
            let (n, v) = pick(&mut r);
            let w = if r.random_bool(0.7) { world.clone() } else { WorldRef::Factual };
            events.push(Event::new(w, &n, [v]));
        }
        Query::probability(events)
    };
    query = query.given(evidence);
    if r.random_bool(0.3) {
        let u = r.random_range(1..=model.unit_count());
        query = query.for_unit(UnitId(u));
    } else if r.random_bool(0.2) {
        let g = model.groups()[r.random_range(0..model.groups().len())].name.clone();
        query = query.for_group(&g);
    }
    query
}

/// Every joint assignment of the model's noises with its probability.
pub fn noise_assignments(model: &DiscoModel) -> Vec<(BTreeMap<String, Value>, BigRational)> {
    let mut out = vec![(BTreeMap::new(), q(1, 1))];
    for n in model.noises() {
        let mut next = Vec::new();
        for (a, p) in &out {
            for (v, pv) in n.pmf.entries() {
                let mut a2: BTreeMap<String, Value> = a.clone();
                a2.insert(n.name.clone(), *v);
                next.push((a2, p * pv));
            }
        }
        out = next;
    }
    out
}

/// Ground-truth value by enumerating unit × factual noise × one noise copy
/// per counterfactual world (disco) or the factual copy everywhere (scm).
/// `None` when the evidence has probability zero.
pub fn oracle(model: &DiscoModel, query: &Query) -> Option<BigRational> {
    let mut worlds: Vec<WorldRef> = Vec::new();
    let mut see = |w: &WorldRef| {
        if !w.is_factual() && !worlds.contains(w) {
            worlds.push(w.clone());
        }
    };
    match &query.target {
        Target::Probability(es) => es.iter().for_each(|e| see(&e.world)),
        Target::Expectation { world, .. } => see(world),
    }
    let submodels: Vec<DiscoModel> = worlds.iter().map(|w| model.apply_do(w.intervention().unwrap()).unwrap()).collect();
    let noise = noise_assignments(model);
    let units: Vec<UnitId> = model
        .units()
        .filter(|u| match &query.unit {
            None => true,
            Some(UnitRef::Unit(x)) => u == x,
            Some(UnitRef::Group(g)) => model.group_name_of(*u) == g,
        })
        .collect();
    let disco = model.coupling() == Coupling::Disco;
    let mut num = BigRational::zero();
    let mut den = BigRational::zero();
    for u in units {
        let w = model.weight(u).clone();
        for (n0, p0) in &noise {
            let factual = model.solve(u, n0).unwrap();
            if !query.evidence.iter().all(|e| e.holds(&factual[&e.var])) {
                continue;
            }
            // each counterfactual world's noise: odometer over copies
            let copies: Vec<&Vec<(BTreeMap<String, Value>, BigRational)>> = submodels.iter().map(|_| &noise).collect();
            let mut idx = vec![0usize; copies.len()];
            loop {
                let mut p = &w * p0;
                let mut vals: Vec<BTreeMap<String, Value>> = Vec::new();
                for (k, sub) in submodels.iter().enumerate() {
                    let assignment = if disco {
                        p *= &copies[k][idx[k]].1;
                        &copies[k][idx[k]].0
                    } else {
                        n0
                    };
                    vals.push(sub.solve(u, assignment).unwrap());
                }
                let value_of = |world: &WorldRef, var: &str| -> Value {
                    if world.is_factual() {
                        factual[var]
                    } else {
                        vals[worlds.iter().position(|x| x == world).unwrap()][var]
                    }
                };
                den += &p;
                match &query.target {
                    Target::Probability(es) => {
                        if es.iter().all(|e| e.holds(&value_of(&e.world, &e.var))) {
                            num += &p;
                        }
                    }
                    Target::Expectation { world, var } => num += &p * to_big(&value_of(world, var)),
                }
                if !disco {
                    break;
                }
                // advance odometer
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < copies[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
    }
    (!den.is_zero()).then(|| num / den)
}

/// Exact E[Y^d(t); u] by enumeration.
pub fn oracle_interventional_mean(model: &DiscoModel, unit: UnitId, iv: &Intervention, var: &str) -> BigRational {
    let sub = model.apply_do(iv).unwrap();
    noise_assignments(model).iter().map(|(n, p)| p * to_big(&sub.solve(unit, n).unwrap()[var])).fold(BigRational::zero(), |a, b| a + b)
}

/// Random multiple-choice instance: ≤ 12 users, ≤ 3 treatments besides control,
/// integer or half-integer costs, some arms withheld, uplifts possibly negative.
pub fn random_allocation(seed: u64) -> discoscm::optimizer::AllocationProblem {
    let mut r = rng(seed);
    let users = r.random_range(1..=12u32);
    let k = r.random_range(1..=3usize);
    let arms: Vec<Value> = (0..=k as i64).map(int).collect();
    let mut tau = BTreeMap::new();
    let mut costs = BTreeMap::new();
    for u in 1..=users {
        let unit = UnitId(u);
        let mut row = vec![BigRational::zero()];
        costs.insert((unit, arms[0]), BigRational::zero());
        for a in &arms[1..] {
            row.push(BigRational::new(BigInt::from(r.random_range(-3..=12i64)), BigInt::from(r.random_range(1..=4i64))));
            if r.random_range(0..8) > 0 {
                costs.insert((unit, *a), BigRational::new(BigInt::from(r.random_range(0..=8i64)), BigInt::from(r.random_range(1..=2i64))));
            }
        }
        tau.insert(unit, row);
    }
    let budget = BigRational::new(BigInt::from(r.random_range(0..=6 * users as i64)), BigInt::from(2));
    discoscm::optimizer::AllocationProblem::new(arms, &tau, &costs, budget).unwrap()
}

/// Best uplift over every assignment, and the least cost reaching it.
///
/// Walks all arms^users assignments depth-first on integers scaled by the
/// common denominators, so 12 users with 4 arms stay fast.
pub fn brute_force_allocation(p: &discoscm::optimizer::AllocationProblem) -> (BigRational, BigRational) {
    use num_integer::Integer;
    let lcm = |vals: &mut dyn Iterator<Item = &BigRational>| vals.fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
    let du = lcm(&mut p.users.iter().flat_map(|u| u.tau.iter()));
    let dc = lcm(&mut p.users.iter().flat_map(|u| u.cost.iter().flatten()).chain(std::iter::once(&p.budget)));
    let scale = |v: &BigRational, d: &BigInt| -> i64 {
        let s = v * BigRational::from_integer(d.clone());
        i64::try_from(s.to_integer()).unwrap()
    };
    let tau: Vec<Vec<i64>> = p.users.iter().map(|u| u.tau.iter().map(|t| scale(t, &du)).collect()).collect();
    let cost: Vec<Vec<Option<i64>>> = p.users.iter().map(|u| u.cost.iter().map(|c| c.as_ref().map(|c| scale(c, &dc))).collect()).collect();
    let budget = scale(&p.budget, &dc);

    fn walk(i: usize, uplift: i64, spent: i64, tau: &[Vec<i64>], cost: &[Vec<Option<i64>>], budget: i64, best: &mut (i64, i64)) {
        if i == tau.len() {
            if spent <= budget && (uplift > best.0 || (uplift == best.0 && spent < best.1)) {
                *best = (uplift, spent);
            }
            return;
        }
        for (t, c) in tau[i].iter().zip(&cost[i]) {
            if let Some(c) = c {
                walk(i + 1, uplift + t, spent + c, tau, cost, budget, best);
            }
        }
    }
    let mut best = (i64::MIN, i64::MAX);
    walk(0, 0, 0, &tau, &cost, budget, &mut best);
    assert!(best.0 > i64::MIN, "all-control is always feasible");
    (BigRational::new(BigInt::from(best.0), du), BigRational::new(BigInt::from(best.1), dc))
}
