use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::desugar::desugar;
use super::{topo_sort, CompiledEq, DiscoModel, GroupSel, ModelError, ModelSpec, NoiseDecl, NoiseLaw, NoiseWorld, UnitClass, UnitId};
use crate::expr::{is_reserved, EvalCtx, NameRef, Resolver};
use crate::pmf::{FinitePmf, PmfError};
use crate::rational::{fmt_fraction, fmt_value, Value};
use crate::report::{ValidationReport, ViolationKind as K};

/// Words that cannot name a group because they are keys inside `[eq]` sections.
const RESERVED_GROUPS: &[&str] = &["parents", "noises"];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !is_reserved(s)
}

fn pmf_problems(report: &mut ValidationReport, what: &str, pmf: &FinitePmf) {
    for p in pmf.problems() {
        let kind = if matches!(p, PmfError::NotNormalized(_)) { K::PmfNotNormalized } else { K::Pmf };
        report.push(kind, format!("{what}: {p}"));
    }
}

pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut r = ValidationReport::default();
    check_population(spec, &mut r);
    check_declarations(spec, &mut r);
    check_equations(spec, &mut r);
    if r.is_valid() {
        if let Err(cycle) = spec.topological_order() {
            r.push(K::CyclicDependency, cycle.to_string());
        }
    }
    if r.is_valid() {
        match desugar(spec) {
            Err(msg) => r.push(K::Pmf, msg),
            Ok(plain) => {
                if let Err(bad) = assemble(plain).and_then(|m| check_totality(&m)) {
                    r.violations.extend(bad.violations);
                }
            }
        }
    }
    r
}

pub(crate) fn build(spec: ModelSpec) -> Result<DiscoModel, ModelError> {
    let report = validate_model(&spec);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report));
    }
    let plain = desugar(&spec).expect("validated");
    assemble(plain).map_err(ModelError::Invalid)
}

fn check_population(spec: &ModelSpec, r: &mut ValidationReport) {
    let pop = &spec.population;
    let n = pop.count;
    if n == 0 {
        r.push(K::Population, "population must contain at least one unit");
    }
    if pop.groups.is_empty() {
        r.push(K::Population, "population declares no groups");
    }
    let mut seen = BTreeSet::new();
    for g in &pop.groups {
        if !is_identifier(&g.name) || RESERVED_GROUPS.contains(&g.name.as_str()) {
            r.push(K::Population, format!("`{}` is not a valid group name", g.name));
        }
        if !seen.insert(g.name.as_str()) {
            r.push(K::DuplicateName, format!("group `{}` declared twice", g.name));
        }
        if g.lo < 1 || g.lo > g.hi || g.hi > n {
            r.push(K::Population, format!("group `{}` range {}..{} is not within 1..{n}", g.name, g.lo, g.hi));
        }
    }
    if n > 0 && n <= 10_000_000 {
        let mut owner: Vec<Option<&str>> = vec![None; n as usize];
        for g in &pop.groups {
            for u in g.lo.max(1)..=g.hi.min(n) {
                let slot = &mut owner[u as usize - 1];
                if let Some(prev) = slot {
                    r.push(K::Population, format!("unit {u} belongs to both `{prev}` and `{}`", g.name));
                    return;
                }
                *slot = Some(&g.name);
            }
        }
        if let Some(u) = owner.iter().position(Option::is_none) {
            r.push(K::Population, format!("unit {} belongs to no group", u + 1));
        }
    }
    if let Some(w) = &pop.weights {
        if w.len() != n as usize {
            r.push(K::Weights, format!("{} weights given for {n} units", w.len()));
        }
        if let Some((i, _)) = w.iter().enumerate().find(|(_, p)| p.is_negative()) {
            r.push(K::Weights, format!("unit {} has a negative weight", i + 1));
        }
        let total = w.iter().fold(BigRational::zero(), |a, b| a + b);
        if !total.is_one() {
            r.push(K::Weights, format!("unit weights not normalized: they sum to {}", fmt_fraction(&total)));
        }
    }
    let mut names = BTreeSet::new();
    for f in &pop.features {
        if !is_identifier(&f.name) {
            r.push(K::Features, format!("`{}` is not a valid feature name", f.name));
        }
        if !names.insert(f.name.as_str()) {
            r.push(K::DuplicateName, format!("feature `{}` declared twice", f.name));
        }
        if f.values.len() != n as usize {
            r.push(K::Features, format!("feature `{}` has {} values for {n} units", f.name, f.values.len()));
        }
    }
}

fn check_declarations(spec: &ModelSpec, r: &mut ValidationReport) {
    let mut names = BTreeSet::new();
    let all = spec.noises.iter().map(|n| n.name.as_str()).chain(spec.variables.iter().map(|v| v.name.as_str()));
    for name in all {
        if !is_identifier(name) {
            r.push(K::DuplicateName, format!("`{name}` is not a valid name"));
        }
        if !names.insert(name) {
            r.push(K::DuplicateName, format!("name `{name}` declared twice"));
        }
    }
    let groups: BTreeSet<&str> = spec.population.groups.iter().map(|g| g.name.as_str()).collect();
    for noise in &spec.noises {
        match &noise.law {
            NoiseLaw::Shared(pmf) => pmf_problems(r, &format!("noise `{}`", noise.name), pmf),
            NoiseLaw::ByGroup(laws) => {
                let mut covered = BTreeSet::new();
                for (g, pmf) in laws {
                    if !groups.contains(g.as_str()) {
                        r.push(K::UnknownName, format!("noise `{}` gives a law for unknown group `{g}`", noise.name));
                    }
                    if !covered.insert(g.as_str()) {
                        r.push(K::GroupCoverage, format!("noise `{}` gives two laws for group `{g}`", noise.name));
                    }
                    pmf_problems(r, &format!("noise `{}` in group `{g}`", noise.name), pmf);
                }
                for g in groups.difference(&covered) {
                    r.push(K::GroupCoverage, format!("noise `{}` has no law for group `{g}`", noise.name));
                }
            }
        }
    }
    for var in &spec.variables {
        if var.domain.is_empty() {
            r.push(K::Domain, format!("variable `{}` has an empty domain", var.name));
        }
        let distinct: BTreeSet<&Value> = var.domain.iter().collect();
        if distinct.len() != var.domain.len() {
            r.push(K::Domain, format!("variable `{}` lists a domain value twice", var.name));
        }
    }
}

fn check_equations(spec: &ModelSpec, r: &mut ValidationReport) {
    let vars: BTreeSet<&str> = spec.variables.iter().map(|v| v.name.as_str()).collect();
    let noises: BTreeSet<&str> = spec.noises.iter().map(|n| n.name.as_str()).collect();
    let groups: BTreeSet<&str> = spec.population.groups.iter().map(|g| g.name.as_str()).collect();
    let features: BTreeSet<&str> = spec.population.features.iter().map(|f| f.name.as_str()).collect();
    let mut defined: BTreeMap<&str, usize> = BTreeMap::new();
    let mut noise_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for eq in &spec.equations {
        let t = eq.target.as_str();
        if !vars.contains(t) {
            r.push(K::UnknownName, format!("equation for undeclared variable `{t}`"));
        }
        *defined.entry(t).or_default() += 1;
        for p in &eq.parents {
            if !vars.contains(p.as_str()) {
                r.push(K::UnknownName, format!("equation for `{t}` lists unknown parent `{p}`"));
            }
        }
        for n in &eq.noises {
            if !noises.contains(n.as_str()) {
                r.push(K::UnknownName, format!("equation for `{t}` lists unknown noise `{n}`"));
            }
            if let Some(prev) = noise_owner.insert(n, t) {
                r.push(K::NoiseReuse, format!("noise `{n}` feeds both `{prev}` and `{t}`"));
            }
        }
        let mut has_default = false;
        let mut own = BTreeSet::new();
        for (sel, body) in &eq.bodies {
            match sel {
                GroupSel::Default => {
                    if has_default {
                        r.push(K::DuplicateEquation, format!("equation for `{t}` has two default bodies"));
                    }
                    has_default = true;
                }
                GroupSel::Group(g) => {
                    if !groups.contains(g.as_str()) {
                        r.push(K::UnknownName, format!("equation for `{t}` has a body for unknown group `{g}`"));
                    }
                    if !own.insert(g.as_str()) {
                        r.push(K::DuplicateEquation, format!("equation for `{t}` has two bodies for group `{g}`"));
                    }
                }
            }
            for name in body.names() {
                if !eq.parents.contains(&name) && !eq.noises.contains(&name) {
                    r.push(K::UnknownName, format!("equation for `{t}` reads `{name}`, which is neither a listed parent nor a listed noise"));
                }
            }
            for f in body.features() {
                if !features.contains(f.as_str()) {
                    r.push(K::UnknownName, format!("equation for `{t}` reads unknown feature `{f}`"));
                }
            }
            check_group_refs(body, &groups, t, r);
        }
        if !has_default {
            for g in groups.difference(&own) {
                r.push(K::GroupCoverage, format!("equation for `{t}` has no body for group `{g}`"));
            }
        }
    }
    for v in &spec.variables {
        match defined.get(v.name.as_str()) {
            None => r.push(K::MissingEquation, format!("variable `{}` has no equation", v.name)),
            Some(&k) if k > 1 => r.push(K::DuplicateEquation, format!("variable `{}` has {k} equations", v.name)),
            _ => {}
        }
    }
}

fn check_group_refs(body: &crate::expr::Expr, groups: &BTreeSet<&str>, target: &str, r: &mut ValidationReport) {
    use crate::expr::Expr;
    match body {
        Expr::InGroup(g) if !groups.contains(g.as_str()) => {
            r.push(K::UnknownName, format!("equation for `{target}` tests unknown group `{g}`"));
        }
        Expr::Neg(a) | Expr::Not(a) => check_group_refs(a, groups, target, r),
        Expr::Binary(_, a, b) => {
            check_group_refs(a, groups, target, r);
            check_group_refs(b, groups, target, r);
        }
        Expr::Call(_, args) => args.iter().for_each(|a| check_group_refs(a, groups, target, r)),
        Expr::If(a, b, c) => {
            check_group_refs(a, groups, target, r);
            check_group_refs(b, groups, target, r);
            check_group_refs(c, groups, target, r);
        }
        _ => {}
    }
}

struct Names<'a> {
    vars: &'a HashMap<String, usize>,
    noises: &'a HashMap<String, usize>,
    spec: &'a ModelSpec,
}

impl Resolver for Names<'_> {
    fn name(&self, name: &str) -> Option<NameRef> {
        self.vars.get(name).map(|&i| NameRef::Var(i)).or_else(|| self.noises.get(name).map(|&i| NameRef::Noise(i)))
    }

    fn feature(&self, name: &str) -> Option<usize> {
        self.spec.population.features.iter().position(|f| f.name == name)
    }

    fn group(&self, name: &str) -> Option<usize> {
        self.spec.population.groups.iter().position(|g| g.name == name)
    }
}

/// Index and compile a structurally valid, sugar-free declaration.
fn assemble(spec: ModelSpec) -> Result<DiscoModel, ValidationReport> {
    let mut report = ValidationReport::default();
    let n = spec.population.count as usize;
    let var_index: HashMap<String, usize> = spec.variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    let noise_index: HashMap<String, usize> = spec.noises.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    let noise_decls: Vec<NoiseDecl> = spec
        .noises
        .iter()
        .map(|ns| match &ns.law {
            NoiseLaw::Shared(pmf) => NoiseDecl { name: ns.name.clone(), pmf: pmf.clone() },
            NoiseLaw::ByGroup(_) => unreachable!("desugared"),
        })
        .collect();

    let mut unit_group = vec![0; n];
    for (gi, g) in spec.population.groups.iter().enumerate() {
        for u in g.lo..=g.hi {
            unit_group[u as usize - 1] = gi;
        }
    }
    let unit_features: Vec<Vec<Value>> = (0..n).map(|u| spec.population.features.iter().map(|f| f.values[u]).collect()).collect();
    let weights = spec.population.weights.clone().unwrap_or_else(|| vec![BigRational::new(1.into(), (n as i64).into()); n]);

    let mut classes: Vec<UnitClass> = Vec::new();
    let mut class_key: BTreeMap<(usize, &[Value]), usize> = BTreeMap::new();
    let mut class_of = vec![0; n];
    for u in 0..n {
        let key = (unit_group[u], unit_features[u].as_slice());
        let c = *class_key.entry(key).or_insert_with(|| {
            classes.push(UnitClass { group: unit_group[u], members: Vec::new() });
            classes.len() - 1
        });
        classes[c].members.push(UnitId(u as u32 + 1));
        class_of[u] = c;
    }

    let names = Names { vars: &var_index, noises: &noise_index, spec: &spec };
    let mut eqs = Vec::with_capacity(spec.variables.len());
    for v in &spec.variables {
        let eq = spec.equations.iter().find(|e| e.target == v.name).expect("validated");
        let mut bodies = Vec::with_capacity(spec.population.groups.len());
        for g in &spec.population.groups {
            let body = eq.body_for(&g.name).expect("validated");
            match body.compile(&names) {
                Ok(c) => bodies.push(c),
                Err(msg) => {
                    report.push(K::UnknownName, format!("equation for `{}`: {msg}", v.name));
                    bodies.push(crate::expr::Compiled::Const(Value::zero()));
                }
            }
        }
        eqs.push(CompiledEq {
            parents: eq.parents.iter().map(|p| var_index[p]).collect(),
            noises: eq.noises.iter().map(|p| noise_index[p]).collect(),
            bodies,
            constant: None,
        });
    }
    if !report.is_valid() {
        return Err(report);
    }
    let parents: Vec<Vec<usize>> = eqs.iter().map(|e| e.parents.clone()).collect();
    let order = topo_sort(&parents).map_err(|_| {
        let mut r = ValidationReport::default();
        r.push(K::CyclicDependency, "cyclic dependency");
        r
    })?;
    let mut domains: Vec<Vec<Value>> = spec.variables.iter().map(|v| v.domain.clone()).collect();
    for d in &mut domains {
        d.sort();
    }
    Ok(DiscoModel {
        spec,
        noise_decls,
        unit_group,
        unit_features,
        weights,
        classes,
        class_of,
        var_index,
        noise_index,
        domains,
        eqs,
        order,
        noise_world: NoiseWorld::Factual,
    })
}

/// Every body must map every parent-domain × noise-support combination,
/// for every unit class, into the target's domain.
fn check_totality(m: &DiscoModel) -> Result<(), ValidationReport> {
    let mut report = ValidationReport::default();
    let nv = m.var_count();
    let mut vars = vec![Value::zero(); nv];
    let mut noises: Vec<Value> = m.noise_decls.iter().map(|d| d.pmf.entries()[0].0).collect();
    for v in 0..nv {
        let eq = &m.eqs[v];
        let axes: Vec<Vec<Value>> = eq
            .parents
            .iter()
            .map(|&p| m.domains[p].clone())
            .chain(eq.noises.iter().map(|&k| m.noise_decls[k].pmf.values().copied().collect()))
            .collect();
        'classes: for class in &m.classes {
            let unit = class.members[0];
            let features = m.features_of(unit);
            let mut idx = vec![0usize; axes.len()];
            loop {
                for (a, &i) in idx.iter().enumerate() {
                    if a < eq.parents.len() {
                        vars[eq.parents[a]] = axes[a][i];
                    } else {
                        noises[eq.noises[a - eq.parents.len()]] = axes[a][i];
                    }
                }
                let ctx = EvalCtx { vars: &vars, noises: &noises, features, group: class.group };
                match eq.bodies[class.group].eval(&ctx) {
                    Err(e) => {
                        report.push(K::Evaluation, format!("equation for `{}` fails for unit {unit}: {e}", m.var_name(v)));
                        break 'classes;
                    }
                    Ok(value) if !m.in_domain(v, &value) => {
                        let inputs: Vec<String> = idx
                            .iter()
                            .enumerate()
                            .map(|(a, &i)| {
                                let name = if a < eq.parents.len() {
                                    m.var_name(eq.parents[a]).to_string()
                                } else {
                                    m.noise_decls[eq.noises[a - eq.parents.len()]].name.clone()
                                };
                                format!("{name}={}", fmt_value(&axes[a][i]))
                            })
                            .collect();
                        report.push(
                            K::OutOfDomain,
                            format!(
                                "equation for `{}` yields {} (outside its domain) for unit {unit} with {}",
                                m.var_name(v),
                                fmt_value(&value),
                                if inputs.is_empty() { "no inputs".to_string() } else { inputs.join(", ") }
                            ),
                        );
                        break 'classes;
                    }
                    Ok(_) => {}
                }
                // odometer over the axes
                let mut a = axes.len();
                loop {
                    if a == 0 {
                        continue 'classes;
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
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(report)
    }
}
