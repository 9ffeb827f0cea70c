//! Finite structural causal models with an explicit unit-selection variable.
//!
//! A [`ModelSpec`] is the raw declaration (what a `.dscm` file or the
//! builder produces). [`ModelSpec::build`] validates it and yields a
//! [`DiscoModel`], the only form the engines accept.

mod desugar;
pub mod format;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;

use crate::expr::{Compiled, EvalCtx, EvalError, Expr};
use crate::pmf::FinitePmf;
use crate::rational::{fmt_value, Value};
use crate::report::ValidationReport;

pub use format::{parse_model, print_model};
pub use validate::validate_model;

/// How counterfactual worlds relate to the factual one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Coupling {
    /// Every intervened world draws fresh noise with the factual law.
    #[default]
    Disco,
    /// Every world reuses the factual noise (classical SCM semantics).
    Scm,
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coupling::Disco => "disco",
            Coupling::Scm => "scm",
        })
    }
}

impl FromStr for Coupling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "disco" => Ok(Coupling::Disco),
            "scm" => Ok(Coupling::Scm),
            other => Err(format!("unknown coupling `{other}` (expected disco or scm)")),
        }
    }
}

/// 1-based unit identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `do(...)` assignments, ordered by variable name.
pub type Intervention = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRange {
    pub name: String,
    pub lo: u32,
    pub hi: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureColumn {
    pub name: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitPopulation {
    pub count: u32,
    pub groups: Vec<GroupRange>,
    /// `None` is the uniform law over units.
    pub weights: Option<Vec<BigRational>>,
    pub features: Vec<FeatureColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoiseLaw {
    Shared(FinitePmf),
    /// Group-specific laws; rewritten into a shared uniform noise on build.
    ByGroup(Vec<(String, FinitePmf)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSpec {
    pub name: String,
    pub law: NoiseLaw,
}

/// A noise after desugaring: its law never depends on the unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseDecl {
    pub name: String,
    pub pmf: FinitePmf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub domain: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupSel {
    Group(String),
    /// Applies to every group without its own body.
    Default,
}

impl fmt::Display for GroupSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSel::Group(g) => f.write_str(g),
            GroupSel::Default => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralEquation {
    pub target: String,
    pub parents: Vec<String>,
    pub noises: Vec<String>,
    pub bodies: Vec<(GroupSel, Expr)>,
}

impl StructuralEquation {
    pub fn new(target: &str) -> Self {
        StructuralEquation { target: target.to_string(), parents: Vec::new(), noises: Vec::new(), bodies: Vec::new() }
    }

    pub fn parents<I: IntoIterator<Item = S>, S: Into<String>>(mut self, parents: I) -> Self {
        self.parents = parents.into_iter().map(Into::into).collect();
        self
    }

    pub fn noises<I: IntoIterator<Item = S>, S: Into<String>>(mut self, noises: I) -> Self {
        self.noises = noises.into_iter().map(Into::into).collect();
        self
    }

    /// Body for one group. Panics if `body` is not a valid expression.
    pub fn when(mut self, group: &str, body: &str) -> Self {
        let expr = Expr::parse(body).unwrap_or_else(|e| panic!("bad equation body `{body}`: {e}"));
        self.bodies.push((GroupSel::Group(group.to_string()), expr));
        self
    }

    /// Body for every group without its own. Panics if `body` is not a valid expression.
    pub fn otherwise(mut self, body: &str) -> Self {
        let expr = Expr::parse(body).unwrap_or_else(|e| panic!("bad equation body `{body}`: {e}"));
        self.bodies.push((GroupSel::Default, expr));
        self
    }

    pub fn with_body(mut self, sel: GroupSel, body: Expr) -> Self {
        self.bodies.push((sel, body));
        self
    }

    fn body_for(&self, group: &str) -> Option<&Expr> {
        self.bodies
            .iter()
            .find(|(s, _)| matches!(s, GroupSel::Group(g) if g == group))
            .or_else(|| self.bodies.iter().find(|(s, _)| *s == GroupSel::Default))
            .map(|(_, e)| e)
    }
}

/// Raw, unchecked model declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub population: UnitPopulation,
    pub noises: Vec<NoiseSpec>,
    pub variables: Vec<VariableDecl>,
    pub equations: Vec<StructuralEquation>,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
    #[error("cyclic dependency: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} is outside the domain of `{var}`")]
    OutOfDomain { var: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("unit {0} is not in the population")]
    UnknownUnit(UnitId),
    #[error("no value given for noise `{0}`")]
    MissingNoise(String),
    #[error("value {value} is not in the support of noise `{noise}`")]
    NoiseValue { noise: String, value: String },
    #[error("equation for `{var}` produced {value}, outside its domain (unit {unit})")]
    OutOfDomain { var: String, value: String, unit: UnitId },
    #[error("evaluating `{var}`: {source}")]
    Eval { var: String, source: EvalError },
}

impl ModelSpec {
    pub fn new(units: u32) -> Self {
        ModelSpec {
            population: UnitPopulation { count: units, groups: Vec::new(), weights: None, features: Vec::new() },
            noises: Vec::new(),
            variables: Vec::new(),
            equations: Vec::new(),
            coupling: Coupling::Disco,
        }
    }

    pub fn group(mut self, name: &str, lo: u32, hi: u32) -> Self {
        self.population.groups.push(GroupRange { name: name.to_string(), lo, hi });
        self
    }

    pub fn weights(mut self, weights: Vec<BigRational>) -> Self {
        self.population.weights = Some(weights);
        self
    }

    pub fn feature(mut self, name: &str, values: Vec<Value>) -> Self {
        self.population.features.push(FeatureColumn { name: name.to_string(), values });
        self
    }

    pub fn noise(mut self, name: &str, pmf: FinitePmf) -> Self {
        self.noises.push(NoiseSpec { name: name.to_string(), law: NoiseLaw::Shared(pmf) });
        self
    }

    /// Declare a noise whose law differs by group.
    pub fn group_noise(mut self, name: &str, laws: Vec<(&str, FinitePmf)>) -> Self {
        self.noises.push(NoiseSpec { name: name.to_string(), law: NoiseLaw::ByGroup(laws.into_iter().map(|(g, p)| (g.to_string(), p)).collect()) });
        self
    }

    pub fn variable(mut self, name: &str, domain: Vec<Value>) -> Self {
        self.variables.push(VariableDecl { name: name.to_string(), domain });
        self
    }

    pub fn equation(mut self, eq: StructuralEquation) -> Self {
        self.equations.push(eq);
        self
    }

    pub fn coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }

    pub fn build(self) -> Result<DiscoModel, ModelError> {
        validate::build(self)
    }

    /// Variables ordered so that parents precede children; ties keep declaration order.
    pub fn topological_order(&self) -> Result<Vec<String>, ModelError> {
        let index: HashMap<&str, usize> = self.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let mut parents = vec![Vec::new(); self.variables.len()];
        for eq in &self.equations {
            if let Some(&t) = index.get(eq.target.as_str()) {
                parents[t] = eq.parents.iter().filter_map(|p| index.get(p.as_str()).copied()).collect();
            }
        }
        topo_sort(&parents)
            .map(|o| o.into_iter().map(|i| self.variables[i].name.clone()).collect())
            .map_err(|cycle| ModelError::Cycle(cycle.into_iter().map(|i| self.variables[i].name.clone()).collect()))
    }
}

/// Kahn's algorithm, always releasing the lowest ready index first.
/// On failure returns one cycle (first node repeated at the end).
pub(crate) fn topo_sort(parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !placed[i] && parents[i].iter().all(|&p| placed[p] || p == usize::MAX));
        match next {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => return Err(find_cycle(parents, &placed)),
        }
    }
    Ok(order)
}

fn find_cycle(parents: &[Vec<usize>], placed: &[bool]) -> Vec<usize> {
    // every unplaced node has an unplaced parent; walk parents until a repeat
    let start = (0..parents.len()).find(|&i| !placed[i]).unwrap_or(0);
    let mut path = vec![start];
    let mut cur = start;
    loop {
        let Some(&p) = parents[cur].iter().find(|&&p| !placed[p]) else {
            return path;
        };
        if let Some(k) = path.iter().position(|&q| q == p) {
            let mut cycle: Vec<usize> = path[k..].to_vec();
            cycle.reverse();
            // parent-to-child order, starting from the earliest declaration
            let first = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
            cycle.rotate_left(first);
            cycle.push(cycle[0]);
            return cycle;
        }
        path.push(p);
        cur = p;
    }
}

/// Whether a model's noises are the factual ones or fresh copies for an intervened world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoiseWorld {
    Factual,
    Fresh(Intervention),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledEq {
    pub parents: Vec<usize>,
    pub noises: Vec<usize>,
    /// Indexed by group.
    pub bodies: Vec<Compiled>,
    pub constant: Option<Value>,
}

/// Units that share a group and a feature row behave identically.
#[derive(Debug, Clone)]
pub struct UnitClass {
    pub group: usize,
    pub members: Vec<UnitId>,
}

/// A validated model, ready for the engines.
#[derive(Debug, Clone)]
pub struct DiscoModel {
    spec: ModelSpec,
    noise_decls: Vec<NoiseDecl>,
    unit_group: Vec<usize>,
    unit_features: Vec<Vec<Value>>,
    weights: Vec<BigRational>,
    classes: Vec<UnitClass>,
    class_of: Vec<usize>,
    var_index: HashMap<String, usize>,
    noise_index: HashMap<String, usize>,
    domains: Vec<Vec<Value>>,
    eqs: Vec<CompiledEq>,
    order: Vec<usize>,
    noise_world: NoiseWorld,
}

impl DiscoModel {
    /// The desugared declaration this model was built from.
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn coupling(&self) -> Coupling {
        self.spec.coupling
    }

    pub fn with_coupling(&self, coupling: Coupling) -> DiscoModel {
        let mut m = self.clone();
        m.spec.coupling = coupling;
        m
    }

    pub fn unit_count(&self) -> u32 {
        self.spec.population.count
    }

    pub fn units(&self) -> impl Iterator<Item = UnitId> {
        (1..=self.unit_count()).map(UnitId)
    }

    pub fn contains_unit(&self, unit: UnitId) -> bool {
        unit.0 >= 1 && unit.0 <= self.unit_count()
    }

    pub fn weight(&self, unit: UnitId) -> &BigRational {
        &self.weights[unit.0 as usize - 1]
    }

    pub fn groups(&self) -> &[GroupRange] {
        &self.spec.population.groups
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.spec.population.groups.iter().position(|g| g.name == name)
    }

    pub fn group_of(&self, unit: UnitId) -> usize {
        self.unit_group[unit.0 as usize - 1]
    }

    pub fn group_name_of(&self, unit: UnitId) -> &str {
        &self.spec.population.groups[self.group_of(unit)].name
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.spec.population.features.iter().map(|f| f.name.as_str())
    }

    pub fn feature(&self, unit: UnitId, name: &str) -> Option<Value> {
        let k = self.spec.population.features.iter().position(|f| f.name == name)?;
        Some(self.unit_features[unit.0 as usize - 1][k])
    }

    pub fn features_of(&self, unit: UnitId) -> &[Value] {
        &self.unit_features[unit.0 as usize - 1]
    }

    pub fn classes(&self) -> &[UnitClass] {
        &self.classes
    }

    pub fn class_of(&self, unit: UnitId) -> usize {
        self.class_of[unit.0 as usize - 1]
    }

    pub fn noises(&self) -> &[NoiseDecl] {
        &self.noise_decls
    }

    pub fn noise_index(&self, name: &str) -> Option<usize> {
        self.noise_index.get(name).copied()
    }

    pub fn noise_world(&self) -> &NoiseWorld {
        &self.noise_world
    }

    /// `E` for factual noise, `E(do T=1)` / `E(do)` for fresh copies.
    pub fn qualified_noise_name(&self, index: usize) -> String {
        let name = &self.noise_decls[index].name;
        match &self.noise_world {
            NoiseWorld::Factual => name.clone(),
            NoiseWorld::Fresh(iv) if iv.is_empty() => format!("{name}(do)"),
            NoiseWorld::Fresh(iv) => {
                let parts: Vec<String> = iv.iter().map(|(k, v)| format!("{k}={}", fmt_value(v))).collect();
                format!("{name}(do {})", parts.join(","))
            }
        }
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.spec.variables
    }

    pub fn var_count(&self) -> usize {
        self.spec.variables.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn var_name(&self, index: usize) -> &str {
        &self.spec.variables[index].name
    }

    /// Sorted domain of a variable.
    pub fn domain(&self, index: usize) -> &[Value] {
        &self.domains[index]
    }

    pub fn in_domain(&self, index: usize, v: &Value) -> bool {
        self.domains[index].binary_search(v).is_ok()
    }

    pub fn parents_of(&self, index: usize) -> &[usize] {
        &self.eqs[index].parents
    }

    pub fn noises_of(&self, index: usize) -> &[usize] {
        &self.eqs[index].noises
    }

    pub fn is_intervened(&self, index: usize) -> bool {
        self.eqs[index].constant.is_some()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn topological_order(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.var_name(i)).collect()
    }

    /// Proper ancestors of each variable in `targets`, plus the targets themselves.
    pub fn ancestral_closure(&self, targets: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.var_count()];
        let mut stack: Vec<usize> = targets.to_vec();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(self.eqs[v].parents.iter().copied());
            }
        }
        mark
    }

    /// Noises that can influence any of `targets`.
    pub fn relevant_noises(&self, targets: &[usize]) -> Vec<usize> {
        let closure = self.ancestral_closure(targets);
        let mut out: Vec<usize> = (0..self.var_count()).filter(|&v| closure[v]).flat_map(|v| self.eqs[v].noises.iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// True when the variable's value is fixed once the unit is known.
    pub fn is_unit_determined(&self, index: usize) -> bool {
        let closure = self.ancestral_closure(&[index]);
        (0..self.var_count()).filter(|&v| closure[v]).all(|v| self.eqs[v].noises.is_empty())
    }

    /// Evaluate all equations in topological order for one unit and one noise draw.
    ///
    /// `noises` is indexed like [`DiscoModel::noises`]; `out` like [`DiscoModel::variables`].
    pub fn solve_into(&self, unit: UnitId, noises: &[Value], out: &mut [Value]) -> Result<(), SolveError> {
        if !self.contains_unit(unit) {
            return Err(SolveError::UnknownUnit(unit));
        }
        let u = unit.0 as usize - 1;
        let group = self.unit_group[u];
        let features = &self.unit_features[u];
        for &v in &self.order {
            let eq = &self.eqs[v];
            let value = match eq.constant {
                Some(c) => c,
                None => {
                    let ctx = EvalCtx { vars: out, noises, features, group };
                    eq.bodies[group].eval(&ctx).map_err(|source| SolveError::Eval { var: self.var_name(v).to_string(), source })?
                }
            };
            if !self.in_domain(v, &value) {
                return Err(SolveError::OutOfDomain { var: self.var_name(v).to_string(), value: fmt_value(&value), unit });
            }
            out[v] = value;
        }
        Ok(())
    }

    /// Solve by name. Every noise must be assigned a value from its support.
    pub fn solve(&self, unit: UnitId, noise_assignment: &BTreeMap<String, Value>) -> Result<BTreeMap<String, Value>, SolveError> {
        let mut noises = Vec::with_capacity(self.noise_decls.len());
        for decl in &self.noise_decls {
            let v = noise_assignment.get(&decl.name).ok_or_else(|| SolveError::MissingNoise(decl.name.clone()))?;
            if decl.pmf.prob_of(v) == BigRational::from_integer(0.into()) && !decl.pmf.values().any(|w| w == v) {
                return Err(SolveError::NoiseValue { noise: decl.name.clone(), value: fmt_value(v) });
            }
            noises.push(*v);
        }
        let mut out = vec![Value::default(); self.var_count()];
        self.solve_into(unit, &noises, &mut out)?;
        Ok(self.spec.variables.iter().map(|d| d.name.clone()).zip(out).collect())
    }

    /// The submodel for `do(intervention)`.
    ///
    /// Intervened equations become constants. Under disco coupling the
    /// result's noises are fresh copies with the same laws; under scm they
    /// stay the factual noises.
    pub fn apply_do(&self, intervention: &Intervention) -> Result<DiscoModel, ModelError> {
        let mut m = self.clone();
        for (name, value) in intervention {
            let idx = self.var_index(name).ok_or_else(|| ModelError::UnknownVariable(name.clone()))?;
            if !self.in_domain(idx, value) {
                return Err(ModelError::OutOfDomain { var: name.clone(), value: fmt_value(value) });
            }
            m.eqs[idx] = CompiledEq { parents: Vec::new(), noises: Vec::new(), bodies: Vec::new(), constant: Some(*value) };
            if let Some(eq) = m.spec.equations.iter_mut().find(|e| &e.target == name) {
                *eq = StructuralEquation::new(name).with_body(GroupSel::Default, Expr::Const(*value));
            }
        }
        let parents: Vec<Vec<usize>> = m.eqs.iter().map(|e| e.parents.clone()).collect();
        m.order = topo_sort(&parents).expect("removing edges cannot create a cycle");
        m.noise_world = match self.spec.coupling {
            Coupling::Disco => NoiseWorld::Fresh(intervention.clone()),
            Coupling::Scm => self.noise_world.clone(),
        };
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn two_var() -> ModelSpec {
        ModelSpec::new(2)
            .group("G", 1, 2)
            .noise("N", FinitePmf::uniform_range(0, 1))
            .variable("A", vec![int(0), int(1)])
            .variable("B", vec![int(0), int(1), int(2)])
            .equation(StructuralEquation::new("A").noises(["N"]).otherwise("N"))
            .equation(StructuralEquation::new("B").parents(["A"]).otherwise("A + 1"))
    }

    #[test]
    fn solve_is_deterministic() {
        let m = two_var().build().unwrap();
        let noise: BTreeMap<String, Value> = [("N".to_string(), int(1))].into();
        let a = m.solve(UnitId(1), &noise).unwrap();
        let b = m.solve(UnitId(1), &noise).unwrap();
        assert_eq!(a, b);
        assert_eq!(a["B"], int(2));
    }

    #[test]
    fn solve_errors() {
        let m = two_var().build().unwrap();
        assert_eq!(m.solve(UnitId(1), &BTreeMap::new()).unwrap_err(), SolveError::MissingNoise("N".into()));
        let bad: BTreeMap<String, Value> = [("N".to_string(), int(7))].into();
        assert!(matches!(m.solve(UnitId(1), &bad).unwrap_err(), SolveError::NoiseValue { .. }));
        let ok: BTreeMap<String, Value> = [("N".to_string(), int(0))].into();
        assert!(matches!(m.solve(UnitId(3), &ok).unwrap_err(), SolveError::UnknownUnit(_)));
    }

    #[test]
    fn out_of_domain_is_a_validation_failure() {
        let spec = two_var().variable("C", vec![int(0)]).equation(StructuralEquation::new("C").parents(["B"]).otherwise("B"));
        let err = spec.build().unwrap_err();
        let ModelError::Invalid(report) = err else { panic!() };
        assert!(report.has(crate::report::ViolationKind::OutOfDomain));
    }

    #[test]
    fn do_replaces_equation_and_relabels_noise() {
        let m = two_var().build().unwrap();
        let iv: Intervention = [("A".to_string(), int(0))].into();
        let sub = m.apply_do(&iv).unwrap();
        assert!(sub.is_intervened(0));
        assert_eq!(sub.qualified_noise_name(0), "N(do A=0)");
        let out = sub.solve(UnitId(2), &[("N".to_string(), int(1))].into()).unwrap();
        assert_eq!(out["A"], int(0));
        assert_eq!(out["B"], int(1));
        let scm = m.with_coupling(Coupling::Scm).apply_do(&iv).unwrap();
        assert_eq!(scm.qualified_noise_name(0), "N");
        assert!(m.apply_do(&[("Z".to_string(), int(0))].into()).is_err());
        assert!(m.apply_do(&[("A".to_string(), int(5))].into()).is_err());
        let empty = m.apply_do(&Intervention::new()).unwrap();
        assert_eq!(empty.qualified_noise_name(0), "N(do)");
    }

    #[test]
    fn topo_order_breaks_ties_by_declaration() {
        let spec = ModelSpec::new(1)
            .group("G", 1, 1)
            .variable("A", vec![int(0)])
            .variable("B", vec![int(0)])
            .equation(StructuralEquation::new("A").otherwise("0"))
            .equation(StructuralEquation::new("B").otherwise("0"));
        assert_eq!(spec.topological_order().unwrap(), vec!["A", "B"]);
        let cyclic = ModelSpec::new(1)
            .group("G", 1, 1)
            .variable("A", vec![int(0)])
            .variable("B", vec![int(0)])
            .equation(StructuralEquation::new("A").parents(["B"]).otherwise("B"))
            .equation(StructuralEquation::new("B").parents(["A"]).otherwise("A"));
        let err = cyclic.topological_order().unwrap_err();
        assert_eq!(err, ModelError::Cycle(vec!["A".into(), "B".into(), "A".into()]));
    }

    #[test]
    fn weights_and_classes() {
        let m = ModelSpec::new(3)
            .group("G", 1, 2)
            .group("H", 3, 3)
            .weights(vec![frac(1, 2), frac(1, 4), frac(1, 4)])
            .variable("A", vec![int(0)])
            .equation(StructuralEquation::new("A").otherwise("0"))
            .build()
            .unwrap();
        assert_eq!(m.classes().len(), 2);
        assert_eq!(m.class_of(UnitId(1)), m.class_of(UnitId(2)));
        assert_eq!(m.weight(UnitId(1)), &frac(1, 2));
        assert_eq!(m.group_name_of(UnitId(3)), "H");
    }
}
