//! Multi-world counterfactual queries.
//!
//! ```text
//! P(Y[T=-1]=-1 | T=-1, Y=-1)          conditional, one counterfactual world
//! P(Y[]=-1 | T=-1)                    empty intervention: fresh noise, same equations
//! P(Y[T=1]=1, Y[T=-1]=-1 ; group=S)   two-world joint, restricted to a group
//! E[Y[T=1] | X in {0, 1/2} ; unit=3]  expectation
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::lexer::{tokenize, Cursor, Pos, SyntaxError, Tok};
use crate::model::{DiscoModel, Intervention, UnitId};
use crate::rational::{fmt_value, Value};
use crate::report::{ValidationReport, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WorldRef {
    Factual,
    /// The world of `do(intervention)`; the empty intervention is the `Y[]` world.
    Counterfactual(Intervention),
}

impl WorldRef {
    pub fn under(assignments: &[(&str, Value)]) -> WorldRef {
        WorldRef::Counterfactual(assignments.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn empty_intervention() -> WorldRef {
        WorldRef::Counterfactual(Intervention::new())
    }

    pub fn is_factual(&self) -> bool {
        matches!(self, WorldRef::Factual)
    }

    pub fn intervention(&self) -> Option<&Intervention> {
        match self {
            WorldRef::Factual => None,
            WorldRef::Counterfactual(iv) => Some(iv),
        }
    }
}

impl fmt::Display for WorldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldRef::Factual => Ok(()),
            WorldRef::Counterfactual(iv) => {
                let parts: Vec<String> = iv.iter().map(|(k, v)| format!("{k}={}", fmt_value(v))).collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

/// `var` (in `world`) takes one of `values`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub var: String,
    pub world: WorldRef,
    pub values: BTreeSet<Value>,
}

impl Event {
    pub fn new(world: WorldRef, var: &str, values: impl IntoIterator<Item = Value>) -> Event {
        Event { var: var.to_string(), world, values: values.into_iter().collect() }
    }

    pub fn factual(var: &str, value: Value) -> Event {
        Event::new(WorldRef::Factual, var, [value])
    }

    pub fn counterfactual(intervention: &[(&str, Value)], var: &str, value: Value) -> Event {
        Event::new(WorldRef::under(intervention), var, [value])
    }

    pub fn holds(&self, value: &Value) -> bool {
        self.values.contains(value)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.var, self.world)?;
        if self.values.len() == 1 {
            write!(f, "={}", fmt_value(self.values.iter().next().expect("one value")))
        } else {
            let vs: Vec<String> = self.values.iter().map(fmt_value).collect();
            write!(f, " in {{{}}}", vs.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitRef {
    Unit(UnitId),
    Group(String),
}

impl fmt::Display for UnitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitRef::Unit(u) => write!(f, "unit={u}"),
            UnitRef::Group(g) => write!(f, "group={g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    /// Conjunction of events.
    Probability(Vec<Event>),
    Expectation {
        world: WorldRef,
        var: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub target: Target,
    /// Factual-world events only.
    pub evidence: Vec<Event>,
    pub unit: Option<UnitRef>,
}

impl Query {
    pub fn probability(events: Vec<Event>) -> Query {
        Query { target: Target::Probability(events), evidence: Vec::new(), unit: None }
    }

    pub fn expectation(world: WorldRef, var: &str) -> Query {
        Query { target: Target::Expectation { world, var: var.to_string() }, evidence: Vec::new(), unit: None }
    }

    pub fn given(mut self, evidence: Vec<Event>) -> Query {
        self.evidence = evidence;
        self
    }

    pub fn for_unit(mut self, unit: UnitId) -> Query {
        self.unit = Some(UnitRef::Unit(unit));
        self
    }

    pub fn for_group(mut self, group: &str) -> Query {
        self.unit = Some(UnitRef::Group(group.to_string()));
        self
    }

    pub fn parse(text: &str) -> Result<Query, SyntaxError> {
        parse_query(text)
    }

    /// Every distinct world the query mentions, in canonical order.
    pub fn worlds(&self) -> Vec<WorldRef> {
        let mut set: BTreeSet<WorldRef> = self.evidence.iter().map(|e| e.world.clone()).collect();
        match &self.target {
            Target::Probability(events) => set.extend(events.iter().map(|e| e.world.clone())),
            Target::Expectation { world, .. } => {
                set.insert(world.clone());
            }
        }
        set.into_iter().collect()
    }

    pub fn validate(&self, model: &DiscoModel) -> ValidationReport {
        validate_query(self, model)
    }
}

impl FromStr for Query {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_query(s)
    }
}

fn join_sorted(events: &[Event]) -> String {
    let mut sorted: Vec<&Event> = events.iter().collect();
    sorted.sort();
    sorted.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = match &self.target {
            Target::Probability(events) => {
                write!(f, "P({}", join_sorted(events))?;
                ")"
            }
            Target::Expectation { world, var } => {
                write!(f, "E[{var}{world}")?;
                "]"
            }
        };
        if !self.evidence.is_empty() {
            write!(f, " | {}", join_sorted(&self.evidence))?;
        }
        if let Some(u) = &self.unit {
            write!(f, " ; {u}")?;
        }
        f.write_str(close)
    }
}

fn parse_tag(cur: &mut Cursor<'_>) -> Result<WorldRef, SyntaxError> {
    if !cur.eat_sym("[") {
        return Ok(WorldRef::Factual);
    }
    let mut iv = BTreeMap::new();
    if cur.eat_sym("]") {
        return Ok(WorldRef::Counterfactual(iv));
    }
    loop {
        let at = cur.pos();
        let var = cur.expect_ident()?;
        cur.expect_sym("=")?;
        let v = cur.signed_number()?;
        if iv.insert(var.clone(), v).is_some() {
            return Err(SyntaxError::at(at, format!("`{var}` is intervened on twice")));
        }
        if cur.eat_sym("]") {
            return Ok(WorldRef::Counterfactual(iv));
        }
        cur.expect_sym(",")?;
    }
}

fn parse_event(cur: &mut Cursor<'_>) -> Result<Event, SyntaxError> {
    let var = cur.expect_ident()?;
    let world = parse_tag(cur)?;
    let mut values = BTreeSet::new();
    if cur.eat_sym("=") {
        values.insert(cur.signed_number()?);
    } else if cur.is_ident("in") {
        cur.bump();
        cur.expect_sym("{")?;
        loop {
            values.insert(cur.signed_number()?);
            if cur.eat_sym("}") {
                break;
            }
            cur.expect_sym(",")?;
        }
    } else {
        return Err(cur.unexpected("`=` or `in`"));
    }
    Ok(Event { var, world, values })
}

fn parse_events(cur: &mut Cursor<'_>) -> Result<Vec<Event>, SyntaxError> {
    let mut out = vec![parse_event(cur)?];
    while cur.eat_sym(",") {
        out.push(parse_event(cur)?);
    }
    Ok(out)
}

fn parse_evidence(cur: &mut Cursor<'_>) -> Result<Vec<Event>, SyntaxError> {
    let mut out = Vec::new();
    loop {
        let at = cur.pos();
        let e = parse_event(cur)?;
        if !e.world.is_factual() {
            return Err(SyntaxError::at(at, format!("evidence must be factual, but `{e}` names a counterfactual world")));
        }
        out.push(e);
        if !cur.eat_sym(",") {
            return Ok(out);
        }
    }
}

fn parse_unit_ref(cur: &mut Cursor<'_>) -> Result<UnitRef, SyntaxError> {
    let at = cur.pos();
    let key = cur.expect_ident()?;
    cur.expect_sym("=")?;
    match key.as_str() {
        "unit" => {
            let at = cur.pos();
            match cur.bump() {
                Some(Tok::Num(n)) => {
                    n.parse::<u32>().map(|u| UnitRef::Unit(UnitId(u))).map_err(|_| SyntaxError::at(at, format!("invalid unit id `{n}`")))
                }
                _ => Err(SyntaxError::at(at, "expected a unit id")),
            }
        }
        "group" => Ok(UnitRef::Group(cur.expect_ident()?)),
        other => Err(SyntaxError::at(at, format!("expected `unit` or `group`, found `{other}`"))),
    }
}

pub fn parse_query(text: &str) -> Result<Query, SyntaxError> {
    let start = Pos { line: 1, column: 1 };
    let toks = tokenize(text, start)?;
    let end = Pos { line: 1 + text.matches('\n').count(), column: text.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1 };
    let mut cur = Cursor::new(&toks, end);
    let kind = cur.expect_ident()?;
    let (target, close) = match kind.as_str() {
        "P" => {
            cur.expect_sym("(")?;
            (Target::Probability(parse_events(&mut cur)?), ")")
        }
        "E" => {
            cur.expect_sym("[")?;
            let var = cur.expect_ident()?;
            let world = parse_tag(&mut cur)?;
            (Target::Expectation { world, var }, "]")
        }
        other => {
            return Err(SyntaxError::at(start, format!("a query starts with `P(` or `E[`, found `{other}`")));
        }
    };
    let evidence = if cur.eat_sym("|") { parse_evidence(&mut cur)? } else { Vec::new() };
    let unit = if cur.eat_sym(";") { Some(parse_unit_ref(&mut cur)?) } else { None };
    cur.expect_sym(close)?;
    if !cur.done() {
        return Err(cur.unexpected("end of query"));
    }
    Ok(Query { target, evidence, unit })
}

fn check_event(r: &mut ValidationReport, model: &DiscoModel, e: &Event) {
    check_world(r, model, &e.world);
    match model.var_index(&e.var) {
        None => r.push(ViolationKind::Query, format!("unknown variable `{}`", e.var)),
        Some(i) => {
            for v in &e.values {
                if !model.in_domain(i, v) {
                    r.push(ViolationKind::Query, format!("value {} is outside the domain of `{}`", fmt_value(v), e.var));
                }
            }
        }
    }
    if e.values.is_empty() {
        r.push(ViolationKind::Query, format!("event on `{}` has no values", e.var));
    }
}

fn check_world(r: &mut ValidationReport, model: &DiscoModel, w: &WorldRef) {
    let Some(iv) = w.intervention() else { return };
    for (var, v) in iv {
        match model.var_index(var) {
            None => r.push(ViolationKind::Query, format!("intervention on unknown variable `{var}`")),
            Some(i) if !model.in_domain(i, v) => {
                r.push(ViolationKind::Query, format!("intervention value {} is outside the domain of `{var}`", fmt_value(v)))
            }
            _ => {}
        }
    }
}

pub fn validate_query(query: &Query, model: &DiscoModel) -> ValidationReport {
    let mut r = ValidationReport::default();
    match &query.target {
        Target::Probability(events) => {
            if events.is_empty() {
                r.push(ViolationKind::Query, "probability query has no events");
            }
            events.iter().for_each(|e| check_event(&mut r, model, e));
        }
        Target::Expectation { world, var } => {
            check_world(&mut r, model, world);
            if model.var_index(var).is_none() {
                r.push(ViolationKind::Query, format!("unknown variable `{var}`"));
            }
        }
    }
    for e in &query.evidence {
        check_event(&mut r, model, e);
        if !e.world.is_factual() {
            r.push(ViolationKind::Query, format!("evidence `{e}` is not factual"));
        }
    }
    match &query.unit {
        Some(UnitRef::Unit(u)) if !model.contains_unit(*u) => r.push(ViolationKind::Query, format!("unit {u} is not in the population")),
        Some(UnitRef::Group(g)) if model.group_index(g).is_none() => r.push(ViolationKind::Query, format!("unknown group `{g}`")),
        _ => {}
    }
    r
}
