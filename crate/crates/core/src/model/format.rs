//! The `.dscm` text format.
//!
//! ```text
//! # comments run to the end of the line
//! [units]
//! count: 4
//! group A: 1..2
//! group B: 3..4
//! weights: uniform              # or one probability per unit
//! feature age: 1 2 3 4          # one value per unit
//!
//! [noise C]
//! pmf: -1:1/2 1:1/2             # or `pmf: uniform 1..10`
//!
//! [noise F]                     # group-specific laws, rewritten on build
//! group A: 0:4/5 1:1/5
//! group B: 0:1/2 1:1/2
//!
//! [var T]
//! domain: -1 1                  # or a range such as -2..3
//!
//! [eq T]
//! parents:
//! noises: C
//! A: -1
//! *: C                          # `*` covers groups without their own body
//!
//! [coupling]
//! disco
//! ```
//!
//! Indented lines continue the previous line. Values are integers,
//! decimals or `p/q` fractions.

use std::fmt::Write as _;

use num_rational::BigRational;

use super::{FeatureColumn, GroupRange, GroupSel, ModelSpec, NoiseLaw, NoiseSpec, StructuralEquation, VariableDecl};
use crate::expr::Expr;
use crate::lexer::{tokenize, Cursor, Pos, SyntaxError, Tok};
use crate::pmf::FinitePmf;
use crate::rational::{fmt_value, parse_big, Value};

struct Line {
    line: usize,
    text: String,
}

enum Section {
    None,
    Units,
    Noise(usize),
    Var(usize),
    Eq(usize),
    Coupling,
}

fn logical_lines(text: &str) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let continues = content.starts_with([' ', '\t']) && out.last().is_some_and(|l| !l.text.trim_start().starts_with('['));
        match out.last_mut() {
            Some(prev) if continues => {
                // keep a newline so the tokenizer reports real positions
                let gap = i + 1 - (prev.line + prev.text.matches('\n').count());
                for _ in 0..gap {
                    prev.text.push('\n');
                }
                prev.text.push_str(content);
            }
            _ => out.push(Line { line: i + 1, text: content.to_string() }),
        }
    }
    out
}

fn pos(line: usize, column: usize) -> Pos {
    Pos { line, column }
}

/// Column (1-based) of a byte offset within the first line of `text`.
fn column_of(text: &str, offset: usize) -> usize {
    text[..offset].chars().count() + 1
}

fn tokens(text: &str, start: Pos) -> Result<Vec<crate::lexer::Spanned>, SyntaxError> {
    tokenize(text, start)
}

fn end_of(text: &str, line: usize) -> Pos {
    let lines: Vec<&str> = text.split('\n').collect();
    let last = lines.last().copied().unwrap_or("");
    pos(line + lines.len() - 1, last.chars().count() + 1)
}

fn expect_end(cur: &Cursor<'_>) -> Result<(), SyntaxError> {
    if cur.done() {
        Ok(())
    } else {
        Err(cur.unexpected("end of line"))
    }
}

fn parse_u32(cur: &mut Cursor<'_>) -> Result<u32, SyntaxError> {
    let at = cur.pos();
    match cur.bump() {
        Some(Tok::Num(n)) => n.parse().map_err(|_| SyntaxError::at(at, format!("expected a unit number, found `{n}`"))),
        Some(t) => Err(SyntaxError::at(at, format!("expected a unit number, found {t}"))),
        None => Err(SyntaxError::at(at, "expected a unit number, found end of line")),
    }
}

fn parse_int(cur: &mut Cursor<'_>) -> Result<i64, SyntaxError> {
    let at = cur.pos();
    let v = cur.signed_number()?;
    if v.is_integer() {
        Ok(v.to_integer())
    } else {
        Err(SyntaxError::at(at, "expected an integer"))
    }
}

/// Probability: integer, decimal or `p/q`, never negative in the text.
fn parse_prob(cur: &mut Cursor<'_>) -> Result<BigRational, SyntaxError> {
    let at = cur.pos();
    let neg = cur.eat_sym("-");
    let mut text = match cur.bump() {
        Some(Tok::Num(n)) => n.clone(),
        _ => return Err(SyntaxError::at(at, "expected a probability")),
    };
    if cur.is_sym("/") {
        if let Some(Tok::Num(d)) = cur.peek_at(1) {
            text = format!("{text}/{d}");
            cur.bump();
            cur.bump();
        }
    }
    let p = parse_big(&text).ok_or_else(|| SyntaxError::at(at, format!("invalid probability `{text}`")))?;
    Ok(if neg { -p } else { p })
}

fn parse_value_list(cur: &mut Cursor<'_>) -> Result<Vec<Value>, SyntaxError> {
    let mut out = Vec::new();
    while !cur.done() {
        out.push(cur.signed_number()?);
        cur.eat_sym(",");
    }
    Ok(out)
}

fn parse_pmf(cur: &mut Cursor<'_>) -> Result<FinitePmf, SyntaxError> {
    if cur.is_ident("uniform") {
        let at = cur.pos();
        cur.bump();
        let lo = parse_int(cur)?;
        cur.expect_sym("..")?;
        let hi = parse_int(cur)?;
        expect_end(cur)?;
        if lo > hi || hi - lo >= 1 << 24 {
            return Err(SyntaxError::at(at, format!("invalid uniform range {lo}..{hi}")));
        }
        return Ok(FinitePmf::uniform_range(lo, hi));
    }
    let mut entries = Vec::new();
    while !cur.done() {
        let v = cur.signed_number()?;
        cur.expect_sym(":")?;
        let p = parse_prob(cur)?;
        entries.push((v, p));
        cur.eat_sym(",");
    }
    if entries.is_empty() {
        return Err(cur.unexpected("`value:probability` pairs"));
    }
    Ok(FinitePmf::from_entries_unchecked(entries))
}

fn parse_name_list(cur: &mut Cursor<'_>) -> Result<Vec<String>, SyntaxError> {
    let mut out = Vec::new();
    while !cur.done() {
        out.push(cur.expect_ident()?);
        cur.eat_sym(",");
    }
    Ok(out)
}

/// Parse `.dscm` text. The result is not validated.
pub fn parse_model(text: &str) -> Result<ModelSpec, SyntaxError> {
    let mut spec = ModelSpec::new(0);
    let mut saw_units = false;
    let mut saw_count = false;
    let mut saw_coupling = false;
    let mut section = Section::None;
    for Line { line, text } in logical_lines(text) {
        let trimmed = text.trim_start();
        let indent = text.len() - trimmed.len();
        if let Some(header) = trimmed.strip_prefix('[') {
            let start = pos(line, column_of(&text, indent + 1));
            let Some(close) = header.find(']') else {
                return Err(SyntaxError::at(start, "unterminated section header"));
            };
            if !header[close + 1..].trim().is_empty() {
                return Err(SyntaxError::at(start, "unexpected text after section header"));
            }
            let toks = tokens(&header[..close], start)?;
            let mut cur = Cursor::new(&toks, start);
            let kind = cur.expect_ident()?;
            section = match kind.as_str() {
                "units" => {
                    expect_end(&cur)?;
                    if saw_units {
                        return Err(SyntaxError::at(start, "duplicate [units] section"));
                    }
                    saw_units = true;
                    Section::Units
                }
                "coupling" => {
                    expect_end(&cur)?;
                    if saw_coupling {
                        return Err(SyntaxError::at(start, "duplicate [coupling] section"));
                    }
                    saw_coupling = true;
                    Section::Coupling
                }
                "noise" | "var" | "eq" => {
                    let name = cur.expect_ident()?;
                    expect_end(&cur)?;
                    match kind.as_str() {
                        "noise" => {
                            spec.noises.push(NoiseSpec { name, law: NoiseLaw::Shared(FinitePmf::from_entries_unchecked(Vec::new())) });
                            Section::Noise(spec.noises.len() - 1)
                        }
                        "var" => {
                            spec.variables.push(VariableDecl { name, domain: Vec::new() });
                            Section::Var(spec.variables.len() - 1)
                        }
                        _ => {
                            spec.equations.push(StructuralEquation::new(&name));
                            Section::Eq(spec.equations.len() - 1)
                        }
                    }
                }
                other => return Err(SyntaxError::at(start, format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        let start = pos(line, column_of(&text, indent));
        if let Section::Coupling = section {
            let word = trimmed.trim();
            spec.coupling = word.parse().map_err(|e: String| SyntaxError::at(start, e))?;
            continue;
        }
        let colon = text.find(':').ok_or_else(|| SyntaxError::at(start, "expected `key: value`"))?;
        let key_toks = tokens(&text[..colon], pos(line, 1))?;
        let rest = &text[colon + 1..];
        let rest_start = pos(line, column_of(&text, colon + 1));
        let rest_end = end_of(&text, line);
        let key_end = pos(line, column_of(&text, colon));
        let mut key = Cursor::new(&key_toks, key_end);
        let key_pos = key.pos();
        match section {
            Section::None => return Err(SyntaxError::at(key_pos, "entry outside any section")),
            Section::Coupling => unreachable!(),
            Section::Units => {
                let word = key.expect_ident()?;
                let toks = tokens(rest, rest_start)?;
                let mut cur = Cursor::new(&toks, rest_end);
                match word.as_str() {
                    "count" => {
                        expect_end(&key)?;
                        spec.population.count = parse_u32(&mut cur)?;
                        expect_end(&cur)?;
                        saw_count = true;
                    }
                    "group" => {
                        let name = key.expect_ident()?;
                        expect_end(&key)?;
                        let lo = parse_u32(&mut cur)?;
                        cur.expect_sym("..")?;
                        let hi = parse_u32(&mut cur)?;
                        expect_end(&cur)?;
                        spec.population.groups.push(GroupRange { name, lo, hi });
                    }
                    "weights" => {
                        expect_end(&key)?;
                        if cur.is_ident("uniform") {
                            cur.bump();
                            expect_end(&cur)?;
                            spec.population.weights = None;
                        } else {
                            let mut w = Vec::new();
                            while !cur.done() {
                                w.push(parse_prob(&mut cur)?);
                                cur.eat_sym(",");
                            }
                            spec.population.weights = Some(w);
                        }
                    }
                    "feature" => {
                        let name = key.expect_ident()?;
                        expect_end(&key)?;
                        let values = parse_value_list(&mut cur)?;
                        spec.population.features.push(FeatureColumn { name, values });
                    }
                    other => return Err(SyntaxError::at(key_pos, format!("unknown [units] key `{other}`"))),
                }
            }
            Section::Noise(k) => {
                let word = key.expect_ident()?;
                let toks = tokens(rest, rest_start)?;
                let mut cur = Cursor::new(&toks, rest_end);
                match word.as_str() {
                    "pmf" => {
                        expect_end(&key)?;
                        let pmf = parse_pmf(&mut cur)?;
                        let noise = &mut spec.noises[k];
                        if matches!(&noise.law, NoiseLaw::ByGroup(_)) || matches!(&noise.law, NoiseLaw::Shared(p) if !p.is_empty()) {
                            return Err(SyntaxError::at(key_pos, format!("noise `{}` already has a law", noise.name)));
                        }
                        noise.law = NoiseLaw::Shared(pmf);
                    }
                    "group" => {
                        let g = key.expect_ident()?;
                        expect_end(&key)?;
                        let pmf = parse_pmf(&mut cur)?;
                        let noise = &mut spec.noises[k];
                        match &mut noise.law {
                            NoiseLaw::ByGroup(laws) => laws.push((g, pmf)),
                            NoiseLaw::Shared(p) if p.is_empty() => noise.law = NoiseLaw::ByGroup(vec![(g, pmf)]),
                            NoiseLaw::Shared(_) => return Err(SyntaxError::at(key_pos, format!("noise `{}` already has a shared law", noise.name))),
                        }
                    }
                    other => return Err(SyntaxError::at(key_pos, format!("unknown [noise] key `{other}`"))),
                }
            }
            Section::Var(k) => {
                let word = key.expect_ident()?;
                expect_end(&key)?;
                if word != "domain" {
                    return Err(SyntaxError::at(key_pos, format!("unknown [var] key `{word}`")));
                }
                let toks = tokens(rest, rest_start)?;
                let mut cur = Cursor::new(&toks, rest_end);
                let domain = if toks.iter().any(|t| t.tok == Tok::Sym("..")) {
                    let at = cur.pos();
                    let lo = parse_int(&mut cur)?;
                    cur.expect_sym("..")?;
                    let hi = parse_int(&mut cur)?;
                    expect_end(&cur)?;
                    if lo > hi || hi - lo >= 1 << 24 {
                        return Err(SyntaxError::at(at, format!("invalid domain range {lo}..{hi}")));
                    }
                    (lo..=hi).map(Value::from_integer).collect()
                } else {
                    parse_value_list(&mut cur)?
                };
                spec.variables[k].domain = domain;
            }
            Section::Eq(k) => {
                let eq = &mut spec.equations[k];
                if key.eat_sym("*") {
                    expect_end(&key)?;
                    eq.bodies.push((GroupSel::Default, Expr::parse_at(rest, rest_start)?));
                    continue;
                }
                let word = key.expect_ident()?;
                expect_end(&key)?;
                match word.as_str() {
                    "parents" | "noises" => {
                        let toks = tokens(rest, rest_start)?;
                        let mut cur = Cursor::new(&toks, rest_end);
                        let names = parse_name_list(&mut cur)?;
                        if word == "parents" {
                            eq.parents = names;
                        } else {
                            eq.noises = names;
                        }
                    }
                    group => eq.bodies.push((GroupSel::Group(group.to_string()), Expr::parse_at(rest, rest_start)?)),
                }
            }
        }
    }
    if !saw_count {
        return Err(SyntaxError::at(pos(1, 1), "missing `count:` in a [units] section"));
    }
    for noise in &spec.noises {
        if matches!(&noise.law, NoiseLaw::Shared(p) if p.is_empty()) {
            return Err(SyntaxError::at(pos(1, 1), format!("noise `{}` declares no pmf", noise.name)));
        }
    }
    Ok(spec)
}

/// `lo..hi` when the values are consecutive integers with equal mass.
fn uniform_range(pmf: &FinitePmf) -> Option<(i64, i64)> {
    let e = pmf.entries();
    if e.len() < 2 || !e.iter().all(|(v, p)| v.is_integer() && *p == e[0].1) {
        return None;
    }
    let lo = e[0].0.to_integer();
    let consecutive = e.iter().enumerate().all(|(i, (v, _))| v.to_integer() == lo + i as i64);
    if consecutive && &e[0].1 * BigRational::from_integer((e.len() as i64).into()) == BigRational::from_integer(1.into()) {
        Some((lo, lo + e.len() as i64 - 1))
    } else {
        None
    }
}

fn write_pmf(out: &mut String, pmf: &FinitePmf) {
    match uniform_range(pmf) {
        Some((lo, hi)) => {
            let _ = write!(out, "uniform {lo}..{hi}");
        }
        None => {
            let _ = write!(out, "{pmf}");
        }
    }
}

fn join_values(values: &[Value]) -> String {
    values.iter().map(fmt_value).collect::<Vec<_>>().join(" ")
}

fn write_domain(out: &mut String, domain: &[Value]) {
    let lo = domain.first().map(|v| v.to_integer()).unwrap_or(0);
    let is_range = domain.len() >= 3 && domain.iter().enumerate().all(|(i, v)| v.is_integer() && v.to_integer() == lo + i as i64);
    if is_range {
        let _ = write!(out, "{lo}..{}", lo + domain.len() as i64 - 1);
    } else {
        out.push_str(&join_values(domain));
    }
}

fn fmt_prob(p: &BigRational) -> String {
    if p.is_integer() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// Canonical text form. `parse_model(&print_model(s)) == s` for every spec
/// whose names and values the format can express.
pub fn print_model(spec: &ModelSpec) -> String {
    let mut out = String::new();
    let pop = &spec.population;
    let _ = writeln!(out, "[units]\ncount: {}", pop.count);
    for g in &pop.groups {
        let _ = writeln!(out, "group {}: {}..{}", g.name, g.lo, g.hi);
    }
    match &pop.weights {
        None => out.push_str("weights: uniform\n"),
        Some(w) => {
            let _ = writeln!(out, "weights: {}", w.iter().map(fmt_prob).collect::<Vec<_>>().join(" "));
        }
    }
    for f in &pop.features {
        let _ = writeln!(out, "feature {}: {}", f.name, join_values(&f.values));
    }
    for noise in &spec.noises {
        let _ = writeln!(out, "\n[noise {}]", noise.name);
        match &noise.law {
            NoiseLaw::Shared(pmf) => {
                out.push_str("pmf: ");
                write_pmf(&mut out, pmf);
                out.push('\n');
            }
            NoiseLaw::ByGroup(laws) => {
                for (g, pmf) in laws {
                    let _ = write!(out, "group {g}: ");
                    write_pmf(&mut out, pmf);
                    out.push('\n');
                }
            }
        }
    }
    for var in &spec.variables {
        let _ = write!(out, "\n[var {}]\ndomain: ", var.name);
        write_domain(&mut out, &var.domain);
        out.push('\n');
    }
    for eq in &spec.equations {
        let _ = writeln!(out, "\n[eq {}]", eq.target);
        let _ = writeln!(out, "parents: {}", eq.parents.join(" "));
        let _ = writeln!(out, "noises: {}", eq.noises.join(" "));
        for (sel, body) in &eq.bodies {
            let _ = writeln!(out, "{sel}: {body}");
        }
    }
    let _ = writeln!(out, "\n[coupling]\n{}", spec.coupling);
    // trailing spaces after empty `parents:` / `noises:` lists
    out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coupling;
    use crate::rational::{frac, int};

    const SMALL: &str = "\
# two groups
[units]
count: 4
group A: 1..2
group B: 3..4
feature age: 1 2 3 1/2

[noise C]
pmf: -1:1/2 1:1/2

[noise F]
group A: 0:4/5 1:1/5
group B: 0:1/2 1:1/2

[var T]
domain: -1 1

[var Y]
domain: -2..3

[eq T]
parents:
noises: C
A: -1
*: C

[eq Y]
parents: T
noises: F
*: 2 * T +
   F

[coupling]
scm
";

    #[test]
    fn parses_all_sections() {
        let spec = parse_model(SMALL).unwrap();
        assert_eq!(spec.population.count, 4);
        assert_eq!(spec.population.groups.len(), 2);
        assert_eq!(spec.population.features[0].values[3], Value::new(1, 2));
        assert_eq!(spec.coupling, Coupling::Scm);
        assert!(matches!(&spec.noises[1].law, NoiseLaw::ByGroup(l) if l.len() == 2));
        assert_eq!(spec.variables[1].domain.len(), 6);
        assert_eq!(spec.equations[1].bodies[0].1.to_string(), "2 * T + F");
        assert!(spec.validate().is_valid(), "{}", spec.validate());
    }

    #[test]
    fn print_parse_round_trip() {
        let spec = parse_model(SMALL).unwrap();
        let text = print_model(&spec);
        assert_eq!(parse_model(&text).unwrap(), spec);
        assert_eq!(print_model(&parse_model(&text).unwrap()), text);
    }

    #[test]
    fn malformed_pmf_reports_line() {
        let bad = SMALL.replace("pmf: -1:1/2 1:1/2", "pmf: -1:1/2 1 1/2");
        let err = parse_model(&bad).unwrap_err();
        assert_eq!(err.line, 9);
        assert!(err.column > 5);
    }

    #[test]
    fn body_errors_point_into_continuation_lines() {
        let bad = SMALL.replace("   F", "   F )");
        let err = parse_model(&bad).unwrap_err();
        assert_eq!((err.line, err.column), (31, 6));
    }

    #[test]
    fn unknown_section_and_missing_count() {
        assert!(parse_model("[units]\ncount: 1\n[bogus]\n").is_err());
        let err = parse_model("[units]\ngroup A: 1..1\n").unwrap_err();
        assert!(err.message.contains("count"));
    }

    #[test]
    fn uniform_printing() {
        assert_eq!(uniform_range(&FinitePmf::uniform_range(1, 10)), Some((1, 10)));
        let p = FinitePmf::new(vec![(int(0), frac(1, 2)), (int(2), frac(1, 2))]).unwrap();
        assert_eq!(uniform_range(&p), None);
    }
}
