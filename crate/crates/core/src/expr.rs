//! The expression language used for structural-equation bodies.
//!
//! ```text
//! expr  := 'if' expr 'then' expr 'else' expr | or
//! or    := and ('||' and)*
//! and   := cmp ('&&' cmp)*
//! cmp   := sum (('<' | '<=' | '>' | '>=' | '==' | '!=') sum)?
//! sum   := prod (('+' | '-') prod)*
//! prod  := unary ('*' unary)*
//! unary := '-' unary | '!' unary | atom
//! atom  := number ('/' number)? | name | '(' expr ')'
//!        | feature(name) | in_group(name) | min(expr, expr) | max(expr, expr) | ind(expr)
//! ```
//!
//! Comparisons and boolean operators evaluate to `1` or `0`; any nonzero
//! value is true. There is no division: `a/b` is only a rational literal.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Zero};

use crate::lexer::{tokenize, Cursor, Pos, SyntaxError, Tok};
use crate::rational::{fmt_value, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }

    fn cmp_from(sym: &str) -> Option<BinOp> {
        Some(match sym {
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Min,
    Max,
    Ind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    /// A parent variable or a noise, resolved when the model is built.
    Name(String),
    Feature(String),
    InGroup(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

const KEYWORDS: &[&str] = &["if", "then", "else", "feature", "in_group", "min", "max", "ind", "in"];

pub fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

impl Expr {
    pub fn constant(v: impl Into<Value>) -> Expr {
        Expr::Const(v.into())
    }

    pub fn name(n: &str) -> Expr {
        Expr::Name(n.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn if_else(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Parse a complete expression.
    pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
        Self::parse_at(text, Pos { line: 1, column: 1 })
    }

    /// Parse with positions offset to where `text` starts in a larger file.
    pub fn parse_at(text: &str, start: Pos) -> Result<Expr, SyntaxError> {
        let toks = tokenize(text, start)?;
        let end = toks.last().map(|t| Pos { line: t.pos.line, column: t.pos.column + 1 }).unwrap_or(start);
        let mut cur = Cursor::new(&toks, end);
        let e = parse_expr(&mut cur)?;
        if !cur.done() {
            return Err(cur.unexpected("end of expression"));
        }
        Ok(e)
    }

    /// Every bare name the expression reads (parents and noises).
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Name(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn features(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Feature(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Name(_) | Expr::Feature(_) | Expr::InGroup(_) => {}
            Expr::Neg(a) | Expr::Not(a) => a.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            Expr::If(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
        }
    }

    /// Replace every occurrence of the bare name `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Name(n) if n == name => with.clone(),
            Expr::Const(_) | Expr::Name(_) | Expr::Feature(_) | Expr::InGroup(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(name, with))),
            Expr::Not(a) => Expr::Not(Box::new(a.substitute(name, with))),
            Expr::Binary(op, a, b) => Expr::bin(*op, a.substitute(name, with), b.substitute(name, with)),
            Expr::Call(func, args) => Expr::Call(*func, args.iter().map(|a| a.substitute(name, with)).collect()),
            Expr::If(c, t, e) => Expr::if_else(c.substitute(name, with), t.substitute(name, with), e.substitute(name, with)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::If(..) => 0,
            Expr::Binary(op, ..) => op.prec(),
            Expr::Neg(_) | Expr::Not(_) => 6,
            Expr::Const(v) if *v < Value::zero() => 6,
            _ => 7,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let paren = self.prec() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(v) => f.write_str(&fmt_value(v))?,
            Expr::Name(n) => f.write_str(n)?,
            Expr::Feature(n) => write!(f, "feature({n})")?,
            Expr::InGroup(n) => write!(f, "in_group({n})")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write(f, 6)?;
            }
            Expr::Not(a) => {
                f.write_str("!")?;
                a.write(f, 6)?;
            }
            Expr::Binary(op, a, b) => {
                let p = op.prec();
                let (lp, rp) = if p == 3 { (4, 4) } else { (p, p + 1) };
                a.write(f, lp)?;
                write!(f, " {} ", op.symbol())?;
                b.write(f, rp)?;
            }
            Expr::Call(func, args) => {
                let name = match func {
                    Func::Min => "min",
                    Func::Max => "max",
                    Func::Ind => "ind",
                };
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(f, 0)?;
                }
                f.write_str(")")?;
            }
            Expr::If(c, t, e) => {
                f.write_str("if ")?;
                c.write(f, 0)?;
                f.write_str(" then ")?;
                t.write(f, 0)?;
                f.write_str(" else ")?;
                e.write(f, 0)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

fn parse_expr(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    if cur.is_ident("if") {
        cur.bump();
        let c = parse_expr(cur)?;
        if !cur.is_ident("then") {
            return Err(cur.unexpected("`then`"));
        }
        cur.bump();
        let t = parse_expr(cur)?;
        if !cur.is_ident("else") {
            return Err(cur.unexpected("`else`"));
        }
        cur.bump();
        let e = parse_expr(cur)?;
        return Ok(Expr::if_else(c, t, e));
    }
    parse_or(cur)
}

fn parse_or(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    let mut lhs = parse_and(cur)?;
    while cur.eat_sym("||") {
        lhs = Expr::bin(BinOp::Or, lhs, parse_and(cur)?);
    }
    Ok(lhs)
}

fn parse_and(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    let mut lhs = parse_cmp(cur)?;
    while cur.eat_sym("&&") {
        lhs = Expr::bin(BinOp::And, lhs, parse_cmp(cur)?);
    }
    Ok(lhs)
}

fn parse_cmp(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    let lhs = parse_sum(cur)?;
    if let Some(Tok::Sym(s)) = cur.peek() {
        if let Some(op) = BinOp::cmp_from(s) {
            cur.bump();
            let rhs = parse_sum(cur)?;
            return Ok(Expr::bin(op, lhs, rhs));
        }
    }
    Ok(lhs)
}

fn parse_sum(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    let mut lhs = parse_prod(cur)?;
    loop {
        if cur.eat_sym("+") {
            lhs = Expr::bin(BinOp::Add, lhs, parse_prod(cur)?);
        } else if cur.eat_sym("-") {
            lhs = Expr::bin(BinOp::Sub, lhs, parse_prod(cur)?);
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_prod(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    let mut lhs = parse_unary(cur)?;
    while cur.eat_sym("*") {
        lhs = Expr::bin(BinOp::Mul, lhs, parse_unary(cur)?);
    }
    Ok(lhs)
}

fn parse_unary(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    if cur.is_sym("-") {
        if let Some(Tok::Num(_)) = cur.peek_at(1) {
            return Ok(Expr::Const(cur.signed_number()?));
        }
        cur.bump();
        return Ok(Expr::Neg(Box::new(parse_unary(cur)?)));
    }
    if cur.eat_sym("!") {
        return Ok(Expr::Not(Box::new(parse_unary(cur)?)));
    }
    parse_atom(cur)
}

fn parse_atom(cur: &mut Cursor<'_>) -> Result<Expr, SyntaxError> {
    match cur.peek() {
        Some(Tok::Num(_)) => Ok(Expr::Const(cur.signed_number()?)),
        Some(Tok::Sym("(")) => {
            cur.bump();
            let e = parse_expr(cur)?;
            cur.expect_sym(")")?;
            Ok(e)
        }
        Some(Tok::Ident(word)) => {
            let pos = cur.pos();
            cur.bump();
            match word.as_str() {
                "feature" | "in_group" => {
                    cur.expect_sym("(")?;
                    let arg = cur.expect_ident()?;
                    cur.expect_sym(")")?;
                    Ok(if word == "feature" { Expr::Feature(arg) } else { Expr::InGroup(arg) })
                }
                "min" | "max" | "ind" => {
                    cur.expect_sym("(")?;
                    let mut args = vec![parse_expr(cur)?];
                    while cur.eat_sym(",") {
                        args.push(parse_expr(cur)?);
                    }
                    cur.expect_sym(")")?;
                    let (func, arity) = match word.as_str() {
                        "min" => (Func::Min, 2),
                        "max" => (Func::Max, 2),
                        _ => (Func::Ind, 1),
                    };
                    if args.len() != arity {
                        return Err(SyntaxError::at(pos, format!("`{word}` takes {arity} argument(s), got {}", args.len())));
                    }
                    Ok(Expr::Call(func, args))
                }
                w if is_reserved(w) => Err(SyntaxError::at(pos, format!("unexpected keyword `{w}`"))),
                _ => Ok(Expr::Name(word.clone())),
            }
        }
        _ => Err(cur.unexpected("an expression")),
    }
}

/// An expression with names resolved to slots of the evaluation context.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Const(Value),
    Var(usize),
    Noise(usize),
    Feature(usize),
    Group(usize),
    Neg(Box<Compiled>),
    Not(Box<Compiled>),
    Bin(BinOp, Box<Compiled>, Box<Compiled>),
    Min(Box<Compiled>, Box<Compiled>),
    Max(Box<Compiled>, Box<Compiled>),
    Ind(Box<Compiled>),
    If(Box<Compiled>, Box<Compiled>, Box<Compiled>),
}

/// Where a bare name points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NameRef {
    Var(usize),
    Noise(usize),
}

pub(crate) trait Resolver {
    fn name(&self, name: &str) -> Option<NameRef>;
    fn feature(&self, name: &str) -> Option<usize>;
    fn group(&self, name: &str) -> Option<usize>;
}

impl Expr {
    pub(crate) fn compile(&self, r: &dyn Resolver) -> Result<Compiled, String> {
        let c = |e: &Expr| e.compile(r).map(Box::new);
        Ok(match self {
            Expr::Const(v) => Compiled::Const(*v),
            Expr::Name(n) => match r.name(n) {
                Some(NameRef::Var(i)) => Compiled::Var(i),
                Some(NameRef::Noise(i)) => Compiled::Noise(i),
                None => return Err(format!("unknown name `{n}`")),
            },
            Expr::Feature(n) => Compiled::Feature(r.feature(n).ok_or_else(|| format!("unknown feature `{n}`"))?),
            Expr::InGroup(n) => Compiled::Group(r.group(n).ok_or_else(|| format!("unknown group `{n}`"))?),
            Expr::Neg(a) => Compiled::Neg(c(a)?),
            Expr::Not(a) => Compiled::Not(c(a)?),
            Expr::Binary(op, a, b) => Compiled::Bin(*op, c(a)?, c(b)?),
            Expr::Call(Func::Min, args) => Compiled::Min(c(&args[0])?, c(&args[1])?),
            Expr::Call(Func::Max, args) => Compiled::Max(c(&args[0])?, c(&args[1])?),
            Expr::Call(Func::Ind, args) => Compiled::Ind(c(&args[0])?),
            Expr::If(a, b, d) => Compiled::If(c(a)?, c(b)?, c(d)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("arithmetic overflow")]
    Overflow,
}

pub(crate) struct EvalCtx<'a> {
    pub vars: &'a [Value],
    pub noises: &'a [Value],
    pub features: &'a [Value],
    pub group: usize,
}

fn truth(b: bool) -> Value {
    if b {
        Value::one()
    } else {
        Value::zero()
    }
}

impl Compiled {
    pub(crate) fn eval(&self, ctx: &EvalCtx<'_>) -> Result<Value, EvalError> {
        Ok(match self {
            Compiled::Const(v) => *v,
            Compiled::Var(i) => ctx.vars[*i],
            Compiled::Noise(i) => ctx.noises[*i],
            Compiled::Feature(i) => ctx.features[*i],
            Compiled::Group(g) => truth(ctx.group == *g),
            Compiled::Neg(a) => -a.eval(ctx)?,
            Compiled::Not(a) => truth(a.eval(ctx)?.is_zero()),
            Compiled::Ind(a) => truth(!a.eval(ctx)?.is_zero()),
            Compiled::Min(a, b) => a.eval(ctx)?.min(b.eval(ctx)?),
            Compiled::Max(a, b) => a.eval(ctx)?.max(b.eval(ctx)?),
            Compiled::If(c, t, e) => {
                if c.eval(ctx)?.is_zero() {
                    e.eval(ctx)?
                } else {
                    t.eval(ctx)?
                }
            }
            Compiled::Bin(op, a, b) => {
                let x = a.eval(ctx)?;
                // short-circuit the boolean operators
                match op {
                    BinOp::And if x.is_zero() => return Ok(Value::zero()),
                    BinOp::Or if !x.is_zero() => return Ok(Value::one()),
                    _ => {}
                }
                let y = b.eval(ctx)?;
                match op {
                    BinOp::Add => x.checked_add(&y).ok_or(EvalError::Overflow)?,
                    BinOp::Sub => x.checked_sub(&y).ok_or(EvalError::Overflow)?,
                    BinOp::Mul => x.checked_mul(&y).ok_or(EvalError::Overflow)?,
                    BinOp::Lt => truth(x < y),
                    BinOp::Le => truth(x <= y),
                    BinOp::Gt => truth(x > y),
                    BinOp::Ge => truth(x >= y),
                    BinOp::Eq => truth(x == y),
                    BinOp::Ne => truth(x != y),
                    BinOp::And | BinOp::Or => truth(!y.is_zero()),
                }
            }
        })
    }
}
