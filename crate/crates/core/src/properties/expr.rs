//! Value expressions and formulae over real and boolean variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sort {
    Real,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Real => "Real",
            Sort::Bool => "Bool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SortedVar {
    pub name: String,
    pub sort: Sort,
}

impl SortedVar {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        SortedVar {
            name: name.into(),
            sort,
        }
    }

    pub fn real(name: impl Into<String>) -> Self {
        SortedVar::new(name, Sort::Real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
}

/// Value expressions and formulae share one representation; formulae are the
/// boolean-sorted expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Bool(bool),
    Num(BigRational),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Exists(Vec<SortedVar>, Box<Expr>),
    Forall(Vec<SortedVar>, Box<Expr>),
}

pub type ValueExpr = Expr;
pub type Formula = Expr;

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(BigRational::from_integer(n.into()))
    }

    pub fn tt() -> Expr {
        Expr::Bool(true)
    }

    pub fn ff() -> Expr {
        Expr::Bool(false)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Expr::Bool(false))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    /// `a - b`, written as `a + (-1)·b`.
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::mul(Expr::int(-1), b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn lt(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Lt, a, b)
    }

    pub fn le(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Le, a, b)
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, a, b)
    }

    pub fn ne(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Ne, a, b)
    }

    pub fn not(a: Expr) -> Expr {
        match a {
            Expr::Bool(b) => Expr::Bool(!b),
            a => Expr::Not(Box::new(a)),
        }
    }

    /// Conjunction that flattens nested conjunctions and drops `true`.
    pub fn and(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for e in items {
            match e {
                Expr::Bool(true) => {}
                Expr::And(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => Expr::tt(),
            1 => out.pop().unwrap(),
            _ => Expr::And(out),
        }
    }

    pub fn and2(a: Expr, b: Expr) -> Expr {
        Expr::and([a, b])
    }

    /// Disjunction that flattens nested disjunctions and drops `false`.
    pub fn or(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for e in items {
            match e {
                Expr::Bool(false) => {}
                Expr::Or(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => Expr::ff(),
            1 => out.pop().unwrap(),
            _ => Expr::Or(out),
        }
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Bool(true), b) => b,
            (_, Expr::Bool(true)) => Expr::tt(),
            (a, b) => Expr::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn ite(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn exists(vars: Vec<SortedVar>, body: Expr) -> Expr {
        if vars.is_empty() {
            body
        } else {
            Expr::Exists(vars, Box::new(body))
        }
    }

    pub fn forall(vars: Vec<SortedVar>, body: Expr) -> Expr {
        if vars.is_empty() {
            body
        } else {
            Expr::Forall(vars, Box::new(body))
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Bool(_) | Expr::Num(_) | Expr::Var(_) => vec![],
            Expr::Add(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Cmp(_, a, b)
            | Expr::Implies(a, b) => vec![a, b],
            Expr::Not(a) | Expr::Exists(_, a) | Expr::Forall(_, a) => vec![a],
            Expr::And(xs) | Expr::Or(xs) => xs.iter().collect(),
            Expr::Ite(c, a, b) => vec![c, a, b],
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut seen, &mut out);
        out
    }

    fn collect_free(
        &self,
        bound: &mut Vec<String>,
        seen: &mut BTreeSet<String>,
        out: &mut Vec<String>,
    ) {
        match self {
            Expr::Var(v) => {
                if !bound.contains(v) && seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
            Expr::Exists(vs, body) | Expr::Forall(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().map(|v| v.name.clone()));
                body.collect_free(bound, seen, out);
                bound.truncate(n);
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, seen, out);
                }
            }
        }
    }

    /// Simultaneous substitution of free variables.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let rec = |e: &Expr| Box::new(e.substitute(map));
        match self {
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Bool(_) | Expr::Num(_) => self.clone(),
            Expr::Add(a, b) => Expr::Add(rec(a), rec(b)),
            Expr::Mul(a, b) => Expr::Mul(rec(a), rec(b)),
            Expr::Div(a, b) => Expr::Div(rec(a), rec(b)),
            Expr::Pow(a, b) => Expr::Pow(rec(a), rec(b)),
            Expr::Cmp(op, a, b) => Expr::Cmp(*op, rec(a), rec(b)),
            Expr::Not(a) => Expr::Not(rec(a)),
            Expr::And(xs) => Expr::And(xs.iter().map(|x| x.substitute(map)).collect()),
            Expr::Or(xs) => Expr::Or(xs.iter().map(|x| x.substitute(map)).collect()),
            Expr::Implies(a, b) => Expr::Implies(rec(a), rec(b)),
            Expr::Ite(c, a, b) => Expr::Ite(rec(c), rec(a), rec(b)),
            Expr::Exists(vs, body) | Expr::Forall(vs, body) => {
                let inner: BTreeMap<String, Expr> = map
                    .iter()
                    .filter(|(k, _)| !vs.iter().any(|v| &v.name == *k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                let body = Box::new(body.substitute(&inner));
                match self {
                    Expr::Exists(..) => Expr::Exists(vs.clone(), body),
                    _ => Expr::Forall(vs.clone(), body),
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

impl From<BigRational> for Expr {
    fn from(q: BigRational) -> Self {
        Expr::Num(q)
    }
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "≤",
            CmpOp::Eq => "=",
            CmpOp::Ne => "≠",
        }
    }
}

/// Binding strength of the outermost operator, for infix printing.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Exists(..) | Expr::Forall(..) => 0,
        Expr::Implies(..) => 1,
        Expr::Or(xs) | Expr::And(xs) if xs.len() < 2 => 9,
        Expr::Or(_) => 2,
        Expr::And(_) => 3,
        Expr::Not(_) => 4,
        Expr::Cmp(..) => 5,
        Expr::Add(..) => 6,
        Expr::Mul(..) | Expr::Div(..) => 7,
        Expr::Pow(..) => 8,
        Expr::Num(q) if q < &BigRational::from_integer(0.into()) => 6,
        _ => 9,
    }
}

fn negated_operand(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Mul(k, x) if **k == Expr::int(-1) => Some(x),
        _ => None,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn binders(vars: &[SortedVar]) -> String {
    vars.iter()
        .map(|v| v.name.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Infix notation: `0 ≤ z!1 ∧ z!1*z!1 = y - 1`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = precedence(self);
        match self {
            Expr::Bool(b) => f.write_str(if *b { "true" } else { "false" }),
            Expr::Num(q) => f.write_str(&crate::num::rational_to_string(q)),
            Expr::Var(v) => f.write_str(v),
            Expr::Add(a, b) => {
                child(f, a, p)?;
                match negated_operand(b) {
                    Some(x) => {
                        f.write_str(" - ")?;
                        child(f, x, p + 1)
                    }
                    None => {
                        f.write_str(" + ")?;
                        child(f, b, p + 1)
                    }
                }
            }
            Expr::Mul(a, b) => {
                child(f, a, p)?;
                f.write_str("*")?;
                child(f, b, p + 1)
            }
            Expr::Div(a, b) => {
                child(f, a, p)?;
                f.write_str("/")?;
                child(f, b, p + 1)
            }
            Expr::Pow(a, b) => {
                child(f, a, p + 1)?;
                f.write_str("^")?;
                child(f, b, p)
            }
            Expr::Cmp(op, a, b) => {
                child(f, a, p + 1)?;
                write!(f, " {} ", op.symbol())?;
                child(f, b, p + 1)
            }
            Expr::Not(a) => {
                f.write_str("¬")?;
                child(f, a, p)
            }
            Expr::And(xs) | Expr::Or(xs) => {
                let and = matches!(self, Expr::And(_));
                if xs.is_empty() {
                    return f.write_str(if and { "true" } else { "false" });
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(if and { " ∧ " } else { " ∨ " })?;
                    }
                    child(f, x, p.min(8) + 1)?;
                }
                Ok(())
            }
            Expr::Implies(a, b) => {
                child(f, a, p + 1)?;
                f.write_str(" → ")?;
                child(f, b, p)
            }
            Expr::Ite(c, a, b) => write!(f, "ite({c}, {a}, {b})"),
            Expr::Exists(vs, body) => write!(f, "∃ {}. {body}", binders(vs)),
            Expr::Forall(vs, body) => write!(f, "∀ {}. {body}", binders(vs)),
        }
    }
}
