//! S-expressions as printed by SMT solvers, and their reading back into formulae.

use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::num::parse_decimal;
use crate::properties::{CmpOp, Expr, Sort, SortedVar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    /// A symbol or numeral; quoted symbols lose their bars.
    Atom(String),
    Str(String),
    List(Vec<SExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SExprError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected `)` at byte {0}")]
    Unbalanced(usize),
    #[error("unterminated {0}")]
    Unterminated(&'static str),
    #[error("cannot read `{0}` as a formula")]
    NotAFormula(String),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(xs) => Some(xs),
            _ => None,
        }
    }

    /// `(head …)` where `head` is the atom `name`.
    pub fn is_app(&self, name: &str) -> bool {
        self.list()
            .and_then(|xs| xs.first())
            .and_then(SExpr::atom)
            .is_some_and(|h| h == name)
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::Str(s) => write!(f, "\"{s}\""),
            SExpr::List(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses every s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, SExprError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                if stack.len() < 2 {
                    return Err(SExprError::Unbalanced(i));
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(SExpr::List(done));
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'|' => {
                let end = text[i + 1..]
                    .find('|')
                    .ok_or(SExprError::Unterminated("quoted symbol"))?;
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(text[i + 1..i + 1 + end].to_string()));
                i += end + 2;
            }
            b'"' => {
                let mut j = i + 1;
                let mut s = String::new();
                loop {
                    match text[j..].find('"') {
                        None => return Err(SExprError::Unterminated("string")),
                        Some(k) => {
                            s.push_str(&text[j..j + k]);
                            j += k + 1;
                            if bytes.get(j) == Some(&b'"') {
                                s.push('"');
                                j += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                stack.last_mut().unwrap().push(SExpr::Str(s));
                i = j;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b'|' | b'"' | b';')
                {
                    i += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(text[start..i].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SExprError::Eof);
    }
    Ok(stack.pop().unwrap())
}

pub fn parse_one(text: &str) -> Result<SExpr, SExprError> {
    parse_all(text)?.into_iter().next().ok_or(SExprError::Eof)
}

/// A real constant: a numeral or decimal, possibly under `-` and `/`.
pub fn real_constant(s: &SExpr) -> Option<BigRational> {
    match s {
        SExpr::Atom(a) => parse_decimal(a),
        SExpr::List(xs) => match xs.as_slice() {
            [SExpr::Atom(op), x] if op == "-" => real_constant(x).map(|q| -q),
            [SExpr::Atom(op), a, b] if op == "/" => {
                let (a, b) = (real_constant(a)?, real_constant(b)?);
                (b != BigRational::from_integer(0.into())).then(|| a / b)
            }
            _ => None,
        },
        SExpr::Str(_) => None,
    }
}

fn not_formula(s: &SExpr) -> SExprError {
    SExprError::NotAFormula(s.to_string())
}

/// Reads a term produced by the encoder back into a formula.
pub fn to_expr(s: &SExpr) -> Result<Expr, SExprError> {
    match s {
        SExpr::Atom(a) if a == "true" => Ok(Expr::Bool(true)),
        SExpr::Atom(a) if a == "false" => Ok(Expr::Bool(false)),
        SExpr::Atom(a) => Ok(match parse_decimal(a) {
            Some(q) => Expr::Num(q),
            None => Expr::Var(a.clone()),
        }),
        SExpr::Str(_) => Err(not_formula(s)),
        SExpr::List(xs) => {
            let Some((SExpr::Atom(head), args)) = xs.split_first() else {
                return Err(not_formula(s));
            };
            if head == "-" || head == "/" {
                if let Some(q) = real_constant(s) {
                    return Ok(Expr::Num(q));
                }
            }
            let e = |i: usize| -> Result<Expr, SExprError> { to_expr(&args[i]) };
            let bin = |f: fn(Box<Expr>, Box<Expr>) -> Expr| -> Result<Expr, SExprError> {
                if args.len() != 2 {
                    return Err(not_formula(s));
                }
                Ok(f(Box::new(e(0)?), Box::new(e(1)?)))
            };
            match head.as_str() {
                "+" => bin(Expr::Add),
                "*" => bin(Expr::Mul),
                "/" => bin(Expr::Div),
                "^" => bin(Expr::Pow),
                "<" => bin(|a, b| Expr::Cmp(CmpOp::Lt, a, b)),
                "<=" => bin(|a, b| Expr::Cmp(CmpOp::Le, a, b)),
                "=" => bin(|a, b| Expr::Cmp(CmpOp::Eq, a, b)),
                "distinct" => bin(|a, b| Expr::Cmp(CmpOp::Ne, a, b)),
                "=>" => bin(Expr::Implies),
                "-" if args.len() == 1 => Ok(Expr::mul(Expr::int(-1), e(0)?)),
                "not" if args.len() == 1 => Ok(Expr::Not(Box::new(e(0)?))),
                "ite" if args.len() == 3 => {
                    Ok(Expr::Ite(Box::new(e(0)?), Box::new(e(1)?), Box::new(e(2)?)))
                }
                "and" => Ok(Expr::And(
                    args.iter().map(to_expr).collect::<Result<_, _>>()?,
                )),
                "or" => Ok(Expr::Or(
                    args.iter().map(to_expr).collect::<Result<_, _>>()?,
                )),
                "exists" | "forall" if args.len() == 2 => {
                    let vars = args[0]
                        .list()
                        .ok_or_else(|| not_formula(s))?
                        .iter()
                        .map(|b| match b.list() {
                            Some([SExpr::Atom(n), SExpr::Atom(sort)]) => {
                                let sort = match sort.as_str() {
                                    "Real" => Sort::Real,
                                    "Bool" => Sort::Bool,
                                    _ => return Err(not_formula(b)),
                                };
                                Ok(SortedVar::new(n.clone(), sort))
                            }
                            _ => Err(not_formula(b)),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let body = Box::new(e(1)?);
                    Ok(if head == "exists" {
                        Expr::Exists(vars, body)
                    } else {
                        Expr::Forall(vars, body)
                    })
                }
                _ => Err(not_formula(s)),
            }
        }
    }
}
