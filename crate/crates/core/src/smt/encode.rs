//! SMT-LIB 2 rendering of formulae and queries.

use std::fmt::Write;

use num_rational::BigRational;
use num_traits::Signed;

use crate::num::decimal_string;
use crate::properties::{CmpOp, Expr, Sort, SortedVar};

pub const LOGIC: &str = "NRA";

const RESERVED: &[&str] = &[
    "true",
    "false",
    "and",
    "or",
    "not",
    "xor",
    "ite",
    "exists",
    "forall",
    "let",
    "par",
    "distinct",
    "as",
    "assert",
    "check-sat",
    "declare-const",
    "declare-fun",
    "define-fun",
    "get-model",
    "set-logic",
    "set-option",
    "abs",
    "div",
    "mod",
    "to_real",
    "to_int",
    "is_int",
    "Real",
    "Int",
    "Bool",
    "root-obj",
    "_",
    "!",
    "NUMERAL",
    "DECIMAL",
    "STRING",
    "BINARY",
    "HEXADECIMAL",
];

/// The symbol for `name`, quoted with `|…|` unless it is a plain identifier.
pub fn symbol(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name);
    if plain {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn sort_name(sort: Sort) -> &'static str {
    match sort {
        Sort::Real => "Real",
        Sort::Bool => "Bool",
    }
}

/// Real constant: `3.0`, `0.25`, `(/ 1.0 3.0)`, negatives wrapped in `(- …)`.
pub fn real_literal(q: &BigRational) -> String {
    let magnitude = q.abs();
    let body = match decimal_string(&magnitude) {
        Some(d) if d.contains('.') => d,
        Some(d) => format!("{d}.0"),
        None => format!("(/ {}.0 {}.0)", magnitude.numer(), magnitude.denom()),
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn binders(vars: &[SortedVar]) -> String {
    let items: Vec<String> = vars
        .iter()
        .map(|v| format!("({} {})", symbol(&v.name), sort_name(v.sort)))
        .collect();
    format!("({})", items.join(" "))
}

/// SMT-LIB term for `e`.
pub fn term(e: &Expr) -> String {
    let mut out = String::new();
    write_term(&mut out, e);
    out
}

fn app(out: &mut String, op: &str, args: &[&Expr]) {
    out.push('(');
    out.push_str(op);
    for a in args {
        out.push(' ');
        write_term(out, a);
    }
    out.push(')');
}

fn write_term(out: &mut String, e: &Expr) {
    match e {
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Num(q) => out.push_str(&real_literal(q)),
        Expr::Var(v) => out.push_str(&symbol(v)),
        Expr::Add(a, b) => app(out, "+", &[a, b]),
        Expr::Mul(a, b) => app(out, "*", &[a, b]),
        Expr::Div(a, b) => app(out, "/", &[a, b]),
        Expr::Pow(a, b) => app(out, "^", &[a, b]),
        Expr::Cmp(op, a, b) => {
            let name = match op {
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Eq => "=",
                CmpOp::Ne => "distinct",
            };
            app(out, name, &[a, b])
        }
        Expr::Not(a) => app(out, "not", &[a]),
        Expr::And(xs) | Expr::Or(xs) if xs.is_empty() => {
            out.push_str(if matches!(e, Expr::And(_)) {
                "true"
            } else {
                "false"
            })
        }
        Expr::And(xs) | Expr::Or(xs) if xs.len() == 1 => write_term(out, &xs[0]),
        Expr::And(xs) => app(out, "and", &xs.iter().collect::<Vec<_>>()),
        Expr::Or(xs) => app(out, "or", &xs.iter().collect::<Vec<_>>()),
        Expr::Implies(a, b) => app(out, "=>", &[a, b]),
        Expr::Ite(c, a, b) => app(out, "ite", &[c, a, b]),
        Expr::Exists(vs, body) | Expr::Forall(vs, body) => {
            let q = if matches!(e, Expr::Exists(..)) {
                "exists"
            } else {
                "forall"
            };
            let _ = write!(out, "({q} {} ", binders(vs));
            write_term(out, body);
            out.push(')');
        }
    }
}

/// A satisfiability query: constants to declare and the formula to assert.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub declarations: Vec<SortedVar>,
    pub assertion: Expr,
}

/// The complete script for `negated`, whose free variables are `decls`.
pub fn to_smtlib(negated: &Expr, decls: &[SortedVar]) -> String {
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    let _ = writeln!(out, "(set-logic {LOGIC})");
    for d in decls {
        let _ = writeln!(
            out,
            "(declare-const {} {})",
            symbol(&d.name),
            sort_name(d.sort)
        );
    }
    let _ = writeln!(out, "(assert {})", term(negated));
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

impl Query {
    pub fn script(&self) -> String {
        to_smtlib(&self.assertion, &self.declarations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn literals() {
        assert_eq!(real_literal(&q(3, 1)), "3.0");
        assert_eq!(real_literal(&q(-1, 2)), "(- 0.5)");
        assert_eq!(real_literal(&q(1, 3)), "(/ 1.0 3.0)");
        assert_eq!(real_literal(&q(-2, 3)), "(- (/ 2.0 3.0))");
    }

    #[test]
    fn symbols_are_quoted_when_needed() {
        assert_eq!(symbol("x"), "x");
        assert_eq!(symbol("$.y"), "|$.y|");
        assert_eq!(symbol("z!1"), "|z!1|");
        assert_eq!(symbol("exists"), "|exists|");
        assert_eq!(symbol("_tmp"), "_tmp");
    }

    #[test]
    fn script_layout() {
        let f = Expr::and2(
            Expr::tt(),
            Expr::not(Expr::exists(
                vec![SortedVar::real("z!1")],
                Expr::and([
                    Expr::le(Expr::int(0), Expr::var("z!1")),
                    Expr::eq(
                        Expr::mul(Expr::var("z!1"), Expr::var("z!1")),
                        Expr::sub(Expr::var("z"), Expr::int(1)),
                    ),
                ]),
            )),
        );
        assert_eq!(
            to_smtlib(&f, &[SortedVar::real("z")]),
            "(set-option :produce-models true)
(set-logic NRA)
(declare-const z Real)
(assert (not (exists ((|z!1| Real)) (and (<= 0.0 |z!1|) (= (* |z!1| |z!1|) (+ z (* (- 1.0) 1.0)))))))
(check-sat)
(get-model)
"
        );
    }
}
