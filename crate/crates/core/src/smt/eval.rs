//! Direct evaluation of formulae under an assignment, with witnesses for
//! existentials computed from their defining equations.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use super::model::{Model, ModelValue};
use crate::num::Number;
use crate::properties::{CmpOp, Expr, Sort, SortedVar};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(Number),
    Bool(bool),
}

impl Value {
    fn zero(sort: Sort) -> Value {
        match sort {
            Sort::Real => Value::Num(Number::int(0)),
            Sort::Bool => Value::Bool(false),
        }
    }

    fn num(self) -> Option<Number> {
        match self {
            Value::Num(n) => Some(n),
            Value::Bool(_) => None,
        }
    }

    fn boolean(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Num(_) => None,
        }
    }

    pub fn to_model_value(&self) -> ModelValue {
        match self {
            Value::Num(Number::Exact(q)) => ModelValue::Rational(q.clone()),
            Value::Num(Number::Approx(v)) => ModelValue::Approx {
                text: format!("{v}"),
                value: *v,
            },
            Value::Bool(b) => ModelValue::Bool(*b),
        }
    }

    pub fn from_model_value(v: &ModelValue) -> Value {
        match v {
            ModelValue::Bool(b) => Value::Bool(*b),
            other => Value::Num(other.as_number().expect("numeric model value")),
        }
    }
}

pub type Env = BTreeMap<String, Value>;

/// Evaluates `e`; `None` when a variable is unbound, an operation is undefined,
/// or an existential could not be decided.
pub fn eval(e: &Expr, env: &Env) -> Option<Value> {
    let num = |x: &Expr| eval(x, env)?.num();
    let boolean = |x: &Expr| eval(x, env)?.boolean();
    Some(match e {
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Num(q) => Value::Num(Number::Exact(q.clone())),
        Expr::Var(v) => env.get(v)?.clone(),
        Expr::Add(a, b) => Value::Num(num(a)?.add(&num(b)?)),
        Expr::Mul(a, b) => Value::Num(num(a)?.mul(&num(b)?)),
        Expr::Div(a, b) => Value::Num(num(a)?.div(&num(b)?)?),
        Expr::Pow(a, b) => Value::Num(pow(&num(a)?, &num(b)?)?),
        Expr::Cmp(op, a, b) => {
            let (x, y) = (eval(a, env)?, eval(b, env)?);
            Value::Bool(match (x, y) {
                (Value::Num(x), Value::Num(y)) => {
                    let ord = x.compare(&y);
                    match op {
                        CmpOp::Lt => ord.is_lt(),
                        CmpOp::Le => ord.is_le(),
                        CmpOp::Eq => ord.is_eq(),
                        CmpOp::Ne => ord.is_ne(),
                    }
                }
                (Value::Bool(x), Value::Bool(y)) => match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => return None,
                },
                _ => return None,
            })
        }
        Expr::Not(a) => Value::Bool(!boolean(a)?),
        Expr::And(xs) => {
            let mut undecided = false;
            for x in xs {
                match boolean(x) {
                    Some(false) => return Some(Value::Bool(false)),
                    Some(true) => {}
                    None => undecided = true,
                }
            }
            if undecided {
                return None;
            }
            Value::Bool(true)
        }
        Expr::Or(xs) => {
            let mut undecided = false;
            for x in xs {
                match boolean(x) {
                    Some(true) => return Some(Value::Bool(true)),
                    Some(false) => {}
                    None => undecided = true,
                }
            }
            if undecided {
                return None;
            }
            Value::Bool(false)
        }
        Expr::Implies(a, b) => match boolean(a) {
            Some(false) => Value::Bool(true),
            Some(true) => Value::Bool(boolean(b)?),
            None => match boolean(b) {
                Some(true) => Value::Bool(true),
                _ => return None,
            },
        },
        Expr::Ite(c, a, b) => {
            if boolean(c)? {
                eval(a, env)?
            } else {
                eval(b, env)?
            }
        }
        Expr::Exists(vars, body) => Value::Bool(exists(vars, body, env)?),
        Expr::Forall(vars, body) => {
            let negated = Expr::not((**body).clone());
            Value::Bool(!exists(vars, &negated, env)?)
        }
    })
}

fn pow(base: &Number, exp: &Number) -> Option<Number> {
    let Number::Exact(q) = exp else { return None };
    if !q.is_integer() {
        return None;
    }
    let k = q.to_integer().abs().to_u32()?;
    let mut out = Number::int(1);
    for _ in 0..k {
        out = out.mul(base);
    }
    if q.is_negative() {
        Number::int(1).div(&out)
    } else {
        Some(out)
    }
}

fn exists(vars: &[SortedVar], body: &Expr, env: &Env) -> Option<bool> {
    let fill: Env = vars
        .iter()
        .map(|v| (v.name.clone(), Value::zero(v.sort)))
        .collect();
    let mut inner = env.clone();
    for v in vars {
        inner.remove(&v.name);
    }
    let pending: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    solve(body, &pending, inner, &fill, false).0
}

enum Definition {
    Value(Value),
    /// `v*v = e` with `e ≥ 0`: both square roots.
    Roots(Number),
    Impossible,
}

/// Decides `body` over the `pending` variables. Variables fixed by an
/// unconditional equation take the forced value; the rest come from `fill`.
/// Unless `defaults_decide`, a false result is conclusive only if every
/// pending variable was forced.
pub(crate) fn solve(
    body: &Expr,
    pending: &[String],
    env: Env,
    fill: &Env,
    defaults_decide: bool,
) -> (Option<bool>, Env) {
    let open: Vec<&String> = pending.iter().filter(|v| !env.contains_key(*v)).collect();
    if open.is_empty() {
        let r = eval(body, &env).and_then(Value::boolean);
        return (r, env);
    }
    match find_definition(body, &open, &env) {
        Some((_, Definition::Impossible)) => (Some(false), env),
        Some((v, Definition::Value(x))) => {
            let mut env = env;
            env.insert(v, x);
            solve(body, pending, env, fill, defaults_decide)
        }
        Some((v, Definition::Roots(r))) => {
            let mut all_false = true;
            let mut last = env.clone();
            for candidate in [r.clone(), Number::int(0).sub(&r)] {
                let mut next = env.clone();
                next.insert(v.clone(), Value::Num(candidate));
                let (res, out) = solve(body, pending, next, fill, defaults_decide);
                match res {
                    Some(true) => return (Some(true), out),
                    Some(false) => {}
                    None => all_false = false,
                }
                last = out;
            }
            (all_false.then_some(false), last)
        }
        None => {
            let mut env = env;
            for v in open {
                let x = fill.get(v).cloned().unwrap_or(Value::Num(Number::int(0)));
                env.insert(v.clone(), x);
            }
            match eval(body, &env).and_then(Value::boolean) {
                Some(true) => (Some(true), env),
                Some(false) if defaults_decide => (Some(false), env),
                _ => (None, env),
            }
        }
    }
}

fn find_definition(e: &Expr, open: &[&String], env: &Env) -> Option<(String, Definition)> {
    match e {
        Expr::And(xs) => xs.iter().find_map(|x| find_definition(x, open, env)),
        Expr::Implies(g, c) if eval(g, env) == Some(Value::Bool(true)) => {
            find_definition(c, open, env)
        }
        Expr::Cmp(CmpOp::Eq, a, b) => define(a, b, open, env).or_else(|| define(b, a, open, env)),
        _ => None,
    }
}

fn define(lhs: &Expr, rhs: &Expr, open: &[&String], env: &Env) -> Option<(String, Definition)> {
    let is_open = |v: &String| open.contains(&v);
    match lhs {
        Expr::Var(v) if is_open(v) => Some((v.clone(), Definition::Value(eval(rhs, env)?))),
        Expr::Mul(x, y) => match (&**x, &**y) {
            (Expr::Var(v), Expr::Var(w)) if v == w && is_open(v) => {
                let n = eval(rhs, env)?.num()?;
                let def = match n.sqrt() {
                    Some(r) if !n.is_negative() => Definition::Roots(r),
                    _ => Definition::Impossible,
                };
                Some((v.clone(), def))
            }
            _ => None,
        },
        _ => None,
    }
}

/// Whether `e` holds under `model`; variables the model omits are treated as
/// existentially chosen.
pub fn holds(e: &Expr, model: &Model) -> Option<bool> {
    let env: Env = model
        .iter()
        .map(|(k, v)| (k.clone(), Value::from_model_value(v)))
        .collect();
    let pending: Vec<String> = e
        .free_vars()
        .into_iter()
        .filter(|v| !env.contains_key(v))
        .collect();
    solve(e, &pending, env, &Env::new(), false).0
}

pub(crate) fn rational(n: i64, d: i64) -> Value {
    Value::Num(Number::Exact(BigRational::new(n.into(), d.into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), rational(*v, 1)))
            .collect()
    }

    fn witness_formula() -> Expr {
        Expr::exists(
            vec![SortedVar::real("w")],
            Expr::and([
                Expr::le(Expr::int(0), Expr::var("w")),
                Expr::eq(
                    Expr::mul(Expr::var("w"), Expr::var("w")),
                    Expr::sub(Expr::var("z"), Expr::int(1)),
                ),
            ]),
        )
    }

    #[test]
    fn arithmetic_and_comparisons() {
        let e = Expr::lt(Expr::div(Expr::int(1), Expr::var("x")), Expr::int(1));
        assert_eq!(eval(&e, &env(&[("x", 2)])), Some(Value::Bool(true)));
        assert_eq!(eval(&e, &env(&[("x", 0)])), None);
        assert_eq!(eval(&e, &Env::new()), None);
    }

    #[test]
    fn sqrt_witnesses_are_computed() {
        let f = witness_formula();
        assert_eq!(eval(&f, &env(&[("z", 5)])), Some(Value::Bool(true)));
        assert_eq!(eval(&f, &env(&[("z", 0)])), Some(Value::Bool(false)));
        assert_eq!(eval(&f, &env(&[("z", 3)])), Some(Value::Bool(true)));
    }

    #[test]
    fn negative_root_is_tried() {
        let f = Expr::exists(
            vec![SortedVar::real("w")],
            Expr::and([
                Expr::lt(Expr::var("w"), Expr::int(0)),
                Expr::eq(Expr::mul(Expr::var("w"), Expr::var("w")), Expr::int(4)),
            ]),
        );
        assert_eq!(eval(&f, &Env::new()), Some(Value::Bool(true)));
    }

    #[test]
    fn undetermined_existentials_are_undecided_when_false() {
        let f = Expr::exists(
            vec![SortedVar::real("w")],
            Expr::lt(Expr::int(0), Expr::var("w")),
        );
        assert_eq!(eval(&f, &Env::new()), None);
        let g = Expr::exists(
            vec![SortedVar::real("w")],
            Expr::le(Expr::var("w"), Expr::int(0)),
        );
        assert_eq!(eval(&g, &Env::new()), Some(Value::Bool(true)));
    }
}
