//! Satisfying assignments and their parsing from `get-model` output.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::sexpr::{real_constant, SExpr};
use crate::num::{decimal_string, rational_to_string, Number};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelValue {
    Rational(BigRational),
    /// An irrational value: the solver's text and a decimal approximation.
    Approx {
        text: String,
        value: f64,
    },
    Bool(bool),
}

impl ModelValue {
    pub fn as_number(&self) -> Option<Number> {
        match self {
            ModelValue::Rational(q) => Some(Number::Exact(q.clone())),
            ModelValue::Approx { value, .. } => Some(Number::Approx(*value)),
            ModelValue::Bool(_) => None,
        }
    }

    /// Decimal text; exact when the expansion terminates.
    pub fn decimal(&self) -> String {
        match self {
            ModelValue::Rational(q) => decimal_string(q).unwrap_or_else(|| {
                let approx = q.to_f64().unwrap_or(f64::NAN);
                format!("{approx}")
            }),
            ModelValue::Approx { value, .. } => format!("{value}"),
            ModelValue::Bool(b) => b.to_string(),
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.as_number().map(|n| n.to_f64())
    }
}

impl fmt::Display for ModelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelValue::Rational(q) => f.write_str(&rational_to_string(q)),
            ModelValue::Approx { value, .. } => write!(f, "≈{value}"),
            ModelValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for ModelValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.decimal())
    }
}

pub type Model = BTreeMap<String, ModelValue>;

/// Reads the `define-fun` entries of a model. Entries of other shapes are skipped.
pub fn parse_model(items: &[SExpr]) -> Model {
    let mut out = Model::new();
    for item in items {
        collect(item, &mut out);
    }
    out
}

fn collect(s: &SExpr, out: &mut Model) {
    let Some(xs) = s.list() else { return };
    if let [SExpr::Atom(kw), SExpr::Atom(name), SExpr::List(params), _sort, value] = xs {
        if kw == "define-fun" && params.is_empty() {
            if let Some(v) = model_value(value) {
                out.insert(name.clone(), v);
            }
            return;
        }
    }
    for x in xs {
        collect(x, out);
    }
}

fn model_value(s: &SExpr) -> Option<ModelValue> {
    match s.atom() {
        Some("true") => return Some(ModelValue::Bool(true)),
        Some("false") => return Some(ModelValue::Bool(false)),
        _ => {}
    }
    if let Some(q) = real_constant(s) {
        return Some(ModelValue::Rational(q));
    }
    if s.is_app("root-obj") {
        return root_obj(s).map(|value| ModelValue::Approx {
            text: s.to_string(),
            value,
        });
    }
    if let Some([SExpr::Atom(op), x]) = s.list() {
        if op == "-" {
            return match model_value(x)? {
                ModelValue::Approx { text, value } => Some(ModelValue::Approx {
                    text: format!("(- {text})"),
                    value: -value,
                }),
                _ => None,
            };
        }
    }
    None
}

/// Polynomial in one variable, coefficients by ascending degree.
type Poly = Vec<f64>;

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    (0..a.len().max(b.len()))
        .map(|i| a.get(i).unwrap_or(&0.0) + b.get(i).unwrap_or(&0.0))
        .collect()
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly(s: &SExpr) -> Option<Poly> {
    if let Some(q) = real_constant(s) {
        return Some(vec![q.to_f64()?]);
    }
    match s {
        SExpr::Atom(_) => Some(vec![0.0, 1.0]),
        SExpr::List(xs) => {
            let (SExpr::Atom(op), args) = xs.split_first()? else {
                return None;
            };
            let ps = args.iter().map(poly).collect::<Option<Vec<_>>>()?;
            match op.as_str() {
                "+" => ps.into_iter().reduce(|a, b| poly_add(&a, &b)),
                "*" => ps.into_iter().reduce(|a, b| poly_mul(&a, &b)),
                "-" if ps.len() == 1 => Some(ps[0].iter().map(|c| -c).collect()),
                "-" => {
                    let mut it = ps.into_iter();
                    let first = it.next()?;
                    Some(it.fold(first, |a, b| poly_add(&a, &b.iter().map(|c| -c).collect())))
                }
                "^" => {
                    let exp = real_constant(&args[1])?.to_integer().to_u32()?;
                    let base = &ps[0];
                    Some((0..exp).fold(vec![1.0], |acc, _| poly_mul(&acc, base)))
                }
                _ => None,
            }
        }
        SExpr::Str(_) => None,
    }
}

fn eval_poly(p: &Poly, x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Approximates `(root-obj p k)`: the k-th real root of `p` in ascending order.
fn root_obj(s: &SExpr) -> Option<f64> {
    let [_, p, k] = s.list()? else { return None };
    let k = k.atom()?.parse::<usize>().ok()?;
    let mut p = poly(p)?;
    while p.len() > 1 && *p.last()? == 0.0 {
        p.pop();
    }
    let lead = *p.last()?;
    if p.len() < 2 || lead == 0.0 {
        return None;
    }
    let bound = 1.0
        + p[..p.len() - 1]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max);
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev = eval_poly(&p, prev_x);
    for i in 1..=steps {
        let x = -bound + 2.0 * bound * (i as f64) / (steps as f64);
        let fx = eval_poly(&p, x);
        if prev == 0.0 {
            roots.push(prev_x);
        } else if prev.signum() != fx.signum() && fx != 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if eval_poly(&p, lo).signum() == eval_poly(&p, mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev = fx;
    }
    if prev == 0.0 {
        roots.push(prev_x);
    }
    roots.get(k.checked_sub(1)?).copied()
}
