//! Comparison of method results before and after inlining.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{with_large_stack, Datum, Evaluator, Outcome, RuntimeErrorKind, DEFAULT_FUEL};
use crate::inliner::{inline_object, InlineError};
use crate::methods::{decoration_chain, find_methods};
use crate::num::Number;
use crate::syntax::*;

const GRID: &[(i64, i64)] = &[
    (0, 1),
    (1, 1),
    (-1, 1),
    (2, 1),
    (-2, 1),
    (1, 2),
    (-1, 2),
    (3, 1),
    (5, 1),
    (-5, 1),
    (10, 1),
    (-10, 1),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeView {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Datum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&Outcome> for OutcomeView {
    fn from(o: &Outcome) -> Self {
        match o {
            Ok(d) => OutcomeView {
                value: Some(d.clone()),
                error: None,
            },
            Err(e) => OutcomeView {
                value: None,
                error: Some(e.kind.code().to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub object: Ident,
    pub method: Ident,
    pub inputs: Vec<Datum>,
    pub before: OutcomeView,
    pub after: OutcomeView,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DifferentialReport {
    pub decorated: Ident,
    /// Objects whose methods were exercised.
    pub objects: Vec<Ident>,
    pub evaluations: usize,
    pub out_of_fuel: usize,
    pub mismatches: Vec<Mismatch>,
}

/// The first three vectors are all zeros, ones and minus ones; then grid
/// points, then seeded random rationals.
pub fn sample_inputs(arity: usize, samples: usize, seed: u64) -> Vec<Vec<Datum>> {
    let rational = |n: i64, d: i64| {
        Datum::Number(Number::Exact(num_rational::BigRational::new(
            n.into(),
            d.into(),
        )))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid_size = GRID.len().checked_pow(arity as u32).unwrap_or(usize::MAX);
    (0..samples)
        .map(|i| {
            if i < grid_size {
                let mut k = i;
                (0..arity)
                    .map(|_| {
                        let (n, d) = GRID[k % GRID.len()];
                        k /= GRID.len();
                        rational(n, d)
                    })
                    .collect()
            } else {
                (0..arity)
                    .map(|_| rational(rng.gen_range(-100..=100), rng.gen_range(1..=10)))
                    .collect()
            }
        })
        .collect()
}

/// Objects decorating `obj` directly or transitively, or `obj` itself when
/// nothing decorates it.
fn exercised_objects(program: &Program, obj: &str) -> Vec<Ident> {
    let decorators: Vec<Ident> = program
        .objects
        .iter()
        .filter(|o| o.name != obj)
        .filter(|o| decoration_chain(program, &o.name).is_ok_and(|c| c.iter().any(|n| n == obj)))
        .map(|o| o.name.clone())
        .collect();
    if decorators.is_empty() {
        vec![obj.to_string()]
    } else {
        decorators
    }
}

/// Methods callable on `obj` through its decoration chain, with their arity
/// excluding the receiver.
fn visible_methods(program: &Program, obj: &str) -> Vec<(Ident, usize)> {
    let chain = decoration_chain(program, obj).unwrap_or_else(|_| vec![obj.to_string()]);
    let mut out: Vec<(Ident, usize)> = Vec::new();
    for name in &chain {
        let Some(body) = program.get(name) else {
            continue;
        };
        for m in find_methods(name, body) {
            if !out.iter().any(|(n, _)| *n == m.name) {
                out.push((m.name.clone(), m.arity()));
            }
        }
    }
    out
}

/// Evaluates every method visible on the decorators of `obj` before and after
/// inlining `obj`, on `samples` inputs each.
pub fn differential_check(
    program: &Program,
    obj: &str,
    samples: usize,
    seed: u64,
) -> Result<DifferentialReport, InlineError> {
    let after_program = inline_object(obj, program)?.program;
    let mut report = DifferentialReport {
        decorated: obj.to_string(),
        objects: exercised_objects(program, obj),
        ..Default::default()
    };
    let before_eval = Evaluator::new(program);
    let after_eval = Evaluator::new(&after_program);
    let mut jobs = Vec::new();
    for target in &report.objects {
        for (method, arity) in visible_methods(program, target) {
            jobs.push((target.clone(), method, arity));
        }
    }
    with_large_stack(|| {
        for (target, method, arity) in jobs {
            for inputs in sample_inputs(arity, samples, seed) {
                let before = before_eval.call(&target, &method, &inputs, DEFAULT_FUEL);
                let after = after_eval.call(&target, &method, &inputs, DEFAULT_FUEL);
                report.evaluations += 2;
                let fuel =
                    |o: &Outcome| matches!(o, Err(e) if e.kind == RuntimeErrorKind::OutOfFuel);
                if fuel(&before) || fuel(&after) {
                    report.out_of_fuel += 1;
                    continue;
                }
                let differs = match (&before, &after) {
                    (Ok(_), Err(_)) => true,
                    (Ok(x), Ok(y)) => !x.approx_eq(y),
                    _ => false,
                };
                if differs {
                    report.mismatches.push(Mismatch {
                        object: target.clone(),
                        method: method.clone(),
                        inputs,
                        before: (&before).into(),
                        after: (&after).into(),
                    });
                }
            }
        }
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locators::resolve_locators;

    fn program(src: &str) -> Program {
        resolve_locators(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn sqrt_defect_is_witnessed() {
        let p = program(
            "[] > a
  [self x] > f
    $.x.sqrt > @
  [self y] > g
    $.self.f $.self ($.y.sub 1) > @
  [self z] > h
    $.z > @

[] > b
  ^.a > @
  [self x] > f
    $.x.mul $.x > @
  [self z] > h
    $.self.g $.self $.z > @
",
        );
        let r = differential_check(&p, "a", 20, 0).unwrap();
        assert_eq!(r.objects, vec!["b"]);
        let zero = r
            .mismatches
            .iter()
            .find(|m| m.method == "h" && m.inputs == vec![Datum::Number(Number::int(0))])
            .unwrap();
        assert_eq!(zero.before.value, Some(Datum::Number(Number::int(1))));
        assert_eq!(zero.after.error.as_deref(), Some("NegativeSqrt"));
    }

    #[test]
    fn undecorated_object_has_no_mismatches() {
        let p = program(
            "[] > o
  [self x] > id
    $.x > @
  [self x] > twice
    ($.self.id $.self $.x).mul 2 > @
",
        );
        let r = differential_check(&p, "o", 200, 3).unwrap();
        assert_eq!(r.objects, vec!["o"]);
        assert!(r.mismatches.is_empty());
        assert_eq!(r.evaluations, 800);
    }

    #[test]
    fn samples_start_with_simple_points() {
        let s = sample_inputs(2, 200, 1);
        assert_eq!(s.len(), 200);
        assert_eq!(s[0], vec![Datum::Number(Number::int(0)); 2]);
        assert_eq!(
            s[1],
            vec![Datum::Number(Number::int(1)), Datum::Number(Number::int(0))]
        );
        assert_eq!(sample_inputs(2, 200, 1), s);
    }
}
