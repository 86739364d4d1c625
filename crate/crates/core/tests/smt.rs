use std::process::Command;
use std::time::{Duration, Instant};

use eo_fragile::properties::{CmpOp, Expr, SortedVar};
use eo_fragile::smt::*;
use num_rational::BigRational;
use proptest::prelude::*;

fn z3() -> Option<SolverConfig> {
    let ok = Command::new("z3")
        .arg("-version")
        .output()
        .is_ok_and(|o| o.status.success());
    ok.then(|| SolverConfig::new("z3 -in", Duration::from_secs(20)))
}

fn shifted_sqrt_negation() -> Expr {
    Expr::and2(
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
    )
}

#[test]
fn solver_finds_input_below_one() {
    let Some(solver) = z3() else {
        eprintln!("z3 not found; skipping");
        return;
    };
    let f = shifted_sqrt_negation();
    let script = to_smtlib(&f, &[SortedVar::real("z")]);
    let CheckResult::Sat(model) = check(&script, &solver) else {
        panic!("expected sat");
    };
    assert!(model["z"].to_f64().unwrap() < 1.0);
    assert_eq!(holds(&f, &model), Some(true));
}

#[test]
fn trivial_scripts() {
    let Some(solver) = z3() else { return };
    assert!(check("(assert (= 1 1)) (check-sat)", &solver).is_sat());
    assert_eq!(
        check(&to_smtlib(&Expr::ff(), &[]), &solver),
        CheckResult::Unsat
    );
    let p = Expr::lt(Expr::int(0), Expr::var("x"));
    let reflexive = Expr::and2(p.clone(), Expr::not(p));
    let script = to_smtlib(&reflexive, &[SortedVar::real("x")]);
    assert_eq!(check(&script, &solver), CheckResult::Unsat);
}

#[test]
fn check_respects_timeout() {
    let solver = SolverConfig::new("sleep 30", Duration::from_millis(300));
    let start = Instant::now();
    assert_eq!(
        check("(check-sat)", &solver),
        CheckResult::Unknown("timeout".into())
    );
    assert!(start.elapsed() < Duration::from_secs(2));
}

/// Folds literal divisions and single-item connectives, which print identically.
fn normalize(e: &Expr) -> Expr {
    let b = |x: &Expr| Box::new(normalize(x));
    match e {
        Expr::Div(x, y) => match (normalize(x), normalize(y)) {
            (Expr::Num(p), Expr::Num(q)) if q != BigRational::from_integer(0.into()) => {
                Expr::Num(p / q)
            }
            (x, y) => Expr::Div(Box::new(x), Box::new(y)),
        },
        Expr::And(xs) | Expr::Or(xs) if xs.len() == 1 => normalize(&xs[0]),
        Expr::And(xs) if xs.is_empty() => Expr::tt(),
        Expr::Or(xs) if xs.is_empty() => Expr::ff(),
        Expr::And(xs) => Expr::And(xs.iter().map(normalize).collect()),
        Expr::Or(xs) => Expr::Or(xs.iter().map(normalize).collect()),
        Expr::Add(x, y) => Expr::Add(b(x), b(y)),
        Expr::Mul(x, y) => Expr::Mul(b(x), b(y)),
        Expr::Pow(x, y) => Expr::Pow(b(x), b(y)),
        Expr::Cmp(op, x, y) => Expr::Cmp(*op, b(x), b(y)),
        Expr::Not(x) => Expr::Not(b(x)),
        Expr::Implies(x, y) => Expr::Implies(b(x), b(y)),
        Expr::Ite(c, x, y) => Expr::Ite(b(c), b(x), b(y)),
        Expr::Exists(vs, x) => Expr::Exists(vs.clone(), b(x)),
        Expr::Forall(vs, x) => Expr::Forall(vs.clone(), b(x)),
        other => other.clone(),
    }
}

fn value() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-50i64..50, 1i64..8).prop_map(|(n, d)| Expr::Num(BigRational::new(n.into(), d.into()))),
        prop::sample::select(vec!["x", "$.y", "z!1", "^.a.m", "exists"]).prop_map(Expr::var),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::div(a, b)),
        ]
    })
}

fn formula() -> impl Strategy<Value = Expr> {
    let op = prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne]);
    let atom = (op, value(), value()).prop_map(|(op, a, b)| Expr::cmp(op, a, b));
    atom.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Not(Box::new(a))),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Expr::And),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Expr::Or),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Implies(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Expr::Exists(vec![SortedVar::real("w!1")], Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn encoder_round_trips(f in formula()) {
        let printed = term(&f);
        let back = to_expr(&parse_one(&printed).unwrap()).unwrap();
        prop_assert_eq!(normalize(&back), normalize(&f));
    }

    #[test]
    fn fallback_models_satisfy_the_formula(f in formula(), seed in any::<u64>()) {
        let vars: Vec<SortedVar> = f.free_vars().into_iter().map(SortedVar::real).collect();
        if let Some(m) = fallback_search(&f, &vars, 50, seed) {
            prop_assert_eq!(holds(&f, &m), Some(true));
        }
    }
}
