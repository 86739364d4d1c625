use std::path::PathBuf;
use std::time::Duration;

use eo_fragile::detector::{analyze_program, DetectorConfig, Verdict};
use eo_fragile::inliner::inline_object;
use eo_fragile::interpreter::{call_method, differential_check, Datum, DEFAULT_FUEL};
use eo_fragile::locators::resolve_locators;
use eo_fragile::methods::{decoration_chain, find_methods};
use eo_fragile::num::Number;
use eo_fragile::properties::{summarize_chain, InferConfig};
use eo_fragile::smt::{sample_models, ModelValue, SolverConfig};
use eo_fragile::syntax::*;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn source(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap()
}

fn load(name: &str) -> Program {
    resolve_locators(&parse_file(&source(name), name).unwrap()).unwrap()
}

fn corpus() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".eo"))
        .collect();
    names.sort();
    names
}

fn z3() -> Option<DetectorConfig> {
    let ok = std::process::Command::new("z3")
        .arg("-version")
        .output()
        .is_ok_and(|o| o.status.success());
    ok.then(|| DetectorConfig {
        solver: SolverConfig::new("z3 -in", Duration::from_secs(20)),
        ..Default::default()
    })
}

#[test]
fn shifted_sqrt_inlining_matches_the_refactored_listing() {
    let out = inline_object("a", &load("shifted_sqrt.eo")).unwrap();
    let a = out.program.get("a").unwrap();
    assert_eq!(
        render_top_object("a", a),
        source("shifted_sqrt_inlined_a.eo")
    );
    assert_eq!(out.count, 1);
}

#[test]
fn args_g_inlining_matches_the_listing() {
    let out = inline_object("obj", &load("args_g.eo")).unwrap();
    let expected = load("args_g_inlined.eo");
    assert_eq!(out.program, expected);
    assert_eq!(render(&out.program), source("args_g_inlined.eo"));
}

#[test]
fn rendering_round_trips_every_fixture() {
    for name in corpus() {
        let p = load(&name);
        let again = resolve_locators(&parse(&render(&p)).unwrap()).unwrap();
        assert_eq!(again, p, "{name}");
    }
}

fn counts(name: &str, cfg: &DetectorConfig) -> (usize, usize, usize) {
    let a = analyze_program(&load(name), cfg).unwrap();
    (
        a.count(Verdict::Defect),
        a.count(Verdict::NoDefectProved),
        a.count(Verdict::Inconclusive),
    )
}

#[test]
fn detector_verdicts_on_the_corpus() {
    let Some(cfg) = z3() else {
        eprintln!("z3 not found; skipping");
        return;
    };
    assert_eq!(counts("shifted_sqrt.eo", &cfg), (1, 1, 0));
    assert_eq!(counts("shifted_sqrt_override_g.eo", &cfg), (0, 3, 0));
    assert_eq!(counts("fee.eo", &cfg), (1, 1, 0));
    assert_eq!(counts("guard.eo", &cfg), (1, 1, 0));
    assert_eq!(counts("branches.eo", &cfg), (0, 3, 0));
    for name in ["nodec.eo", "recip.eo", "body.eo", "args_g.eo"] {
        assert_eq!(counts(name, &cfg), (0, 0, 0), "{name}");
    }
    let chain = analyze_program(&load("chain.eo"), &cfg).unwrap();
    let defects: Vec<_> = chain.defects().collect();
    assert_eq!(defects.len(), 1);
    assert_eq!(defects[0].pair.decorated, "a");
    assert_eq!(defects[0].pair.decorator, "c");
    assert_eq!(defects[0].method, "h");
}

#[test]
fn every_defect_is_confirmed_by_the_interpreter() {
    let Some(cfg) = z3() else { return };
    for name in corpus() {
        let analysis = analyze_program(&load(&name), &cfg).unwrap();
        for d in analysis.defects() {
            let oracle = d
                .oracle
                .as_ref()
                .unwrap_or_else(|| panic!("{name}: no oracle"));
            assert!(
                oracle.confirmed,
                "{name}: {}.{}",
                d.pair.decorator, d.method
            );
        }
    }
}

#[test]
fn counterexamples_are_concrete() {
    let Some(cfg) = z3() else { return };
    let fee = analyze_program(&load("fee.eo"), &cfg).unwrap();
    let d = fee.defects().next().unwrap();
    assert_eq!(
        d.counterexample.as_ref().unwrap()["amount"],
        ModelValue::Rational(num_rational::BigRational::from_integer(10.into()))
    );
    let guard = analyze_program(&load("guard.eo"), &cfg).unwrap();
    let d = guard.defects().next().unwrap();
    assert!(d.counterexample.as_ref().unwrap()["n"].to_f64().unwrap() < 1.0);
}

#[test]
fn parallel_analysis_is_deterministic() {
    let Some(cfg) = z3() else { return };
    let p = load("chain.eo");
    let serial = analyze_program(&p, &cfg).unwrap();
    let parallel = analyze_program(&p, &DetectorConfig { jobs: 4, ..cfg }).unwrap();
    let key = |a: &eo_fragile::detector::Analysis| {
        a.reports
            .iter()
            .map(|r| (r.pair.clone(), r.method.clone(), r.verdict))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&serial), key(&parallel));
}

#[test]
fn differential_runs_agree_with_the_detector() {
    let shifted_sqrt = differential_check(&load("shifted_sqrt.eo"), "a", 200, 0).unwrap();
    assert!(shifted_sqrt
        .mismatches
        .iter()
        .all(|m| m.method == "h" || m.method == "g"));
    assert!(shifted_sqrt.mismatches.iter().any(|m| m.method == "h"));
    let fixed = differential_check(&load("shifted_sqrt_override_g.eo"), "a", 1000, 0).unwrap();
    assert!(fixed.mismatches.is_empty());
    let branches = differential_check(&load("branches.eo"), "shape", 500, 0).unwrap();
    assert!(!branches.mismatches.is_empty());
    assert!(branches.mismatches.iter().all(|m| m.after.error.is_none()));
}

fn datum(v: &ModelValue) -> Datum {
    match v {
        ModelValue::Bool(b) => Datum::Bool(*b),
        other => Datum::Number(other.as_number().unwrap()),
    }
}

/// Models of each method's inferred precondition never make the method fail.
#[test]
fn summaries_are_sound_on_samples() {
    let mut checked = 0;
    for name in corpus() {
        let p = load(&name);
        for obj in &p.objects {
            let chain = decoration_chain(&p, &obj.name).unwrap();
            let env = summarize_chain(&p, &chain, InferConfig::default());
            for m in find_methods(&obj.name, &obj.body) {
                let s = env.get(&obj.name, &m.name).unwrap();
                assert!(s.forall_vars.iter().all(|v| s.params.contains(&v.name)));
                let models = sample_models(&s.closed_properties(), &s.forall_vars, 100, 50_000, 5);
                assert_eq!(models.len(), 100, "{name}: {}", s.method);
                for model in models {
                    let args: Vec<Datum> = s.params.iter().map(|p| datum(&model[p])).collect();
                    let r = call_method(&p, &obj.name, &m.name, &args, DEFAULT_FUEL);
                    assert!(r.is_ok(), "{name}: {} on {args:?}: {r:?}", s.method);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 100 * 20);
}

#[test]
fn body_density_is_a_ratio() {
    let p = load("body.eo");
    let r = eo_fragile::interpreter::evaluate(&p, "(body 56 34).density", DEFAULT_FUEL).unwrap();
    let expected = num_rational::BigRational::new(56.into(), 34.into());
    assert_eq!(r, Ok(Datum::Number(Number::Exact(expected))));
}
