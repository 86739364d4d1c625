//! One PASS/FAIL line per acceptance criterion.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use eo_fragile::detector::defect_formula;
use eo_fragile::interpreter::{call_method, differential_check, Datum, DEFAULT_FUEL};
use eo_fragile::locators::resolve_locators;
use eo_fragile::methods::{decoration_chain, find_methods, MethodKey};
use eo_fragile::properties::{
    summarize_chain, ApproxFlags, Expr, InferConfig, MethodSummary, SortedVar,
};
use eo_fragile::smt::{check, sample_models, to_smtlib, CheckResult, ModelValue, SolverConfig};
use eo_fragile::syntax::{parse_file, Program};
use eo_fragile::testkit::{random_program, GenConfig};
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn load(name: &str) -> Program {
    let src = std::fs::read_to_string(fixture(name)).unwrap();
    resolve_locators(&parse_file(&src, name).unwrap()).unwrap()
}

fn eo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_eo-fragile"))
        .args(args)
        .output()
        .unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn solver(timeout: Duration) -> SolverConfig {
    SolverConfig::resolve(None, timeout)
}

fn shifted_sqrt_end_to_end() -> Outcome {
    let start = Instant::now();
    let f = fixture("shifted_sqrt.eo");
    let o = eo(&["analyze", f.to_str().unwrap(), "--format", "json"]);
    let elapsed = start.elapsed();
    let doc: Value = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
    let defects: Vec<&Value> = doc
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["verdict"] == "Defect")
        .collect();
    ensure(defects.len() == 1, format!("{} defects", defects.len()))?;
    let d = defects[0];
    ensure(
        d["decorated"] == "a" && d["decorator"] == "b" && d["method"] == "h",
        "defect is not (a, b).h",
    )?;
    let z: f64 = d["counterexample"]["z"]
        .as_str()
        .and_then(|s| s.parse().ok())
        .ok_or("no counterexample for z")?;
    ensure(z < 1.0, format!("z = {z}"))?;
    ensure(
        d["oracle"]["confirmed"] == true && d["oracle"]["after"]["error"] == "NegativeSqrt",
        "oracle did not confirm",
    )?;
    ensure(o.status.code() == Some(1), "exit code is not 1")?;
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("z = {z}, {elapsed:.2?}"))
}

fn inlining_goldens() -> Outcome {
    let f = fixture("shifted_sqrt.eo");
    let o = eo(&["inline", f.to_str().unwrap(), "--object", "a"]);
    let golden = std::fs::read_to_string(fixture("shifted_sqrt_inlined_a.eo")).unwrap();
    ensure(
        String::from_utf8_lossy(&o.stdout) == golden,
        "refactored a differs",
    )?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("args_g.eo");
    let f = fixture("args_g.eo");
    eo(&[
        "inline",
        f.to_str().unwrap(),
        "--object",
        "obj",
        "--dump-inlined",
        out.to_str().unwrap(),
    ]);
    let dumped = std::fs::read_to_string(&out).map_err(|e| e.to_string());
    let golden = std::fs::read_to_string(fixture("args_g_inlined.eo")).unwrap();
    ensure(dumped? == golden, "args_g output differs")?;
    Ok("both listings match exactly".into())
}

fn unsat_within(formula: &Expr, decls: &[SortedVar], limit: Duration) -> Result<Duration, String> {
    let start = Instant::now();
    let r = check(&to_smtlib(formula, decls), &solver(limit));
    let elapsed = start.elapsed();
    match r {
        CheckResult::Unsat if elapsed <= limit => Ok(elapsed),
        CheckResult::Unsat => Err(format!("unsat after {elapsed:?}")),
        other => Err(format!("{formula}: {other:?}")),
    }
}

fn property_inference() -> Outcome {
    let x = || Expr::var("x");
    let y = || Expr::var("y");
    let cases = [
        ("recip.eo", "numbers", "recip", Expr::ne(x(), Expr::int(0))),
        ("shifted_sqrt.eo", "a", "f", Expr::le(Expr::int(0), x())),
        ("shifted_sqrt.eo", "a", "g", Expr::le(Expr::int(1), y())),
    ];
    let mut slowest = Duration::ZERO;
    for (file, obj, method, expected) in cases {
        let p = load(file);
        let chain = decoration_chain(&p, obj).map_err(|e| e.to_string())?;
        let env = summarize_chain(&p, &chain, InferConfig::default());
        let s = env
            .get(obj, method)
            .ok_or(format!("no summary for {obj}.{method}"))?;
        let props = s.closed_properties();
        for query in [
            Expr::and2(props.clone(), Expr::not(expected.clone())),
            Expr::and2(expected.clone(), Expr::not(props.clone())),
        ] {
            slowest = slowest.max(unsat_within(
                &query,
                &s.forall_vars,
                Duration::from_secs(5),
            )?);
        }
    }
    Ok(format!("6 queries unsat, slowest {slowest:.2?}"))
}

fn forced(properties: Expr) -> MethodSummary {
    MethodSummary {
        method: MethodKey::new("numbers", "square_root"),
        params: vec!["x".into()],
        forall_vars: vec![SortedVar::real("x")],
        exists_vars: vec![],
        value: None,
        properties,
        flags: ApproxFlags::default(),
        unknowns: vec![],
    }
}

fn approximation_examples() -> Outcome {
    let strong = forced(Expr::lt(Expr::int(10), Expr::var("x")));
    let weak = forced(Expr::lt(Expr::int(-10), Expr::var("x")));
    let f = defect_formula(&strong, &weak).map_err(|e| e.to_string())?;
    unsat_within(&f.negated, &f.decls, Duration::from_secs(10))?;
    let f = defect_formula(&weak, &strong).map_err(|e| e.to_string())?;
    match check(
        &to_smtlib(&f.negated, &f.decls),
        &solver(Duration::from_secs(10)),
    ) {
        CheckResult::Sat(model) => {
            let x = model
                .get("x")
                .and_then(ModelValue::to_f64)
                .ok_or("no value for x")?;
            ensure(-10.0 < x && x <= 10.0, format!("x = {x}"))?;
            Ok(format!("proved; refuted with x = {x}"))
        }
        other => Err(format!("reversed query: {other:?}")),
    }
}

fn inlining_soundness() -> Outcome {
    const PROGRAMS: u64 = 50;
    const SAMPLES: usize = 1000;
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::new());
    let workers = std::thread::available_parallelism()
        .map_or(2, |n| n.get())
        .min(16);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let seed = next.fetch_add(1, Ordering::Relaxed) as u64;
                if seed >= PROGRAMS {
                    break;
                }
                let src = random_program(seed, GenConfig::default());
                let p = resolve_locators(&eo_fragile::syntax::parse(&src).unwrap()).unwrap();
                let r = differential_check(&p, "o", SAMPLES, seed).unwrap();
                results.lock().unwrap().push((seed, r));
            });
        }
    });
    let results = results.into_inner().unwrap();
    let evaluations: usize = results.iter().map(|(_, r)| r.evaluations).sum();
    let bad: Vec<u64> = results
        .iter()
        .filter(|(_, r)| !r.mismatches.is_empty())
        .map(|(s, _)| *s)
        .collect();
    ensure(results.len() == PROGRAMS as usize, "missing programs")?;
    ensure(bad.is_empty(), format!("mismatches for seeds {bad:?}"))?;
    Ok(format!(
        "{PROGRAMS} programs, {evaluations} evaluations, 0 mismatches"
    ))
}

fn datum(v: &ModelValue) -> Datum {
    match v {
        ModelValue::Bool(b) => Datum::Bool(*b),
        other => Datum::Number(other.as_number().unwrap()),
    }
}

fn summary_soundness() -> Outcome {
    let mut names: Vec<String> = std::fs::read_dir(fixture(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".eo"))
        .collect();
    names.sort();
    let (mut methods, mut runs) = (0, 0);
    for name in names {
        let p = load(&name);
        for obj in &p.objects {
            let chain = decoration_chain(&p, &obj.name).map_err(|e| e.to_string())?;
            let env = summarize_chain(&p, &chain, InferConfig::default());
            for m in find_methods(&obj.name, &obj.body) {
                let s = env
                    .get(&obj.name, &m.name)
                    .ok_or(format!("{name}: no summary for {}", m.key()))?;
                let models = sample_models(&s.closed_properties(), &s.forall_vars, 100, 50_000, 5);
                ensure(
                    models.len() == 100,
                    format!("{name}: {} models for {}", models.len(), m.key()),
                )?;
                for model in models {
                    let args: Vec<Datum> = s.params.iter().map(|p| datum(&model[p])).collect();
                    let r = call_method(&p, &obj.name, &m.name, &args, DEFAULT_FUEL);
                    ensure(r.is_ok(), format!("{name}: {} on {args:?}: {r:?}", m.key()))?;
                    runs += 1;
                }
                methods += 1;
            }
        }
    }
    Ok(format!("{methods} methods, {runs} runs, 0 errors"))
}

fn negative_control() -> Outcome {
    let f = fixture("shifted_sqrt_override_g.eo");
    let o = eo(&["analyze", f.to_str().unwrap(), "--format", "json"]);
    let doc: Value = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
    let defects = doc
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["verdict"] == "Defect")
        .count();
    ensure(defects == 0, format!("{defects} defects"))?;
    ensure(
        o.status.code() == Some(0),
        format!("exit code {:?}", o.status.code()),
    )?;
    let r = differential_check(&load("shifted_sqrt_override_g.eo"), "a", 1000, 0)
        .map_err(|e| e.to_string())?;
    ensure(
        r.mismatches.is_empty(),
        format!("{} mismatches", r.mismatches.len()),
    )?;
    Ok(format!(
        "exit 0, {} evaluations without mismatch",
        r.evaluations
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("shifted_sqrt end-to-end", shifted_sqrt_end_to_end),
        ("inlining goldens", inlining_goldens),
        ("property inference", property_inference),
        ("approximation examples", approximation_examples),
        ("inlining soundness", inlining_soundness),
        ("summary soundness", summary_soundness),
        ("negative control", negative_control),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
