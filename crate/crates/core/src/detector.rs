//! Detection of unjustified assumptions: decorator methods whose precondition
//! is weakened by inlining calls in the object they decorate.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;

use crate::inliner::{inline_method, inline_object, InlineError};
use crate::interpreter::{call_method, Datum, Outcome, OutcomeView, DEFAULT_FUEL};
use crate::methods::*;
use crate::num::{rational_from_f64, Number};
use crate::properties::*;
use crate::smt::{self, fallback_search, CheckResult, Model, ModelValue, SolverConfig};
use crate::syntax::*;

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    pub solver: SolverConfig,
    /// Reject unknown terms on the before side instead of ignoring them, so
    /// that reported defects cannot come from an ignored unknown.
    pub strict_unknown: bool,
    /// Worker threads for independent method analyses.
    pub jobs: usize,
    /// Inline one method of the decorated object at a time instead of all at once.
    pub per_method: bool,
    pub fallback_budget: usize,
    pub seed: u64,
}

impl DetectorConfig {
    fn before_infer(&self) -> InferConfig {
        InferConfig {
            unknown: if self.strict_unknown {
                UnknownPolicy::Reject
            } else {
                UnknownPolicy::Ignore
            },
        }
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            solver: SolverConfig::resolve(None, Duration::from_secs(10)),
            strict_unknown: false,
            jobs: 1,
            per_method: false,
            fallback_budget: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    Defect,
    NoDefectProved,
    Inconclusive,
    SignatureChanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    Solver,
    Search,
}

/// Both runs of the method on the counterexample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub inputs: Vec<Datum>,
    pub before: OutcomeView,
    pub after: OutcomeView,
    /// Before succeeds and after fails.
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub pair: DecorationPair,
    pub method: Ident,
    /// Set in per-method mode: the decorated method that was inlined.
    pub inlined: Option<Ident>,
    pub span: SourceSpan,
    pub before: Option<MethodSummary>,
    pub after: Option<MethodSummary>,
    pub verdict: Verdict,
    pub counterexample: Option<Model>,
    pub model_source: Option<ModelSource>,
    pub soundness_note: String,
    /// Why the verdict is not definite.
    pub reason: Option<String>,
    /// The SMT-LIB script that was sent to the solver.
    pub query: Option<String>,
    pub oracle: Option<OracleCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub span: SpanView,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Analysis {
    pub reports: Vec<DefectReport>,
    pub warnings: Vec<Warning>,
}

impl Analysis {
    pub fn defects(&self) -> impl Iterator<Item = &DefectReport> {
        self.reports.iter().filter(|r| r.verdict == Verdict::Defect)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.reports.iter().filter(|r| r.verdict == verdict).count()
    }
}

/// Summaries of every method reachable from the decorator, with calls on
/// `self` dispatched decorator first.
pub fn summarize_through_decoration(
    pair: &DecorationPair,
    program: &Program,
    config: InferConfig,
) -> Result<SummaryEnv, DecorationError> {
    let chain = decoration_chain(program, &pair.decorator)?;
    Ok(summarize_chain(program, &chain, config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectFormula {
    /// `∀x̄. (∃ȳ. P_before) → (∃z̄. P_after)`.
    pub formula: Expr,
    /// `(∃ȳ. P_before) ∧ ¬(∃z̄. P_after)` over the free variables `decls`.
    pub negated: Expr,
    pub decls: Vec<SortedVar>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("arity changed from {before} to {after}")]
    SignatureMismatch { before: usize, after: usize },
    #[error("variable `{0}` is used with different sorts")]
    SortConflict(String),
}

pub fn defect_formula(
    before: &MethodSummary,
    after: &MethodSummary,
) -> Result<DefectFormula, FormulaError> {
    if before.arity() != after.arity() {
        return Err(FormulaError::SignatureMismatch {
            before: before.arity(),
            after: after.arity(),
        });
    }
    let mut decls: Vec<SortedVar> = before.forall_vars.clone();
    for v in &after.forall_vars {
        match decls.iter().find(|d| d.name == v.name) {
            Some(d) if d.sort != v.sort => return Err(FormulaError::SortConflict(v.name.clone())),
            Some(_) => {}
            None => decls.push(v.clone()),
        }
    }
    let (pb, pa) = (before.closed_properties(), after.closed_properties());
    Ok(DefectFormula {
        formula: Expr::forall(decls.clone(), Expr::implies(pb.clone(), pa.clone())),
        negated: Expr::and2(pb, Expr::not(pa)),
        decls,
    })
}

/// Which verdicts the approximations in force leave trustworthy.
pub fn soundness_note(before: &ApproxFlags, after: &ApproxFlags) -> String {
    let mut notes = Vec::new();
    if before.under || after.over {
        notes.push("a reported defect may be spurious");
    }
    if before.over || after.under {
        notes.push("a defect may be missed");
    }
    if notes.is_empty() {
        "exact: no unknown terms were approximated".to_string()
    } else {
        format!("approximated: {}", notes.join("; "))
    }
}

struct Task {
    pair: DecorationPair,
    inlined: Option<Ident>,
    method: MethodInfo,
    /// Indices into the summary environments and inlined programs.
    before: usize,
    after: usize,
    after_program: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Decoration(#[from] DecorationError),
    #[error(transparent)]
    Inline(#[from] InlineError),
}

/// Runs the analysis on every decoration pair of `program`.
pub fn analyze_program(
    program: &Program,
    config: &DetectorConfig,
) -> Result<Analysis, DetectError> {
    let pairs = find_decoration_pairs(program)?;
    let mut warnings = Vec::new();
    for obj in &program.objects {
        for m in find_methods(&obj.name, &obj.body) {
            for span in near_miss_calls(&m) {
                warnings.push(Warning {
                    span: (&span).into(),
                    message: format!(
                        "{}: call on `self` through a different locator is not inlined",
                        m.key()
                    ),
                });
            }
        }
    }

    let mut programs: Vec<Program> = Vec::new();
    let mut envs: Vec<SummaryEnv> = Vec::new();
    let mut tasks = Vec::new();
    let mut inlined_cache: BTreeMap<(Ident, Option<Ident>), usize> = BTreeMap::new();
    for pair in &pairs {
        let chain = decoration_chain(program, &pair.decorator)?;
        let before_env = envs.len();
        envs.push(summarize_chain(program, &chain, config.before_infer()));
        let decorator = program
            .get(&pair.decorator)
            .expect("pair names a top-level object");
        let targets: Vec<Option<Ident>> = if config.per_method {
            let decorated = program
                .get(&pair.decorated)
                .expect("pair names a top-level object");
            find_methods(&pair.decorated, decorated)
                .into_iter()
                .map(|m| Some(m.name))
                .collect()
        } else {
            vec![None]
        };
        for target in targets {
            let key = (pair.decorated.clone(), target.clone());
            let index = match inlined_cache.get(&key) {
                Some(i) => *i,
                None => {
                    let outcome = match &target {
                        Some(m) => inline_method(&pair.decorated, m, program),
                        None => inline_object(&pair.decorated, program),
                    }?;
                    for skipped in &outcome.skipped {
                        let span = program
                            .get(&pair.decorated)
                            .and_then(|o| o.attrs.iter().find(|b| &b.name == skipped))
                            .map(|b| b.span.clone())
                            .unwrap_or_default();
                        warnings.push(Warning {
                            span: (&span).into(),
                            message: format!(
                                "{}.{skipped}: {}",
                                pair.decorated,
                                crate::inliner::RECURSIVE_SKIPPED
                            ),
                        });
                    }
                    programs.push(outcome.program);
                    inlined_cache.insert(key, programs.len() - 1);
                    programs.len() - 1
                }
            };
            let after_env = envs.len();
            envs.push(summarize_chain(
                &programs[index],
                &chain,
                InferConfig::default(),
            ));
            for method in find_methods(&pair.decorator, decorator) {
                tasks.push(Task {
                    pair: pair.clone(),
                    inlined: target.clone(),
                    method,
                    before: before_env,
                    after: after_env,
                    after_program: index,
                });
            }
        }
    }
    warnings.sort_by(|a, b| (&a.span, &a.message).cmp(&(&b.span, &b.message)));
    warnings.dedup();

    let results: Mutex<Vec<(usize, DefectReport)>> = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(task) = tasks.get(i) else { break };
        let report = analyze_method(
            task,
            program,
            &programs[task.after_program],
            &envs[task.before],
            &envs[task.after],
            config,
        );
        results
            .lock()
            .expect("no worker panicked")
            .push((i, report));
    };
    std::thread::scope(|s| {
        for _ in 0..config.jobs.max(1) {
            s.spawn(worker);
        }
    });
    let mut results = results.into_inner().expect("no worker panicked");
    results.sort_by_key(|(i, _)| *i);
    Ok(Analysis {
        reports: results.into_iter().map(|(_, r)| r).collect(),
        warnings,
    })
}

fn failure_reason(env: &SummaryEnv, key: &MethodKey, side: &str) -> String {
    match env.failures.get(key) {
        Some(e) => format!("{side}: {e}"),
        None => format!("{side}: no summary for {key}"),
    }
}

fn analyze_method(
    task: &Task,
    program: &Program,
    after_program: &Program,
    before_env: &SummaryEnv,
    after_env: &SummaryEnv,
    config: &DetectorConfig,
) -> DefectReport {
    let key = task.method.key();
    let before = before_env.summaries.get(&key).cloned();
    let after = after_env.summaries.get(&key).cloned();
    let mut report = DefectReport {
        pair: task.pair.clone(),
        method: task.method.name.clone(),
        inlined: task.inlined.clone(),
        span: task.method.span().clone(),
        before: before.clone(),
        after: after.clone(),
        verdict: Verdict::Inconclusive,
        counterexample: None,
        model_source: None,
        soundness_note: String::new(),
        reason: None,
        query: None,
        oracle: None,
    };
    let (Some(before), Some(after)) = (before, after) else {
        let mut reasons = Vec::new();
        if report.before.is_none() {
            reasons.push(failure_reason(before_env, &key, "before"));
        }
        if report.after.is_none() {
            reasons.push(failure_reason(after_env, &key, "after"));
        }
        report.reason = Some(reasons.join("; "));
        report.soundness_note = "no summary".into();
        return report;
    };
    report.soundness_note = soundness_note(&before.flags, &after.flags);
    let formula = match defect_formula(&before, &after) {
        Ok(f) => f,
        Err(e @ FormulaError::SignatureMismatch { .. }) => {
            report.verdict = Verdict::SignatureChanged;
            report.reason = Some(e.to_string());
            return report;
        }
        Err(e) => {
            report.reason = Some(e.to_string());
            return report;
        }
    };
    let script = smt::to_smtlib(&formula.negated, &formula.decls);
    let result = smt::check(&script, &config.solver);
    report.query = Some(script);
    match result {
        CheckResult::Sat(model) => {
            report.verdict = Verdict::Defect;
            report.counterexample = Some(restrict(model, &formula.decls));
            report.model_source = Some(ModelSource::Solver);
        }
        CheckResult::Unsat => report.verdict = Verdict::NoDefectProved,
        CheckResult::Unknown(reason) => {
            report.reason = Some(reason);
            if let Some(model) = fallback_search(
                &formula.negated,
                &formula.decls,
                config.fallback_budget,
                config.seed,
            ) {
                report.counterexample = Some(model);
                report.model_source = Some(ModelSource::Search);
            }
        }
    }
    if let Some(model) = &report.counterexample {
        report.oracle = oracle(program, after_program, &task.pair.decorator, &before, model);
    }
    report
}

/// Keeps the declared variables, choosing 0 for any the solver left out.
fn restrict(model: Model, decls: &[SortedVar]) -> Model {
    decls
        .iter()
        .map(|d| {
            let v = model.get(&d.name).cloned().unwrap_or(match d.sort {
                Sort::Real => ModelValue::Rational(num_traits::Zero::zero()),
                Sort::Bool => ModelValue::Bool(false),
            });
            (d.name.clone(), v)
        })
        .collect()
}

fn datum(v: &ModelValue) -> Option<Datum> {
    Some(match v {
        ModelValue::Bool(b) => Datum::Bool(*b),
        ModelValue::Rational(q) => Datum::Number(Number::Exact(q.clone())),
        ModelValue::Approx { value, .. } => {
            Datum::Number(Number::Exact(rational_from_f64(*value)?))
        }
    })
}

/// Runs the method on the counterexample before and after inlining. Only
/// possible when every free variable is a parameter.
fn oracle(
    program: &Program,
    after_program: &Program,
    decorator: &str,
    summary: &MethodSummary,
    model: &Model,
) -> Option<OracleCheck> {
    if summary
        .forall_vars
        .iter()
        .any(|v| !summary.params.contains(&v.name))
    {
        return None;
    }
    let inputs = summary
        .params
        .iter()
        .map(|p| datum(model.get(p)?))
        .collect::<Option<Vec<_>>>()?;
    let name = &summary.method.name;
    let before: Outcome = call_method(program, decorator, name, &inputs, DEFAULT_FUEL);
    let after: Outcome = call_method(after_program, decorator, name, &inputs, DEFAULT_FUEL);
    Some(OracleCheck {
        confirmed: before.is_ok() && after.is_err(),
        before: (&before).into(),
        after: (&after).into(),
        inputs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SpanView {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub line: u32,
    pub column: u32,
}

impl From<&SourceSpan> for SpanView {
    fn from(s: &SourceSpan) -> Self {
        SpanView {
            file: s.file.as_deref().map(str::to_string),
            line: s.start.line,
            column: s.start.column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryView {
    pub params: Vec<Ident>,
    pub forall_vars: Vec<SortedVar>,
    pub exists_vars: Vec<SortedVar>,
    pub value: Option<String>,
    pub properties: String,
    pub flags: ApproxFlags,
    pub unknowns: Vec<String>,
}

impl From<&MethodSummary> for SummaryView {
    fn from(s: &MethodSummary) -> Self {
        SummaryView {
            params: s.params.clone(),
            forall_vars: s.forall_vars.clone(),
            exists_vars: s.exists_vars.clone(),
            value: s.value.as_ref().map(smt::term),
            properties: smt::term(&s.properties),
            flags: s.flags,
            unknowns: s.unknowns.iter().map(|u| u.name.clone()).collect(),
        }
    }
}

#[derive(Serialize)]
struct ReportView<'a> {
    decorated: &'a str,
    decorator: &'a str,
    method: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    inlined: Option<&'a str>,
    span: SpanView,
    verdict: Verdict,
    before: Option<SummaryView>,
    after: Option<SummaryView>,
    counterexample: Option<&'a Model>,
    model_source: Option<ModelSource>,
    soundness_note: &'a str,
    reason: Option<&'a str>,
    oracle: Option<&'a OracleCheck>,
}

impl Serialize for DefectReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ReportView {
            decorated: &self.pair.decorated,
            decorator: &self.pair.decorator,
            method: &self.method,
            inlined: self.inlined.as_deref(),
            span: (&self.span).into(),
            verdict: self.verdict,
            before: self.before.as_ref().map(Into::into),
            after: self.after.as_ref().map(Into::into),
            counterexample: self.counterexample.as_ref(),
            model_source: self.model_source,
            soundness_note: &self.soundness_note,
            reason: self.reason.as_deref(),
            oracle: self.oracle.as_ref(),
        }
        .serialize(s)
    }
}
