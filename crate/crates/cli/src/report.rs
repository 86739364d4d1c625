//! Text and JSON renderings of analysis results.

use std::fmt::Write;

use eo_fragile::detector::{Analysis, DefectReport, SpanView, Verdict};
use eo_fragile::interpreter::{DifferentialReport, OutcomeView};
use eo_fragile::methods::{decoration_chain, find_methods, DecorationError, MethodKey};
use eo_fragile::properties::{summarize_chain, InferConfig, MethodSummary};
use eo_fragile::smt;
use eo_fragile::syntax::Program;
use serde_json::{json, Value};

pub fn span(s: &SpanView) -> String {
    match &s.file {
        Some(file) => format!("{file}:{}:{}", s.line, s.column),
        None => format!("{}:{}", s.line, s.column),
    }
}

fn outcome(o: &OutcomeView) -> String {
    match (&o.value, &o.error) {
        (Some(v), _) => format!("value {v}"),
        (None, Some(e)) => format!("error {e}"),
        (None, None) => "nothing".to_string(),
    }
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Defect => "DEFECT",
        Verdict::NoDefectProved => "no defect",
        Verdict::Inconclusive => "inconclusive",
        Verdict::SignatureChanged => "signature changed",
    }
}

fn formula(s: &Option<MethodSummary>) -> String {
    s.as_ref().map_or_else(
        || "(none)".to_string(),
        |s| s.closed_properties().to_string(),
    )
}

fn report_text(out: &mut String, r: &DefectReport) {
    let _ = write!(
        out,
        "{}: {} decorated by {}, method {}",
        verdict_label(r.verdict),
        r.pair.decorated,
        r.pair.decorator,
        r.method
    );
    if let Some(m) = &r.inlined {
        let _ = write!(out, " (inlined {m})");
    }
    let _ = writeln!(out, " at {}", r.span);
    if r.verdict == Verdict::NoDefectProved {
        return;
    }
    let _ = writeln!(out, "  before: {}", formula(&r.before));
    let _ = writeln!(out, "  after:  {}", formula(&r.after));
    if let Some(model) = &r.counterexample {
        let values: Vec<String> = model.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        let source = r.model_source.map_or("", |s| match s {
            eo_fragile::detector::ModelSource::Solver => " (solver)",
            eo_fragile::detector::ModelSource::Search => " (search)",
        });
        let _ = writeln!(out, "  counterexample{source}: {}", values.join(", "));
    }
    if let Some(o) = &r.oracle {
        let _ = writeln!(
            out,
            "  oracle: before {}, after {}{}",
            outcome(&o.before),
            outcome(&o.after),
            if o.confirmed {
                " (confirmed)"
            } else {
                " (not confirmed)"
            }
        );
    }
    if let Some(reason) = &r.reason {
        let _ = writeln!(out, "  reason: {reason}");
    }
    let _ = writeln!(out, "  note: {}", r.soundness_note);
}

pub fn analysis_text(a: &Analysis) -> String {
    let mut out = String::new();
    for r in &a.reports {
        report_text(&mut out, r);
    }
    let _ = writeln!(
        out,
        "{} defect(s), {} proved safe, {} inconclusive",
        a.count(Verdict::Defect),
        a.count(Verdict::NoDefectProved),
        a.count(Verdict::Inconclusive) + a.count(Verdict::SignatureChanged)
    );
    out
}

pub struct SummaryEntry {
    pub key: MethodKey,
    pub summary: Result<MethodSummary, String>,
}

/// Summaries of the methods of every object, with `self` calls dispatched
/// through the object's decoration chain.
pub fn summaries(program: &Program) -> Result<Vec<SummaryEntry>, DecorationError> {
    let mut out = Vec::new();
    for obj in &program.objects {
        let chain = decoration_chain(program, &obj.name)?;
        let env = summarize_chain(program, &chain, InferConfig::default());
        for m in find_methods(&obj.name, &obj.body) {
            let key = m.key();
            let summary = match env.summaries.get(&key) {
                Some(s) => Ok(s.clone()),
                None => Err(env
                    .failures
                    .get(&key)
                    .map_or_else(|| "no summary".to_string(), |e| e.to_string())),
            };
            out.push(SummaryEntry { key, summary });
        }
    }
    Ok(out)
}

pub fn summaries_text(entries: &[SummaryEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        match &e.summary {
            Ok(s) => {
                let _ = writeln!(out, "{}({})", e.key, s.params.join(", "));
                let _ = writeln!(out, "  properties: {}", s.closed_properties());
                if let Some(v) = &s.value {
                    let _ = writeln!(out, "  value: {v}");
                }
                if !s.unknowns.is_empty() {
                    let names: Vec<&str> = s.unknowns.iter().map(|u| u.name.as_str()).collect();
                    let _ = writeln!(out, "  unknown: {}", names.join(", "));
                }
            }
            Err(msg) => {
                let _ = writeln!(out, "{}: error: {msg}", e.key);
            }
        }
    }
    out
}

pub fn summaries_json(entries: &[SummaryEntry]) -> Value {
    let items: Vec<Value> = entries
        .iter()
        .map(|e| match &e.summary {
            Ok(s) => json!({
                "object": e.key.owner,
                "method": e.key.name,
                "params": s.params,
                "forall_vars": s.forall_vars.iter().map(|v| &v.name).collect::<Vec<_>>(),
                "exists_vars": s.exists_vars.iter().map(|v| &v.name).collect::<Vec<_>>(),
                "properties": smt::term(&s.properties),
                "value": s.value.as_ref().map(smt::term),
                "flags": s.flags,
                "unknowns": s.unknowns.iter().map(|u| &u.name).collect::<Vec<_>>(),
            }),
            Err(msg) => json!({
                "object": e.key.owner,
                "method": e.key.name,
                "error": msg,
            }),
        })
        .collect();
    json!({ "summaries": items })
}

pub fn diff_text(d: &DifferentialReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} inlined; exercised {}: {} evaluations, {} out of fuel, {} mismatch(es)",
        d.decorated,
        d.objects.join(", "),
        d.evaluations,
        d.out_of_fuel,
        d.mismatches.len()
    );
    for m in &d.mismatches {
        let inputs: Vec<String> = m.inputs.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            out,
            "  {}.{}({}): before {}, after {}",
            m.object,
            m.method,
            inputs.join(", "),
            outcome(&m.before),
            outcome(&m.after)
        );
    }
    out
}
