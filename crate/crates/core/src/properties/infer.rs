//! Abstract interpretation of terms into value expressions and preconditions.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::expr::{Expr, Sort, SortedVar};
use super::sorts::{infer_sorts, SortError};
use super::summary::{MethodSummary, SummaryEnv};
use crate::methods::{MethodInfo, MethodKey};
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("{span}: unsupported term: {reason}")]
    UnsupportedTerm { reason: String, span: SourceSpan },
    #[error("recursive method {method} (cycle: {})", cycle.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" -> "))]
    RecursiveMethod {
        method: MethodKey,
        cycle: Vec<MethodKey>,
    },
    #[error("{method}: {error}")]
    Sort { method: MethodKey, error: SortError },
}

/// How terms outside the supported fragment are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownPolicy {
    /// Unconstrained value, no precondition.
    #[default]
    Ignore,
    /// Unconstrained value, unsatisfiable precondition.
    Reject,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InferConfig {
    pub unknown: UnknownPolicy,
}

/// Which approximations were used while inferring a summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ApproxFlags {
    /// An unknown term was ignored: the precondition may be too weak.
    pub under: bool,
    /// An unknown term was rejected: the precondition may be too strong.
    pub over: bool,
}

impl ApproxFlags {
    pub fn exact(&self) -> bool {
        !self.under && !self.over
    }

    pub fn merge(&mut self, other: ApproxFlags) {
        self.under |= other.under;
        self.over |= other.over;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownUse {
    pub name: String,
    pub span: SourceSpan,
}

/// Value and precondition of a term; a missing value stands for `⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inferred {
    pub value: Option<Expr>,
    pub props: Expr,
}

impl Inferred {
    fn value(e: Expr) -> Self {
        Inferred {
            value: Some(e),
            props: Expr::tt(),
        }
    }
}

/// The result of inferring a standalone term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermInference {
    pub value: Option<Expr>,
    pub props: Expr,
    pub exists_vars: Vec<SortedVar>,
    pub flags: ApproxFlags,
}

const PRIMITIVES: &[(&str, usize)] = &[
    ("add", 1),
    ("sub", 1),
    ("mul", 1),
    ("div", 1),
    ("sqrt", 0),
    ("less", 1),
    ("greater", 1),
    ("leq", 1),
    ("geq", 1),
    ("eq", 1),
    ("neq", 1),
    ("if", 2),
    ("and", 1),
    ("or", 1),
    ("not", 0),
];

pub fn primitive_arity(name: &str) -> Option<usize> {
    PRIMITIVES.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

/// Canonical variable for a binding reached through `path` from the method.
pub fn local_var_name(path: &[Ident]) -> String {
    format!("$.{}", path.join("."))
}

/// Variable for `self.attr`.
pub fn self_var_name(attr: &str) -> String {
    format!("self.{attr}")
}

/// Variable for attribute `attr` of top-level object `owner`.
pub fn external_var_name(owner: &str, attr: &str) -> String {
    format!("^.{owner}.{attr}")
}

struct Frame<'a> {
    obj: &'a ObjectTerm,
    path: Vec<Ident>,
}

enum Resolved<'a> {
    Value(Inferred, &'a [Ident]),
    Unknown(String),
}

struct Ctx<'a> {
    env: &'a SummaryEnv,
    config: InferConfig,
    owner_name: &'a str,
    owner: Option<&'a ObjectTerm>,
    params: &'a [Ident],
    frames: Vec<Frame<'a>>,
    fresh: usize,
    constraints: Vec<Expr>,
    exists: Vec<String>,
    free: Vec<String>,
    defined: BTreeSet<String>,
    referenced: Vec<(String, SourceSpan)>,
    hints: BTreeMap<String, Sort>,
    flags: ApproxFlags,
    unknowns: Vec<UnknownUse>,
}

type Res<T> = Result<T, InferError>;

fn unsupported<T>(reason: impl Into<String>, span: &SourceSpan) -> Res<T> {
    Err(InferError::UnsupportedTerm {
        reason: reason.into(),
        span: span.clone(),
    })
}

fn base_name(name: &str) -> &str {
    name.split('!').next().unwrap_or(name)
}

impl<'a> Ctx<'a> {
    fn new(
        env: &'a SummaryEnv,
        config: InferConfig,
        owner_name: &'a str,
        owner: Option<&'a ObjectTerm>,
        params: &'a [Ident],
        method_object: &'a ObjectTerm,
    ) -> Self {
        Ctx {
            env,
            config,
            owner_name,
            owner,
            params,
            frames: vec![Frame {
                obj: method_object,
                path: Vec::new(),
            }],
            fresh: 0,
            constraints: Vec::new(),
            exists: Vec::new(),
            free: Vec::new(),
            defined: BTreeSet::new(),
            referenced: Vec::new(),
            hints: BTreeMap::new(),
            flags: ApproxFlags::default(),
            unknowns: Vec::new(),
        }
    }

    fn nesting(&self) -> u32 {
        (self.frames.len() - 1) as u32
    }

    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}!{}", self.fresh)
    }

    fn note_free(&mut self, name: &str) {
        if !self.free.iter().any(|f| f == name) {
            self.free.push(name.to_string());
        }
    }

    fn unknown(&mut self, name: impl Into<String>, span: &SourceSpan) -> Inferred {
        let u = self.fresh("u");
        self.exists.push(u.clone());
        self.unknowns.push(UnknownUse {
            name: name.into(),
            span: span.clone(),
        });
        let props = match self.config.unknown {
            UnknownPolicy::Ignore => {
                self.flags.under = true;
                Expr::tt()
            }
            UnknownPolicy::Reject => {
                self.flags.over = true;
                Expr::ff()
            }
        };
        Inferred {
            value: Some(Expr::Var(u)),
            props,
        }
    }

    fn define(&mut self, name: String, inferred: Inferred) {
        self.constraints.push(inferred.props);
        if let Some(v) = inferred.value {
            self.constraints.push(Expr::eq(Expr::Var(name.clone()), v));
            self.exists.push(name.clone());
            self.defined.insert(name);
        }
    }

    fn bind_object(&mut self, obj: &'a ObjectTerm, path: Vec<Ident>) -> Res<()> {
        self.frames.push(Frame {
            obj,
            path: path.clone(),
        });
        for b in obj.attrs.iter().filter(|b| b.name != DECORATEE) {
            self.bind(b, &path)?;
        }
        if let Some(at) = obj.decoratee() {
            let inferred = self.term(at)?;
            self.define(local_var_name(&path), inferred);
        }
        self.frames.pop();
        Ok(())
    }

    fn bind(&mut self, b: &'a Binding, parent: &[Ident]) -> Res<()> {
        let mut path = parent.to_vec();
        path.push(b.name.clone());
        match &b.value.kind {
            TermKind::Object(o) if o.voids.is_empty() => self.bind_object(o, path),
            TermKind::Object(_) => unsupported("nested object with void attributes", &b.value.span),
            _ => {
                let inferred = self.term(&b.value)?;
                self.define(local_var_name(&path), inferred);
                Ok(())
            }
        }
    }

    fn term(&mut self, t: &'a Term) -> Res<Inferred> {
        match &t.kind {
            TermKind::Num(q) => Ok(Inferred::value(Expr::Num(q.clone()))),
            TermKind::Bool(b) => Ok(Inferred::value(Expr::Bool(*b))),
            TermKind::Str(_) => Ok(self.unknown("string literal", &t.span)),
            TermKind::Name(path) => {
                unsupported(format!("unresolved name `{}`", path.join(".")), &t.span)
            }
            TermKind::Object(o) => {
                if !o.voids.is_empty() {
                    return unsupported("object with void attributes", &t.span);
                }
                let label = self.fresh("anon");
                self.bind_object(o, vec![label.clone()])?;
                let name = local_var_name(&[label]);
                let value = self.defined.contains(&name).then_some(Expr::Var(name));
                Ok(Inferred {
                    value,
                    props: Expr::tt(),
                })
            }
            TermKind::Application { head, args } => self.apply(head, args, &t.span),
            TermKind::Locator { .. } | TermKind::Access { .. } | TermKind::Global(_) => {
                self.apply(t, &[], &t.span)
            }
        }
    }

    fn is_method_call(&self, head: &Term, args: &[Term]) -> bool {
        let TermKind::Locator { depth, path } = &head.kind else {
            return false;
        };
        let Some(TermKind::Locator {
            depth: d2,
            path: p2,
        }) = args.first().map(|a| &a.kind)
        else {
            return false;
        };
        path.len() == 2
            && path[0] == SELF
            && p2.len() == 1
            && p2[0] == SELF
            && d2 == depth
            && *depth == self.nesting()
    }

    fn apply(&mut self, head: &'a Term, args: &'a [Term], span: &SourceSpan) -> Res<Inferred> {
        if self.is_method_call(head, args) {
            let TermKind::Locator { path, .. } = &head.kind else {
                unreachable!()
            };
            return self.call(&path[1], &args[1..], span);
        }
        match &head.kind {
            TermKind::Locator { depth, path } => match self.resolve(*depth, path, &head.span)? {
                Resolved::Value(base, rest) => self.chain(base, rest, args, span),
                Resolved::Unknown(name) => Ok(self.unknown(name, span)),
            },
            TermKind::Access { base, path } => {
                let b = self.term(base)?;
                self.chain(b, path, args, span)
            }
            TermKind::Global(path) => self.global(path, args, span),
            _ if args.is_empty() => self.term(head),
            _ => Ok(self.unknown("application of a non-attribute head", span)),
        }
    }

    fn global(&mut self, path: &'a [Ident], args: &'a [Term], span: &SourceSpan) -> Res<Inferred> {
        match (path, args) {
            ([g], [_, ..]) if g == "seq" => {
                let mut props = Vec::new();
                let mut value = None;
                for a in args {
                    let inf = self.term(a)?;
                    props.push(inf.props);
                    value = inf.value;
                }
                Ok(Inferred {
                    value,
                    props: Expr::and(props),
                })
            }
            ([g], [c]) if g == "assert" => {
                let inf = self.term(c)?;
                let Some(e) = inf.value else {
                    return unsupported("assertion without a value", &c.span);
                };
                Ok(Inferred {
                    value: None,
                    props: Expr::and2(inf.props, e),
                })
            }
            _ => Ok(self.unknown(path.join("."), span)),
        }
    }

    /// Applies the attributes in `rest` to `base`; the last one receives `args`.
    fn chain(
        &mut self,
        base: Inferred,
        rest: &'a [Ident],
        args: &'a [Term],
        span: &SourceSpan,
    ) -> Res<Inferred> {
        let Some((last, init)) = rest.split_last() else {
            if args.is_empty() {
                return Ok(base);
            }
            return Ok(self.unknown("application of a value", span));
        };
        let mut current = base;
        for op in init {
            current = self.primitive(current, op, &[], span)?;
        }
        self.primitive(current, last, args, span)
    }

    fn operand(&self, inf: &Inferred, span: &SourceSpan) -> Res<Expr> {
        match &inf.value {
            Some(v) => Ok(v.clone()),
            None => unsupported("⊥ used as an operand", span),
        }
    }

    fn primitive(
        &mut self,
        recv: Inferred,
        op: &str,
        args: &'a [Term],
        span: &SourceSpan,
    ) -> Res<Inferred> {
        let r = self.operand(&recv, span)?;
        let Some(arity) = primitive_arity(op) else {
            if matches!(r, Expr::Num(_) | Expr::Bool(_)) {
                return unsupported(format!("`{op}` is not a primitive of literals"), span);
            }
            return Ok(self.unknown(op, span));
        };
        if arity != args.len() {
            return unsupported(
                format!("`{op}` expects {arity} argument(s), got {}", args.len()),
                span,
            );
        }
        if op == "if" {
            let a = self.term(&args[0])?;
            let b = self.term(&args[1])?;
            let (ea, eb) = (
                self.operand(&a, &args[0].span)?,
                self.operand(&b, &args[1].span)?,
            );
            let props = Expr::and([
                recv.props,
                Expr::implies(r.clone(), a.props),
                Expr::implies(Expr::not(r.clone()), b.props),
            ]);
            return Ok(Inferred {
                value: Some(Expr::ite(r, ea, eb)),
                props,
            });
        }
        let mut props = vec![recv.props];
        let mut operands = Vec::new();
        for a in args {
            let inf = self.term(a)?;
            operands.push(self.operand(&inf, &a.span)?);
            props.push(inf.props);
        }
        let arg = || operands[0].clone();
        let value = match op {
            "add" => Expr::add(r, arg()),
            "sub" => Expr::sub(r, arg()),
            "mul" => Expr::mul(r, arg()),
            "div" => {
                props.push(Expr::ne(arg(), Expr::int(0)));
                Expr::div(r, arg())
            }
            "sqrt" => {
                let z = self.fresh("z");
                self.exists.push(z.clone());
                self.hints.insert(z.clone(), Sort::Real);
                let zv = Expr::Var(z);
                props.push(Expr::le(Expr::int(0), zv.clone()));
                props.push(Expr::eq(Expr::mul(zv.clone(), zv.clone()), r));
                zv
            }
            "less" => Expr::lt(r, arg()),
            "greater" => Expr::lt(arg(), r),
            "leq" => Expr::le(r, arg()),
            "geq" => Expr::le(arg(), r),
            "eq" => Expr::eq(r, arg()),
            "neq" => Expr::ne(r, arg()),
            "and" => Expr::And(vec![r, arg()]),
            "or" => Expr::Or(vec![r, arg()]),
            "not" => Expr::Not(Box::new(r)),
            _ => unreachable!("primitive table covers {op}"),
        };
        Ok(Inferred {
            value: Some(value),
            props: Expr::and(props),
        })
    }

    fn resolve(&mut self, depth: u32, path: &'a [Ident], span: &SourceSpan) -> Res<Resolved<'a>> {
        let k = self.nesting();
        let Some((head, rest)) = path.split_first() else {
            return unsupported("empty locator", span);
        };
        if depth > k + 1 {
            return Ok(Resolved::Unknown(format!("^.{}", path.join("."))));
        }
        if depth == k + 1 {
            return Ok(self.resolve_owner(head, rest));
        }
        let index = (k - depth) as usize;
        if index == 0 {
            if head == SELF {
                let Some((attr, rest)) = rest.split_first() else {
                    return unsupported("`self` used as a value", span);
                };
                let name = self_var_name(attr);
                self.note_free(&name);
                return Ok(Resolved::Value(Inferred::value(Expr::Var(name)), rest));
            }
            if self.params.contains(head) {
                return Ok(Resolved::Value(Inferred::value(Expr::var(head)), rest));
            }
        }
        let mut obj = self.frames[index].obj;
        let mut prefix = self.frames[index].path.clone();
        let mut remaining = path;
        loop {
            let Some((h, r)) = remaining.split_first() else {
                unreachable!("loop exits before consuming the whole path")
            };
            if h == DECORATEE {
                if prefix.is_empty() {
                    return unsupported("reference to the method's own `@`", span);
                }
                return Ok(self.reference(local_var_name(&prefix), r, span));
            }
            let Some(value) = obj.attr(h) else {
                return unsupported(format!("`{h}` is not an attribute here"), span);
            };
            prefix.push(h.clone());
            match &value.kind {
                TermKind::Object(inner) if inner.voids.is_empty() => {
                    let descend = r.first().is_some_and(|n| n == DECORATEE || inner.binds(n));
                    if descend {
                        obj = inner;
                        remaining = r;
                        continue;
                    }
                    return Ok(self.reference(local_var_name(&prefix), r, span));
                }
                TermKind::Object(_) => {
                    return unsupported("nested object with void attributes", span)
                }
                _ => return Ok(self.reference(local_var_name(&prefix), r, span)),
            }
        }
    }

    fn reference(&mut self, name: String, rest: &'a [Ident], span: &SourceSpan) -> Resolved<'a> {
        self.referenced.push((name.clone(), span.clone()));
        Resolved::Value(Inferred::value(Expr::Var(name)), rest)
    }

    fn resolve_owner(&mut self, head: &Ident, rest: &'a [Ident]) -> Resolved<'a> {
        let Some(owner) = self.owner else {
            return Resolved::Unknown(format!("^.{head}"));
        };
        let value = if owner.has_void(head) {
            None
        } else {
            match owner.attr(head) {
                Some(v) => Some(v),
                None => return Resolved::Unknown(format!("^.{head}")),
            }
        };
        match value.map(|v| &v.kind) {
            Some(TermKind::Num(q)) => Resolved::Value(Inferred::value(Expr::Num(q.clone())), rest),
            Some(TermKind::Bool(b)) => Resolved::Value(Inferred::value(Expr::Bool(*b)), rest),
            Some(TermKind::Object(_)) => Resolved::Unknown(format!("^.{head}")),
            _ if head == DECORATEE => Resolved::Unknown(format!("^.{head}")),
            _ => {
                let name = external_var_name(self.owner_name, head);
                self.note_free(&name);
                Resolved::Value(Inferred::value(Expr::Var(name)), rest)
            }
        }
    }

    fn call(&mut self, g: &str, args: &'a [Term], span: &SourceSpan) -> Res<Inferred> {
        let env = self.env;
        let Some(summary) = env.dispatch.get(g).and_then(|key| env.summaries.get(key)) else {
            return Ok(self.unknown(self_var_name(g), span));
        };
        if summary.params.len() != args.len() {
            return Ok(self.unknown(self_var_name(g), span));
        }
        let mut props = Vec::new();
        let mut map = BTreeMap::new();
        for (param, a) in summary.params.iter().zip(args) {
            let inf = self.term(a)?;
            let v = self.operand(&inf, &a.span)?;
            props.push(inf.props);
            if let (Expr::Var(name), Some(sv)) =
                (&v, summary.forall_vars.iter().find(|f| &f.name == param))
            {
                self.hints.entry(name.clone()).or_insert(sv.sort);
            }
            map.insert(param.clone(), v);
        }
        for ev in &summary.exists_vars {
            let renamed = self.fresh(base_name(&ev.name));
            self.exists.push(renamed.clone());
            self.hints.insert(renamed.clone(), ev.sort);
            map.insert(ev.name.clone(), Expr::Var(renamed));
        }
        for fv in summary
            .forall_vars
            .iter()
            .filter(|f| !summary.params.contains(&f.name))
        {
            self.note_free(&fv.name);
            self.hints.entry(fv.name.clone()).or_insert(fv.sort);
        }
        self.flags.merge(summary.flags);
        self.unknowns.extend(summary.unknowns.iter().cloned());
        props.push(summary.properties.substitute(&map));
        Ok(Inferred {
            value: summary.value.as_ref().map(|v| v.substitute(&map)),
            props: Expr::and(props),
        })
    }

    fn check_references(&self) -> Res<()> {
        for (name, span) in &self.referenced {
            if !self.defined.contains(name) {
                return unsupported(
                    format!("`{name}` has no value (⊥ used as an operand)"),
                    span,
                );
            }
        }
        Ok(())
    }

    fn sorted(&self, names: &[String], sorts: &BTreeMap<String, Sort>) -> Vec<SortedVar> {
        names
            .iter()
            .map(|n| SortedVar::new(n.clone(), sorts.get(n).copied().unwrap_or(Sort::Real)))
            .collect()
    }
}

/// Summary of method `m`, whose lexical owner is `owner`.
pub fn infer_method(
    m: &MethodInfo,
    owner: &ObjectTerm,
    env: &SummaryEnv,
    config: InferConfig,
) -> Result<MethodSummary, InferError> {
    let mut ctx = Ctx::new(env, config, &m.owner, Some(owner), &m.params, &m.object);
    for b in &m.locals {
        ctx.bind(b, &[])?;
    }
    let body = ctx.term(&m.body)?;
    ctx.check_references()?;
    ctx.constraints.push(body.props);
    let properties = Expr::and(std::mem::take(&mut ctx.constraints));
    let sorts = infer_sorts([&properties], body.value.iter(), &ctx.hints).map_err(|error| {
        InferError::Sort {
            method: m.key(),
            error,
        }
    })?;
    let mut forall: Vec<String> = m.params.clone();
    forall.extend(ctx.free.iter().cloned());
    Ok(MethodSummary {
        method: m.key(),
        params: m.params.clone(),
        forall_vars: ctx.sorted(&forall, &sorts),
        exists_vars: ctx.sorted(&ctx.exists, &sorts),
        value: body.value,
        properties,
        flags: ctx.flags,
        unknowns: ctx.unknowns,
    })
}

/// Infers a term as the `@` of a method with the given parameters and no
/// locals. Method calls resolve through `env`.
pub fn infer_term(
    term: &Term,
    params: &[Ident],
    env: &SummaryEnv,
    config: InferConfig,
) -> Result<TermInference, InferError> {
    let mut voids = vec![SELF.to_string()];
    voids.extend(params.iter().cloned());
    let object = ObjectTerm::new(voids, vec![]);
    let mut ctx = Ctx::new(env, config, "", None, params, &object);
    let inferred = ctx.term(term)?;
    ctx.check_references()?;
    ctx.constraints.push(inferred.props);
    let props = Expr::and(std::mem::take(&mut ctx.constraints));
    let sorts = infer_sorts([&props], inferred.value.iter(), &ctx.hints).map_err(|error| {
        InferError::Sort {
            method: MethodKey::new("", ""),
            error,
        }
    })?;
    Ok(TermInference {
        value: inferred.value,
        props,
        exists_vars: ctx.sorted(&ctx.exists, &sorts),
        flags: ctx.flags,
    })
}
