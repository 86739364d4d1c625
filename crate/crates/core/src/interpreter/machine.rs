//! Environment-based evaluator over object instances.

use std::cell::RefCell;
use std::rc::Rc;

use super::{Datum, RuntimeError, RuntimeErrorKind};
use crate::num::Number;
use crate::properties::primitive_arity;
use crate::syntax::*;

const MAX_DEPTH: usize = 20_000;

/// An object literal closed over its lexical parent, with the voids bound so far.
struct Instance<'p> {
    def: &'p ObjectTerm,
    parent: Option<Rc<Instance<'p>>>,
    voids: Vec<Option<Value<'p>>>,
    /// Produced by an application, so forced when passed by value.
    applied: bool,
    /// Values of attached attributes already computed.
    cache: RefCell<Vec<Option<Value<'p>>>>,
}

impl<'p> Instance<'p> {
    fn new(
        def: &'p ObjectTerm,
        parent: Option<Rc<Instance<'p>>>,
        voids: Vec<Option<Value<'p>>>,
        applied: bool,
    ) -> Self {
        Instance {
            def,
            parent,
            voids,
            applied,
            cache: RefCell::new(vec![None; def.attrs.len()]),
        }
    }
}

#[derive(Clone)]
enum Value<'p> {
    Num(Number),
    Bool(bool),
    Obj(Rc<Instance<'p>>),
    /// A primitive attribute of a datum awaiting its arguments.
    Prim(Box<Value<'p>>, &'static str),
}

type Eval<T> = Result<T, RuntimeError>;

pub(super) struct Machine<'p> {
    root: Rc<Instance<'p>>,
    fuel: u64,
    depth: usize,
}

const PRIMITIVES: &[&str] = &[
    "add", "sub", "mul", "div", "sqrt", "less", "greater", "leq", "geq", "eq", "neq", "and", "or",
    "not", "if",
];

fn err(kind: RuntimeErrorKind, span: &SourceSpan) -> RuntimeError {
    RuntimeError {
        kind,
        span: span.clone(),
    }
}

impl<'p> Machine<'p> {
    pub fn new(root: &'p ObjectTerm, fuel: u64) -> Self {
        Machine {
            root: Rc::new(Instance::new(root, None, Vec::new(), false)),
            fuel,
            depth: 0,
        }
    }

    fn tick(&mut self, span: &SourceSpan) -> Eval<()> {
        if self.fuel == 0 {
            return Err(err(RuntimeErrorKind::OutOfFuel, span));
        }
        self.fuel -= 1;
        Ok(())
    }

    /// Evaluates an entry term in the root scope and dataizes the result.
    pub fn run(&mut self, term: &'p Term) -> Eval<Datum> {
        let root = self.root.clone();
        let v = self.eval(term, &root)?;
        match self.dataize(v, &term.span)? {
            Value::Num(n) => Ok(Datum::Number(n)),
            Value::Bool(b) => Ok(Datum::Bool(b)),
            _ => Err(err(RuntimeErrorKind::NotData, &term.span)),
        }
    }

    fn eval(&mut self, term: &'p Term, cur: &Rc<Instance<'p>>) -> Eval<Value<'p>> {
        self.tick(&term.span)?;
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            self.depth -= 1;
            return Err(err(RuntimeErrorKind::TooDeep, &term.span));
        }
        let r = self.eval_inner(term, cur);
        self.depth -= 1;
        r
    }

    fn eval_inner(&mut self, term: &'p Term, cur: &Rc<Instance<'p>>) -> Eval<Value<'p>> {
        let span = &term.span;
        match &term.kind {
            TermKind::Num(q) => Ok(Value::Num(Number::Exact(q.clone()))),
            TermKind::Bool(b) => Ok(Value::Bool(*b)),
            TermKind::Str(_) => Err(err(RuntimeErrorKind::Unknown("string".into()), span)),
            TermKind::Name(path) => Err(err(RuntimeErrorKind::Unknown(path.join(".")), span)),
            TermKind::Global(path) => Err(err(RuntimeErrorKind::Unknown(path.join(".")), span)),
            TermKind::Object(obj) => Ok(Value::Obj(Rc::new(Instance::new(
                obj,
                Some(cur.clone()),
                vec![None; obj.voids.len()],
                false,
            )))),
            TermKind::Locator { depth, path } => {
                let mut frame = cur.clone();
                for _ in 0..*depth {
                    let parent = frame.parent.clone();
                    frame =
                        parent.ok_or_else(|| err(RuntimeErrorKind::Unknown("^".into()), span))?;
                }
                let mut v = Value::Obj(frame);
                for name in path {
                    v = self.attr(v, name, span)?;
                }
                Ok(v)
            }
            TermKind::Access { base, path } => {
                let mut v = self.eval(base, cur)?;
                for name in path {
                    v = self.attr(v, name, span)?;
                }
                Ok(v)
            }
            TermKind::Application { head, args } => {
                if let TermKind::Global(path) = &head.kind {
                    return self.global(path, args, cur, span);
                }
                let f = self.eval(head, cur)?;
                if let Value::Prim(recv, "if") = &f {
                    let [then, other] = args.as_slice() else {
                        return Err(err(RuntimeErrorKind::Arity("if".into()), span));
                    };
                    let cond = self.dataize((**recv).clone(), span)?;
                    let Value::Bool(c) = cond else {
                        return Err(err(RuntimeErrorKind::Type("if".into()), span));
                    };
                    let chosen = self.eval(if c { then } else { other }, cur)?;
                    return self.force(chosen, span);
                }
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    let v = self.eval(a, cur)?;
                    values.push(self.force(v, &a.span)?);
                }
                self.apply(f, values, span)
            }
        }
    }

    fn global(
        &mut self,
        path: &[Ident],
        args: &'p [Term],
        cur: &Rc<Instance<'p>>,
        span: &SourceSpan,
    ) -> Eval<Value<'p>> {
        match path {
            [g] if g == "seq" => {
                let mut last = Value::Bool(true);
                for a in args {
                    let v = self.eval(a, cur)?;
                    last = self.dataize(v, &a.span)?;
                }
                Ok(last)
            }
            [g] if g == "assert" => {
                let [c] = args else {
                    return Err(err(RuntimeErrorKind::Arity("assert".into()), span));
                };
                let v = self.eval(c, cur)?;
                match self.dataize(v, span)? {
                    Value::Bool(true) => Ok(Value::Bool(true)),
                    Value::Bool(false) => Err(err(RuntimeErrorKind::AssertFailed, span)),
                    _ => Err(err(RuntimeErrorKind::Type("assert".into()), span)),
                }
            }
            _ => Err(err(RuntimeErrorKind::Unknown(path.join(".")), span)),
        }
    }

    /// Call-by-value: results of applications are dataized before being bound.
    fn force(&mut self, v: Value<'p>, span: &SourceSpan) -> Eval<Value<'p>> {
        match &v {
            Value::Obj(o) if o.applied && o.def.decoratee().is_some() => self.dataize(v, span),
            _ => Ok(v),
        }
    }

    /// Follows `@` until a datum or an object without a decoratee is reached.
    fn dataize(&mut self, mut v: Value<'p>, span: &SourceSpan) -> Eval<Value<'p>> {
        loop {
            match v {
                Value::Obj(ref o) if o.def.decoratee().is_some() => {
                    v = self.attr(v.clone(), DECORATEE, span)?;
                }
                Value::Prim(..) => return Err(err(RuntimeErrorKind::NotData, span)),
                _ => return Ok(v),
            }
        }
    }

    fn attr(&mut self, v: Value<'p>, name: &str, span: &SourceSpan) -> Eval<Value<'p>> {
        self.tick(span)?;
        match v {
            Value::Obj(o) => {
                if let Some(i) = o.def.voids.iter().position(|x| x == name) {
                    return o.voids[i]
                        .clone()
                        .ok_or_else(|| err(RuntimeErrorKind::VoidAccess(name.to_string()), span));
                }
                if let Some(i) = o.def.attrs.iter().position(|b| b.name == name) {
                    if let Some(v) = o.cache.borrow()[i].clone() {
                        return Ok(v);
                    }
                    let v = self.eval(&o.def.attrs[i].value, &o)?;
                    o.cache.borrow_mut()[i] = Some(v.clone());
                    return Ok(v);
                }
                if o.def.decoratee().is_some() {
                    let inner = self.attr(Value::Obj(o), DECORATEE, span)?;
                    return self.attr(inner, name, span);
                }
                Err(err(RuntimeErrorKind::Unknown(name.to_string()), span))
            }
            Value::Num(_) | Value::Bool(_) => {
                let Some(&prim) = PRIMITIVES.iter().find(|p| **p == name) else {
                    return Err(err(RuntimeErrorKind::Unknown(name.to_string()), span));
                };
                let partial = Value::Prim(Box::new(v), prim);
                if primitive_arity(prim) == Some(0) {
                    self.apply(partial, Vec::new(), span)
                } else {
                    Ok(partial)
                }
            }
            Value::Prim(_, p) => Err(err(RuntimeErrorKind::Unknown(format!("{p}.{name}")), span)),
        }
    }

    fn apply(&mut self, f: Value<'p>, args: Vec<Value<'p>>, span: &SourceSpan) -> Eval<Value<'p>> {
        match f {
            Value::Obj(o) => {
                let mut voids = o.voids.clone();
                let mut free = voids.iter_mut().filter(|v| v.is_none());
                for a in args {
                    let slot = free.next().ok_or_else(|| {
                        err(RuntimeErrorKind::Arity("too many arguments".into()), span)
                    })?;
                    *slot = Some(a);
                }
                Ok(Value::Obj(Rc::new(Instance::new(
                    o.def,
                    o.parent.clone(),
                    voids,
                    true,
                ))))
            }
            Value::Prim(recv, op) => {
                if primitive_arity(op) != Some(args.len()) {
                    return Err(err(RuntimeErrorKind::Arity(op.to_string()), span));
                }
                let mut data = Vec::with_capacity(args.len());
                for a in args {
                    data.push(self.dataize(a, span)?);
                }
                primitive(*recv, op, &data, span)
            }
            Value::Num(_) | Value::Bool(_) => {
                if args.is_empty() {
                    Ok(f)
                } else {
                    Err(err(RuntimeErrorKind::Arity("datum".into()), span))
                }
            }
        }
    }
}

fn primitive<'p>(
    recv: Value<'p>,
    op: &str,
    args: &[Value<'p>],
    span: &SourceSpan,
) -> Eval<Value<'p>> {
    use RuntimeErrorKind as K;
    let ty = || err(K::Type(op.to_string()), span);
    match (recv, args) {
        (Value::Num(x), []) if op == "sqrt" => {
            if x.is_negative() {
                return Err(err(K::NegativeSqrt, span));
            }
            Ok(Value::Num(
                x.sqrt().ok_or_else(|| err(K::NegativeSqrt, span))?,
            ))
        }
        (Value::Num(x), [Value::Num(y)]) => Ok(match op {
            "add" => Value::Num(x.add(y)),
            "sub" => Value::Num(x.sub(y)),
            "mul" => Value::Num(x.mul(y)),
            "div" => Value::Num(x.div(y).ok_or_else(|| err(K::DivByZero, span))?),
            "less" => Value::Bool(x.compare(y).is_lt()),
            "greater" => Value::Bool(x.compare(y).is_gt()),
            "leq" => Value::Bool(x.compare(y).is_le()),
            "geq" => Value::Bool(x.compare(y).is_ge()),
            "eq" => Value::Bool(x.compare(y).is_eq()),
            "neq" => Value::Bool(x.compare(y).is_ne()),
            _ => return Err(ty()),
        }),
        (Value::Bool(x), []) if op == "not" => Ok(Value::Bool(!x)),
        (Value::Bool(x), [Value::Bool(y)]) => Ok(Value::Bool(match op {
            "and" => x && *y,
            "or" => x || *y,
            "eq" => x == *y,
            "neq" => x != *y,
            _ => return Err(ty()),
        })),
        _ => Err(ty()),
    }
}
