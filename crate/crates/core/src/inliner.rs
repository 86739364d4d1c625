//! Inlining of local method calls.
//!
//! A call `ℓ.self.g ℓ.self t1 … tn` is replaced by the `@` term of `g` with
//! the arguments substituted for its voids. Local definitions of `g` move to a
//! fresh container object placed next to the call.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::locators::{rewrite_locators, shift_open_locators};
use crate::methods::*;
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InlineError {
    #[error("no top-level object named `{0}`")]
    UnknownObject(Ident),
    #[error("`{0}` has no method `{1}`")]
    UnknownMethod(Ident, Ident),
}

/// Result of inlining every inlinable call of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct InlineOutcome {
    pub program: Program,
    /// Methods left untouched because their calls are recursive.
    pub skipped: Vec<Ident>,
    /// Number of call sites replaced.
    pub count: usize,
}

pub const RECURSIVE_SKIPPED: &str = "recursive — skipped";

/// Inlines `call`, which occurs in `f`, with `g` as the callee.
///
/// # Panics
/// If the call does not lie in `f` or the arity differs from that of `g`.
pub fn inline_call(f: &MethodInfo, call: &MethodCall, g: &MethodInfo) -> MethodInfo {
    assert_eq!(
        call.arity(),
        g.arity(),
        "arity mismatch inlining {}",
        g.key()
    );
    let mut object = f.object.clone();
    let split = call
        .path
        .iter()
        .rposition(|s| matches!(s, PathStep::Attr(_)))
        .expect("call path starts at an attribute");

    let container_name = {
        let scope = object_at(&object, &call.path[..split]);
        fresh_container_name(scope, &g.name)
    };
    let self_term = Term::locator(call.locator, vec![SELF.to_string()], call.site.clone());
    let subst = Substitution {
        n: call.locator,
        g,
        args: &call.args,
        self_term: &self_term,
    };

    let body = subst.body(&container_name);
    let mut replacement = body;
    replacement.span = call.site.clone();
    *term_at_mut(&mut object, &call.path) = replacement;

    if !g.locals.is_empty() {
        let container = ObjectTerm::new(
            Vec::new(),
            g.locals
                .iter()
                .map(|b| Binding {
                    name: b.name.clone(),
                    value: subst.container_local(&b.value),
                    span: b.span.clone(),
                })
                .collect(),
        );
        let scope = object_at_mut(&mut object, &call.path[..split]);
        scope.insert_before_decoratee(Binding::new(
            container_name,
            Term::new(TermKind::Object(container), call.site.clone()),
        ));
    }

    MethodInfo::from_object(&f.owner, &f.name, &object).expect("inlining keeps the method shape")
}

/// `args_<g>` if unused in `scope`, else `args_<g>_<k>` for the smallest free `k`.
pub fn fresh_container_name(scope: &ObjectTerm, callee: &str) -> Ident {
    let base = format!("args_{callee}");
    if !scope.binds(&base) {
        return base;
    }
    (1..)
        .map(|k| format!("{base}_{k}"))
        .find(|name| !scope.binds(name))
        .expect("unbounded range")
}

struct Substitution<'a> {
    /// Depth of `ℓ`, that is the nesting of the call inside the caller.
    n: u32,
    g: &'a MethodInfo,
    args: &'a [Term],
    self_term: &'a Term,
}

impl Substitution<'_> {
    fn void_value(&self, name: &str, shift: u32) -> Option<Term> {
        if name == SELF {
            return Some(shift_open_locators(self.self_term, shift));
        }
        let i = self.g.params.iter().position(|p| p == name)?;
        Some(shift_open_locators(&self.args[i], shift))
    }

    fn body(&self, container: &str) -> Term {
        rewrite_locators(&self.g.body, &mut |m, d, path, span| {
            if d < m {
                return None;
            }
            if d > m {
                return Some(Term::locator(d + self.n, path.to_vec(), span.clone()));
            }
            let (head, rest) = path.split_first()?;
            if let Some(v) = self.void_value(head, m) {
                return Some(v.access(rest));
            }
            let mut p = vec![container.to_string()];
            p.extend_from_slice(path);
            Some(Term::locator(m, p, span.clone()))
        })
    }

    fn container_local(&self, value: &Term) -> Term {
        rewrite_locators(value, &mut |m, d, path, span| {
            if d < m {
                return None;
            }
            if d > m {
                return Some(Term::locator(d + self.n + 1, path.to_vec(), span.clone()));
            }
            let (head, rest) = path.split_first()?;
            self.void_value(head, m + 1).map(|v| v.access(rest))
        })
    }
}

fn object_at<'a>(obj: &'a ObjectTerm, path: &[PathStep]) -> &'a ObjectTerm {
    let Some((PathStep::Attr(i), rest)) = path.split_first() else {
        assert!(path.is_empty(), "object path must start at an attribute");
        return obj;
    };
    let mut term = &obj.attrs[*i].value;
    for step in rest {
        term = child(term, *step);
    }
    term.as_object().expect("path leads to an object")
}

fn object_at_mut<'a>(obj: &'a mut ObjectTerm, path: &[PathStep]) -> &'a mut ObjectTerm {
    if path.is_empty() {
        return obj;
    }
    match &mut term_at_mut(obj, path).kind {
        TermKind::Object(o) => o,
        _ => panic!("path leads to an object"),
    }
}

fn child(term: &Term, step: PathStep) -> &Term {
    match (&term.kind, step) {
        (TermKind::Object(o), PathStep::Attr(i)) => &o.attrs[i].value,
        (TermKind::Application { head, .. }, PathStep::Head) => head,
        (TermKind::Application { args, .. }, PathStep::Arg(i)) => &args[i],
        (TermKind::Access { base, .. }, PathStep::Base) => base,
        _ => panic!("invalid term path"),
    }
}

fn term_at_mut<'a>(obj: &'a mut ObjectTerm, path: &[PathStep]) -> &'a mut Term {
    let Some((PathStep::Attr(i), rest)) = path.split_first() else {
        panic!("term path must start at an attribute");
    };
    let mut term = &mut obj.attrs[*i].value;
    for step in rest {
        term = match (&mut term.kind, *step) {
            (TermKind::Object(o), PathStep::Attr(i)) => &mut o.attrs[i].value,
            (TermKind::Application { head, .. }, PathStep::Head) => head,
            (TermKind::Application { args, .. }, PathStep::Arg(i)) => &mut args[i],
            (TermKind::Access { base, .. }, PathStep::Base) => base,
            _ => panic!("invalid term path"),
        };
    }
    term
}

/// The method `call` resolves to, if the call is inlinable.
fn callee<'m>(call: &MethodCall, methods: &'m [MethodInfo]) -> Option<&'m MethodInfo> {
    methods.iter().find(|g| {
        g.name == call.callee && g.arity() == call.arity() && !references_own_decoratee(&g.body)
    })
}

/// Methods whose inlinable calls can reach a cycle.
fn recursive_methods(methods: &[MethodInfo]) -> BTreeSet<Ident> {
    let edges: BTreeMap<&str, Vec<Ident>> = methods
        .iter()
        .map(|m| {
            let callees = find_method_calls(m)
                .into_iter()
                .filter(|c| callee(c, methods).is_some())
                .map(|c| c.callee)
                .collect();
            (m.name.as_str(), callees)
        })
        .collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done { cyclic: bool },
    }
    fn visit<'a>(
        name: &'a str,
        edges: &'a BTreeMap<&str, Vec<Ident>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> bool {
        match marks.get(name) {
            Some(Mark::Active) => return true,
            Some(Mark::Done { cyclic }) => return *cyclic,
            None => {}
        }
        marks.insert(name, Mark::Active);
        let mut cyclic = false;
        for callee in edges.get(name).into_iter().flatten() {
            cyclic |= visit(callee, edges, marks);
        }
        marks.insert(name, Mark::Done { cyclic });
        cyclic
    }

    let mut marks = BTreeMap::new();
    methods
        .iter()
        .filter(|m| visit(&m.name, &edges, &mut marks))
        .map(|m| m.name.clone())
        .collect()
}

/// Inlines all inlinable calls in every method of `obj_name`, repeating until
/// none remain. Methods on a recursive call chain are left as they are.
pub fn inline_object(obj_name: &str, program: &Program) -> Result<InlineOutcome, InlineError> {
    inline_selected(obj_name, program, None)
}

/// Like [`inline_object`], but only rewrites the body of `method`.
pub fn inline_method(
    obj_name: &str,
    method: &str,
    program: &Program,
) -> Result<InlineOutcome, InlineError> {
    inline_selected(obj_name, program, Some(method))
}

fn inline_selected(
    obj_name: &str,
    program: &Program,
    only: Option<&str>,
) -> Result<InlineOutcome, InlineError> {
    let owner = program
        .get(obj_name)
        .ok_or_else(|| InlineError::UnknownObject(obj_name.to_string()))?;
    let methods = find_methods(obj_name, owner);
    if let Some(name) = only {
        if !methods.iter().any(|m| m.name == name) {
            return Err(InlineError::UnknownMethod(obj_name.into(), name.into()));
        }
    }
    let skipped = recursive_methods(&methods);
    let selected = |m: &&MethodInfo| only.is_none_or(|n| n == m.name);

    let mut result = program.clone();
    let mut count = 0;
    for m in methods
        .iter()
        .filter(selected)
        .filter(|m| !skipped.contains(&m.name))
    {
        let mut current = m.clone();
        loop {
            let next = find_method_calls(&current)
                .into_iter()
                .find_map(|call| Some((callee(&call, &methods)?, call)));
            let Some((g, call)) = next else { break };
            current = inline_call(&current, &call, g);
            count += 1;
        }
        let target = result
            .get_mut(obj_name)
            .and_then(|o| o.attr_mut(&m.name))
            .expect("method attribute exists");
        *target = Term::new(TermKind::Object(current.object), target.span.clone());
    }

    let skipped = methods
        .iter()
        .filter(selected)
        .filter(|m| skipped.contains(&m.name))
        .map(|m| m.name.clone())
        .collect();
    Ok(InlineOutcome {
        program: result,
        skipped,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locators::resolve_locators;

    fn program(src: &str) -> Program {
        resolve_locators(&parse(src).unwrap()).unwrap()
    }

    fn method(p: &Program, owner: &str, name: &str) -> MethodInfo {
        find_method(p, &MethodKey::new(owner, name)).unwrap()
    }

    #[test]
    fn inlining_hoists_locals_into_container() {
        let p = program(
            "[] > obj
  [self x y] > g
    $.x.add $.y > sum
    $.x.div $.sum > @
  [self a] > f
    100.sub $.a > b
    $.self.g $.self $.a $.b > @
",
        );
        let f = method(&p, "obj", "f");
        let g = method(&p, "obj", "g");
        let call = &find_method_calls(&f)[0];
        let out = inline_call(&f, call, &g);
        assert_eq!(
            render_top_object("f", &out.object),
            "[self a] > f
  100.sub $.a > b
  [] > args_g
    ^.a.add ^.b > sum
  $.a.div $.args_g.sum > @
"
        );
        assert_eq!(out.params, f.params);
    }

    #[test]
    fn callee_without_locals_needs_no_container() {
        let p = program(
            "[] > a
  [self x] > f
    $.x.sqrt > @
  [self y] > g
    $.self.f $.self ($.y.sub 1) > @
",
        );
        let out = inline_object("a", &p).unwrap();
        assert_eq!(out.count, 1);
        let g = method(&out.program, "a", "g");
        assert_eq!(render_term(&g.body), "($.y.sub 1).sqrt");
        assert!(g.locals.is_empty());
    }

    #[test]
    fn identity_method() {
        let p = program(
            "[] > a\n  [self x] > id\n    $.x > @\n  [self] > k\n    $.self.id $.self 7 > @\n",
        );
        let out = inline_object("a", &p).unwrap();
        assert_eq!(render_term(&method(&out.program, "a", "k").body), "7");
    }

    #[test]
    fn chains_flatten_completely() {
        let p = program(
            "[] > a
  [self x] > k
    $.x.add 1 > @
  [self x] > f
    $.self.k $.self ($.x.mul 2) > @
  [self y] > g
    $.self.f $.self $.y > @
",
        );
        let out = inline_object("a", &p).unwrap();
        let g = method(&out.program, "a", "g");
        assert!(!render_top_object("g", &g.object).contains("$.self."));
        assert_eq!(render_term(&g.body), "($.y.mul 2).add 1");
    }

    #[test]
    fn no_calls_means_no_change() {
        let p = program("[] > a\n  [self x] > f\n    $.x.sqrt > @\n[] > b\n  ^.a > @\n");
        let out = inline_object("a", &p).unwrap();
        assert_eq!(out.program, p);
        assert_eq!(out.count, 0);
    }

    #[test]
    fn recursive_methods_are_skipped() {
        let p = program(
            "[] > a
  [self x] > f
    $.self.f $.self $.x > @
  [self x] > g
    $.self.f $.self $.x > @
  [self x] > h
    $.x > @
  [self x] > k
    $.self.h $.self $.x > @
",
        );
        let out = inline_object("a", &p).unwrap();
        assert_eq!(out.skipped, vec!["f".to_string(), "g".to_string()]);
        assert_eq!(render_term(&method(&out.program, "a", "k").body), "$.x");
    }

    #[test]
    fn fresh_names_avoid_existing_attributes() {
        let p = program(
            "[] > a
  [self x] > g
    $.x.add 1 > t
    $.t > @
  [self args_g] > f
    $.self.g $.self ($.self.g $.self $.args_g) > @
",
        );
        let out = inline_object("a", &p).unwrap();
        let f = method(&out.program, "a", "f");
        assert_eq!(
            render_top_object("f", &f.object),
            "[self args_g] > f
  [] > args_g_1
    ^.args_g.add 1 > t
  [] > args_g_2
    ^.args_g_1.t.add 1 > t
  $.args_g_2.t > @
"
        );
    }

    #[test]
    fn outer_references_gain_call_depth() {
        let p = program(
            "[] > a
  2 > k
  [self x] > g
    $.x.mul ^.k > t
    $.t.add ^.k > @
  [self y] > f
    [] > inner
      ^.self.g ^.self ^.y > @
    $.inner > @
",
        );
        let out = inline_object("a", &p).unwrap();
        let f = method(&out.program, "a", "f");
        assert_eq!(
            render_top_object("f", &f.object),
            "[self y] > f
  [] > inner
    [] > args_g
      ^.^.y.mul ^.^.^.k > t
    $.args_g.t.add ^.^.k > @
  $.inner > @
"
        );
    }

    #[test]
    fn self_arguments_follow_the_call_site() {
        let p = program(
            "[] > a
  [self x] > f
    $.self.h $.self $.x > @
  [self x] > h
    $.x > @
  [self y] > g
    $.self.f $.self $.y > @
",
        );
        let out = inline_object("a", &p).unwrap();
        assert_eq!(render_term(&method(&out.program, "a", "g").body), "$.y");
        assert_eq!(render_term(&method(&out.program, "a", "f").body), "$.x");
    }

    #[test]
    fn unknown_object_is_an_error() {
        assert!(inline_object("nope", &Program::default()).is_err());
    }

    #[test]
    fn single_method_inlining_leaves_others_alone() {
        let p = program(
            "[] > a
  [self x] > f
    $.x.sqrt > @
  [self y] > g
    $.self.f $.self $.y > @
  [self z] > h
    $.self.f $.self $.z > @
",
        );
        let out = inline_method("a", "g", &p).unwrap();
        assert_eq!(out.count, 1);
        assert_eq!(method(&out.program, "a", "g").body.to_string(), "$.y.sqrt");
        assert_eq!(method(&out.program, "a", "h"), method(&p, "a", "h"));
        assert!(matches!(
            inline_method("a", "k", &p),
            Err(InlineError::UnknownMethod(..))
        ));
    }
}
