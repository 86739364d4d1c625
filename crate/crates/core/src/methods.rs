//! Syntactic views of methods, method calls and decoration.
//!
//! A method is an attached attribute of a top-level object bound to an object
//! term whose first void is `self`, which binds `@`, and whose local
//! definitions never mention that `@`. A method call is a term of the shape
//! `ℓ.self.g ℓ.self t1 … tn` where `ℓ` points at the calling method.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::locators::for_each_locator;
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MethodKey {
    pub owner: Ident,
    pub name: Ident,
}

impl MethodKey {
    pub fn new(owner: impl Into<Ident>, name: impl Into<Ident>) -> Self {
        MethodKey {
            owner: owner.into(),
            name: name.into(),
        }
    }
}

impl fmt::Display for MethodKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodInfo {
    /// Top-level object that owns the method.
    pub owner: Ident,
    pub name: Ident,
    /// Void attributes after `self`.
    pub params: Vec<Ident>,
    /// Attached attributes other than `@`.
    pub locals: Vec<Binding>,
    /// The term bound to `@`.
    pub body: Term,
    /// The complete method object.
    pub object: ObjectTerm,
}

impl MethodInfo {
    /// Builds the view if `object`, bound to `name` inside `owner`, is a method.
    pub fn from_object(owner: &str, name: &str, object: &ObjectTerm) -> Option<MethodInfo> {
        if object.voids.first().map(String::as_str) != Some(SELF) {
            return None;
        }
        let body = object.decoratee()?.clone();
        let locals: Vec<Binding> = object
            .attrs
            .iter()
            .filter(|b| b.name != DECORATEE)
            .cloned()
            .collect();
        if locals.iter().any(|b| references_own_decoratee(&b.value)) {
            return None;
        }
        Some(MethodInfo {
            owner: owner.to_string(),
            name: name.to_string(),
            params: object.voids[1..].to_vec(),
            locals,
            body,
            object: object.clone(),
        })
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn key(&self) -> MethodKey {
        MethodKey::new(&self.owner, &self.name)
    }

    pub fn span(&self) -> &SourceSpan {
        &self.object.span
    }
}

/// True if `term`, placed directly inside a method object, mentions that object's `@`.
pub fn references_own_decoratee(term: &Term) -> bool {
    let mut found = false;
    for_each_locator(term, &mut |nesting, depth, path, _| {
        if depth == nesting && path.first().map(String::as_str) == Some(DECORATEE) {
            found = true;
        }
    });
    found
}

/// Methods among the attached attributes of `obj`, in source order.
pub fn find_methods(owner: &str, obj: &ObjectTerm) -> Vec<MethodInfo> {
    obj.attrs
        .iter()
        .filter(|b| b.name != DECORATEE)
        .filter_map(|b| MethodInfo::from_object(owner, &b.name, b.value.as_object()?))
        .collect()
}

pub fn find_method(program: &Program, key: &MethodKey) -> Option<MethodInfo> {
    let obj = program.get(&key.owner)?;
    let term = obj.attr(&key.name)?;
    MethodInfo::from_object(&key.owner, &key.name, term.as_object()?)
}

/// One step from a term (or object) to one of its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathStep {
    /// The value of the i-th attached attribute of an object.
    Attr(usize),
    Head,
    Arg(usize),
    Base,
}

/// Position of a subterm, starting from the method object.
pub type TermPath = Vec<PathStep>;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodCall {
    /// Depth of the locator `ℓ`.
    pub locator: u32,
    pub callee: Ident,
    /// The arguments after `ℓ.self`.
    pub args: Vec<Term>,
    pub site: SourceSpan,
    pub owner_method: MethodKey,
    pub path: TermPath,
}

impl MethodCall {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The call site term, rebuilt from the view.
    pub fn to_term(&self) -> Term {
        let head = Term::locator(
            self.locator,
            vec![SELF.to_string(), self.callee.clone()],
            self.site.clone(),
        );
        let mut args = vec![Term::locator(
            self.locator,
            vec![SELF.to_string()],
            self.site.clone(),
        )];
        args.extend(self.args.iter().cloned());
        Term::app(head, args, self.site.clone())
    }
}

/// Classification of an application against the method-call shape.
enum CallShape {
    Call {
        locator: u32,
        callee: Ident,
    },
    /// `ℓ.self.g ℓ'.self …` with different locators.
    NearMiss,
    No,
}

fn call_shape(term: &Term, nesting: u32) -> CallShape {
    let TermKind::Application { head, args } = &term.kind else {
        return CallShape::No;
    };
    let TermKind::Locator { depth, path } = &head.kind else {
        return CallShape::No;
    };
    let [recv, callee] = path.as_slice() else {
        return CallShape::No;
    };
    if recv != SELF {
        return CallShape::No;
    }
    let Some(TermKind::Locator {
        depth: arg_depth,
        path: arg_path,
    }) = args.first().map(|a| &a.kind)
    else {
        return CallShape::No;
    };
    if arg_path.len() != 1 || arg_path[0] != SELF {
        return CallShape::No;
    }
    if arg_depth != depth {
        return CallShape::NearMiss;
    }
    if *depth != nesting {
        // ℓ does not point at the enclosing method.
        return CallShape::No;
    }
    CallShape::Call {
        locator: *depth,
        callee: callee.clone(),
    }
}

struct CallScan<'m> {
    method: &'m MethodInfo,
    calls: Vec<MethodCall>,
    near_misses: Vec<SourceSpan>,
}

impl CallScan<'_> {
    fn object(&mut self, obj: &ObjectTerm, nesting: u32, path: &mut TermPath) {
        for (i, b) in obj.attrs.iter().enumerate() {
            path.push(PathStep::Attr(i));
            self.term(&b.value, nesting, path);
            path.pop();
        }
    }

    fn term(&mut self, term: &Term, nesting: u32, path: &mut TermPath) {
        match &term.kind {
            TermKind::Object(obj) => self.object(obj, nesting + 1, path),
            TermKind::Application { head, args } => {
                path.push(PathStep::Head);
                self.term(head, nesting, path);
                path.pop();
                for (i, a) in args.iter().enumerate() {
                    path.push(PathStep::Arg(i));
                    self.term(a, nesting, path);
                    path.pop();
                }
            }
            TermKind::Access { base, .. } => {
                path.push(PathStep::Base);
                self.term(base, nesting, path);
                path.pop();
            }
            _ => {}
        }
        // Post-order: calls nested in arguments come first.
        match call_shape(term, nesting) {
            CallShape::Call { locator, callee } => {
                let TermKind::Application { args, .. } = &term.kind else {
                    unreachable!()
                };
                self.calls.push(MethodCall {
                    locator,
                    callee,
                    args: args[1..].to_vec(),
                    site: term.span.clone(),
                    owner_method: self.method.key(),
                    path: path.clone(),
                });
            }
            CallShape::NearMiss => self.near_misses.push(term.span.clone()),
            CallShape::No => {}
        }
    }
}

fn scan(m: &MethodInfo) -> CallScan<'_> {
    let mut scan = CallScan {
        method: m,
        calls: Vec::new(),
        near_misses: Vec::new(),
    };
    scan.object(&m.object, 0, &mut Vec::new());
    scan
}

/// Method calls inside `m`, in source order with nested calls first.
pub fn find_method_calls(m: &MethodInfo) -> Vec<MethodCall> {
    scan(m).calls
}

/// Terms shaped like method calls whose two `ℓ.self` locators differ.
pub fn near_miss_calls(m: &MethodInfo) -> Vec<SourceSpan> {
    scan(m).near_misses
}

/// True iff the owner of the calling method also owns a method named like the
/// callee with the call's arity. Callees whose `@` mentions itself are excluded.
pub fn is_inlinable(call: &MethodCall, program: &Program) -> bool {
    let Some(owner) = program.get(&call.owner_method.owner) else {
        return false;
    };
    find_methods(&call.owner_method.owner, owner)
        .iter()
        .any(|g| {
            g.name == call.callee && g.arity() == call.arity() && !references_own_decoratee(&g.body)
        })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DecorationPair {
    pub decorated: Ident,
    pub decorator: Ident,
}

impl fmt::Display for DecorationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.decorated, self.decorator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecorationError {
    #[error("cyclic decoration: {}", .0.join(" -> "))]
    Cycle(Vec<Ident>),
}

/// The top-level object that `name` decorates directly, if any.
pub fn direct_decoratee(program: &Program, name: &str) -> Option<Ident> {
    let dec = program.get(name)?.decoratee()?;
    match &dec.kind {
        TermKind::Locator { depth: 1, path } if path.len() == 1 => {
            program.get(&path[0]).map(|_| path[0].clone())
        }
        _ => None,
    }
}

/// `[name, decoratee, decoratee of decoratee, …]`: the attribute lookup order.
pub fn decoration_chain(program: &Program, name: &str) -> Result<Vec<Ident>, DecorationError> {
    let mut chain = vec![name.to_string()];
    let mut seen: BTreeSet<Ident> = chain.iter().cloned().collect();
    let mut current = name.to_string();
    while let Some(next) = direct_decoratee(program, &current) {
        if !seen.insert(next.clone()) {
            chain.push(next);
            return Err(DecorationError::Cycle(chain));
        }
        chain.push(next.clone());
        current = next;
    }
    Ok(chain)
}

/// All (decorated, decorator) pairs including transitive ones. Decorators
/// appear in topological order; each lists its decoratees nearest first.
pub fn find_decoration_pairs(program: &Program) -> Result<Vec<DecorationPair>, DecorationError> {
    let mut chains = Vec::new();
    for (index, obj) in program.objects.iter().enumerate() {
        let chain = decoration_chain(program, &obj.name)?;
        if chain.len() > 1 {
            chains.push((chain.len(), index, chain));
        }
    }
    chains.sort();
    Ok(chains
        .into_iter()
        .flat_map(|(_, _, chain)| {
            let decorator = chain[0].clone();
            chain[1..]
                .iter()
                .map(move |decorated| DecorationPair {
                    decorated: decorated.clone(),
                    decorator: decorator.clone(),
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locators::resolve_locators;

    fn program(src: &str) -> Program {
        resolve_locators(&parse(src).unwrap()).unwrap()
    }

    const SHIFTED_SQRT: &str = "[] > a
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
";

    #[test]
    fn methods_of_section_example() {
        let p = program(
            "[] > obj
  [self x] > f
    $.x.add 1 > y
    ^.avg $.y $.x > @
  [a b] > avg
    ($.a.add $.b).div 2 > @
  [self] > g
    $.@ > original
    3 > @
",
        );
        let ms = find_methods("obj", p.get("obj").unwrap());
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].name, "f");
        assert_eq!(ms[0].arity(), 1);
        assert_eq!(ms[0].locals.len(), 1);
        assert_eq!(ms[0].locals[0].name, "y");
    }

    #[test]
    fn methods_of_shifted_sqrt() {
        let p = program(SHIFTED_SQRT);
        let ms = find_methods("a", p.get("a").unwrap());
        let names: Vec<_> = ms
            .iter()
            .map(|m| (m.name.as_str(), m.arity(), m.locals.len()))
            .collect();
        assert_eq!(names, vec![("f", 1, 0), ("g", 1, 0), ("h", 1, 0)]);
        assert!(find_methods("e", &ObjectTerm::default()).is_empty());
    }

    #[test]
    fn method_calls_of_section_example() {
        let p = program(
            "[] > a
  [self x y] > f
    $.x.add $.y > z
    $.z.mul $.z > @
  [self x] > g
    $.self.f $.self $.x > @
[] > b
  ^.a > @
  [self x y] > f
    $.self.g $.self ($.x.add $.y) > @
  [self z] > h
    ^.@.g ^.@ $.z > @
",
        );
        let a_g = find_method(&p, &MethodKey::new("a", "g")).unwrap();
        let calls = find_method_calls(&a_g);
        assert_eq!(calls.len(), 1);
        assert_eq!(render_term(&calls[0].to_term()), "$.self.f $.self $.x");
        assert_eq!(calls[0].owner_method, MethodKey::new("a", "g"));

        let b_f = find_method(&p, &MethodKey::new("b", "f")).unwrap();
        assert_eq!(find_method_calls(&b_f).len(), 1);
        let b_h = find_method(&p, &MethodKey::new("b", "h")).unwrap();
        assert!(find_method_calls(&b_h).is_empty());
    }

    #[test]
    fn literal_body_has_no_calls() {
        let p = program("[] > a\n  [self] > k\n    3 > @\n");
        let k = find_method(&p, &MethodKey::new("a", "k")).unwrap();
        assert!(find_method_calls(&k).is_empty());
    }

    #[test]
    fn inlinability_in_shifted_sqrt() {
        let p = program(SHIFTED_SQRT);
        let a_g = find_method(&p, &MethodKey::new("a", "g")).unwrap();
        let call = &find_method_calls(&a_g)[0];
        assert!(is_inlinable(call, &p));
        let b_h = find_method(&p, &MethodKey::new("b", "h")).unwrap();
        let call = &find_method_calls(&b_h)[0];
        assert!(!is_inlinable(call, &p));
    }

    #[test]
    fn arity_mismatch_is_not_inlinable() {
        let p = program(
            "[] > a
  [self x] > f
    $.x > @
  [self y] > g
    $.self.f $.self $.y $.y > @
",
        );
        let g = find_method(&p, &MethodKey::new("a", "g")).unwrap();
        let call = &find_method_calls(&g)[0];
        assert_eq!(call.arity(), 2);
        assert!(!is_inlinable(call, &p));
    }

    #[test]
    fn near_misses_are_reported() {
        let p = program(
            "[] > a
  [self x] > f
    $.x > @
  [self y] > g
    [] > inner
      ^.self.f $.self ^.y > @
    $.inner > @
",
        );
        let g = find_method(&p, &MethodKey::new("a", "g")).unwrap();
        assert!(find_method_calls(&g).is_empty());
        assert_eq!(near_miss_calls(&g).len(), 1);
    }

    #[test]
    fn calls_from_nested_objects_use_deeper_locators() {
        let p = program(
            "[] > a
  [self x] > f
    $.x > @
  [self y] > g
    [] > inner
      ^.self.f ^.self ^.y > @
    $.inner > @
",
        );
        let g = find_method(&p, &MethodKey::new("a", "g")).unwrap();
        let calls = find_method_calls(&g);
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].locator, 1);
        assert_eq!(calls[0].path, vec![PathStep::Attr(0), PathStep::Attr(0)]);
    }

    #[test]
    fn decoration_pairs() {
        let p = program(SHIFTED_SQRT);
        assert_eq!(
            find_decoration_pairs(&p).unwrap(),
            vec![DecorationPair {
                decorated: "a".into(),
                decorator: "b".into()
            }]
        );
        assert!(find_decoration_pairs(&program("[] > a\n"))
            .unwrap()
            .is_empty());

        let chain = program("[] > a\n[] > b\n  ^.a > @\n[] > c\n  ^.b > @\n");
        let pairs: Vec<_> = find_decoration_pairs(&chain)
            .unwrap()
            .into_iter()
            .map(|p| (p.decorated, p.decorator))
            .collect();
        let expected = [("a", "b"), ("b", "c"), ("a", "c")];
        assert_eq!(
            pairs,
            expected
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .to_vec()
        );
    }

    #[test]
    fn cyclic_decoration_is_an_error() {
        // Only reachable for programs built by hand: the parser rejects forward references.
        let mut p = program("[] > a\n[] > b\n  ^.a > @\n");
        p.get_mut("a").unwrap().attrs.push(Binding::new(
            DECORATEE,
            Term::locator(1, vec!["b".into()], SourceSpan::synthetic()),
        ));
        assert!(matches!(
            find_decoration_pairs(&p),
            Err(DecorationError::Cycle(_))
        ));
    }
}
