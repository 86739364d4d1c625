//! Locator recovery and the locator-increment operation.

use thiserror::Error;

use crate::syntax::*;

/// Language-level objects that may be referenced without any enclosing binding.
pub const GLOBALS: &[&str] = &["seq", "assert", "memory", "debug", "stdout"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("{span}: unresolved identifier `{name}`")]
    Unresolved { name: String, span: SourceSpan },
    #[error("{span}: locator of depth {depth} reaches outside the program")]
    EscapingLocator { depth: u32, span: SourceSpan },
    #[error(
        "{span}: `{decorator}` decorates `{decorated}`, which is not an earlier top-level object"
    )]
    ForwardDecoration {
        decorator: String,
        decorated: String,
        span: SourceSpan,
    },
}

/// Enclosing object frames, innermost last. The innermost frame is `$`, the
/// next one `^`, and so on; the outermost frame is the program itself.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    frames: Vec<Vec<Ident>>,
}

impl Scope {
    /// Scope whose only frame is the program root.
    pub fn root(program: &Program) -> Self {
        Scope {
            frames: vec![program.objects.iter().map(|o| o.name.clone()).collect()],
        }
    }

    pub fn push(&mut self, obj: &ObjectTerm) {
        self.frames.push(obj.names().map(str::to_string).collect());
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Depth of the nearest frame binding `name`.
    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.frames
            .iter()
            .rev()
            .position(|f| f.iter().any(|n| n == name))
            .map(|k| k as u32)
    }
}

/// Makes every attribute reference start with an explicit locator.
pub fn resolve_locators(program: &Program) -> Result<Program, ResolveError> {
    let mut scope = Scope::root(program);
    let mut out = Program::default();
    for top in &program.objects {
        let body = resolve_object(&top.body, &mut scope)?;
        if let Some(dec) = body.decoratee() {
            if let TermKind::Locator { depth: 1, path } = &dec.kind {
                if let [target] = path.as_slice() {
                    if !out.objects.iter().any(|o| &o.name == target) {
                        return Err(ResolveError::ForwardDecoration {
                            decorator: top.name.clone(),
                            decorated: target.clone(),
                            span: dec.span.clone(),
                        });
                    }
                }
            }
        }
        out.objects.push(TopObject {
            name: top.name.clone(),
            body,
            span: top.span.clone(),
        });
    }
    Ok(out)
}

/// Resolves a term that appears directly inside the innermost frame of `scope`.
pub fn resolve_term(term: &Term, scope: &mut Scope) -> Result<Term, ResolveError> {
    let kind = match &term.kind {
        TermKind::Name(path) => {
            let head = &path[0];
            match scope.lookup(head) {
                Some(depth) => TermKind::Locator {
                    depth,
                    path: path.clone(),
                },
                None if GLOBALS.contains(&head.as_str()) => TermKind::Global(path.clone()),
                None => {
                    return Err(ResolveError::Unresolved {
                        name: head.clone(),
                        span: term.span.clone(),
                    })
                }
            }
        }
        TermKind::Locator { depth, .. } => {
            if *depth as usize >= scope.len() {
                return Err(ResolveError::EscapingLocator {
                    depth: *depth,
                    span: term.span.clone(),
                });
            }
            term.kind.clone()
        }
        TermKind::Object(obj) => TermKind::Object(resolve_object(obj, scope)?),
        TermKind::Application { head, args } => TermKind::Application {
            head: Box::new(resolve_term(head, scope)?),
            args: args
                .iter()
                .map(|a| resolve_term(a, scope))
                .collect::<Result<_, _>>()?,
        },
        TermKind::Access { base, path } => TermKind::Access {
            base: Box::new(resolve_term(base, scope)?),
            path: path.clone(),
        },
        TermKind::Global(_) | TermKind::Num(_) | TermKind::Bool(_) | TermKind::Str(_) => {
            term.kind.clone()
        }
    };
    Ok(Term::new(kind, term.span.clone()))
}

fn resolve_object(obj: &ObjectTerm, scope: &mut Scope) -> Result<ObjectTerm, ResolveError> {
    scope.push(obj);
    let attrs = obj
        .attrs
        .iter()
        .map(|b| {
            Ok(Binding {
                name: b.name.clone(),
                value: resolve_term(&b.value, scope)?,
                span: b.span.clone(),
            })
        })
        .collect::<Result<Vec<_>, ResolveError>>();
    scope.pop();
    Ok(ObjectTerm {
        voids: obj.voids.clone(),
        attrs: attrs?,
        span: obj.span.clone(),
    })
}

/// Rebuilds `term`, offering every explicit locator to `f` together with the
/// number of object literals of `term` that enclose it. `Some(t)` replaces the
/// locator node by `t`; replacements are not visited again.
pub fn rewrite_locators<F>(term: &Term, f: &mut F) -> Term
where
    F: FnMut(u32, u32, &[Ident], &SourceSpan) -> Option<Term>,
{
    rewrite_at(term, 0, f)
}

fn rewrite_at<F>(term: &Term, nesting: u32, f: &mut F) -> Term
where
    F: FnMut(u32, u32, &[Ident], &SourceSpan) -> Option<Term>,
{
    let kind = match &term.kind {
        TermKind::Locator { depth, path } => {
            return f(nesting, *depth, path, &term.span).unwrap_or_else(|| term.clone())
        }
        TermKind::Object(obj) => TermKind::Object(ObjectTerm {
            voids: obj.voids.clone(),
            attrs: obj
                .attrs
                .iter()
                .map(|b| Binding {
                    name: b.name.clone(),
                    value: rewrite_at(&b.value, nesting + 1, f),
                    span: b.span.clone(),
                })
                .collect(),
            span: obj.span.clone(),
        }),
        TermKind::Application { head, args } => TermKind::Application {
            head: Box::new(rewrite_at(head, nesting, f)),
            args: args.iter().map(|a| rewrite_at(a, nesting, f)).collect(),
        },
        TermKind::Access { base, path } => TermKind::Access {
            base: Box::new(rewrite_at(base, nesting, f)),
            path: path.clone(),
        },
        _ => return term.clone(),
    };
    Term::new(kind, term.span.clone())
}

/// Adds `amount` levels to every locator that reaches outside `term`.
pub fn shift_open_locators(term: &Term, amount: u32) -> Term {
    if amount == 0 {
        return term.clone();
    }
    rewrite_locators(term, &mut |nesting, depth, path, span| {
        (depth >= nesting).then(|| Term::locator(depth + amount, path.to_vec(), span.clone()))
    })
}

/// Open `$` becomes `^`, open `^.…^` gains one more `^`; closed locators stay.
pub fn increment_locators(term: &Term) -> Term {
    shift_open_locators(term, 1)
}

/// Visits every explicit locator with its nesting inside `term`.
pub fn for_each_locator<F>(term: &Term, f: &mut F)
where
    F: FnMut(u32, u32, &[Ident], &SourceSpan),
{
    visit_at(term, 0, f)
}

fn visit_at<F>(term: &Term, nesting: u32, f: &mut F)
where
    F: FnMut(u32, u32, &[Ident], &SourceSpan),
{
    match &term.kind {
        TermKind::Locator { depth, path } => f(nesting, *depth, path, &term.span),
        TermKind::Object(obj) => {
            for b in &obj.attrs {
                visit_at(&b.value, nesting + 1, f);
            }
        }
        TermKind::Application { head, args } => {
            visit_at(head, nesting, f);
            for a in args {
                visit_at(a, nesting, f);
            }
        }
        TermKind::Access { base, .. } => visit_at(base, nesting, f),
        _ => {}
    }
}
