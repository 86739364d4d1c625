use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::Serialize;

pub type Ident = String;

/// Name of the reserved decoration attribute.
pub const DECORATEE: &str = "@";
/// Name of the void attribute that carries the receiver of a method.
pub const SELF: &str = "self";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl Position {
    pub fn new(line: u32, column: u32) -> Self {
        Position { line, column }
    }
}

/// Location of a syntax node in its source file. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Option<Arc<str>>,
    pub start: Position,
    pub end: Position,
}

impl SourceSpan {
    pub fn new(file: Option<Arc<str>>, start: Position, end: Position) -> Self {
        debug_assert!(start <= end);
        SourceSpan { file, start, end }
    }

    /// Span used for nodes that do not come from source text.
    pub fn synthetic() -> Self {
        SourceSpan {
            file: None,
            start: Position::new(1, 1),
            end: Position::new(1, 1),
        }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl Default for SourceSpan {
    fn default() -> Self {
        SourceSpan::synthetic()
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}:{}", self.start.line, self.start.column)
    }
}

/// A term of the EO fragment. Equality is structural and ignores spans.
#[derive(Debug, Clone)]
pub struct Term {
    pub kind: TermKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Object(ObjectTerm),
    /// Attribute reference whose locator was omitted in the source, e.g. `mass.div`.
    Name(Vec<Ident>),
    /// Attribute reference with an explicit locator: depth 0 is `$`, depth n is n `^`s.
    Locator {
        depth: u32,
        path: Vec<Ident>,
    },
    /// Reference to a language-level object that no enclosing object binds (`seq`, `assert`, ...).
    Global(Vec<Ident>),
    Application {
        head: Box<Term>,
        args: Vec<Term>,
    },
    /// Attribute access on a term that is not a plain reference, e.g. `($.y.sub 1).sqrt`.
    Access {
        base: Box<Term>,
        path: Vec<Ident>,
    },
    Num(BigRational),
    Bool(bool),
    Str(String),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Term {
    pub fn new(kind: TermKind, span: SourceSpan) -> Self {
        Term { kind, span }
    }

    pub fn synthetic(kind: TermKind) -> Self {
        Term::new(kind, SourceSpan::synthetic())
    }

    pub fn locator(depth: u32, path: Vec<Ident>, span: SourceSpan) -> Self {
        Term::new(TermKind::Locator { depth, path }, span)
    }

    pub fn app(head: Term, args: Vec<Term>, span: SourceSpan) -> Self {
        Term::new(
            TermKind::Application {
                head: Box::new(head),
                args,
            },
            span,
        )
    }

    pub fn num(value: BigRational) -> Self {
        Term::synthetic(TermKind::Num(value))
    }

    pub fn boolean(value: bool) -> Self {
        Term::synthetic(TermKind::Bool(value))
    }

    pub fn as_object(&self) -> Option<&ObjectTerm> {
        match &self.kind {
            TermKind::Object(obj) => Some(obj),
            _ => None,
        }
    }

    /// Accesses `rest` on this term, merging into the path of references and access chains.
    pub fn access(self, rest: &[Ident]) -> Term {
        if rest.is_empty() {
            return self;
        }
        let span = self.span.clone();
        match self.kind {
            TermKind::Locator { depth, mut path } => {
                path.extend_from_slice(rest);
                Term::new(TermKind::Locator { depth, path }, span)
            }
            TermKind::Name(mut path) => {
                path.extend_from_slice(rest);
                Term::new(TermKind::Name(path), span)
            }
            TermKind::Global(mut path) => {
                path.extend_from_slice(rest);
                Term::new(TermKind::Global(path), span)
            }
            TermKind::Access { base, mut path } => {
                path.extend_from_slice(rest);
                Term::new(TermKind::Access { base, path }, span)
            }
            kind => Term::new(
                TermKind::Access {
                    base: Box::new(Term::new(kind, span.clone())),
                    path: rest.to_vec(),
                },
                span,
            ),
        }
    }

    /// Splits `t.x1...xn` into its base term and the trailing attribute `xn`.
    pub fn split_last_attr(&self) -> Option<(Term, &str)> {
        match &self.kind {
            TermKind::Locator { depth, path } if path.len() >= 2 => {
                let (last, init) = path.split_last()?;
                Some((
                    Term::locator(*depth, init.to_vec(), self.span.clone()),
                    last,
                ))
            }
            TermKind::Name(path) if path.len() >= 2 => {
                let (last, init) = path.split_last()?;
                Some((
                    Term::new(TermKind::Name(init.to_vec()), self.span.clone()),
                    last,
                ))
            }
            TermKind::Global(path) if path.len() >= 2 => {
                let (last, init) = path.split_last()?;
                Some((
                    Term::new(TermKind::Global(init.to_vec()), self.span.clone()),
                    last,
                ))
            }
            TermKind::Access { base, path } => {
                let (last, init) = path.split_last()?;
                let base = if init.is_empty() {
                    (**base).clone()
                } else {
                    Term::new(
                        TermKind::Access {
                            base: base.clone(),
                            path: init.to_vec(),
                        },
                        self.span.clone(),
                    )
                };
                Some((base, last))
            }
            _ => None,
        }
    }
}

/// An attached attribute: `value > name`.
#[derive(Debug, Clone)]
pub struct Binding {
    pub name: Ident,
    pub value: Term,
    pub span: SourceSpan,
}

impl PartialEq for Binding {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value
    }
}

impl Binding {
    pub fn new(name: impl Into<Ident>, value: Term) -> Self {
        let span = value.span.clone();
        Binding {
            name: name.into(),
            value,
            span,
        }
    }
}

/// Object literal: void attributes in brackets followed by attached attributes.
#[derive(Debug, Clone, Default)]
pub struct ObjectTerm {
    pub voids: Vec<Ident>,
    pub attrs: Vec<Binding>,
    pub span: SourceSpan,
}

impl PartialEq for ObjectTerm {
    fn eq(&self, other: &Self) -> bool {
        self.voids == other.voids && self.attrs == other.attrs
    }
}

impl ObjectTerm {
    pub fn new(voids: Vec<Ident>, attrs: Vec<Binding>) -> Self {
        ObjectTerm {
            voids,
            attrs,
            span: SourceSpan::synthetic(),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&Term> {
        self.attrs.iter().find(|b| b.name == name).map(|b| &b.value)
    }

    pub fn attr_mut(&mut self, name: &str) -> Option<&mut Term> {
        self.attrs
            .iter_mut()
            .find(|b| b.name == name)
            .map(|b| &mut b.value)
    }

    pub fn decoratee(&self) -> Option<&Term> {
        self.attr(DECORATEE)
    }

    pub fn has_void(&self, name: &str) -> bool {
        self.voids.iter().any(|v| v == name)
    }

    /// True when the object binds `name` either as a void or as an attached attribute.
    pub fn binds(&self, name: &str) -> bool {
        self.has_void(name) || self.attrs.iter().any(|b| b.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.voids
            .iter()
            .map(String::as_str)
            .chain(self.attrs.iter().map(|b| b.name.as_str()))
    }

    /// Inserts an attached attribute just before `@`, or at the end when there is none.
    pub fn insert_before_decoratee(&mut self, binding: Binding) {
        match self.attrs.iter().position(|b| b.name == DECORATEE) {
            Some(i) => self.attrs.insert(i, binding),
            None => self.attrs.push(binding),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopObject {
    pub name: Ident,
    pub body: ObjectTerm,
    pub span: SourceSpan,
}

impl PartialEq for TopObject {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.body == other.body
    }
}

/// A parsed EO program: an ordered list of uniquely named top-level objects.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub objects: Vec<TopObject>,
}

impl Program {
    pub fn get(&self, name: &str) -> Option<&ObjectTerm> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| &o.body)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut ObjectTerm> {
        self.objects
            .iter_mut()
            .find(|o| o.name == name)
            .map(|o| &mut o.body)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }

    /// The implicit object that holds every top-level object as an attached attribute.
    pub fn root_object(&self) -> ObjectTerm {
        ObjectTerm {
            voids: Vec::new(),
            attrs: self
                .objects
                .iter()
                .map(|o| Binding {
                    name: o.name.clone(),
                    value: Term::new(TermKind::Object(o.body.clone()), o.span.clone()),
                    span: o.span.clone(),
                })
                .collect(),
            span: SourceSpan::synthetic(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render::render_term(self))
    }
}
