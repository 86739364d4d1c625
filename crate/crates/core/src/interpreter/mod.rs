//! Reference interpreter for the EO fragment, used as a dynamic oracle.

mod differential;
mod machine;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::locators::{resolve_term, ResolveError, Scope};
use crate::num::Number;
use crate::syntax::*;

pub use differential::{
    differential_check, sample_inputs, DifferentialReport, Mismatch, OutcomeView,
};

pub const DEFAULT_FUEL: u64 = 100_000;

const STACK_SIZE: usize = 512 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Number(Number),
    Bool(bool),
}

impl Datum {
    pub fn approx_eq(&self, other: &Datum) -> bool {
        match (self, other) {
            (Datum::Number(a), Datum::Number(b)) => a.approx_eq(b),
            (Datum::Bool(a), Datum::Bool(b)) => a == b,
            _ => false,
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Datum::Number(Number::Exact(q)) => Term::num(q.clone()),
            Datum::Number(Number::Approx(v)) => {
                Term::num(crate::num::rational_from_f64(*v).expect("finite approximation"))
            }
            Datum::Bool(b) => Term::boolean(*b),
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Number(n) => write!(f, "{n}"),
            Datum::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Datum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Datum::Number(n) => s.serialize_str(&n.to_string()),
            Datum::Bool(b) => s.serialize_bool(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum RuntimeErrorKind {
    #[error("access to void attribute `{0}`")]
    VoidAccess(String),
    #[error("division by zero")]
    DivByZero,
    #[error("square root of a negative number")]
    NegativeSqrt,
    #[error("assertion failed")]
    AssertFailed,
    #[error("unknown attribute or primitive `{0}`")]
    Unknown(String),
    #[error("wrong number of arguments for `{0}`")]
    Arity(String),
    #[error("operands of `{0}` have the wrong type")]
    Type(String),
    #[error("result is not a number or boolean")]
    NotData,
    #[error("out of fuel")]
    OutOfFuel,
    #[error("evaluation nested too deeply")]
    TooDeep,
}

impl RuntimeErrorKind {
    /// Short name for reports.
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeErrorKind::VoidAccess(_) => "VoidAccess",
            RuntimeErrorKind::DivByZero => "DivByZero",
            RuntimeErrorKind::NegativeSqrt => "NegativeSqrt",
            RuntimeErrorKind::AssertFailed => "AssertFailed",
            RuntimeErrorKind::Unknown(_) => "Unknown",
            RuntimeErrorKind::Arity(_) => "Arity",
            RuntimeErrorKind::Type(_) => "Type",
            RuntimeErrorKind::NotData => "NotData",
            RuntimeErrorKind::OutOfFuel => "OutOfFuel",
            RuntimeErrorKind::TooDeep => "TooDeep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub span: SourceSpan,
}

#[derive(Debug, Error)]
pub enum EntryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

pub type Outcome = Result<Datum, RuntimeError>;

/// Parses `entry` against the top-level objects of `program` and evaluates it.
pub fn evaluate(program: &Program, entry: &str, fuel: u64) -> Result<Outcome, EntryError> {
    let term = parse_term(entry)?;
    let term = resolve_term(&term, &mut Scope::root(program))?;
    Ok(evaluate_term(program, &term, fuel))
}

/// Evaluates a term whose locators are relative to the program root.
pub fn evaluate_term(program: &Program, term: &Term, fuel: u64) -> Outcome {
    with_large_stack(|| Evaluator::new(program).run(term, fuel))
}

/// Runs `f` on a thread whose stack fits the deepest evaluation the
/// interpreter allows.
pub fn with_large_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawn evaluator thread")
            .join()
            .expect("evaluator thread panicked")
    })
}

/// Repeated evaluation against one program. Deeply nested evaluations need
/// the stack provided by [`with_large_stack`].
pub struct Evaluator {
    root: ObjectTerm,
}

impl Evaluator {
    pub fn new(program: &Program) -> Self {
        Evaluator {
            root: program.root_object(),
        }
    }

    pub fn run(&self, term: &Term, fuel: u64) -> Outcome {
        machine::Machine::new(&self.root, fuel).run(term)
    }

    pub fn call(&self, obj: &str, method: &str, args: &[Datum], fuel: u64) -> Outcome {
        self.run(&method_entry(obj, method, args), fuel)
    }
}

/// `obj.method obj a1 … an`: the method called with the object as receiver.
pub fn method_entry(obj: &str, method: &str, args: &[Datum]) -> Term {
    let receiver = Term::locator(0, vec![obj.to_string()], SourceSpan::synthetic());
    let head = Term::locator(
        0,
        vec![obj.to_string(), method.to_string()],
        SourceSpan::synthetic(),
    );
    let mut all = vec![receiver];
    all.extend(args.iter().map(Datum::to_term));
    Term::app(head, all, SourceSpan::synthetic())
}

pub fn call_method(
    program: &Program,
    obj: &str,
    method: &str,
    args: &[Datum],
    fuel: u64,
) -> Outcome {
    evaluate_term(program, &method_entry(obj, method, args), fuel)
}
