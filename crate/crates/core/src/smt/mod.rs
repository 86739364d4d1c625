//! SMT-LIB encoding, external solver invocation and a sampling fallback.

mod encode;
mod eval;
mod fallback;
mod model;
mod sexpr;
mod solver;

pub use encode::{real_literal, symbol, term, to_smtlib, Query, LOGIC};
pub use eval::{eval, holds, Env, Value};
pub use fallback::{fallback_search, sample_models};
pub use model::{parse_model, Model, ModelValue};
pub use sexpr::{parse_all, parse_one, real_constant, to_expr, SExpr, SExprError};
pub use solver::{check, parse_output, CheckResult, SolverConfig, DEFAULT_SOLVER, SOLVER_ENV};
