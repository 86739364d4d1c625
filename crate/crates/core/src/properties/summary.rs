//! Method summaries and their construction in call-graph order.

use std::collections::{BTreeMap, BTreeSet};

use super::expr::{Expr, SortedVar};
use super::infer::{infer_method, ApproxFlags, InferConfig, InferError, UnknownUse};
use crate::methods::*;
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: MethodKey,
    pub params: Vec<Ident>,
    /// Parameters first, then free attributes such as `self.k`.
    pub forall_vars: Vec<SortedVar>,
    pub exists_vars: Vec<SortedVar>,
    pub value: Option<Expr>,
    /// Quantifier-free; existentially closed over `exists_vars`.
    pub properties: Expr,
    pub flags: ApproxFlags,
    pub unknowns: Vec<UnknownUse>,
}

impl MethodSummary {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// `∃ exists_vars. properties`.
    pub fn closed_properties(&self) -> Expr {
        Expr::exists(self.exists_vars.clone(), self.properties.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryEnv {
    pub summaries: BTreeMap<MethodKey, MethodSummary>,
    /// Method name to the implementation `$.self.<name>` calls reach.
    pub dispatch: BTreeMap<Ident, MethodKey>,
    /// Names of terms that were treated as unknown primitives.
    pub unknown: BTreeSet<String>,
    pub failures: BTreeMap<MethodKey, InferError>,
}

impl SummaryEnv {
    pub fn get(&self, owner: &str, name: &str) -> Option<&MethodSummary> {
        self.summaries.get(&MethodKey::new(owner, name))
    }

    /// The summary `$.self.<name>` reaches.
    pub fn dispatched(&self, name: &str) -> Option<&MethodSummary> {
        self.summaries.get(self.dispatch.get(name)?)
    }
}

/// Summaries for all methods of the objects in `chain`, where calls on `self`
/// dispatch to the first object of the chain that defines the method.
pub fn summarize_chain(program: &Program, chain: &[Ident], config: InferConfig) -> SummaryEnv {
    let mut env = SummaryEnv::default();
    let mut methods: BTreeMap<MethodKey, MethodInfo> = BTreeMap::new();
    let mut order = Vec::new();
    for name in chain.iter().rev() {
        let Some(obj) = program.get(name) else {
            continue;
        };
        for m in find_methods(name, obj) {
            env.dispatch.insert(m.name.clone(), m.key());
            order.push(m.key());
            methods.insert(m.key(), m);
        }
    }
    order.reverse();

    let mut builder = Builder {
        program,
        config,
        methods: &methods,
        env,
        stack: Vec::new(),
    };
    for key in &order {
        builder.visit(key);
    }
    let mut env = builder.env;
    env.unknown = env
        .summaries
        .values()
        .flat_map(|s| s.unknowns.iter().map(|u| u.name.clone()))
        .collect();
    env
}

/// Summaries of the methods of one object with `self` bound to that object.
pub fn summarize_object(obj_name: &str, program: &Program, config: InferConfig) -> SummaryEnv {
    summarize_chain(program, &[obj_name.to_string()], config)
}

struct Builder<'p> {
    program: &'p Program,
    config: InferConfig,
    methods: &'p BTreeMap<MethodKey, MethodInfo>,
    env: SummaryEnv,
    stack: Vec<MethodKey>,
}

impl Builder<'_> {
    fn done(&self, key: &MethodKey) -> bool {
        self.env.summaries.contains_key(key) || self.env.failures.contains_key(key)
    }

    fn visit(&mut self, key: &MethodKey) {
        if self.done(key) {
            return;
        }
        if let Some(pos) = self.stack.iter().position(|k| k == key) {
            let cycle: Vec<MethodKey> = self.stack[pos..].to_vec();
            for k in &cycle {
                self.env.failures.insert(
                    k.clone(),
                    InferError::RecursiveMethod {
                        method: k.clone(),
                        cycle: cycle.clone(),
                    },
                );
            }
            return;
        }
        let m = &self.methods[key];
        self.stack.push(key.clone());
        for call in find_method_calls(m) {
            let Some(callee) = self.env.dispatch.get(&call.callee).cloned() else {
                continue;
            };
            if self.methods[&callee].arity() == call.arity() {
                self.visit(&callee);
            }
        }
        self.stack.pop();
        if self.done(key) {
            return;
        }
        let owner = self
            .program
            .get(&m.owner)
            .expect("method owners are top-level objects");
        match infer_method(m, owner, &self.env, self.config) {
            Ok(s) => {
                self.env.summaries.insert(key.clone(), s);
            }
            Err(e) => {
                self.env.failures.insert(key.clone(), e);
            }
        }
    }
}
