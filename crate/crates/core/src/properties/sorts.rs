//! Sort reconstruction for variables by unification. Unconstrained variables
//! default to `Real`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::expr::{CmpOp, Expr, Sort};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort mismatch: {0}")]
pub struct SortError(pub String);

#[derive(Debug, Clone)]
enum Ty {
    Known(Sort),
    Class(String),
}

#[derive(Default)]
struct Unifier {
    parent: BTreeMap<String, String>,
    sort: BTreeMap<String, Sort>,
    bound: Vec<(String, Sort)>,
}

impl Unifier {
    fn find(&mut self, v: &str) -> String {
        let p = self.parent.get(v).cloned();
        match p {
            None => {
                self.parent.insert(v.to_string(), v.to_string());
                v.to_string()
            }
            Some(p) if p == v => p,
            Some(p) => {
                let root = self.find(&p);
                self.parent.insert(v.to_string(), root.clone());
                root
            }
        }
    }

    fn expect(&mut self, ty: Ty, sort: Sort, what: &Expr) -> Result<(), SortError> {
        match ty {
            Ty::Known(s) if s == sort => Ok(()),
            Ty::Known(s) => Err(SortError(format!("{what:?} has sort {s}, expected {sort}"))),
            Ty::Class(v) => {
                let root = self.find(&v);
                match self.sort.get(&root) {
                    Some(s) if *s != sort => Err(SortError(format!(
                        "variable `{v}` used both as {s} and as {sort}"
                    ))),
                    _ => {
                        self.sort.insert(root, sort);
                        Ok(())
                    }
                }
            }
        }
    }

    fn unify(&mut self, a: Ty, b: Ty, what: &Expr) -> Result<Ty, SortError> {
        match (a, b) {
            (Ty::Known(s), other) | (other, Ty::Known(s)) => {
                self.expect(other, s, what)?;
                Ok(Ty::Known(s))
            }
            (Ty::Class(x), Ty::Class(y)) => {
                let (rx, ry) = (self.find(&x), self.find(&y));
                if rx != ry {
                    match (self.sort.get(&rx).copied(), self.sort.get(&ry).copied()) {
                        (Some(s), Some(t)) if s != t => {
                            return Err(SortError(format!("`{x}` ({s}) compared with `{y}` ({t})")))
                        }
                        (None, Some(t)) => {
                            self.sort.insert(rx.clone(), t);
                        }
                        _ => {}
                    }
                    self.parent.insert(ry, rx.clone());
                }
                Ok(Ty::Class(rx))
            }
        }
    }

    fn ty(&mut self, e: &Expr) -> Result<Ty, SortError> {
        Ok(match e {
            Expr::Bool(_) => Ty::Known(Sort::Bool),
            Expr::Num(_) => Ty::Known(Sort::Real),
            Expr::Var(v) => match self.bound.iter().rev().find(|(n, _)| n == v) {
                Some((_, s)) => Ty::Known(*s),
                None => Ty::Class(v.clone()),
            },
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                self.operands(&[a, b], Sort::Real)?;
                Ty::Known(Sort::Real)
            }
            Expr::Cmp(CmpOp::Lt | CmpOp::Le, a, b) => {
                self.operands(&[a, b], Sort::Real)?;
                Ty::Known(Sort::Bool)
            }
            Expr::Cmp(CmpOp::Eq | CmpOp::Ne, a, b) => {
                let (ta, tb) = (self.ty(a)?, self.ty(b)?);
                self.unify(ta, tb, e)?;
                Ty::Known(Sort::Bool)
            }
            Expr::Not(a) => {
                self.operands(&[a], Sort::Bool)?;
                Ty::Known(Sort::Bool)
            }
            Expr::Implies(a, b) => {
                self.operands(&[a, b], Sort::Bool)?;
                Ty::Known(Sort::Bool)
            }
            Expr::And(xs) | Expr::Or(xs) => {
                for x in xs {
                    let t = self.ty(x)?;
                    self.expect(t, Sort::Bool, x)?;
                }
                Ty::Known(Sort::Bool)
            }
            Expr::Ite(c, a, b) => {
                self.operands(&[c], Sort::Bool)?;
                let (ta, tb) = (self.ty(a)?, self.ty(b)?);
                self.unify(ta, tb, e)?
            }
            Expr::Exists(vs, body) | Expr::Forall(vs, body) => {
                let n = self.bound.len();
                self.bound
                    .extend(vs.iter().map(|v| (v.name.clone(), v.sort)));
                let t = self.ty(body);
                self.bound.truncate(n);
                self.expect(t?, Sort::Bool, body)?;
                Ty::Known(Sort::Bool)
            }
        })
    }

    fn operands(&mut self, xs: &[&Expr], sort: Sort) -> Result<(), SortError> {
        for x in xs {
            let t = self.ty(x)?;
            self.expect(t, sort, x)?;
        }
        Ok(())
    }
}

/// Sorts of all free variables of `formulae` (which must be boolean) and
/// `values` (whose sorts are unconstrained). `hints` fixes known sorts.
pub fn infer_sorts<'e>(
    formulae: impl IntoIterator<Item = &'e Expr>,
    values: impl IntoIterator<Item = &'e Expr>,
    hints: &BTreeMap<String, Sort>,
) -> Result<BTreeMap<String, Sort>, SortError> {
    let mut u = Unifier::default();
    for (v, s) in hints {
        u.expect(Ty::Class(v.clone()), *s, &Expr::Var(v.clone()))?;
    }
    let mut vars = Vec::new();
    for f in formulae {
        let t = u.ty(f)?;
        u.expect(t, Sort::Bool, f)?;
        vars.extend(f.free_vars());
    }
    for v in values {
        u.ty(v)?;
        vars.extend(v.free_vars());
    }
    vars.extend(hints.keys().cloned());
    let mut out = BTreeMap::new();
    for v in vars {
        let root = u.find(&v);
        let sort = u.sort.get(&root).copied().unwrap_or(Sort::Real);
        out.insert(v, sort);
    }
    Ok(out)
}
