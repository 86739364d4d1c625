//! Inference of value expressions and preconditions for methods.

mod expr;
mod infer;
mod sorts;
mod summary;

pub use expr::*;
pub use infer::{
    external_var_name, infer_method, infer_term, local_var_name, primitive_arity, self_var_name,
    ApproxFlags, InferConfig, InferError, Inferred, TermInference, UnknownPolicy, UnknownUse,
};
pub use sorts::{infer_sorts, SortError};
pub use summary::{summarize_chain, summarize_object, MethodSummary, SummaryEnv};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locators::{resolve_locators, resolve_term, Scope};
    use crate::syntax::*;

    fn program(src: &str) -> Program {
        resolve_locators(&parse(src).unwrap()).unwrap()
    }

    fn term(src: &str, params: &[&str]) -> TermInference {
        let mut voids = vec!["self".to_string()];
        voids.extend(params.iter().map(|p| p.to_string()));
        let mut scope = Scope::default();
        scope.push(&ObjectTerm::new(voids, vec![]));
        let t = resolve_term(&parse_term(src).unwrap(), &mut scope).unwrap();
        let params: Vec<Ident> = params.iter().map(|p| p.to_string()).collect();
        infer_term(&t, &params, &SummaryEnv::default(), InferConfig::default()).unwrap()
    }

    fn v(name: &str) -> Expr {
        Expr::var(name)
    }

    #[test]
    fn division_requires_nonzero_divisor() {
        let r = term("1.div $.x", &["x"]);
        assert_eq!(r.value, Some(Expr::div(Expr::int(1), v("x"))));
        assert_eq!(r.props, Expr::ne(v("x"), Expr::int(0)));
    }

    #[test]
    fn literal_addition_has_no_precondition() {
        let r = term("2.add 3", &[]);
        assert_eq!(r.value, Some(Expr::add(Expr::int(2), Expr::int(3))));
        assert!(r.props.is_true());
    }

    #[test]
    fn sqrt_introduces_a_witness() {
        let r = term("($.y.sub 1).sqrt", &["y"]);
        let z = v("z!1");
        assert_eq!(r.value, Some(z.clone()));
        assert_eq!(
            r.props,
            Expr::and([
                Expr::le(Expr::int(0), z.clone()),
                Expr::eq(Expr::mul(z.clone(), z), Expr::sub(v("y"), Expr::int(1))),
            ])
        );
        assert_eq!(r.exists_vars, vec![SortedVar::real("z!1")]);
    }

    #[test]
    fn two_square_roots_use_distinct_witnesses() {
        let r = term("$.x.sqrt.add ($.y.sqrt)", &["x", "y"]);
        let names: Vec<_> = r.exists_vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["z!1", "z!2"]);
    }

    #[test]
    fn derived_comparisons_lower_to_less_and_leq() {
        assert_eq!(
            term("$.x.greater 1", &["x"]).value,
            Some(Expr::lt(Expr::int(1), v("x")))
        );
        assert_eq!(
            term("$.x.geq 1", &["x"]).value,
            Some(Expr::le(Expr::int(1), v("x")))
        );
        assert_eq!(
            term("$.x.leq 1", &["x"]).value,
            Some(Expr::le(v("x"), Expr::int(1)))
        );
        assert_eq!(
            term("$.x.sub 1", &["x"]).value,
            Some(Expr::add(v("x"), Expr::mul(Expr::int(-1), Expr::int(1))))
        );
    }

    #[test]
    fn if_guards_branch_preconditions() {
        let r = term("($.x.less 0).if (1.div $.x) 0", &["x"]);
        let c = Expr::lt(v("x"), Expr::int(0));
        assert_eq!(
            r.props,
            Expr::implies(c.clone(), Expr::ne(v("x"), Expr::int(0)))
        );
        assert_eq!(
            r.value,
            Some(Expr::ite(c, Expr::div(Expr::int(1), v("x")), Expr::int(0)))
        );
    }

    #[test]
    fn assert_and_seq() {
        let r = term("seq (assert ($.x.less 3)) $.x", &["x"]);
        assert_eq!(r.value, Some(v("x")));
        assert_eq!(r.props, Expr::lt(v("x"), Expr::int(3)));
        let r = term("assert ($.x.less 3)", &["x"]);
        assert_eq!(r.value, None);
    }

    #[test]
    fn unknown_primitives_follow_the_policy() {
        let r = term("$.x.foo", &["x"]);
        assert!(r.props.is_true());
        assert!(r.flags.under);
        let src = "[] > a\n  [self x] > f\n    debug.print $.x > @\n";
        let p = program(src);
        let strict = InferConfig {
            unknown: UnknownPolicy::Reject,
        };
        let env = summarize_object("a", &p, strict);
        let f = env.get("a", "f").unwrap();
        assert!(f.properties.is_false());
        assert!(f.flags.over && !f.flags.under);
        assert_eq!(env.unknown, ["debug.print".to_string()].into());
    }

    #[test]
    fn unsupported_terms_are_errors() {
        let p =
            program("[] > a\n  [self x] > f\n    5.foo > @\n  [self x] > g\n    $.x.add 1 2 > @\n");
        let env = summarize_object("a", &p, InferConfig::default());
        assert!(matches!(
            env.failures[&crate::methods::MethodKey::new("a", "f")],
            InferError::UnsupportedTerm { .. }
        ));
        assert!(env
            .failures
            .contains_key(&crate::methods::MethodKey::new("a", "g")));
        let p = program("[] > a\n  [self x] > f\n    assert ($.x.less 1) > t\n    $.t.add 1 > @\n");
        let env = summarize_object("a", &p, InferConfig::default());
        assert!(env.summaries.is_empty());
    }

    #[test]
    fn reciprocal_summary() {
        let p = program("[] > a\n  [self x] > recip\n    1.div $.x > @\n");
        let env = summarize_object("a", &p, InferConfig::default());
        let s = env.get("a", "recip").unwrap();
        assert_eq!(s.forall_vars, vec![SortedVar::real("x")]);
        assert!(s.exists_vars.is_empty());
        assert_eq!(s.value, Some(Expr::div(Expr::int(1), v("x"))));
        assert_eq!(s.properties, Expr::ne(v("x"), Expr::int(0)));
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
    fn summaries_of_the_decorated_object() {
        let p = program(SHIFTED_SQRT);
        let env = summarize_object("a", &p, InferConfig::default());
        let h = env.get("a", "h").unwrap();
        assert_eq!(h.value, Some(v("z")));
        assert!(h.properties.is_true());

        let g = env.get("a", "g").unwrap();
        let ymin1 = Expr::sub(v("y"), Expr::int(1));
        let w = v("z!1");
        assert_eq!(g.value, Some(w.clone()));
        assert_eq!(
            g.properties,
            Expr::and([
                Expr::le(Expr::int(0), w.clone()),
                Expr::eq(Expr::mul(w.clone(), w), ymin1),
            ])
        );
        assert_eq!(g.exists_vars, vec![SortedVar::real("z!1")]);
        assert_eq!(g.forall_vars, vec![SortedVar::real("y")]);
        assert!(g.flags.exact());
    }

    #[test]
    fn dispatch_through_the_decorator() {
        let p = program(SHIFTED_SQRT);
        let env = summarize_chain(&p, &["b".into(), "a".into()], InferConfig::default());
        assert_eq!(env.dispatch["g"], crate::methods::MethodKey::new("a", "g"));
        assert_eq!(env.dispatch["f"], crate::methods::MethodKey::new("b", "f"));
        let h = env.get("b", "h").unwrap();
        assert!(h.properties.is_true());
        let zm1 = Expr::sub(v("z"), Expr::int(1));
        assert_eq!(h.value, Some(Expr::mul(zm1.clone(), zm1)));
    }

    #[test]
    fn locals_become_existential_definitions() {
        let p = program(
            "[] > obj
  [self x y] > g
    $.x.add $.y > sum
    $.x.div $.sum > @
",
        );
        let env = summarize_object("obj", &p, InferConfig::default());
        let g = env.get("obj", "g").unwrap();
        assert_eq!(g.exists_vars, vec![SortedVar::real("$.sum")]);
        assert_eq!(
            g.properties,
            Expr::and([
                Expr::eq(v("$.sum"), Expr::add(v("x"), v("y"))),
                Expr::ne(v("$.sum"), Expr::int(0)),
            ])
        );
        assert_eq!(g.value, Some(Expr::div(v("x"), v("$.sum"))));
    }

    #[test]
    fn containers_and_nested_objects_get_path_names() {
        let p = program(
            "[] > obj
  2 > k
  [self a] > f
    [] > args_g
      ^.a.add ^.^.k > sum
    [] > tmp
      ^.args_g.sum > @
    ^.unknown_attr > w
    $.tmp.mul 3 > @
  [] > unknown_attr
",
        );
        let env = summarize_object("obj", &p, InferConfig::default());
        let f = env.get("obj", "f").unwrap();
        let names: Vec<_> = f.exists_vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["$.args_g.sum", "$.tmp", "u!1", "$.w"]);
        assert_eq!(f.value, Some(Expr::mul(v("$.tmp"), Expr::int(3))));
        assert!(f.flags.under);
    }

    #[test]
    fn calls_rename_callee_witnesses() {
        let p = program(
            "[] > a
  [self x] > f
    $.x.sqrt > @
  [self y] > g
    ($.self.f $.self $.y).add ($.self.f $.self $.y) > @
",
        );
        let env = summarize_object("a", &p, InferConfig::default());
        let g = env.get("a", "g").unwrap();
        let names: Vec<_> = g.exists_vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["z!1", "z!2"]);
        assert_eq!(g.value, Some(Expr::add(v("z!1"), v("z!2"))));
    }

    #[test]
    fn owner_constants_and_self_attributes() {
        let p = program(
            "[] > a
  10 > k
  $.k.add 1 > m
  [self x] > f
    ($.x.add ^.k).add ($.x.mul ^.m) > t
    $.t.add $.self.c > @
",
        );
        let env = summarize_object("a", &p, InferConfig::default());
        let f = env.get("a", "f").unwrap();
        let forall: Vec<_> = f.forall_vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(forall, vec!["x", "^.a.m", "self.c"]);
        assert_eq!(
            f.properties,
            Expr::eq(
                v("$.t"),
                Expr::add(
                    Expr::add(v("x"), Expr::int(10)),
                    Expr::mul(v("x"), v("^.a.m"))
                )
            )
        );
    }

    #[test]
    fn recursion_is_reported_per_cycle() {
        let p = program(
            "[] > a
  [self x] > f
    $.self.g $.self $.x > @
  [self x] > g
    $.self.f $.self $.x > @
  [self x] > h
    $.self.f $.self $.x > @
",
        );
        let env = summarize_object("a", &p, InferConfig::default());
        assert!(matches!(
            env.failures[&crate::methods::MethodKey::new("a", "f")],
            InferError::RecursiveMethod { .. }
        ));
        assert!(env
            .failures
            .contains_key(&crate::methods::MethodKey::new("a", "g")));
        let h = env.get("a", "h").unwrap();
        assert!(h.flags.under);
    }

    #[test]
    fn chains_are_summarized_in_one_pass() {
        let p = program(
            "[] > a
  [self y] > g
    $.self.f $.self $.y > @
  [self x] > f
    $.self.k $.self $.x > @
  [self x] > k
    1.div $.x > @
",
        );
        let env = summarize_object("a", &p, InferConfig::default());
        assert_eq!(env.summaries.len(), 3);
        assert_eq!(
            env.get("a", "g").unwrap().properties,
            Expr::ne(v("y"), Expr::int(0))
        );
        assert!(
            summarize_object("b", &program("[] > b\n"), InferConfig::default())
                .summaries
                .is_empty()
        );
    }

    #[test]
    fn boolean_parameters_are_sorted() {
        let r = term("$.c.if 1 2", &["c"]);
        assert!(r.props.is_true());
        let p = program("[] > a\n  [self c x] > f\n    $.c.if $.x 0 > @\n");
        let env = summarize_object("a", &p, InferConfig::default());
        let f = env.get("a", "f").unwrap();
        assert_eq!(
            f.forall_vars,
            vec![SortedVar::new("c", Sort::Bool), SortedVar::real("x")]
        );
    }
}
