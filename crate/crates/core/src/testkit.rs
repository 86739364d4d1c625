//! Seeded generators of programs in the pure numeric fragment, for property
//! tests of the inliner, the inference and the interpreter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub methods: usize,
    pub max_arity: usize,
    pub max_depth: u32,
    pub locals: bool,
    /// Add an object `d` decorating `o` whose methods call those of `o`
    /// without overriding any.
    pub decorator: bool,
    /// Allow `div`, which fails on zero.
    pub div: bool,
    /// Allow `sqrt`, which fails on negatives and yields approximate values.
    pub sqrt: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            methods: 4,
            max_arity: 3,
            max_depth: 3,
            locals: true,
            decorator: true,
            div: true,
            sqrt: true,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    /// Arities of the methods callable from the method being generated.
    callable: Vec<(String, usize)>,
}

impl Gen {
    fn expr(&mut self, vars: &[String], depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf(vars);
        }
        let choice = self.rng.gen_range(0..10);
        match choice {
            0..=3 => {
                let op = *["add", "sub", "mul", "add"].choose(&mut self.rng).unwrap();
                self.binary(op, vars, depth)
            }
            4 if self.cfg.div => self.binary("div", vars, depth),
            5 if self.cfg.sqrt => {
                let a = self.expr(vars, depth - 1);
                format!("({a}).sqrt")
            }
            6 => {
                let cmp = *["less", "leq", "eq", "neq", "greater", "geq"]
                    .choose(&mut self.rng)
                    .unwrap();
                let (a, b) = (self.expr(vars, depth - 1), self.expr(vars, depth - 1));
                let (t, e) = (self.expr(vars, depth - 1), self.expr(vars, depth - 1));
                format!("(({a}).{cmp} ({b})).if ({t}) ({e})")
            }
            _ if !self.callable.is_empty() => {
                let (name, arity) = self.callable.choose(&mut self.rng).unwrap().clone();
                let args: Vec<String> = (0..arity)
                    .map(|_| format!("({})", self.expr(vars, depth - 1)))
                    .collect();
                let mut call = format!("$.self.{name} $.self");
                for a in args {
                    call.push(' ');
                    call.push_str(&a);
                }
                format!("({call})")
            }
            _ => self.binary("add", vars, depth),
        }
    }

    fn binary(&mut self, op: &str, vars: &[String], depth: u32) -> String {
        let (a, b) = (self.expr(vars, depth - 1), self.expr(vars, depth - 1));
        format!("({a}).{op} ({b})")
    }

    fn leaf(&mut self, vars: &[String]) -> String {
        if !vars.is_empty() && self.rng.gen_bool(0.7) {
            format!("$.{}", vars.choose(&mut self.rng).unwrap())
        } else {
            self.rng.gen_range(-5i64..=5).to_string()
        }
    }

    fn method(&mut self, out: &mut String, name: &str, arity: usize) {
        let params: Vec<String> = (1..=arity).map(|i| format!("p{i}")).collect();
        out.push_str(&format!("  [self {}] > {name}\n", params.join(" ")));
        let mut vars = params;
        if self.cfg.locals {
            for i in 1..=self.rng.gen_range(0..=2) {
                let e = self.expr(&vars, self.cfg.max_depth - 1);
                let local = format!("l{i}");
                out.push_str(&format!("    {e} > {local}\n"));
                vars.push(local);
            }
        }
        let body = self.expr(&vars, self.cfg.max_depth);
        out.push_str(&format!("    {body} > @\n"));
    }
}

/// Source text of a random program with an object `o` and, optionally, a
/// decorator `d`. Each method only calls methods defined before it, so
/// there is no recursion.
pub fn random_program(seed: u64, cfg: GenConfig) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        callable: Vec::new(),
    };
    let mut out = String::from("[] > o\n");
    for i in 0..cfg.methods.max(1) {
        let arity = g.rng.gen_range(1..=cfg.max_arity.max(1));
        let name = format!("m{i}");
        g.method(&mut out, &name, arity);
        g.callable.push((name, arity));
    }
    if cfg.decorator {
        out.push_str("\n[] > d\n  ^.o > @\n");
        for i in 0..g.rng.gen_range(1..=2) {
            let arity = g.rng.gen_range(1..=cfg.max_arity.max(1));
            let name = format!("n{i}");
            g.method(&mut out, &name, arity);
            g.callable.push((name, arity));
        }
    }
    out
}
