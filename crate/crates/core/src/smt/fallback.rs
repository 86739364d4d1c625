//! Model search by grid and random sampling, used when the solver gives no answer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{holds, rational, solve, Env, Value};
use super::model::Model;
use crate::properties::{Expr, Sort, SortedVar};

const GRID: &[(i64, i64)] = &[
    (0, 1),
    (1, 1),
    (-1, 1),
    (2, 1),
    (-2, 1),
    (1, 2),
    (-1, 2),
    (3, 1),
    (-3, 1),
    (1, 3),
    (10, 1),
    (-10, 1),
    (100, 1),
    (-100, 1),
];

/// Searches for an assignment to `vars` under which `negated` evaluates to
/// true, trying at most `budget` candidates. A returned model always re-evaluates
/// to true.
pub fn fallback_search(
    negated: &Expr,
    vars: &[SortedVar],
    budget: usize,
    seed: u64,
) -> Option<Model> {
    sample_models(negated, vars, 1, budget, seed).pop()
}

/// Up to `count` distinct verified models of `formula` among `budget` candidates.
pub fn sample_models(
    formula: &Expr,
    vars: &[SortedVar],
    count: usize,
    budget: usize,
    seed: u64,
) -> Vec<Model> {
    let pending: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid_size = GRID
        .len()
        .checked_pow(vars.len() as u32)
        .unwrap_or(usize::MAX);
    let mut found: Vec<Model> = Vec::new();
    for i in 0..budget {
        if found.len() >= count {
            break;
        }
        let fill: Env = if i < grid_size {
            grid_point(vars, i)
        } else {
            vars.iter()
                .map(|v| (v.name.clone(), random_value(v.sort, &mut rng)))
                .collect()
        };
        let (result, env) = solve(formula, &pending, Env::new(), &fill, true);
        if result != Some(true) {
            continue;
        }
        let model: Model = vars
            .iter()
            .filter_map(|v| Some((v.name.clone(), env.get(&v.name)?.to_model_value())))
            .collect();
        if !found.contains(&model) && holds(formula, &model) == Some(true) {
            found.push(model);
        }
    }
    found
}

fn grid_point(vars: &[SortedVar], mut index: usize) -> Env {
    vars.iter()
        .map(|v| {
            let k = index % GRID.len();
            index /= GRID.len();
            let value = match v.sort {
                Sort::Real => rational(GRID[k].0, GRID[k].1),
                Sort::Bool => Value::Bool(k % 2 == 1),
            };
            (v.name.clone(), value)
        })
        .collect()
}

fn random_value(sort: Sort, rng: &mut ChaCha8Rng) -> Value {
    match sort {
        Sort::Real => rational(rng.gen_range(-100..=100), rng.gen_range(1..=10)),
        Sort::Bool => Value::Bool(rng.gen()),
    }
}
