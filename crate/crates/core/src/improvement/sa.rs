//! Simulated annealing over random moves with geometric cooling every 100 moves.
//! Once the temperature has fallen by four orders of magnitude the walk restarts from
//! the incumbent at the initial temperature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::moves::{Engine, Solution};
use super::{Budget, ImprovementConfig, Incumbent, EPS};

const MOVES_PER_STEP: u64 = 100;
const REHEAT_RATIO: f64 = 1e-4;
/// A random draw plus its delta costs about this many enumerated evaluations.
const EVALS_PER_RANDOM_MOVE: u64 = 7;

pub(crate) fn run(
    engine: &Engine,
    start: Solution,
    config: &ImprovementConfig,
    budget: &mut Budget,
    incumbent: &mut Incumbent,
) {
    if !engine.has_moves(&start) {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dist = engine.dist();
    let t0 = config.sa_initial_temp_fraction * incumbent.cost;
    let mut temperature = t0;
    let mut current = start;
    let mut cost = incumbent.cost;
    while !budget.expired() {
        for _ in 0..MOVES_PER_STEP {
            let Some(mv) = engine.random_move(&current, &mut rng) else {
                continue;
            };
            let delta = engine.diff(&current, mv).delta(&dist);
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accept {
                engine.apply(&mut current, mv);
                cost += delta;
                if cost < incumbent.cost - EPS {
                    cost = incumbent.offer(engine, &current, budget);
                }
            }
        }
        budget.charge(MOVES_PER_STEP * EVALS_PER_RANDOM_MOVE);
        temperature *= config.sa_cooling;
        if temperature < t0 * REHEAT_RATIO {
            temperature = t0;
            current = incumbent.solution.clone();
            cost = incumbent.cost;
        }
    }
}
