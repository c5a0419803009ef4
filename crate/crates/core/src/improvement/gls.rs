//! Guided local search: descent on distance plus `lambda` times per-edge penalties.
//! At each local optimum of the augmented cost, the edges with the highest utility
//! `d / (1 + penalty)` get one more penalty unit.

use super::moves::{Engine, Solution};
use super::{Budget, ImprovementConfig, Incumbent, EPS};

struct Penalties {
    size: usize,
    counts: Vec<u32>,
}

impl Penalties {
    fn new(size: usize) -> Self {
        Self {
            size,
            counts: vec![0; size * size],
        }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        self.counts[a * self.size + b] as f64
    }

    fn bump(&mut self, a: usize, b: usize) {
        self.counts[a * self.size + b] += 1;
        if a != b {
            self.counts[b * self.size + a] += 1;
        }
    }
}

pub(crate) fn run(
    engine: &Engine,
    start: Solution,
    config: &ImprovementConfig,
    budget: &mut Budget,
    incumbent: &mut Incumbent,
) {
    let problem = engine.problem();
    if !engine.has_moves(&start) {
        return;
    }
    let mut current = start;
    let mut cost = incumbent.cost;
    let mut penalties = Penalties::new(problem.node_count());
    let mut lambda = 0.0;
    let dist = engine.dist();
    loop {
        if budget.expired() {
            return;
        }
        let augmented = |a: usize, b: usize| problem.dist(a, b) + lambda * penalties.get(a, b);
        let (best, scanned) = engine.best_move(&current, &augmented);
        budget.charge(scanned);
        if scanned == 0 {
            return;
        }
        match best {
            Some((mv, diff, delta)) if delta < -EPS => {
                cost += diff.delta(&dist);
                engine.apply(&mut current, mv);
                if cost < incumbent.cost - EPS {
                    cost = incumbent.offer(engine, &current, budget);
                }
            }
            _ => {
                let edges = engine.edges(&current);
                if lambda == 0.0 {
                    lambda = config.gls_alpha * cost / edges.len() as f64;
                    if lambda <= 0.0 {
                        return;
                    }
                }
                let utility: Vec<f64> = edges
                    .iter()
                    .map(|&(a, b)| problem.dist(a, b) / (1.0 + penalties.get(a, b)))
                    .collect();
                let top = utility.iter().copied().fold(0.0, f64::max);
                if top <= 0.0 {
                    return;
                }
                for (&(a, b), &u) in edges.iter().zip(&utility) {
                    if u >= top - EPS {
                        penalties.bump(a, b);
                    }
                }
            }
        }
    }
}
