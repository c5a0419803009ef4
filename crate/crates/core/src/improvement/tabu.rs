//! Tabu search: take the best admissible move each iteration, even a worsening one.
//! Edges removed by a move may not be re-added for `tabu_tenure` iterations unless the
//! move beats the incumbent.

use std::collections::VecDeque;

use super::moves::{EdgeDiff, Engine, Move, Solution};
use super::{Budget, ImprovementConfig, Incumbent, EPS};

struct TabuList {
    size: usize,
    until: Vec<u64>,
    /// Entries in insertion order; stale ones are skipped on release.
    order: VecDeque<(usize, usize, u64)>,
}

impl TabuList {
    fn new(size: usize) -> Self {
        Self {
            size,
            until: vec![0; size * size],
            order: VecDeque::new(),
        }
    }

    fn forbid(&mut self, a: usize, b: usize, until: u64) {
        self.until[a * self.size + b] = until;
        self.until[b * self.size + a] = until;
        self.order.push_back((a, b, until));
    }

    fn is_tabu(&self, diff: &EdgeDiff, iteration: u64) -> bool {
        diff.added().iter().any(|&(a, b)| self.until[a * self.size + b] > iteration)
    }

    /// Lifts the oldest entry still in force; false if there is none.
    fn release_oldest(&mut self, iteration: u64) -> bool {
        while let Some((a, b, until)) = self.order.pop_front() {
            if self.until[a * self.size + b] == until && until > iteration {
                self.until[a * self.size + b] = 0;
                self.until[b * self.size + a] = 0;
                return true;
            }
        }
        false
    }
}

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
    let dist = engine.dist();
    let mut tabu = TabuList::new(engine.problem().node_count());
    let mut current = start;
    let mut cost = incumbent.cost;
    let mut iteration = 0u64;
    let mut stall = 0usize;
    while stall < config.tabu_max_stall && !budget.expired() {
        let mut best: Option<(Move, EdgeDiff, f64)> = None;
        let mut any = false;
        let scanned = engine.for_each_move(&current, |mv, diff| {
            any = true;
            let delta = diff.delta(&dist);
            let aspires = cost + delta < incumbent.cost - EPS;
            if !aspires && tabu.is_tabu(diff, iteration) {
                return;
            }
            if best.as_ref().map_or(true, |b| delta < b.2) {
                best = Some((mv, *diff, delta));
            }
        });
        budget.charge(scanned);
        let Some((mv, diff, delta)) = best else {
            if any && tabu.release_oldest(iteration) {
                continue;
            }
            return;
        };
        engine.apply(&mut current, mv);
        cost += delta;
        iteration += 1;
        if config.tabu_tenure > 0 {
            for &(a, b) in diff.removed() {
                tabu.forbid(a, b, iteration + config.tabu_tenure as u64);
            }
        }
        if cost < incumbent.cost - EPS {
            cost = incumbent.offer(engine, &current, budget);
            stall = 0;
        } else {
            stall += 1;
        }
    }
}
