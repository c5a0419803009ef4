//! Neighbourhood engine shared by every search.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{RoutingProblem, DEPOT};

const CAPACITY_SLACK: f64 = 1e-9;

/// Which neighbourhoods a search may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhoods {
    /// 2-opt and Or-opt inside each route.
    IntraRoute,
    /// Intra-route moves plus relocate and exchange between routes.
    All,
}

/// A candidate change to a [`Solution`]. Positions index the route's customer list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Reverse `route[i..=j]`.
    TwoOpt { route: usize, i: usize, j: usize },
    /// Cut `route[i..i + len]` and reinsert it before position `to` of what remains.
    OrOpt {
        route: usize,
        i: usize,
        len: usize,
        to: usize,
        reversed: bool,
    },
    /// Move `routes[from][i]` to position `p` of `routes[to]`.
    Relocate { from: usize, i: usize, to: usize, p: usize },
    /// Swap `routes[a][i]` with `routes[b][j]`.
    Exchange { a: usize, i: usize, b: usize, j: usize },
}

/// Edges a move removes and adds, as node pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeDiff {
    removed: [(usize, usize); 4],
    added: [(usize, usize); 4],
    len: usize,
}

impl EdgeDiff {
    fn push(&mut self, removed: (usize, usize), added: (usize, usize)) {
        self.removed[self.len] = removed;
        self.added[self.len] = added;
        self.len += 1;
    }

    pub fn removed(&self) -> &[(usize, usize)] {
        &self.removed[..self.len]
    }

    pub fn added(&self) -> &[(usize, usize)] {
        &self.added[..self.len]
    }

    /// Cost change under the arc cost `arc`.
    #[inline]
    pub fn delta(&self, arc: &impl Fn(usize, usize) -> f64) -> f64 {
        let mut d = 0.0;
        for k in 0..self.len {
            d += arc(self.added[k].0, self.added[k].1) - arc(self.removed[k].0, self.removed[k].1);
        }
        d
    }
}

/// Customer node sequences per vehicle with their loads.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub routes: Vec<Vec<usize>>,
    pub loads: Vec<f64>,
}

impl Solution {
    pub fn new(problem: &RoutingProblem, routes: Vec<Vec<usize>>) -> Self {
        let loads = routes.iter().map(|r| problem.route_load(r)).collect();
        Self { routes, loads }
    }

    pub fn customer_count(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }
}

pub struct Engine<'a> {
    problem: &'a RoutingProblem,
    neighborhoods: Neighborhoods,
}

impl<'a> Engine<'a> {
    pub fn new(problem: &'a RoutingProblem, neighborhoods: Neighborhoods) -> Self {
        Self {
            problem,
            neighborhoods,
        }
    }

    pub fn problem(&self) -> &'a RoutingProblem {
        self.problem
    }

    pub fn dist(&self) -> impl Fn(usize, usize) -> f64 + 'a {
        let p = self.problem;
        move |a, b| p.dist(a, b)
    }

    /// True cost including every vehicle's fixed prefix.
    pub fn cost(&self, sol: &Solution) -> f64 {
        self.problem.routes_cost(&sol.routes)
    }

    /// Every edge of the solution, anchors and depot included.
    pub fn edges(&self, sol: &Solution) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(sol.customer_count() + sol.routes.len());
        for (r, route) in sol.routes.iter().enumerate() {
            let mut prev = self.problem.anchor_node(r);
            for &n in route {
                out.push((prev, n));
                prev = n;
            }
            out.push((prev, DEPOT));
        }
        out
    }

    #[inline]
    fn prev(&self, sol: &Solution, r: usize, i: usize) -> usize {
        if i == 0 {
            self.problem.anchor_node(r)
        } else {
            sol.routes[r][i - 1]
        }
    }

    #[inline]
    fn next(&self, sol: &Solution, r: usize, i: usize) -> usize {
        sol.routes[r].get(i + 1).copied().unwrap_or(DEPOT)
    }

    fn fits(&self, r: usize, load: f64) -> bool {
        load <= self.problem.residual(r) + CAPACITY_SLACK
    }

    pub fn diff(&self, sol: &Solution, mv: Move) -> EdgeDiff {
        let mut d = EdgeDiff::default();
        match mv {
            Move::TwoOpt { route, i, j } => {
                let r = &sol.routes[route];
                let (p, n) = (self.prev(sol, route, i), self.next(sol, route, j));
                d.push((p, r[i]), (p, r[j]));
                d.push((r[j], n), (r[i], n));
            }
            Move::OrOpt {
                route,
                i,
                len,
                to,
                reversed,
            } => {
                let r = &sol.routes[route];
                let rest = r.len() - len;
                let (s0, s1) = (r[i], r[i + len - 1]);
                let (p, n) = (self.prev(sol, route, i), self.next(sol, route, i + len - 1));
                let remaining = |q: usize| if q < i { r[q] } else { r[q + len] };
                let a = if to == 0 {
                    self.problem.anchor_node(route)
                } else {
                    remaining(to - 1)
                };
                let b = if to == rest { DEPOT } else { remaining(to) };
                let (h, t) = if reversed { (s1, s0) } else { (s0, s1) };
                d.push((p, s0), (p, n));
                d.push((s1, n), (a, h));
                d.push((a, b), (t, b));
            }
            Move::Relocate { from, i, to, p } => {
                let x = sol.routes[from][i];
                let (pf, nf) = (self.prev(sol, from, i), self.next(sol, from, i));
                let dest = &sol.routes[to];
                let a = if p == 0 {
                    self.problem.anchor_node(to)
                } else {
                    dest[p - 1]
                };
                let b = dest.get(p).copied().unwrap_or(DEPOT);
                d.push((pf, x), (pf, nf));
                d.push((x, nf), (a, x));
                d.push((a, b), (x, b));
            }
            Move::Exchange { a, i, b, j } => {
                let (x, y) = (sol.routes[a][i], sol.routes[b][j]);
                let (pa, na) = (self.prev(sol, a, i), self.next(sol, a, i));
                let (pb, nb) = (self.prev(sol, b, j), self.next(sol, b, j));
                d.push((pa, x), (pa, y));
                d.push((x, na), (y, na));
                d.push((pb, y), (pb, x));
                d.push((y, nb), (x, nb));
            }
        }
        d
    }

    fn feasible(&self, sol: &Solution, mv: Move) -> bool {
        match mv {
            Move::TwoOpt { .. } | Move::OrOpt { .. } => true,
            Move::Relocate { from, i, to, .. } => {
                let x = sol.routes[from][i];
                self.fits(to, sol.loads[to] + self.problem.demand(x))
            }
            Move::Exchange { a, i, b, j } => {
                let dx = self.problem.demand(sol.routes[a][i]);
                let dy = self.problem.demand(sol.routes[b][j]);
                self.fits(a, sol.loads[a] - dx + dy) && self.fits(b, sol.loads[b] - dy + dx)
            }
        }
    }

    /// Calls `visit` for every capacity-feasible move in a fixed order and returns how
    /// many moves were visited.
    pub fn for_each_move(&self, sol: &Solution, mut visit: impl FnMut(Move, &EdgeDiff)) -> u64 {
        let mut count = 0u64;
        let mut emit = |mv: Move| {
            let d = self.diff(sol, mv);
            visit(mv, &d);
            count += 1;
        };
        for (route, r) in sol.routes.iter().enumerate() {
            let n = r.len();
            for i in 0..n {
                for j in i + 1..n {
                    emit(Move::TwoOpt { route, i, j });
                }
            }
            for len in 1..=3.min(n.saturating_sub(1)) {
                for i in 0..=n - len {
                    for to in 0..=n - len {
                        if to == i {
                            continue;
                        }
                        emit(Move::OrOpt {
                            route,
                            i,
                            len,
                            to,
                            reversed: false,
                        });
                        if len > 1 {
                            emit(Move::OrOpt {
                                route,
                                i,
                                len,
                                to,
                                reversed: true,
                            });
                        }
                    }
                }
            }
        }
        if self.neighborhoods == Neighborhoods::All {
            let m = sol.routes.len();
            for from in 0..m {
                for i in 0..sol.routes[from].len() {
                    for to in 0..m {
                        if to == from {
                            continue;
                        }
                        let mv0 = Move::Relocate { from, i, to, p: 0 };
                        if !self.feasible(sol, mv0) {
                            continue;
                        }
                        for p in 0..=sol.routes[to].len() {
                            emit(Move::Relocate { from, i, to, p });
                        }
                    }
                }
            }
            for a in 0..m {
                for b in a + 1..m {
                    for i in 0..sol.routes[a].len() {
                        for j in 0..sol.routes[b].len() {
                            let mv = Move::Exchange { a, i, b, j };
                            if self.feasible(sol, mv) {
                                emit(mv);
                            }
                        }
                    }
                }
            }
        }
        count
    }

    /// Lowest-delta move under `arc` (first one on ties) and the number of moves scanned.
    pub fn best_move(&self, sol: &Solution, arc: &impl Fn(usize, usize) -> f64) -> (Option<(Move, EdgeDiff, f64)>, u64) {
        let mut best: Option<(Move, EdgeDiff, f64)> = None;
        let count = self.for_each_move(sol, |mv, d| {
            let delta = d.delta(arc);
            if best.as_ref().map_or(true, |b| delta < b.2) {
                best = Some((mv, *d, delta));
            }
        });
        (best, count)
    }

    pub fn has_moves(&self, sol: &Solution) -> bool {
        let intra = sol.routes.iter().any(|r| r.len() >= 2);
        let inter = self.neighborhoods == Neighborhoods::All && sol.routes.len() > 1 && sol.customer_count() > 0;
        intra || inter
    }

    /// Draws a random move, or `None` when the draw is infeasible or degenerate.
    pub fn random_move(&self, sol: &Solution, rng: &mut ChaCha8Rng) -> Option<Move> {
        let m = sol.routes.len();
        let kinds = if self.neighborhoods == Neighborhoods::All && m > 1 { 4 } else { 2 };
        let mv = match rng.gen_range(0..kinds) {
            0 => {
                let route = rng.gen_range(0..m);
                let n = sol.routes[route].len();
                if n < 2 {
                    return None;
                }
                let i = rng.gen_range(0..n - 1);
                let j = rng.gen_range(i + 1..n);
                Move::TwoOpt { route, i, j }
            }
            1 => {
                let route = rng.gen_range(0..m);
                let n = sol.routes[route].len();
                if n < 2 {
                    return None;
                }
                let len = rng.gen_range(1..=3.min(n - 1));
                let i = rng.gen_range(0..=n - len);
                let mut to = rng.gen_range(0..n - len);
                if to >= i {
                    to += 1;
                }
                let reversed = len > 1 && rng.gen_bool(0.5);
                Move::OrOpt {
                    route,
                    i,
                    len,
                    to,
                    reversed,
                }
            }
            2 => {
                let from = rng.gen_range(0..m);
                let n = sol.routes[from].len();
                if n == 0 {
                    return None;
                }
                let mut to = rng.gen_range(0..m - 1);
                if to >= from {
                    to += 1;
                }
                Move::Relocate {
                    from,
                    i: rng.gen_range(0..n),
                    to,
                    p: rng.gen_range(0..=sol.routes[to].len()),
                }
            }
            _ => {
                let a = rng.gen_range(0..m);
                let mut b = rng.gen_range(0..m - 1);
                if b >= a {
                    b += 1;
                }
                let (a, b) = (a.min(b), a.max(b));
                if sol.routes[a].is_empty() || sol.routes[b].is_empty() {
                    return None;
                }
                Move::Exchange {
                    a,
                    i: rng.gen_range(0..sol.routes[a].len()),
                    b,
                    j: rng.gen_range(0..sol.routes[b].len()),
                }
            }
        };
        self.feasible(sol, mv).then_some(mv)
    }

    pub fn apply(&self, sol: &mut Solution, mv: Move) {
        match mv {
            Move::TwoOpt { route, i, j } => sol.routes[route][i..=j].reverse(),
            Move::OrOpt {
                route,
                i,
                len,
                to,
                reversed,
            } => {
                let r = &mut sol.routes[route];
                let mut seg: Vec<usize> = r.drain(i..i + len).collect();
                if reversed {
                    seg.reverse();
                }
                r.splice(to..to, seg);
            }
            Move::Relocate { from, i, to, p } => {
                let x = sol.routes[from].remove(i);
                sol.routes[to].insert(p, x);
                let d = self.problem.demand(x);
                sol.loads[from] -= d;
                sol.loads[to] += d;
            }
            Move::Exchange { a, i, b, j } => {
                let (x, y) = (sol.routes[a][i], sol.routes[b][j]);
                sol.routes[a][i] = y;
                sol.routes[b][j] = x;
                let (dx, dy) = (self.problem.demand(x), self.problem.demand(y));
                sol.loads[a] += dy - dx;
                sol.loads[b] += dx - dy;
            }
        }
    }
}
