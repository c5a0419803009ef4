//! Stage 3: improve a constructed plan within a time budget.
//!
//! Guided local search, simulated annealing and tabu search all drive the same move
//! engine ([`Engine`]); they differ only in how they pick and accept moves. Every
//! search tracks its incumbent on true distance and never returns anything worse
//! than its start.

mod budget;
mod descent;
mod gls;
mod moves;
mod sa;
mod tabu;

use std::fmt;
use std::str::FromStr;

pub use budget::{Budget, Clock};
pub use moves::{EdgeDiff, Engine, Move, Neighborhoods, Solution};

use crate::model::{ModelError, Plan, RoutingProblem};

/// Improvement smaller than this does not count.
pub(crate) const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImprovementMethod {
    None,
    Gls,
    Sa,
    Tabu,
}

impl ImprovementMethod {
    pub const ALL: [ImprovementMethod; 4] = [Self::None, Self::Gls, Self::Sa, Self::Tabu];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Gls => "gls",
            Self::Sa => "sa",
            Self::Tabu => "tabu",
        }
    }
}

impl fmt::Display for ImprovementMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImprovementMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown improver `{s}` (expected none, gls, sa or tabu)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementConfig {
    pub method: ImprovementMethod,
    /// Seconds.
    pub time_budget: f64,
    pub seed: u64,
    pub gls_alpha: f64,
    pub sa_initial_temp_fraction: f64,
    /// Applied every 100 moves.
    pub sa_cooling: f64,
    pub tabu_tenure: usize,
    pub tabu_max_stall: usize,
    pub clock: Clock,
}

impl Default for ImprovementConfig {
    fn default() -> Self {
        Self {
            method: ImprovementMethod::Gls,
            time_budget: 1.0,
            seed: 0,
            gls_alpha: 0.1,
            sa_initial_temp_fraction: 0.1,
            sa_cooling: 0.95,
            tabu_tenure: 20,
            tabu_max_stall: 2000,
            clock: Clock::Wall,
        }
    }
}

impl ImprovementConfig {
    pub fn new(method: ImprovementMethod, time_budget: f64, seed: u64) -> Self {
        Self {
            method,
            time_budget,
            seed,
            ..Self::default()
        }
    }
}

/// A new incumbent: when it was found and its true cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImproveOutcome {
    pub plan: Plan,
    pub initial_cost: f64,
    /// Starts with the initial cost at time zero; strictly decreasing afterwards.
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    /// Seconds on the search's clock.
    pub elapsed: f64,
}

/// Best solution seen so far, on true cost.
pub(crate) struct Incumbent {
    pub solution: Solution,
    pub cost: f64,
    pub trace: Vec<TracePoint>,
}

impl Incumbent {
    fn new(solution: Solution, cost: f64) -> Self {
        Self {
            solution,
            cost,
            trace: vec![TracePoint { time: 0.0, cost }],
        }
    }

    /// Recomputes `current`'s cost exactly and adopts it if it beats the incumbent.
    /// Returns the exact cost.
    pub fn offer(&mut self, engine: &Engine, current: &Solution, budget: &Budget) -> f64 {
        let exact = engine.cost(current);
        if exact < self.cost - EPS {
            self.solution = current.clone();
            self.cost = exact;
            self.trace.push(TracePoint {
                time: budget.elapsed(),
                cost: exact,
            });
        }
        exact
    }
}

/// Runs the configured improver from `plan` and returns the best plan found.
pub fn improve(
    problem: &RoutingProblem,
    plan: &Plan,
    config: &ImprovementConfig,
    neighborhoods: Neighborhoods,
) -> Result<ImproveOutcome, ModelError> {
    let routes = problem.node_routes(plan)?;
    let engine = Engine::new(problem, neighborhoods);
    let start = Solution::new(problem, routes);
    let initial_cost = engine.cost(&start);
    let mut budget = Budget::new(config.time_budget, config.clock);
    let mut incumbent = Incumbent::new(start.clone(), initial_cost);
    match config.method {
        ImprovementMethod::None => {}
        ImprovementMethod::Gls => gls::run(&engine, start, config, &mut budget, &mut incumbent),
        ImprovementMethod::Sa => sa::run(&engine, start, config, &mut budget, &mut incumbent),
        ImprovementMethod::Tabu => tabu::run(&engine, start, config, &mut budget, &mut incumbent),
    }
    Ok(ImproveOutcome {
        plan: problem.to_plan(&incumbent.solution.routes),
        initial_cost,
        trace: incumbent.trace,
        evaluations: budget.evaluations(),
        elapsed: budget.elapsed(),
    })
}

pub fn improve_gls(
    problem: &RoutingProblem,
    plan: &Plan,
    config: &ImprovementConfig,
    neighborhoods: Neighborhoods,
) -> Result<ImproveOutcome, ModelError> {
    improve(problem, plan, &ImprovementConfig { method: ImprovementMethod::Gls, ..config.clone() }, neighborhoods)
}

pub fn improve_sa(
    problem: &RoutingProblem,
    plan: &Plan,
    config: &ImprovementConfig,
    neighborhoods: Neighborhoods,
) -> Result<ImproveOutcome, ModelError> {
    improve(problem, plan, &ImprovementConfig { method: ImprovementMethod::Sa, ..config.clone() }, neighborhoods)
}

pub fn improve_tabu(
    problem: &RoutingProblem,
    plan: &Plan,
    config: &ImprovementConfig,
    neighborhoods: Neighborhoods,
) -> Result<ImproveOutcome, ModelError> {
    improve(problem, plan, &ImprovementConfig { method: ImprovementMethod::Tabu, ..config.clone() }, neighborhoods)
}

/// Best-improvement descent over the chosen neighbourhoods until no move improves.
pub fn local_search_descent(
    problem: &RoutingProblem,
    plan: &Plan,
    neighborhoods: Neighborhoods,
) -> Result<Plan, ModelError> {
    let engine = Engine::new(problem, neighborhoods);
    let mut sol = Solution::new(problem, problem.node_routes(plan)?);
    descent::descend(&engine, &mut sol, &engine.dist(), None);
    Ok(problem.to_plan(&sol.routes))
}
