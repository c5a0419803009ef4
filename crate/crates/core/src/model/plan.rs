use std::collections::HashMap;
use std::fmt;

use super::geometry::{euclidean_distance, Point};
use super::instance::CustomerId;
use super::problem::RoutingProblem;
use super::ModelError;

/// One vehicle's itinerary: `start -> [committed] -> [depot if restock] -> visits -> end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub vehicle_id: usize,
    pub start: Point,
    pub committed: Option<CustomerId>,
    pub restock: bool,
    pub visits: Vec<CustomerId>,
    pub end: Point,
}

impl Route {
    /// Route leaving from and returning to `depot`.
    pub fn from_depot(vehicle_id: usize, depot: Point, visits: Vec<CustomerId>) -> Self {
        Self {
            vehicle_id,
            start: depot,
            committed: None,
            restock: false,
            visits,
            end: depot,
        }
    }

    /// Every customer this route serves, committed head first.
    pub fn all_visits(&self) -> impl Iterator<Item = CustomerId> + '_ {
        self.committed.into_iter().chain(self.visits.iter().copied())
    }

    /// Waypoints after `start`, resolved with `locate`. The restock stop is the depot,
    /// which equals `end` for every valid route.
    pub fn waypoints<F>(&self, mut locate: F) -> Result<Vec<Point>, ModelError>
    where
        F: FnMut(CustomerId) -> Option<Point>,
    {
        let mut pts = Vec::with_capacity(self.visits.len() + 3);
        if let Some(id) = self.committed {
            pts.push(locate(id).ok_or(ModelError::UnknownCustomerId(id))?);
        }
        if self.restock {
            pts.push(self.end);
        }
        for &id in &self.visits {
            pts.push(locate(id).ok_or(ModelError::UnknownCustomerId(id))?);
        }
        pts.push(self.end);
        Ok(pts)
    }

    pub fn cost<F>(&self, locate: F) -> Result<f64, ModelError>
    where
        F: FnMut(CustomerId) -> Option<Point>,
    {
        let mut at = self.start;
        let mut total = 0.0;
        for p in self.waypoints(locate)? {
            total += euclidean_distance(at, p);
            at = p;
        }
        Ok(total)
    }
}

/// One route per vehicle plus the total travelled distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub routes: Vec<Route>,
    pub total_cost: f64,
}

impl Plan {
    pub fn customer_count(&self) -> usize {
        self.routes.iter().map(|r| r.visits.len()).sum()
    }

    /// Visit lists (committed head included) for export.
    pub fn visit_lists(&self) -> Vec<Vec<u32>> {
        self.routes
            .iter()
            .map(|r| r.all_visits().map(|id| id.0).collect())
            .collect()
    }
}

/// Recomputes the travelled distance of `plan` from customer locations.
pub fn plan_cost(plan: &Plan, problem: &RoutingProblem) -> Result<f64, ModelError> {
    plan_cost_of_routes(&plan.routes, problem)
}

pub(crate) fn plan_cost_of_routes(routes: &[Route], problem: &RoutingProblem) -> Result<f64, ModelError> {
    routes
        .iter()
        .map(|r| r.cost(|id| problem.customer_location(id)))
        .sum()
}

/// A single feasibility problem found by [`validate_plan`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingCustomer(CustomerId),
    DuplicateVisit(CustomerId),
    UnknownCustomer(CustomerId),
    CapacityExceeded { vehicle_id: usize, load: f64, capacity: f64 },
    BadEndpoint { vehicle_id: usize },
    BadStart { vehicle_id: usize },
    RouteCount { expected: usize, found: usize },
    CostMismatch { stored: f64, recomputed: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingCustomer(id) => write!(f, "customer {id} is not served"),
            Violation::DuplicateVisit(id) => write!(f, "customer {id} is visited more than once"),
            Violation::UnknownCustomer(id) => write!(f, "customer {id} is not pending"),
            Violation::CapacityExceeded { vehicle_id, load, capacity } => {
                write!(f, "vehicle {vehicle_id} carries {load} > {capacity}")
            }
            Violation::BadEndpoint { vehicle_id } => write!(f, "vehicle {vehicle_id} does not end at the depot"),
            Violation::BadStart { vehicle_id } => {
                write!(f, "vehicle {vehicle_id} route does not match its current state")
            }
            Violation::RouteCount { expected, found } => write!(f, "expected {expected} routes, found {found}"),
            Violation::CostMismatch { stored, recomputed } => {
                write!(f, "stored cost {stored} differs from recomputed {recomputed}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

const COST_RELATIVE_TOLERANCE: f64 = 1e-6;
const CAPACITY_SLACK: f64 = 1e-9;

/// Checks `plan` against the pending customers and vehicle states of `problem`,
/// collecting every violation rather than stopping at the first.
pub fn validate_plan(plan: &Plan, problem: &RoutingProblem) -> ValidationReport {
    let mut violations = Vec::new();
    let vehicles = problem.vehicles();
    if plan.routes.len() != vehicles.len() {
        violations.push(Violation::RouteCount {
            expected: vehicles.len(),
            found: plan.routes.len(),
        });
    }

    let mut seen: HashMap<CustomerId, usize> = HashMap::new();
    let mut cost_known = true;
    for route in &plan.routes {
        let slot = vehicles.iter().find(|v| v.id == route.vehicle_id);
        match slot {
            Some(v) => {
                if v.position != route.start
                    || v.committed.map(|c| c.id) != route.committed
                    || v.restock != route.restock
                {
                    violations.push(Violation::BadStart { vehicle_id: route.vehicle_id });
                }
            }
            None => violations.push(Violation::BadStart { vehicle_id: route.vehicle_id }),
        }
        if route.end != problem.depot() {
            violations.push(Violation::BadEndpoint { vehicle_id: route.vehicle_id });
        }
        let mut load = 0.0;
        for &id in &route.visits {
            *seen.entry(id).or_default() += 1;
            match problem.node_of(id) {
                Some(n) => load += problem.demand(n),
                None => {
                    violations.push(Violation::UnknownCustomer(id));
                    cost_known = false;
                }
            }
        }
        if let Some(v) = slot {
            if load > v.residual + CAPACITY_SLACK {
                violations.push(Violation::CapacityExceeded {
                    vehicle_id: route.vehicle_id,
                    load,
                    capacity: v.residual,
                });
            }
        }
    }

    let mut duplicates: Vec<CustomerId> = seen.iter().filter(|(_, &n)| n > 1).map(|(&id, _)| id).collect();
    duplicates.sort();
    violations.extend(duplicates.into_iter().map(Violation::DuplicateVisit));
    for c in problem.customers() {
        if !seen.contains_key(&c.id) {
            violations.push(Violation::MissingCustomer(c.id));
        }
    }

    if cost_known {
        if let Ok(recomputed) = plan_cost(plan, problem) {
            let scale = recomputed.abs().max(1.0);
            if !((plan.total_cost - recomputed).abs() <= COST_RELATIVE_TOLERANCE * scale) {
                violations.push(Violation::CostMismatch {
                    stored: plan.total_cost,
                    recomputed,
                });
            }
        }
    }
    ValidationReport { violations }
}
