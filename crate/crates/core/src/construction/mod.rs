//! Stage 2: build a first feasible route set.
//!
//! Every constructor works on a [`SubInstance`]: a subset of a [`RoutingProblem`]'s
//! vehicles and pending customers. With exactly one vehicle the task is a path-TSP
//! from the vehicle's anchor to the depot; with several vehicles it is a small CVRP.
//! Routes come back as customer node sequences, one per sub-instance vehicle.

mod gca;
mod pca;
mod savings;

use std::fmt;
use std::str::FromStr;

pub use gca::construct_global_cheapest_arc;
pub use pca::construct_path_cheapest_arc;
pub use savings::{construct_savings, savings_value};

use crate::model::RoutingProblem;

pub(crate) const CAPACITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error("no feasible initial solution: {0}")]
    InfeasibleConstruction(String),
}

fn infeasible(msg: impl Into<String>) -> ConstructionError {
    ConstructionError::InfeasibleConstruction(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstructionMethod {
    Savings,
    PathCheapestArc,
    GlobalCheapestArc,
}

impl ConstructionMethod {
    pub const ALL: [ConstructionMethod; 3] = [Self::Savings, Self::PathCheapestArc, Self::GlobalCheapestArc];

    pub fn name(self) -> &'static str {
        match self {
            Self::Savings => "savings",
            Self::PathCheapestArc => "pca",
            Self::GlobalCheapestArc => "gca",
        }
    }
}

impl fmt::Display for ConstructionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstructionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown constructor `{s}` (expected savings, pca or gca)"))
    }
}

/// A slice of a routing problem handed to one constructor call.
#[derive(Debug, Clone)]
pub struct SubInstance<'a> {
    problem: &'a RoutingProblem,
    vehicles: Vec<usize>,
    customers: Vec<usize>,
}

impl<'a> SubInstance<'a> {
    /// `vehicles` are vehicle slot indices, `customers` customer node indices.
    pub fn new(problem: &'a RoutingProblem, vehicles: Vec<usize>, mut customers: Vec<usize>) -> Self {
        assert!(!vehicles.is_empty(), "a sub-instance needs a vehicle");
        assert!(
            vehicles.iter().all(|&k| k < problem.vehicle_count()),
            "vehicle index out of range"
        );
        assert!(
            customers.iter().all(|n| problem.customer_nodes().contains(n)),
            "customer node out of range"
        );
        customers.sort_unstable();
        customers.dedup();
        Self {
            problem,
            vehicles,
            customers,
        }
    }

    /// One vehicle serving `customers`: the per-cluster case.
    pub fn single(problem: &'a RoutingProblem, vehicle: usize, customers: Vec<usize>) -> Self {
        Self::new(problem, vec![vehicle], customers)
    }

    /// Every vehicle and every pending customer: the no-clustering baseline.
    pub fn whole(problem: &'a RoutingProblem) -> Self {
        Self::new(problem, (0..problem.vehicle_count()).collect(), problem.customer_nodes().collect())
    }

    pub fn problem(&self) -> &'a RoutingProblem {
        self.problem
    }

    pub fn vehicles(&self) -> &[usize] {
        &self.vehicles
    }

    pub fn customers(&self) -> &[usize] {
        &self.customers
    }

    pub fn is_single_vehicle(&self) -> bool {
        self.vehicles.len() == 1
    }

    pub fn demand(&self) -> f64 {
        self.problem.route_load(&self.customers)
    }

    fn max_residual(&self) -> f64 {
        self.vehicles
            .iter()
            .map(|&k| self.problem.residual(k))
            .fold(0.0, f64::max)
    }

    fn check_single_capacity(&self) -> Result<(), ConstructionError> {
        let k = self.vehicles[0];
        let demand = self.demand();
        if demand > self.problem.residual(k) + CAPACITY_SLACK {
            return Err(infeasible(format!(
                "demand {demand} exceeds the residual capacity {} of vehicle {}",
                self.problem.residual(k),
                self.problem.vehicles()[k].id
            )));
        }
        Ok(())
    }

    fn check_demands_fit(&self) -> Result<(), ConstructionError> {
        let cap = self.max_residual();
        match self.customers.iter().find(|&&n| self.problem.demand(n) > cap + CAPACITY_SLACK) {
            Some(&n) => Err(infeasible(format!(
                "customer {} fits no vehicle",
                self.problem.customer_at(n).id
            ))),
            None => Ok(()),
        }
    }
}

/// Runs the chosen constructor.
pub fn construct(method: ConstructionMethod, sub: &SubInstance) -> Result<Vec<Vec<usize>>, ConstructionError> {
    match method {
        ConstructionMethod::Savings => construct_savings(sub),
        ConstructionMethod::PathCheapestArc => construct_path_cheapest_arc(sub),
        ConstructionMethod::GlobalCheapestArc => construct_global_cheapest_arc(sub),
    }
}

/// Picks the cheaper direction of an open chain for vehicle `k` (forward on ties).
pub(crate) fn orient(problem: &RoutingProblem, k: usize, mut chain: Vec<usize>) -> Vec<usize> {
    let forward = problem.open_route_cost(k, &chain);
    chain.reverse();
    let backward = problem.open_route_cost(k, &chain);
    if backward < forward {
        chain
    } else {
        chain.reverse();
        chain
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::model::{Customer, FleetSpec, Point, RoutingProblem};

    pub fn problem(depot: (f64, f64), vehicles: usize, capacity: f64, customers: &[(f64, f64, f64)]) -> RoutingProblem {
        let fleet = FleetSpec {
            vehicle_count: vehicles,
            capacity,
            speed: 1.0,
        };
        let customers = customers
            .iter()
            .enumerate()
            .map(|(i, &(x, y, d))| Customer::new(i as u32 + 1, x, y, d))
            .collect();
        RoutingProblem::at_depot(Point::new(depot.0, depot.1), &fleet, customers).unwrap()
    }

    /// Optimal single-vehicle route by enumerating every visiting order.
    pub fn brute_force_tsp(p: &RoutingProblem, k: usize, nodes: &[usize]) -> f64 {
        let mut perm: Vec<usize> = nodes.to_vec();
        perm.sort_unstable();
        let mut best = f64::INFINITY;
        loop {
            best = best.min(p.open_route_cost(k, &perm));
            if !crate::matching::next_permutation(&mut perm) {
                return best;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::problem;
    use super::*;
    use crate::model::validate_plan;
    use proptest::prelude::*;

    #[test]
    fn names_round_trip() {
        for m in ConstructionMethod::ALL {
            assert_eq!(m.name().parse::<ConstructionMethod>().unwrap(), m);
        }
    }

    #[test]
    fn empty_sub_instance_yields_empty_routes() {
        let p = problem((0.0, 0.0), 2, 10.0, &[]);
        for m in ConstructionMethod::ALL {
            assert_eq!(construct(m, &SubInstance::whole(&p)).unwrap(), vec![Vec::<usize>::new(); 2]);
            assert_eq!(construct(m, &SubInstance::single(&p, 1, vec![])).unwrap(), vec![Vec::<usize>::new()]);
            let plan = p.to_plan(&[vec![], vec![]]);
            assert_eq!(plan.total_cost, 0.0);
        }
    }

    #[test]
    fn single_customer_is_out_and_back() {
        let p = problem((0.0, 0.0), 1, 10.0, &[(3.0, 4.0, 1.0)]);
        for m in ConstructionMethod::ALL {
            let routes = construct(m, &SubInstance::whole(&p)).unwrap();
            assert_eq!(routes, vec![vec![2]]);
            assert!((p.routes_cost(&routes) - 10.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn every_constructor_output_validates(
            pts in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 1u32..4), 1..30),
            vehicles in 1usize..5,
            which in 0usize..3,
        ) {
            let customers: Vec<(f64, f64, f64)> = pts.iter().map(|&(x, y, d)| (x, y, d as f64)).collect();
            let demand: f64 = customers.iter().map(|c| c.2).sum();
            // ample capacity so every constructor must succeed
            let capacity = demand.max(3.0);
            let p = problem((50.0, 50.0), vehicles, capacity, &customers);
            let method = ConstructionMethod::ALL[which];
            let routes = construct(method, &SubInstance::whole(&p)).unwrap();
            let plan = p.to_plan(&routes);
            let report = validate_plan(&plan, &p);
            prop_assert!(report.is_ok(), "{:?}", report);
            let again = construct(method, &SubInstance::whole(&p)).unwrap();
            prop_assert_eq!(again, routes);
        }

        #[test]
        fn tight_capacity_either_validates_or_errors(
            pts in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 1u32..4), 1..30),
            vehicles in 1usize..5,
            which in 0usize..3,
        ) {
            let customers: Vec<(f64, f64, f64)> = pts.iter().map(|&(x, y, d)| (x, y, d as f64)).collect();
            let demand: f64 = customers.iter().map(|c| c.2).sum();
            let capacity = (demand / vehicles as f64).ceil().max(3.0);
            let p = problem((50.0, 50.0), vehicles, capacity, &customers);
            match construct(ConstructionMethod::ALL[which], &SubInstance::whole(&p)) {
                Ok(routes) => {
                    let report = validate_plan(&p.to_plan(&routes), &p);
                    prop_assert!(report.is_ok(), "{:?}", report);
                }
                Err(ConstructionError::InfeasibleConstruction(_)) => {}
            }
        }

        #[test]
        fn single_vehicle_mode_visits_everyone_once(
            pts in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..25),
            which in 0usize..3,
        ) {
            let customers: Vec<(f64, f64, f64)> = pts.iter().map(|&(x, y)| (x, y, 1.0)).collect();
            let p = problem((10.0, 90.0), 3, 100.0, &customers);
            let nodes: Vec<usize> = p.customer_nodes().collect();
            let routes = construct(ConstructionMethod::ALL[which], &SubInstance::single(&p, 2, nodes.clone())).unwrap();
            prop_assert_eq!(routes.len(), 1);
            let mut seen = routes[0].clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, nodes);
        }
    }
}
