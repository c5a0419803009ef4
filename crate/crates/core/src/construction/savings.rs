use std::collections::VecDeque;

use super::{infeasible, orient, ConstructionError, SubInstance, CAPACITY_SLACK};
use crate::matching::min_cost_assignment;
use crate::model::{RoutingProblem, DEPOT};

/// Clarke-Wright saving of joining customers `i` and `j` on routes through `hub`.
pub fn savings_value(problem: &RoutingProblem, hub: usize, i: usize, j: usize) -> f64 {
    problem.dist(hub, i) + problem.dist(hub, j) - problem.dist(i, j)
}

/// Undirected chains of customer nodes, merged end to end.
struct Chains {
    members: Vec<VecDeque<usize>>,
    loads: Vec<f64>,
    /// Chain id of each local customer.
    chain_of: Vec<usize>,
    alive: usize,
}

impl Chains {
    fn singletons(problem: &RoutingProblem, nodes: &[usize]) -> Self {
        Self {
            members: (0..nodes.len()).map(|i| VecDeque::from([i])).collect(),
            loads: nodes.iter().map(|&n| problem.demand(n)).collect(),
            chain_of: (0..nodes.len()).collect(),
            alive: nodes.len(),
        }
    }

    fn is_end(&self, i: usize) -> bool {
        let c = &self.members[self.chain_of[i]];
        c.front() == Some(&i) || c.back() == Some(&i)
    }

    /// Joins the chain ending at `i` with the chain ending at `j` through the link `i - j`.
    fn merge(&mut self, i: usize, j: usize) {
        let (a, b) = (self.chain_of[i], self.chain_of[j]);
        let mut left = std::mem::take(&mut self.members[a]);
        let mut right = std::mem::take(&mut self.members[b]);
        if left.back() != Some(&i) {
            left.make_contiguous().reverse();
        }
        if right.front() != Some(&j) {
            right.make_contiguous().reverse();
        }
        for &x in &right {
            self.chain_of[x] = a;
        }
        left.extend(right);
        self.members[a] = left;
        self.loads[a] += self.loads[b];
        self.loads[b] = 0.0;
        self.alive -= 1;
    }

    fn into_routes(self, nodes: &[usize]) -> Vec<Vec<usize>> {
        self.members
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.into_iter().map(|i| nodes[i]).collect())
            .collect()
    }
}

/// Parallel savings over `nodes` with `hub` as the shared route end. Positive savings
/// are merged greedily; non-positive ones only while more than `target_routes` remain.
/// Returns the chains and the savings of every merge taken.
pub(crate) fn savings_chains(
    problem: &RoutingProblem,
    nodes: &[usize],
    hub: usize,
    capacity: f64,
    target_routes: usize,
) -> (Vec<Vec<usize>>, Vec<f64>) {
    let n = nodes.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((savings_value(problem, hub, nodes[i], nodes[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut chains = Chains::singletons(problem, nodes);
    let mut taken = Vec::new();
    for (s, i, j) in pairs {
        if chains.alive <= 1 || (s <= 0.0 && chains.alive <= target_routes) {
            break;
        }
        if chains.chain_of[i] == chains.chain_of[j] || !chains.is_end(i) || !chains.is_end(j) {
            continue;
        }
        if chains.loads[chains.chain_of[i]] + chains.loads[chains.chain_of[j]] > capacity + CAPACITY_SLACK {
            continue;
        }
        chains.merge(i, j);
        taken.push(s);
    }
    (chains.into_routes(nodes), taken)
}

/// Clarke-Wright parallel savings.
///
/// With one vehicle, savings are measured from the vehicle's anchor and merging
/// continues through non-positive savings until a single chain remains, which is then
/// driven in its cheaper direction. With several vehicles the depot is the hub, routes
/// are capped by the largest residual capacity, and the finished routes are matched
/// to vehicles by minimum total cost.
pub fn construct_savings(sub: &SubInstance) -> Result<Vec<Vec<usize>>, ConstructionError> {
    let problem = sub.problem();
    if sub.is_single_vehicle() {
        sub.check_single_capacity()?;
        let k = sub.vehicles()[0];
        let hub = problem.anchor_node(k);
        let (mut chains, _) = savings_chains(problem, sub.customers(), hub, problem.residual(k), 1);
        return match chains.len() {
            0 => Ok(vec![Vec::new()]),
            1 => Ok(vec![orient(problem, k, chains.pop().expect("one chain"))]),
            n => Err(infeasible(format!("savings left {n} routes for one vehicle"))),
        };
    }

    sub.check_demands_fit()?;
    let m = sub.vehicles().len();
    let (chains, _) = savings_chains(problem, sub.customers(), DEPOT, sub.max_residual(), m);
    if chains.len() > m {
        return Err(infeasible(format!("savings needs {} routes but only {m} vehicles exist", chains.len())));
    }
    assign_chains(problem, sub.vehicles(), chains)
}

/// Matches chains to vehicles minimising anchor-to-depot route cost over both chain
/// directions; capacity-violating pairs are heavily penalised, and an unavoidable
/// violation is an error.
fn assign_chains(
    problem: &RoutingProblem,
    vehicles: &[usize],
    mut chains: Vec<Vec<usize>>,
) -> Result<Vec<Vec<usize>>, ConstructionError> {
    const OVERLOAD_PENALTY: f64 = 1e9;
    let m = vehicles.len();
    chains.resize(m, Vec::new());
    let cost: Vec<Vec<f64>> = chains
        .iter()
        .map(|chain| {
            let load = problem.route_load(chain);
            vehicles
                .iter()
                .map(|&k| {
                    let oriented = orient(problem, k, chain.clone());
                    let c = problem.open_route_cost(k, &oriented);
                    if load > problem.residual(k) + CAPACITY_SLACK {
                        c + OVERLOAD_PENALTY
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    let to_vehicle = min_cost_assignment(&cost);
    let mut routes = vec![Vec::new(); m];
    for (chain, &v) in chains.into_iter().zip(&to_vehicle) {
        let k = vehicles[v];
        let load = problem.route_load(&chain);
        if load > problem.residual(k) + CAPACITY_SLACK {
            return Err(infeasible(format!(
                "no vehicle can take a savings route of load {load}"
            )));
        }
        routes[v] = orient(problem, k, chain);
    }
    Ok(routes)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{brute_force_tsp, problem};
    use super::*;
    use crate::model::{Customer, Point, VehicleSlot};
    use proptest::prelude::*;

    #[test]
    fn savings_formula_example() {
        let p = problem((0.0, 0.0), 1, 10.0, &[(3.0, 4.0, 1.0), (6.0, 8.0, 1.0)]);
        assert!((savings_value(&p, DEPOT, 2, 3) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn square_corners_give_the_perimeter() {
        let p = problem(
            (0.0, 0.0),
            1,
            100.0,
            &[(5.0, 5.0, 1.0), (-5.0, 5.0, 1.0), (-5.0, -5.0, 1.0), (5.0, -5.0, 1.0)],
        );
        let nodes: Vec<usize> = p.customer_nodes().collect();
        let routes = construct_savings(&SubInstance::single(&p, 0, nodes.clone())).unwrap();
        let cost = p.route_cost(0, &routes[0]);
        let perimeter = 30.0 + 2.0 * 50f64.sqrt();
        assert!((cost - perimeter).abs() < 1e-9);
        assert!((cost - brute_force_tsp(&p, 0, &nodes)).abs() < 1e-9);
    }

    #[test]
    fn start_away_from_depot_uses_the_vehicle_position() {
        let depot = Point::new(0.0, 0.0);
        let vehicle = VehicleSlot {
            id: 0,
            position: Point::new(10.0, 0.0),
            committed: None,
            restock: false,
            residual: 10.0,
        };
        let customers = vec![Customer::new(1, 9.0, 0.0, 1.0), Customer::new(2, 1.0, 0.0, 1.0)];
        let p = RoutingProblem::new(depot, vec![vehicle], customers).unwrap();
        let routes = construct_savings(&SubInstance::whole(&p)).unwrap();
        // nearest the vehicle first, then towards the depot
        assert_eq!(routes, vec![vec![2, 3]]);
        assert!((p.routes_cost(&routes) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_splits_routes() {
        let p = problem(
            (0.0, 0.0),
            2,
            3.0,
            &[(10.0, 0.0, 2.0), (11.0, 0.0, 1.0), (-10.0, 0.0, 2.0), (-11.0, 0.0, 1.0)],
        );
        let routes = construct_savings(&SubInstance::whole(&p)).unwrap();
        for r in &routes {
            assert!(p.route_load(r) <= 3.0);
        }
        assert_eq!(routes.iter().map(Vec::len).sum::<usize>(), 4);
    }

    #[test]
    fn too_few_vehicles_is_infeasible() {
        let p = problem((0.0, 0.0), 2, 3.0, &[(1.0, 0.0, 2.0), (2.0, 0.0, 2.0), (3.0, 0.0, 2.0)]);
        assert!(construct_savings(&SubInstance::whole(&p)).is_err());
    }

    proptest! {
        #[test]
        fn each_merge_saves_exactly_its_value(
            pts in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 1u32..4), 2..25),
            cap in 4.0..30.0f64,
        ) {
            let customers: Vec<(f64, f64, f64)> = pts.iter().map(|&(x, y, d)| (x, y, d as f64)).collect();
            let p = problem((50.0, 50.0), 1, 1000.0, &customers);
            let nodes: Vec<usize> = p.customer_nodes().collect();
            let (chains, taken) = savings_chains(&p, &nodes, DEPOT, cap, usize::MAX);
            prop_assert!(taken.iter().all(|&s| s > 0.0));
            let star: f64 = nodes.iter().map(|&n| 2.0 * p.dist(DEPOT, n)).sum();
            let routes: f64 = chains.iter().map(|c| p.open_route_cost(0, c)).sum();
            prop_assert!((star - taken.iter().sum::<f64>() - routes).abs() < 1e-7);
            for c in &chains {
                prop_assert!(p.route_load(c) <= cap + 1e-9);
            }
        }
    }
}
