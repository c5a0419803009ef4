use std::collections::HashMap;

use super::geometry::{euclidean_distance, DistanceMatrix, Point};
use super::instance::{Customer, CustomerId, FleetSpec};
use super::plan::{Plan, Route};
use super::ModelError;

/// Node index of the depot in every [`RoutingProblem`].
pub const DEPOT: usize = 0;

/// One vehicle as seen at a planning instant.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSlot {
    pub id: usize,
    /// Where the vehicle physically is.
    pub position: Point,
    /// Customer the vehicle is already driving toward; it is served before any new route.
    pub committed: Option<Customer>,
    /// The vehicle returns to the depot to reload before its new visits.
    pub restock: bool,
    /// Capacity left for the visits of the new route.
    pub residual: f64,
}

impl VehicleSlot {
    pub fn at_depot(id: usize, depot: Point, capacity: f64) -> Self {
        Self {
            id,
            position: depot,
            committed: None,
            restock: false,
            residual: capacity,
        }
    }

    /// Point where the freely plannable part of the route begins.
    pub fn anchor(&self, depot: Point) -> Point {
        if self.restock {
            depot
        } else if let Some(c) = &self.committed {
            c.location
        } else {
            self.position
        }
    }

    /// Length of the fixed legs driven before reaching the anchor.
    pub fn prefix_cost(&self, depot: Point) -> f64 {
        let mut at = self.position;
        let mut cost = 0.0;
        if let Some(c) = &self.committed {
            cost += euclidean_distance(at, c.location);
            at = c.location;
        }
        if self.restock {
            cost += euclidean_distance(at, depot);
        }
        cost
    }
}

/// A static routing problem at one planning instant: depot, vehicles with their
/// anchors and residual capacities, and the pending customers.
///
/// Node layout of the internal matrix: `0` is the depot, `1..=m` are the vehicle
/// anchors, and `m + 1..` are the pending customers in ascending id order.
#[derive(Debug, Clone)]
pub struct RoutingProblem {
    depot: Point,
    vehicles: Vec<VehicleSlot>,
    customers: Vec<Customer>,
    matrix: DistanceMatrix,
    demands: Vec<f64>,
    node_of: HashMap<CustomerId, usize>,
    committed: HashMap<CustomerId, Customer>,
}

impl RoutingProblem {
    pub fn new(
        depot: Point,
        vehicles: Vec<VehicleSlot>,
        mut customers: Vec<Customer>,
    ) -> Result<Self, ModelError> {
        if vehicles.is_empty() {
            return Err(ModelError::invalid("a routing problem needs at least one vehicle"));
        }
        customers.sort_by_key(|c| c.id);
        let m = vehicles.len();
        let mut node_of = HashMap::with_capacity(customers.len());
        for (i, c) in customers.iter().enumerate() {
            if node_of.insert(c.id, m + 1 + i).is_some() {
                return Err(ModelError::DuplicateCustomerId(c.id));
            }
        }
        let mut committed = HashMap::new();
        for v in &vehicles {
            if let Some(c) = v.committed {
                if node_of.contains_key(&c.id) || committed.insert(c.id, c).is_some() {
                    return Err(ModelError::DuplicateCustomerId(c.id));
                }
            }
        }
        let points: Vec<Point> = std::iter::once(depot)
            .chain(vehicles.iter().map(|v| v.anchor(depot)))
            .chain(customers.iter().map(|c| c.location))
            .collect();
        let demands = std::iter::repeat(0.0)
            .take(m + 1)
            .chain(customers.iter().map(|c| c.demand))
            .collect();
        Ok(Self {
            depot,
            matrix: DistanceMatrix::from_points(&points),
            vehicles,
            customers,
            demands,
            node_of,
            committed,
        })
    }

    /// All vehicles idle at the depot with full capacity.
    pub fn at_depot(depot: Point, fleet: &FleetSpec, customers: Vec<Customer>) -> Result<Self, ModelError> {
        let vehicles = (0..fleet.vehicle_count)
            .map(|id| VehicleSlot::at_depot(id, depot, fleet.capacity))
            .collect();
        Self::new(depot, vehicles, customers)
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    pub fn vehicles(&self) -> &[VehicleSlot] {
        &self.vehicles
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    /// Pending customers in ascending id order.
    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.matrix
    }

    pub fn node_count(&self) -> usize {
        self.matrix.len()
    }

    #[inline]
    pub fn anchor_node(&self, vehicle: usize) -> usize {
        1 + vehicle
    }

    #[inline]
    pub fn first_customer_node(&self) -> usize {
        1 + self.vehicles.len()
    }

    pub fn customer_nodes(&self) -> std::ops::Range<usize> {
        self.first_customer_node()..self.node_count()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.matrix.get(a, b)
    }

    #[inline]
    pub fn demand(&self, node: usize) -> f64 {
        self.demands[node]
    }

    pub fn residual(&self, vehicle: usize) -> f64 {
        self.vehicles[vehicle].residual
    }

    pub fn location(&self, node: usize) -> Point {
        match node {
            DEPOT => self.depot,
            n if n < self.first_customer_node() => self.vehicles[n - 1].anchor(self.depot),
            n => self.customers[n - self.first_customer_node()].location,
        }
    }

    pub fn node_of(&self, id: CustomerId) -> Option<usize> {
        self.node_of.get(&id).copied()
    }

    pub fn customer_at(&self, node: usize) -> &Customer {
        &self.customers[node - self.first_customer_node()]
    }

    /// Location of a pending or committed customer.
    pub fn customer_location(&self, id: CustomerId) -> Option<Point> {
        self.node_of(id)
            .map(|n| self.customer_at(n).location)
            .or_else(|| self.committed.get(&id).map(|c| c.location))
    }

    pub fn customer_demand(&self, id: CustomerId) -> Option<f64> {
        self.node_of(id)
            .map(|n| self.customer_at(n).demand)
            .or_else(|| self.committed.get(&id).map(|c| c.demand))
    }

    pub fn total_demand(&self) -> f64 {
        self.customers.iter().map(|c| c.demand).sum()
    }

    pub fn total_residual(&self) -> f64 {
        self.vehicles.iter().map(|v| v.residual).sum()
    }

    /// Cost of vehicle `vehicle` serving `route` (customer nodes), fixed prefix included.
    pub fn route_cost(&self, vehicle: usize, route: &[usize]) -> f64 {
        self.vehicles[vehicle].prefix_cost(self.depot) + self.open_route_cost(vehicle, route)
    }

    /// Cost from the anchor through `route` to the depot, without the fixed prefix.
    pub fn open_route_cost(&self, vehicle: usize, route: &[usize]) -> f64 {
        let mut prev = self.anchor_node(vehicle);
        let mut cost = 0.0;
        for &n in route {
            cost += self.dist(prev, n);
            prev = n;
        }
        cost + self.dist(prev, DEPOT)
    }

    pub fn routes_cost(&self, routes: &[Vec<usize>]) -> f64 {
        routes
            .iter()
            .enumerate()
            .map(|(k, r)| self.route_cost(k, r))
            .sum()
    }

    pub fn route_load(&self, route: &[usize]) -> f64 {
        route.iter().map(|&n| self.demands[n]).sum()
    }

    /// Converts per-vehicle node sequences into a [`Plan`]; `routes[k]` belongs to vehicle `k`.
    pub fn to_plan(&self, routes: &[Vec<usize>]) -> Plan {
        debug_assert_eq!(routes.len(), self.vehicles.len());
        let routes: Vec<Route> = self
            .vehicles
            .iter()
            .zip(routes)
            .map(|(v, r)| Route {
                vehicle_id: v.id,
                start: v.position,
                committed: v.committed.map(|c| c.id),
                restock: v.restock,
                visits: r.iter().map(|&n| self.customer_at(n).id).collect(),
                end: self.depot,
            })
            .collect();
        let total_cost = self.routes_cost_of_plan_routes(&routes);
        Plan { routes, total_cost }
    }

    fn routes_cost_of_plan_routes(&self, routes: &[Route]) -> f64 {
        super::plan::plan_cost_of_routes(routes, self).unwrap_or(f64::NAN)
    }

    /// Inverse of [`RoutingProblem::to_plan`]: node sequences ordered by vehicle slot.
    pub fn node_routes(&self, plan: &Plan) -> Result<Vec<Vec<usize>>, ModelError> {
        let mut out = vec![Vec::new(); self.vehicles.len()];
        for route in &plan.routes {
            let k = self
                .vehicles
                .iter()
                .position(|v| v.id == route.vehicle_id)
                .ok_or(ModelError::UnknownVehicle(route.vehicle_id))?;
            out[k] = route
                .visits
                .iter()
                .map(|&id| self.node_of(id).ok_or(ModelError::UnknownCustomerId(id)))
                .collect::<Result<_, _>>()?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout_and_costs() {
        let fleet = FleetSpec {
            vehicle_count: 2,
            capacity: 10.0,
            speed: 1.0,
        };
        let p = RoutingProblem::at_depot(
            Point::new(0.0, 0.0),
            &fleet,
            vec![Customer::new(7, 6.0, 8.0, 2.0), Customer::new(3, 3.0, 4.0, 1.0)],
        )
        .unwrap();
        assert_eq!(p.first_customer_node(), 3);
        // sorted by id: node 3 is customer 3
        assert_eq!(p.customer_at(3).id, CustomerId(3));
        assert_eq!(p.dist(DEPOT, 3), 5.0);
        assert_eq!(p.route_cost(0, &[3, 4]), 20.0);
        assert_eq!(p.route_cost(1, &[]), 0.0);
        assert_eq!(p.route_load(&[3, 4]), 3.0);
    }

    #[test]
    fn prefix_covers_committed_and_restock() {
        let depot = Point::new(0.0, 0.0);
        let slot = VehicleSlot {
            id: 0,
            position: Point::new(0.0, 3.0),
            committed: Some(Customer::new(1, 4.0, 3.0, 1.0)),
            restock: true,
            residual: 10.0,
        };
        assert_eq!(slot.anchor(depot), depot);
        assert_eq!(slot.prefix_cost(depot), 4.0 + 5.0);
    }
}
