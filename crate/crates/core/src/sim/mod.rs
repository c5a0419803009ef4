//! Event-driven replay: vehicles drive their current plans, and every arrival batch
//! triggers a full replan of the pending customers from the fleet's current state.
//!
//! A vehicle already driving toward a customer finishes that visit first. When the
//! pending demand does not fit the residual capacities, vehicles with the least room
//! left go back to the depot to reload before their new visits.

mod export;
mod motion;

use std::collections::{HashMap, VecDeque};

pub use export::{trace_record_json, trace_to_jsonl};
pub use motion::{vehicle_position_at, RouteProgress};

use motion::{route_stops, walk, Stop};

use crate::model::{Customer, CustomerId, Instance, ModelError, Plan, Point, RoutingProblem, VehicleSlot};
use crate::pipeline::{solve, PipelineConfig, PipelineError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServedVisit {
    pub customer: CustomerId,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: usize,
    pub position: Point,
    /// Capacity minus the demand served since the last depot visit.
    pub residual_capacity: f64,
    pub served: Vec<ServedVisit>,
    /// Customers still ahead on the current plan.
    pub current_route: Vec<CustomerId>,
}

/// The fleet at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetState {
    pub time: f64,
    pub vehicles: Vec<VehicleState>,
}

impl FleetState {
    pub fn served_count(&self) -> usize {
        self.vehicles.iter().map(|v| v.served.len()).sum()
    }
}

/// Everything a replan needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplanInput {
    pub time: f64,
    pub depot: Point,
    pub capacity: f64,
    /// Unserved customers that are not already committed to a vehicle.
    pub pending: Vec<Customer>,
    pub vehicles: Vec<VehicleSlot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanRecord {
    pub time: f64,
    pub pending: Vec<Customer>,
    pub fleet: FleetState,
    /// Vehicle slots the plan was built for, restock decisions included.
    pub vehicles: Vec<VehicleSlot>,
    pub plan: Plan,
    pub cost: f64,
}

impl ReplanRecord {
    /// The routing problem this record's plan solves.
    pub fn problem(&self, depot: Point) -> Result<RoutingProblem, ModelError> {
        RoutingProblem::new(depot, self.vehicles.clone(), self.pending.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub depot: Point,
    pub records: Vec<ReplanRecord>,
    /// Time the last vehicle is back at the depot.
    pub completion_time: f64,
    pub total_distance: f64,
    pub served: Vec<ServedVisit>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("replan at t = {time} failed: {source}")]
pub struct SimulationError {
    pub time: f64,
    #[source]
    pub source: PipelineError,
}

#[derive(Debug, Clone)]
struct Vehicle {
    position: Point,
    residual: f64,
    queue: VecDeque<Stop>,
    served: Vec<ServedVisit>,
    distance: f64,
    /// Where the current leg began; a vehicle still there has not set off.
    leg_origin: Point,
    /// Time the vehicle goes idle, once its queue is empty.
    idle_since: f64,
}

impl Vehicle {
    fn drive(&mut self, from: f64, until: f64, speed: f64, capacity: f64) {
        let stops: Vec<Stop> = self.queue.iter().copied().collect();
        let w = walk(self.position, &stops, (until - from) * speed);
        let mut at = self.position;
        let mut t = from;
        for stop in self.queue.drain(..w.reached) {
            t += crate::model::euclidean_distance(at, stop.location) / speed;
            at = stop.location;
            self.leg_origin = at;
            match stop.customer {
                Some(c) => {
                    self.residual -= c.demand;
                    self.served.push(ServedVisit { customer: c.id, time: t });
                }
                None => self.residual = capacity,
            }
        }
        if w.reached == stops.len() && w.reached > 0 {
            self.idle_since = t;
        }
        self.position = w.position;
        self.distance += w.travelled;
    }
}

/// Vehicle motion and bookkeeping between replans.
#[derive(Debug, Clone)]
pub struct Simulator {
    depot: Point,
    capacity: f64,
    speed: f64,
    time: f64,
    vehicles: Vec<Vehicle>,
}

impl Simulator {
    /// Every vehicle idle at the depot at time zero.
    pub fn new(instance: &Instance) -> Self {
        let vehicle = Vehicle {
            position: instance.depot,
            residual: instance.fleet.capacity,
            queue: VecDeque::new(),
            served: Vec::new(),
            distance: 0.0,
            leg_origin: instance.depot,
            idle_since: 0.0,
        };
        Self {
            depot: instance.depot,
            capacity: instance.fleet.capacity,
            speed: instance.fleet.speed,
            time: 0.0,
            vehicles: vec![vehicle; instance.fleet.vehicle_count],
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn fleet_state(&self) -> FleetState {
        FleetState {
            time: self.time,
            vehicles: self
                .vehicles
                .iter()
                .enumerate()
                .map(|(id, v)| VehicleState {
                    id,
                    position: v.position,
                    residual_capacity: v.residual,
                    served: v.served.clone(),
                    current_route: v.queue.iter().filter_map(|s| s.customer.map(|c| c.id)).collect(),
                })
                .collect(),
        }
    }

    /// Advances every vehicle to `event_time` and gathers the replan input: customers
    /// still queued (minus committed heads) plus the new `arrivals`.
    pub fn snapshot_state(&mut self, event_time: f64, arrivals: &[Customer]) -> ReplanInput {
        assert!(event_time >= self.time, "time runs forward");
        for v in &mut self.vehicles {
            v.drive(self.time, event_time, self.speed, self.capacity);
        }
        self.time = event_time;
        let mut pending = Vec::new();
        let mut slots = Vec::with_capacity(self.vehicles.len());
        for (id, v) in self.vehicles.iter().enumerate() {
            let mut slot = VehicleSlot {
                id,
                position: v.position,
                committed: None,
                restock: false,
                residual: v.residual,
            };
            let mut rest = v.queue.iter();
            let moving = v.position != v.leg_origin;
            match v.queue.front().filter(|_| moving) {
                Some(Stop { customer: Some(c), .. }) => {
                    slot.committed = Some(*c);
                    slot.residual -= c.demand;
                    rest.next();
                }
                Some(Stop { customer: None, .. }) if v.queue.len() > 1 => {
                    slot.restock = true;
                    slot.residual = self.capacity;
                    rest.next();
                }
                _ => {}
            }
            pending.extend(rest.filter_map(|s| s.customer));
            slots.push(slot);
        }
        pending.extend_from_slice(arrivals);
        pending.sort_by_key(|c| c.id);
        ReplanInput {
            time: event_time,
            depot: self.depot,
            capacity: self.capacity,
            pending,
            vehicles: slots,
        }
    }

    /// Replaces every vehicle's queue with its route in `plan`.
    pub fn adopt(&mut self, plan: &Plan, input: &ReplanInput) -> Result<(), ModelError> {
        let mut known: HashMap<CustomerId, Customer> = input.pending.iter().map(|c| (c.id, *c)).collect();
        known.extend(input.vehicles.iter().filter_map(|s| s.committed).map(|c| (c.id, c)));
        for route in &plan.routes {
            let v = self
                .vehicles
                .get_mut(route.vehicle_id)
                .ok_or(ModelError::UnknownVehicle(route.vehicle_id))?;
            v.queue = route_stops(route, |id| known.get(&id).copied())?.into();
            v.leg_origin = v.position;
        }
        Ok(())
    }

    /// Drives every queue to the end.
    pub fn finish(&mut self) -> f64 {
        let mut completion: f64 = self.time;
        for v in &mut self.vehicles {
            v.drive(self.time, f64::INFINITY, self.speed, self.capacity);
            completion = completion.max(v.idle_since);
        }
        completion
    }

    pub fn total_distance(&self) -> f64 {
        self.vehicles.iter().map(|v| v.distance).sum()
    }

    pub fn served(&self) -> Vec<ServedVisit> {
        let mut all: Vec<ServedVisit> = self.vehicles.iter().flat_map(|v| v.served.iter().copied()).collect();
        all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.customer.cmp(&b.customer)));
        all
    }
}

/// Runs the three stages on the pending customers. Vehicles are sent to reload,
/// least residual first, until the demand fits and the pipeline finds a plan.
/// Returns the plan and the slots it was built for.
pub fn replan(input: &ReplanInput, pipeline: &PipelineConfig) -> Result<(Plan, Vec<VehicleSlot>), PipelineError> {
    let mut slots = input.vehicles.clone();
    let mut order: Vec<usize> = (0..slots.len()).filter(|&k| !slots[k].restock).collect();
    order.sort_by(|&a, &b| slots[a].residual.total_cmp(&slots[b].residual).then(a.cmp(&b)));
    let mut order = order.into_iter();
    let demand: f64 = input.pending.iter().map(|c| c.demand).sum();
    let room = |slots: &[VehicleSlot]| slots.iter().map(|s| s.residual).sum::<f64>();
    let mut restock = |slots: &mut Vec<VehicleSlot>| match order.next() {
        Some(k) => {
            slots[k].restock = true;
            slots[k].residual = input.capacity;
            true
        }
        None => false,
    };
    while room(&slots) + 1e-9 < demand && restock(&mut slots) {}
    loop {
        let problem = RoutingProblem::new(input.depot, slots.clone(), input.pending.clone())?;
        match solve(&problem, pipeline) {
            Ok(out) => return Ok((out.plan, slots)),
            Err(e) if e.is_infeasible() && restock(&mut slots) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Replays `instance`: a replan at time zero and one per event batch, then drives
/// every vehicle home. Improvement and clustering use `seed`.
pub fn simulate(instance: &Instance, pipeline: &PipelineConfig, seed: u64) -> Result<SimulationTrace, SimulationError> {
    let mut config = pipeline.clone();
    config.clustering.seed = seed;
    config.improvement.seed = seed;
    let mut sim = Simulator::new(instance);
    let mut records = Vec::with_capacity(instance.events.len() + 1);
    let batches = std::iter::once((0.0, instance.customers.as_slice()))
        .chain(instance.events.iter().map(|e| (e.time, e.customers.as_slice())));
    for (time, arrivals) in batches {
        let input = sim.snapshot_state(time, arrivals);
        let fleet = sim.fleet_state();
        let fail = |source| SimulationError { time, source };
        let (plan, vehicles) = replan(&input, &config).map_err(fail)?;
        sim.adopt(&plan, &input).map_err(|e| fail(e.into()))?;
        records.push(ReplanRecord {
            time,
            cost: plan.total_cost,
            pending: input.pending,
            fleet,
            vehicles,
            plan,
        });
    }
    let completion_time = sim.finish();
    Ok(SimulationTrace {
        depot: instance.depot,
        records,
        completion_time,
        total_distance: sim.total_distance(),
        served: sim.served(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusteringMethod;
    use crate::construction::ConstructionMethod;
    use crate::datasets::case1;
    use crate::improvement::{Clock, ImprovementConfig, ImprovementMethod};
    use crate::model::{validate_plan, FleetSpec};
    use std::collections::BTreeSet;

    fn pipeline(clusterer: ClusteringMethod, improver: ImprovementMethod) -> PipelineConfig {
        let improvement = ImprovementConfig {
            clock: Clock::Virtual { evals_per_second: 2e7 },
            ..ImprovementConfig::new(improver, 0.02, 0)
        };
        PipelineConfig::new(clusterer, ConstructionMethod::Savings, improvement)
    }

    #[test]
    fn first_event_of_case1() {
        let inst = case1();
        let mut sim = Simulator::new(&inst);
        let input = sim.snapshot_state(0.0, &inst.customers);
        let (plan, _) = replan(&input, &pipeline(ClusteringMethod::KMeans, ImprovementMethod::None)).unwrap();
        sim.adopt(&plan, &input).unwrap();
        let event = &inst.events[0];
        assert_eq!(event.time, 13.0);
        let input = sim.snapshot_state(13.0, &event.customers);
        assert_eq!(event.customers.len(), 4);
        let new = input
            .pending
            .iter()
            .find(|c| c.location == Point::new(41.0, 71.0))
            .expect("arrival is pending");
        assert_eq!(new.demand, 2.0);
        // 13 distance units driven per vehicle; nobody reached home yet
        let state = sim.fleet_state();
        let committed = input.vehicles.iter().filter(|s| s.committed.is_some()).count();
        assert_eq!(input.pending.len() + committed + state.served_count(), 104);
    }

    #[test]
    fn event_before_departure_leaves_everyone_home() {
        let inst = case1();
        let mut sim = Simulator::new(&inst);
        let input = sim.snapshot_state(0.0, &inst.customers);
        let (plan, _) = replan(&input, &pipeline(ClusteringMethod::None, ImprovementMethod::None)).unwrap();
        sim.adopt(&plan, &input).unwrap();
        let again = sim.snapshot_state(0.0, &inst.events[0].customers);
        assert!(again.vehicles.iter().all(|s| s.position == inst.depot && s.committed.is_none()));
        assert_eq!(again.pending.len(), 104);
    }

    #[test]
    fn event_after_completion_starts_a_new_trip() {
        let inst = case1();
        let mut sim = Simulator::new(&inst);
        let input = sim.snapshot_state(0.0, &inst.customers);
        let (plan, _) = replan(&input, &pipeline(ClusteringMethod::KMeans, ImprovementMethod::None)).unwrap();
        sim.adopt(&plan, &input).unwrap();
        let input = sim.snapshot_state(1e6, &inst.events[0].customers);
        assert_eq!(input.pending, inst.events[0].customers);
        for s in &input.vehicles {
            assert_eq!(s.position, inst.depot);
            assert_eq!(s.residual, inst.fleet.capacity);
            assert!(s.committed.is_none() && !s.restock);
        }
    }

    #[test]
    fn case1_replay_serves_everyone() {
        let inst = case1();
        for clusterer in [ClusteringMethod::None, ClusteringMethod::KMeans] {
            let trace = simulate(&inst, &pipeline(clusterer, ImprovementMethod::Gls), 1).unwrap();
            let times: Vec<f64> = trace.records.iter().map(|r| r.time).collect();
            assert_eq!(times, vec![0.0, 13.0, 31.0, 45.0, 51.0, 66.0]);
            let served: BTreeSet<CustomerId> = trace.served.iter().map(|s| s.customer).collect();
            assert_eq!(served.len(), 120);
            assert_eq!(trace.served.len(), 120);
            for r in &trace.records {
                let problem = r.problem(inst.depot).unwrap();
                assert!(validate_plan(&r.plan, &problem).is_ok(), "t = {}", r.time);
            }
        }
    }

    #[test]
    fn no_events_means_one_record_and_the_planned_distance() {
        let inst = case1().without_events();
        let trace = simulate(&inst, &pipeline(ClusteringMethod::KMeans, ImprovementMethod::Tabu), 2).unwrap();
        assert_eq!(trace.records.len(), 1);
        let planned = trace.records[0].cost;
        assert!((trace.total_distance - planned).abs() <= 1e-6 * planned);
        assert_eq!(trace.served.len(), 100);
    }

    #[test]
    fn overflowing_demand_triggers_a_reload() {
        // one vehicle of capacity 4, two customers of demand 3 arriving apart
        let fleet = FleetSpec {
            vehicle_count: 1,
            capacity: 4.0,
            speed: 1.0,
        };
        let first = Customer::new(1, 10.0, 0.0, 3.0);
        let second = Customer::new(2, 0.0, 10.0, 3.0);
        let inst = Instance::new(
            "reload",
            Point::new(0.0, 0.0),
            fleet,
            vec![first],
            vec![crate::model::ArrivalEvent {
                time: 5.0,
                customers: vec![second],
            }],
        )
        .unwrap();
        let trace = simulate(&inst, &pipeline(ClusteringMethod::KMeans, ImprovementMethod::None), 0).unwrap();
        let second_plan = &trace.records[1];
        assert!(second_plan.vehicles[0].restock);
        assert_eq!(second_plan.plan.routes[0].committed, Some(CustomerId(1)));
        // 5 driven, 5 to customer 1, 10 home, 10 out, 10 back
        assert!((trace.total_distance - 40.0).abs() < 1e-9);
        assert_eq!(trace.served.len(), 2);
    }
}
