use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::{DistanceMatrix, Point};
use super::ModelError;

/// Customer identifier, unique across static and dynamic customers of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CustomerId(pub u32);

impl fmt::Display for CustomerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Customer {
    pub id: CustomerId,
    pub location: Point,
    pub demand: f64,
    /// Seconds; zero for customers known at the start of the horizon.
    pub arrival_time: f64,
}

impl Customer {
    pub fn new(id: u32, x: f64, y: f64, demand: f64) -> Self {
        Self {
            id: CustomerId(id),
            location: Point::new(x, y),
            demand,
            arrival_time: 0.0,
        }
    }
}

/// Homogeneous fleet description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetSpec {
    pub vehicle_count: usize,
    pub capacity: f64,
    /// Distance units per second.
    pub speed: f64,
}

impl FleetSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vehicle_count == 0 {
            return Err(ModelError::invalid("fleet needs at least one vehicle"));
        }
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(ModelError::invalid("vehicle capacity must be positive"));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(ModelError::invalid("vehicle speed must be positive"));
        }
        Ok(())
    }
}

/// A batch of customers revealed at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEvent {
    pub time: f64,
    pub customers: Vec<Customer>,
}

/// A dynamic CVRP instance: depot, fleet, customers known at t = 0 and timed arrivals.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub depot: Point,
    pub fleet: FleetSpec,
    pub customers: Vec<Customer>,
    pub events: Vec<ArrivalEvent>,
}

impl Instance {
    /// Builds an instance and checks every structural invariant. Event customers get
    /// their `arrival_time` set to the event time; events sharing a timestamp are merged.
    pub fn new(
        name: impl Into<String>,
        depot: Point,
        fleet: FleetSpec,
        customers: Vec<Customer>,
        events: Vec<ArrivalEvent>,
    ) -> Result<Self, ModelError> {
        let mut merged: Vec<ArrivalEvent> = Vec::with_capacity(events.len());
        for mut event in events {
            for c in &mut event.customers {
                c.arrival_time = event.time;
            }
            match merged.last_mut() {
                Some(last) if last.time == event.time => last.customers.extend(event.customers),
                _ => merged.push(event),
            }
        }
        let mut customers = customers;
        for c in &mut customers {
            c.arrival_time = 0.0;
        }
        let instance = Self {
            name: name.into(),
            depot,
            fleet,
            customers,
            events: merged,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.fleet.validate()?;
        if !self.depot.is_finite() {
            return Err(ModelError::invalid("depot coordinates must be finite"));
        }
        let mut last_time = 0.0;
        for event in &self.events {
            if !(event.time > 0.0 && event.time.is_finite()) {
                return Err(ModelError::invalid(format!(
                    "event time {} must be strictly positive",
                    event.time
                )));
            }
            if event.time < last_time {
                return Err(ModelError::invalid("event times must be non-decreasing"));
            }
            last_time = event.time;
        }
        let mut seen = HashSet::new();
        for c in self.all_customers() {
            if !seen.insert(c.id) {
                return Err(ModelError::DuplicateCustomerId(c.id));
            }
            if !c.location.is_finite() {
                return Err(ModelError::invalid(format!("customer {} has non-finite coordinates", c.id)));
            }
            if !(c.demand >= 0.0 && c.demand.is_finite()) {
                return Err(ModelError::invalid(format!("customer {} has invalid demand", c.id)));
            }
            if c.demand > self.fleet.capacity {
                return Err(ModelError::DemandExceedsCapacity {
                    id: c.id,
                    demand: c.demand,
                    capacity: self.fleet.capacity,
                });
            }
        }
        Ok(())
    }

    /// Static customers followed by every event customer, in event order.
    pub fn all_customers(&self) -> impl Iterator<Item = &Customer> {
        self.customers
            .iter()
            .chain(self.events.iter().flat_map(|e| e.customers.iter()))
    }

    pub fn dynamic_customer_count(&self) -> usize {
        self.events.iter().map(|e| e.customers.len()).sum()
    }

    /// Copy of this instance with every event dropped.
    pub fn without_events(&self) -> Instance {
        Instance {
            events: Vec::new(),
            ..self.clone()
        }
    }

    pub fn with_depot(mut self, depot: Point) -> Instance {
        self.depot = depot;
        self
    }
}

/// Distance matrix over the depot (index 0) followed by `customers` in order.
pub fn build_distance_matrix(depot: Point, customers: &[Customer]) -> DistanceMatrix {
    let points: Vec<Point> = std::iter::once(depot)
        .chain(customers.iter().map(|c| c.location))
        .collect();
    DistanceMatrix::from_points(&points)
}
