//! Domain types shared by every stage: geometry, instances, routing problems and plans.

mod geometry;
mod instance;
mod plan;
mod problem;

pub use geometry::{centroid, euclidean_distance, DistanceMatrix, Point};
pub(crate) use geometry::squared_distance;
pub use instance::{build_distance_matrix, ArrivalEvent, Customer, CustomerId, FleetSpec, Instance};
pub use plan::{plan_cost, validate_plan, Plan, Route, ValidationReport, Violation};
pub use problem::{RoutingProblem, VehicleSlot, DEPOT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown customer id {0}")]
    UnknownCustomerId(CustomerId),
    #[error("unknown vehicle id {0}")]
    UnknownVehicle(usize),
    #[error("customer id {0} appears more than once")]
    DuplicateCustomerId(CustomerId),
    #[error("customer {id} demands {demand}, more than the vehicle capacity {capacity}")]
    DemandExceedsCapacity { id: CustomerId, demand: f64, capacity: f64 },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

impl ModelError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ModelError::Invalid(msg.into())
    }
}
