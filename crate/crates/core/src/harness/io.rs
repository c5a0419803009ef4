use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{ArrivalEvent, Customer, CustomerId, FleetSpec, Instance, Point};

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Parse(String),
    #[error("instance file violates the schema: {0}")]
    SchemaViolation(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRecord {
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FleetRecord {
    count: usize,
    capacity: f64,
    speed: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomerRecord {
    id: u32,
    x: f64,
    y: f64,
    demand: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    time: f64,
    customers: Vec<CustomerRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    name: String,
    depot: PointRecord,
    fleet: FleetRecord,
    customers: Vec<CustomerRecord>,
    events: Vec<EventRecord>,
}

impl CustomerRecord {
    fn into_customer(self) -> Customer {
        Customer::new(self.id, self.x, self.y, self.demand)
    }

    fn of(c: &Customer) -> Self {
        Self {
            id: c.id.0,
            x: c.location.x,
            y: c.location.y,
            demand: c.demand,
        }
    }
}

/// Parses and validates instance JSON.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    let record: InstanceRecord =
        serde_json::from_value(value).map_err(|e| InstanceError::SchemaViolation(e.to_string()))?;
    let fleet = FleetSpec {
        vehicle_count: record.fleet.count,
        capacity: record.fleet.capacity,
        speed: record.fleet.speed,
    };
    let events = record
        .events
        .into_iter()
        .map(|e| ArrivalEvent {
            time: e.time,
            customers: e.customers.into_iter().map(CustomerRecord::into_customer).collect(),
        })
        .collect();
    Instance::new(
        record.name,
        Point::new(record.depot.x, record.depot.y),
        fleet,
        record.customers.into_iter().map(CustomerRecord::into_customer).collect(),
        events,
    )
    .map_err(|e| InstanceError::SchemaViolation(e.to_string()))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

/// Serialises an instance in the same format [`parse_instance`] reads.
pub fn instance_to_json(instance: &Instance) -> String {
    let record = InstanceRecord {
        name: instance.name.clone(),
        depot: PointRecord {
            x: instance.depot.x,
            y: instance.depot.y,
        },
        fleet: FleetRecord {
            count: instance.fleet.vehicle_count,
            capacity: instance.fleet.capacity,
            speed: instance.fleet.speed,
        },
        customers: instance.customers.iter().map(CustomerRecord::of).collect(),
        events: instance
            .events
            .iter()
            .map(|e| EventRecord {
                time: e.time,
                customers: e.customers.iter().map(CustomerRecord::of).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&record).expect("instance records always serialise");
    text.push('\n');
    text
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    fs::write(path, instance_to_json(instance)).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Ids of every customer in an instance, static first.
pub fn customer_ids(instance: &Instance) -> Vec<CustomerId> {
    instance.all_customers().map(|c| c.id).collect()
}
