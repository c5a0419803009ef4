use serde_json::{json, Value};

use super::{ReplanRecord, SimulationTrace};

/// `{"t", "cost", "routes", "positions", "served"}` for one replan.
pub fn trace_record_json(record: &ReplanRecord) -> Value {
    json!({
        "t": record.time,
        "cost": record.cost,
        "routes": record.plan.visit_lists(),
        "positions": record
            .fleet
            .vehicles
            .iter()
            .map(|v| [v.position.x, v.position.y])
            .collect::<Vec<_>>(),
        "served": record.fleet.served_count(),
    })
}

/// One JSON object per replan, newline terminated.
pub fn trace_to_jsonl(trace: &SimulationTrace) -> String {
    trace
        .records
        .iter()
        .map(|r| trace_record_json(r).to_string() + "\n")
        .collect()
}
