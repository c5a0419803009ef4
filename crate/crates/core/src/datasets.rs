//! Instances shipped with the crate.

use crate::harness::parse_instance;
use crate::model::Instance;

/// Case 1: 100 static customers on `[0, 100]²`, four vehicles of capacity 70, depot at
/// (50, 50) and 20 customers arriving in five batches between t = 13 and t = 66.
/// Dynamic customers carry ids 101..=120.
pub const CASE1_JSON: &str = include_str!("../data/case1.json");

pub fn case1() -> Instance {
    parse_instance(CASE1_JSON).expect("shipped case1.json is valid")
}
