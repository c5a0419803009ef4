pub mod clustering;
pub mod construction;
pub mod datasets;
pub mod harness;
pub mod improvement;
mod matching;
pub mod model;
pub mod pipeline;
pub mod sim;
