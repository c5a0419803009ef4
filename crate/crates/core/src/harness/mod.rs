//! Instance files, instance generation, the experiment matrix and its reports.

mod generate;
mod io;
mod report;
mod svg;

pub use generate::{generate_instance, GeneratorConfig};
pub use io::{customer_ids, instance_to_json, load_instance, parse_instance, save_instance, InstanceError};
pub use report::{
    emit_csv, improvement_percent, run_experiment_matrix, ExperimentMatrix, GroupKey, GroupSummary, MatrixOptions,
    ReportError, ReportRow, ReportTable, CSV_HEADER, STD_DEV_FLAG,
};
pub use svg::{emit_svg, plan_to_svg};
