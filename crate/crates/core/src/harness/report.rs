use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clustering::{ClusteringConfig, ClusteringMethod};
use crate::construction::ConstructionMethod;
use crate::improvement::{improve, Clock, ImprovementConfig, ImprovementMethod};
use crate::model::{validate_plan, Instance, ModelError, RoutingProblem};
use crate::pipeline::{build_initial_plan, InitialPlan, PipelineError};

/// Groups whose cost standard deviation exceeds this are flagged for review.
pub const STD_DEV_FLAG: f64 = 5.3;

/// Percentage by which `cost` undercuts `baseline`; negative when it is worse.
pub fn improvement_percent(baseline: f64, cost: f64) -> f64 {
    100.0 * (baseline - cost) / baseline
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentMatrix {
    pub clusterers: Vec<ClusteringMethod>,
    pub constructors: Vec<ConstructionMethod>,
    /// `none` adds nothing: construction-only rows are always produced.
    pub improvers: Vec<ImprovementMethod>,
    /// Seconds.
    pub budgets: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl Default for ExperimentMatrix {
    fn default() -> Self {
        Self {
            clusterers: ClusteringMethod::ALL.to_vec(),
            constructors: ConstructionMethod::ALL.to_vec(),
            improvers: vec![ImprovementMethod::Gls, ImprovementMethod::Sa, ImprovementMethod::Tabu],
            budgets: vec![0.5, 1.0, 2.0, 5.0, 50.0],
            repetitions: 10,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixOptions {
    pub workers: usize,
    /// Improvement budgets are measured on this clock. With a virtual clock the whole
    /// report is reproducible and construction rows report zero time.
    pub clock: Clock,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            clock: Clock::virtual_default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("invalid experiment matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn as_name<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(value)
}

fn from_name<'de, T, D>(d: D) -> Result<T, D::Error>
where
    T: FromStr<Err = String>,
    D: Deserializer<'de>,
{
    String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
}

/// One run. Construction-only rows have improver `none` and no budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(serialize_with = "as_name", deserialize_with = "from_name")]
    pub clusterer: ClusteringMethod,
    #[serde(serialize_with = "as_name", deserialize_with = "from_name")]
    pub constructor: ConstructionMethod,
    #[serde(serialize_with = "as_name", deserialize_with = "from_name")]
    pub improver: ImprovementMethod,
    pub budget_s: Option<f64>,
    pub rep: usize,
    pub seed: u64,
    /// Cost of a validated plan; empty when the run failed.
    pub cost: Option<f64>,
    pub wall_time_s: f64,
    /// Against the matching no-clustering run; empty for baseline rows.
    pub improvement_pct: Option<f64>,
    /// `ok`, `infeasible` or `error`.
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupKey {
    pub clusterer: ClusteringMethod,
    pub constructor: ConstructionMethod,
    pub improver: ImprovementMethod,
    pub budget_s: Option<f64>,
}

impl ReportRow {
    pub fn key(&self) -> GroupKey {
        GroupKey {
            clusterer: self.clusterer,
            constructor: self.constructor,
            improver: self.improver,
            budget_s: self.budget_s,
        }
    }
}

/// Aggregates over the successful repetitions of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub runs: usize,
    pub failures: usize,
    pub mean: f64,
    pub min: f64,
    /// Sample standard deviation; zero for a single run.
    pub std_dev: f64,
    pub mean_improvement_pct: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    /// One summary per group, in order of first appearance.
    pub fn summaries(&self) -> Vec<GroupSummary> {
        let mut order: Vec<GroupKey> = Vec::new();
        for row in &self.rows {
            if !order.contains(&row.key()) {
                order.push(row.key());
            }
        }
        order
            .into_iter()
            .map(|key| {
                let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.key() == key).collect();
                let costs: Vec<f64> = rows.iter().filter_map(|r| r.cost).collect();
                let n = costs.len();
                let mean = costs.iter().sum::<f64>() / n as f64;
                let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
                let std_dev = if n > 1 {
                    (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                } else {
                    0.0
                };
                let pcts: Vec<f64> = rows.iter().filter_map(|r| r.improvement_pct).collect();
                let mean_improvement_pct = (!pcts.is_empty()).then(|| pcts.iter().sum::<f64>() / pcts.len() as f64);
                GroupSummary {
                    key,
                    runs: n,
                    failures: rows.len() - n,
                    mean,
                    min,
                    std_dev,
                    mean_improvement_pct,
                    flagged: std_dev > STD_DEV_FLAG,
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<Result<Vec<ReportRow>, _>>()?;
        Ok(Self { rows })
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "clusterer",
    "constructor",
    "improver",
    "budget_s",
    "rep",
    "seed",
    "cost",
    "wall_time_s",
    "improvement_pct",
    "status",
];

pub fn emit_csv(report: &ReportTable, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    std::fs::write(path, report.to_csv()?).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn status_of(err: &PipelineError) -> &'static str {
    if err.is_infeasible() {
        "infeasible"
    } else {
        "error"
    }
}

#[derive(Debug, Clone)]
struct RunResult {
    cost: Result<f64, &'static str>,
    seconds: f64,
}

impl RunResult {
    fn failed(status: &'static str) -> Self {
        Self {
            cost: Err(status),
            seconds: 0.0,
        }
    }
}

type BuildKey = (ClusteringMethod, ConstructionMethod, usize);
type ImproveKey = (ClusteringMethod, ConstructionMethod, ImprovementMethod, usize, usize);

/// Runs stages 1 and 2 once per (clusterer, constructor, repetition) on the static
/// customers, then every improver and budget from those plans. Failed runs become
/// rows with an empty cost and a non-`ok` status.
pub fn run_experiment_matrix(
    instance: &Instance,
    matrix: &ExperimentMatrix,
    options: &MatrixOptions,
) -> Result<ReportTable, ReportError> {
    if matrix.repetitions == 0 {
        return Err(ReportError::InvalidMatrix("repetitions must be at least 1".into()));
    }
    if matrix.budgets.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(ReportError::InvalidMatrix("budgets must be finite and non-negative".into()));
    }
    let problem = RoutingProblem::at_depot(instance.depot, &instance.fleet, instance.customers.clone())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(options.workers.max(1)).build()?;

    let mut clusterers = matrix.clusterers.clone();
    clusterers.dedup();
    if !clusterers.contains(&ClusteringMethod::None) {
        clusterers.push(ClusteringMethod::None);
    }
    let improvers: Vec<ImprovementMethod> = matrix
        .improvers
        .iter()
        .copied()
        .filter(|&m| m != ImprovementMethod::None)
        .collect();
    let seed = |rep: usize| matrix.base_seed + rep as u64;

    let build_keys: Vec<BuildKey> = clusterers
        .iter()
        .flat_map(|&c| matrix.constructors.iter().map(move |&k| (c, k)))
        .flat_map(|(c, k)| (0..matrix.repetitions).map(move |r| (c, k, r)))
        .collect();
    let built: Vec<(Result<InitialPlan, &'static str>, RunResult)> = pool.install(|| {
        build_keys
            .par_iter()
            .map(|&(c, k, rep)| {
                let config = ClusteringConfig {
                    method: c,
                    seed: seed(rep),
                    ..ClusteringConfig::default()
                };
                let started = Instant::now();
                let outcome = build_initial_plan(&problem, &config, k);
                let seconds = match options.clock {
                    Clock::Wall => started.elapsed().as_secs_f64(),
                    Clock::Virtual { .. } => 0.0,
                };
                match outcome {
                    Ok(initial) if validate_plan(&initial.plan, &problem).is_ok() => {
                        let cost = Ok(initial.plan.total_cost);
                        (Ok(initial), RunResult { cost, seconds })
                    }
                    Ok(_) => (Err("error"), RunResult::failed("error")),
                    Err(e) => (Err(status_of(&e)), RunResult::failed(status_of(&e))),
                }
            })
            .collect()
    });
    let built: HashMap<BuildKey, (Result<InitialPlan, &'static str>, RunResult)> =
        build_keys.iter().copied().zip(built).collect();

    let improve_keys: Vec<ImproveKey> = build_keys
        .iter()
        .flat_map(|&(c, k, rep)| {
            improvers
                .iter()
                .flat_map(move |&m| (0..matrix.budgets.len()).map(move |b| (c, k, m, b, rep)))
        })
        .collect();
    let improved: Vec<RunResult> = pool.install(|| {
        improve_keys
            .par_iter()
            .map(|&(c, k, m, b, rep)| {
                let initial = match &built[&(c, k, rep)].0 {
                    Ok(initial) => initial,
                    Err(status) => return RunResult::failed(status),
                };
                let config = ImprovementConfig {
                    clock: options.clock,
                    ..ImprovementConfig::new(m, matrix.budgets[b], seed(rep))
                };
                match improve(&problem, &initial.plan, &config, initial.neighborhoods()) {
                    Ok(out) if validate_plan(&out.plan, &problem).is_ok() => RunResult {
                        cost: Ok(out.plan.total_cost),
                        seconds: out.elapsed,
                    },
                    _ => RunResult::failed("error"),
                }
            })
            .collect()
    });
    let improved: HashMap<ImproveKey, RunResult> = improve_keys.into_iter().zip(improved).collect();

    let row = |c, k, m, budget_s, rep, run: &RunResult, baseline: Option<&RunResult>| {
        let improvement_pct = match (run.cost, baseline.map(|b| b.cost)) {
            (Ok(cost), Some(Ok(base))) if c != ClusteringMethod::None => Some(improvement_percent(base, cost)),
            _ => None,
        };
        ReportRow {
            clusterer: c,
            constructor: k,
            improver: m,
            budget_s,
            rep,
            seed: seed(rep),
            cost: run.cost.ok(),
            wall_time_s: run.seconds,
            improvement_pct,
            status: run.cost.err().unwrap_or("ok").to_string(),
        }
    };
    let mut rows = Vec::new();
    for &c in matrix.clusterers.iter().filter(|&&c| c != ClusteringMethod::None) {
        for &k in &matrix.constructors {
            for rep in 0..matrix.repetitions {
                let base = &built[&(ClusteringMethod::None, k, rep)].1;
                rows.push(row(c, k, ImprovementMethod::None, None, rep, &built[&(c, k, rep)].1, Some(base)));
            }
        }
    }
    for &c in &matrix.clusterers {
        for &k in &matrix.constructors {
            for &m in &improvers {
                for (b, &budget) in matrix.budgets.iter().enumerate() {
                    for rep in 0..matrix.repetitions {
                        let base = &improved[&(ClusteringMethod::None, k, m, b, rep)];
                        rows.push(row(c, k, m, Some(budget), rep, &improved[&(c, k, m, b, rep)], Some(base)));
                    }
                }
            }
        }
    }
    Ok(ReportTable { rows })
}
