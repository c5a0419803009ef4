//! The three stages glued together: cluster the pending customers, build one route
//! per cluster from the matched vehicle's anchor, then improve.

use crate::clustering::{
    assign_clusters_to_vehicles, cluster_customers, repair_capacity, ClusterError, ClusterSet, ClusteringConfig,
    ClusteringMethod,
};
use crate::construction::{construct, ConstructionError, ConstructionMethod, SubInstance};
use crate::improvement::{improve, ImproveOutcome, ImprovementConfig, Neighborhoods};
use crate::model::{validate_plan, ModelError, Plan, RoutingProblem, Violation};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `k` is ignored: the pipeline always asks for one cluster per vehicle.
    pub clustering: ClusteringConfig,
    pub construction: ConstructionMethod,
    pub improvement: ImprovementConfig,
}

impl PipelineConfig {
    pub fn new(clusterer: ClusteringMethod, construction: ConstructionMethod, improvement: ImprovementConfig) -> Self {
        Self {
            clustering: ClusteringConfig {
                method: clusterer,
                seed: improvement.seed,
                ..ClusteringConfig::default()
            },
            construction,
            improvement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("pipeline produced an invalid plan: {0:?}")]
    InvalidPlan(Vec<Violation>),
}

impl PipelineError {
    /// True when no feasible plan exists for the chosen stages, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            PipelineError::Construction(_)
                | PipelineError::Cluster(
                    ClusterError::GlobalInfeasible { .. }
                        | ClusterError::RepairStalled { .. }
                        | ClusterError::InfeasibleAssignment
                )
        )
    }
}

/// Output of stages 1 and 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPlan {
    pub plan: Plan,
    /// `clusters.clusters[k]` went to vehicle `k`; absent for the unclustered baseline.
    pub clusters: Option<ClusterSet>,
}

impl InitialPlan {
    /// Inter-route moves only pay off when construction saw the whole fleet at once.
    pub fn neighborhoods(&self) -> Neighborhoods {
        if self.clusters.is_some() {
            Neighborhoods::IntraRoute
        } else {
            Neighborhoods::All
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub plan: Plan,
    pub initial: InitialPlan,
    pub improvement: ImproveOutcome,
}

/// Stages 1 and 2. With [`ClusteringMethod::None`] the constructor routes every vehicle at once.
pub fn build_initial_plan(
    problem: &RoutingProblem,
    clustering: &ClusteringConfig,
    construction: ConstructionMethod,
) -> Result<InitialPlan, PipelineError> {
    let m = problem.vehicle_count();
    if clustering.method == ClusteringMethod::None || problem.customers().is_empty() {
        let routes = construct(construction, &SubInstance::whole(problem))?;
        return Ok(InitialPlan {
            plan: problem.to_plan(&routes),
            clusters: None,
        });
    }

    let customers = problem.customers();
    let config = ClusteringConfig {
        k: m.min(customers.len()),
        ..clustering.clone()
    };
    let mut raw = cluster_customers(customers, &config)?;
    while raw.clusters.len() < m {
        raw.clusters.push(Vec::new());
        raw.centroids.push(problem.depot());
    }
    let residuals: Vec<f64> = problem.vehicles().iter().map(|v| v.residual).collect();
    if residuals.iter().all(|&r| r == residuals[0]) {
        raw = repair_capacity(&raw, customers, &residuals)?;
    }
    let anchors: Vec<_> = problem.vehicles().iter().map(|v| v.anchor(problem.depot())).collect();
    let assignment = assign_clusters_to_vehicles(&raw, customers, &anchors, &residuals)?;

    let mut routes = Vec::with_capacity(m);
    for (k, ids) in assignment.clusters.clusters.iter().enumerate() {
        let nodes: Vec<usize> = ids
            .iter()
            .map(|&id| problem.node_of(id).ok_or(ModelError::UnknownCustomerId(id)))
            .collect::<Result<_, _>>()?;
        let mut built = construct(construction, &SubInstance::single(problem, k, nodes))?;
        routes.push(built.pop().unwrap_or_default());
    }
    Ok(InitialPlan {
        plan: problem.to_plan(&routes),
        clusters: Some(assignment.clusters),
    })
}

/// All three stages, finishing with a validity check of the returned plan.
pub fn solve(problem: &RoutingProblem, config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let initial = build_initial_plan(problem, &config.clustering, config.construction)?;
    let improvement = improve(problem, &initial.plan, &config.improvement, initial.neighborhoods())?;
    let report = validate_plan(&improvement.plan, problem);
    if !report.is_ok() {
        return Err(PipelineError::InvalidPlan(report.violations));
    }
    Ok(PipelineOutcome {
        plan: improvement.plan.clone(),
        initial,
        improvement,
    })
}
