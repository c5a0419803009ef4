//! Stage 1: split the pending customers into one capacity-feasible group per vehicle.
//!
//! Three geometric clusterers are available ([`kmeans`], [`fit_gmm`], [`birch`]); all
//! of them work on customer coordinates only. Demand enters afterwards through
//! [`repair_capacity`] and [`assign_clusters_to_vehicles`].

mod assign;
mod birch;
mod gmm;
mod kmeans;
mod repair;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use assign::{assign_clusters_to_vehicles, Assignment};
pub use birch::{birch, BirchFit, Cf, ENTRIES_PER_CLUSTER};
pub use gmm::{fit_gmm, Covariance, GmmFit, COVARIANCE_REGULARIZATION, MIN_COMPONENT_WEIGHT};
pub use kmeans::{kmeans, weighted_kmeans};
pub use repair::repair_capacity;

use crate::model::{centroid, Customer, CustomerId, Point};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("cannot form {clusters} clusters from {points} points")]
    TooFewPoints { points: usize, clusters: usize },
    #[error("mixture component {component} collapsed twice")]
    DegenerateComponent { component: usize },
    #[error("pending demand {demand} exceeds the fleet's residual capacity {capacity}")]
    GlobalInfeasible { demand: f64, capacity: f64 },
    #[error("capacity repair stalled after {moves} moves")]
    RepairStalled { moves: usize },
    #[error("no capacity-feasible matching of clusters to vehicles")]
    InfeasibleAssignment,
}

/// Hard assignment of points to `k` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub centroids: Vec<Point>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusteringMethod {
    None,
    KMeans,
    Gmm,
    Birch,
}

impl ClusteringMethod {
    pub const ALL: [ClusteringMethod; 4] = [Self::None, Self::KMeans, Self::Gmm, Self::Birch];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::KMeans => "kmeans",
            Self::Gmm => "gmm",
            Self::Birch => "birch",
        }
    }
}

impl fmt::Display for ClusteringMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown clusterer `{s}` (expected none, kmeans, gmm or birch)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub method: ClusteringMethod,
    /// Cluster count; the pipeline overrides it with the vehicle count.
    pub k: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub seed: u64,
    pub birch_threshold: f64,
    pub birch_branching: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            method: ClusteringMethod::KMeans,
            k: 1,
            max_iterations: 100,
            convergence_tol: 1e-4,
            seed: 0,
            birch_threshold: 5.0,
            birch_branching: 50,
        }
    }
}

/// Groups of customer ids with their centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Vec<CustomerId>>,
    pub centroids: Vec<Point>,
    pub method: ClusteringMethod,
}

impl ClusterSet {
    /// Builds a set from explicit groups; centroids are the group means.
    pub fn from_ids(clusters: Vec<Vec<CustomerId>>, customers: &[Customer], method: ClusteringMethod) -> Self {
        let loc: HashMap<CustomerId, Point> = customers.iter().map(|c| (c.id, c.location)).collect();
        let centroids = clusters
            .iter()
            .map(|ids| {
                let pts: Vec<Point> = ids.iter().filter_map(|id| loc.get(id).copied()).collect();
                centroid(&pts)
            })
            .collect();
        Self {
            clusters,
            centroids,
            method,
        }
    }

    fn from_labels(customers: &[Customer], clustering: &Clustering, method: ClusteringMethod) -> Self {
        let mut clusters = vec![Vec::new(); clustering.centroids.len()];
        for (c, &l) in customers.iter().zip(&clustering.labels) {
            clusters[l].push(c.id);
        }
        Self {
            clusters,
            centroids: clustering.centroids.clone(),
            method,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn loads(&self, customers: &[Customer]) -> Vec<f64> {
        let demand: HashMap<CustomerId, f64> = customers.iter().map(|c| (c.id, c.demand)).collect();
        self.clusters
            .iter()
            .map(|ids| ids.iter().map(|id| demand.get(id).copied().unwrap_or(0.0)).sum())
            .collect()
    }

    /// True when the groups are pairwise disjoint and together hold exactly `customers`.
    pub fn is_partition_of(&self, customers: &[Customer]) -> bool {
        let mut ids: Vec<CustomerId> = self.clusters.iter().flatten().copied().collect();
        ids.sort();
        let mut expected: Vec<CustomerId> = customers.iter().map(|c| c.id).collect();
        expected.sort();
        ids == expected
    }
}

/// Runs the configured clusterer on the customer locations and returns `config.k`
/// non-empty groups. [`ClusteringMethod::None`] yields one group with everybody.
pub fn cluster_customers(customers: &[Customer], config: &ClusteringConfig) -> Result<ClusterSet, ClusterError> {
    let points: Vec<Point> = customers.iter().map(|c| c.location).collect();
    let clustering = match config.method {
        ClusteringMethod::None => {
            return Ok(ClusterSet {
                clusters: vec![customers.iter().map(|c| c.id).collect()],
                centroids: vec![centroid(&points)],
                method: ClusteringMethod::None,
            })
        }
        ClusteringMethod::KMeans => kmeans(&points, config.k, config.seed, config.max_iterations)?,
        ClusteringMethod::Gmm => {
            fit_gmm(&points, config.k, config.seed, config.max_iterations, config.convergence_tol)?.clustering
        }
        ClusteringMethod::Birch => {
            birch(
                &points,
                config.k,
                config.birch_threshold,
                config.birch_branching,
                config.seed,
                config.max_iterations,
            )?
            .clustering
        }
    };
    Ok(ClusterSet::from_labels(customers, &clustering, config.method))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use proptest::prelude::*;

    #[test]
    fn case1_partitions_for_every_method() {
        let inst = datasets::case1();
        for method in [ClusteringMethod::KMeans, ClusteringMethod::Gmm, ClusteringMethod::Birch] {
            let cfg = ClusteringConfig {
                method,
                k: 4,
                ..Default::default()
            };
            let set = cluster_customers(&inst.customers, &cfg).unwrap();
            assert_eq!(set.len(), 4);
            assert!(set.is_partition_of(&inst.customers), "{method}");
            assert!(set.clusters.iter().all(|c| !c.is_empty()), "{method}");
            assert_eq!(cluster_customers(&inst.customers, &cfg).unwrap(), set);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in ClusteringMethod::ALL {
            assert_eq!(m.name().parse::<ClusteringMethod>().unwrap(), m);
        }
        assert!("dbscan".parse::<ClusteringMethod>().is_err());
    }

    proptest! {
        #[test]
        fn every_method_yields_an_exact_partition(
            coords in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 5..40),
            k in 1usize..5,
            seed in 0u64..50,
            which in 0usize..3,
        ) {
            let customers: Vec<Customer> = coords.iter().enumerate()
                .map(|(i, &(x, y))| Customer::new(i as u32 + 10, x, y, 1.0)).collect();
            let method = [ClusteringMethod::KMeans, ClusteringMethod::Gmm, ClusteringMethod::Birch][which];
            let cfg = ClusteringConfig { method, k, seed, ..Default::default() };
            let set = cluster_customers(&customers, &cfg).unwrap();
            prop_assert_eq!(set.len(), k);
            prop_assert!(set.is_partition_of(&customers));
            prop_assert!(set.clusters.iter().all(|c| !c.is_empty()));
        }
    }
}
