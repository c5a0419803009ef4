use super::repair::repair_capacity;
use super::{ClusterError, ClusterSet};
use crate::matching::min_cost_assignment;
use crate::model::{euclidean_distance, Customer, Point};

/// Added to the matching cost of a cluster/vehicle pair whose load exceeds the
/// vehicle's residual capacity, so feasible pairings win whenever one exists.
const OVERLOAD_PENALTY: f64 = 1e9;

/// Outcome of matching clusters to vehicles: `clusters.clusters[k]` is served by vehicle `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub clusters: ClusterSet,
    /// Summed centroid-to-anchor distance of the chosen matching.
    pub matching_cost: f64,
}

/// Matches clusters one-to-one to vehicles, minimising the total distance between
/// cluster centroids and vehicle anchors. Empty clusters match at zero cost. If a
/// matched cluster overflows its vehicle, one repair pass with the matched capacities runs.
pub fn assign_clusters_to_vehicles(
    set: &ClusterSet,
    customers: &[Customer],
    anchors: &[Point],
    residuals: &[f64],
) -> Result<Assignment, ClusterError> {
    let k = set.clusters.len();
    if k != anchors.len() || k != residuals.len() {
        return Err(ClusterError::InfeasibleAssignment);
    }
    let loads = set.loads(customers);
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            (0..k)
                .map(|v| {
                    let base = if set.clusters[c].is_empty() {
                        0.0
                    } else {
                        euclidean_distance(set.centroids[c], anchors[v])
                    };
                    if loads[c] > residuals[v] + 1e-9 {
                        base + OVERLOAD_PENALTY
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect();
    let to_vehicle = min_cost_assignment(&cost);

    let mut ordered = ClusterSet {
        clusters: vec![Vec::new(); k],
        centroids: anchors.to_vec(),
        method: set.method,
    };
    let mut matching_cost = 0.0;
    for (c, &v) in to_vehicle.iter().enumerate() {
        ordered.clusters[v] = set.clusters[c].clone();
        ordered.centroids[v] = set.centroids[c];
        if !set.clusters[c].is_empty() {
            matching_cost += euclidean_distance(set.centroids[c], anchors[v]);
        }
    }

    let fits = ordered
        .loads(customers)
        .iter()
        .zip(residuals)
        .all(|(l, r)| *l <= r + 1e-9);
    if fits {
        return Ok(Assignment {
            clusters: ordered,
            matching_cost,
        });
    }
    match repair_capacity(&ordered, customers, residuals) {
        Ok(repaired) => Ok(Assignment {
            clusters: repaired,
            matching_cost,
        }),
        Err(ClusterError::RepairStalled { .. }) => Err(ClusterError::InfeasibleAssignment),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusteringMethod;
    use crate::matching::next_permutation;
    use crate::model::CustomerId;
    use rand::{Rng, SeedableRng};

    fn cluster_at(points: &[(f64, f64)]) -> (ClusterSet, Vec<Customer>) {
        let customers: Vec<Customer> = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Customer::new(i as u32 + 1, x, y, 1.0))
            .collect();
        let set = ClusterSet::from_ids(
            customers.iter().map(|c| vec![c.id]).collect(),
            &customers,
            ClusteringMethod::KMeans,
        );
        (set, customers)
    }

    #[test]
    fn dominant_diagonal_matching() {
        let (set, customers) = cluster_at(&[(0.0, 0.0), (100.0, 100.0)]);
        let a = assign_clusters_to_vehicles(
            &set,
            &customers,
            &[Point::new(1.0, 1.0), Point::new(99.0, 99.0)],
            &[5.0, 5.0],
        )
        .unwrap();
        assert_eq!(a.clusters.clusters, vec![vec![CustomerId(1)], vec![CustomerId(2)]]);
    }

    #[test]
    fn vehicles_at_depot_cost_sum_of_centroid_distances() {
        let (set, customers) = cluster_at(&[(3.0, 4.0), (6.0, 8.0), (0.0, 1.0)]);
        let depot = Point::new(0.0, 0.0);
        let a = assign_clusters_to_vehicles(&set, &customers, &[depot; 3], &[5.0; 3]).unwrap();
        assert!((a.matching_cost - 16.0).abs() < 1e-12);
    }

    #[test]
    fn matching_beats_every_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pts: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))).collect();
            let anchors: Vec<Point> = (0..3)
                .map(|_| Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
                .collect();
            let (set, customers) = cluster_at(&pts);
            let a = assign_clusters_to_vehicles(&set, &customers, &anchors, &[5.0; 3]).unwrap();
            let mut perm = vec![0, 1, 2];
            loop {
                let c: f64 = (0..3)
                    .map(|i| euclidean_distance(set.centroids[i], anchors[perm[i]]))
                    .sum();
                assert!(a.matching_cost <= c + 1e-9);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }

    #[test]
    fn capacity_steers_the_matching() {
        let customers = vec![
            Customer::new(1, 0.0, 0.0, 4.0),
            Customer::new(2, 1.0, 0.0, 4.0),
            Customer::new(3, 50.0, 0.0, 1.0),
        ];
        let set = ClusterSet::from_ids(
            vec![vec![CustomerId(1), CustomerId(2)], vec![CustomerId(3)]],
            &customers,
            ClusteringMethod::KMeans,
        );
        // vehicle 0 sits near the heavy cluster but only has room for 2
        let a = assign_clusters_to_vehicles(
            &set,
            &customers,
            &[Point::new(0.0, 0.0), Point::new(50.0, 0.0)],
            &[2.0, 10.0],
        )
        .unwrap();
        assert_eq!(a.clusters.clusters[1].len(), 2);
        let loads = a.clusters.loads(&customers);
        assert!(loads[0] <= 2.0 && loads[1] <= 10.0);
    }
}
