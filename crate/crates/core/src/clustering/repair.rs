use std::collections::HashMap;

use super::{ClusterError, ClusterSet};
use crate::model::{centroid, euclidean_distance, Customer, CustomerId, Point};

const SLACK: f64 = 1e-9;

/// Moves customers out of overloaded clusters until every cluster fits its capacity.
///
/// Each move takes a customer from the most overloaded cluster (falling back to the next
/// one when nothing there can move) into a cluster with enough slack, choosing the
/// customer/receiver pair closest to the receiver's centroid. Centroids are refreshed
/// after every move. Clusters emptied by repair keep their last centroid.
pub fn repair_capacity(
    raw: &ClusterSet,
    customers: &[Customer],
    capacities: &[f64],
) -> Result<ClusterSet, ClusterError> {
    assert_eq!(raw.clusters.len(), capacities.len(), "one capacity per cluster");
    let lookup: HashMap<CustomerId, &Customer> = customers.iter().map(|c| (c.id, c)).collect();
    let demand = |id: &CustomerId| lookup.get(id).map_or(0.0, |c| c.demand);
    let location = |id: &CustomerId| lookup.get(id).map_or(Point::default(), |c| c.location);

    let total_demand: f64 = raw.clusters.iter().flatten().map(demand).sum();
    let total_capacity: f64 = capacities.iter().sum();
    if total_demand > total_capacity + SLACK {
        return Err(ClusterError::GlobalInfeasible {
            demand: total_demand,
            capacity: total_capacity,
        });
    }

    let mut set = raw.clone();
    let mut loads: Vec<f64> = set.clusters.iter().map(|c| c.iter().map(demand).sum()).collect();
    let n: usize = set.clusters.iter().map(Vec::len).sum();
    let move_limit = 10 * n.max(1);
    let mut moves = 0;
    loop {
        let mut overloaded: Vec<usize> = (0..loads.len()).filter(|&c| loads[c] > capacities[c] + SLACK).collect();
        if overloaded.is_empty() {
            return Ok(set);
        }
        if moves >= move_limit {
            return Err(ClusterError::RepairStalled { moves });
        }
        overloaded.sort_by(|&a, &b| (loads[b] - capacities[b]).total_cmp(&(loads[a] - capacities[a])).then(a.cmp(&b)));

        let mut chosen = None;
        for &from in &overloaded {
            let mut best: Option<(f64, CustomerId, usize, usize)> = None;
            for (pos, id) in set.clusters[from].iter().enumerate() {
                let d = demand(id);
                for to in 0..loads.len() {
                    if to == from || loads[to] + d > capacities[to] + SLACK {
                        continue;
                    }
                    let dist = euclidean_distance(location(id), set.centroids[to]);
                    let better = match best {
                        None => true,
                        Some((bd, bid, _, bto)) => dist < bd || (dist == bd && (*id, to) < (bid, bto)),
                    };
                    if better {
                        best = Some((dist, *id, pos, to));
                    }
                }
            }
            if let Some((_, _, pos, to)) = best {
                chosen = Some((from, pos, to));
                break;
            }
        }
        let Some((from, pos, to)) = chosen else {
            return Err(ClusterError::RepairStalled { moves });
        };
        let id = set.clusters[from].remove(pos);
        let d = demand(&id);
        loads[from] -= d;
        loads[to] += d;
        set.clusters[to].push(id);
        for c in [from, to] {
            if !set.clusters[c].is_empty() {
                let pts: Vec<Point> = set.clusters[c].iter().map(location).collect();
                set.centroids[c] = centroid(&pts);
            }
        }
        moves += 1;
    }
}
