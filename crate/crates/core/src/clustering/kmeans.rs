//! Lloyd's k-means with k-means++ seeding, optionally weighted.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng, ClusterError, Clustering};
use crate::model::{squared_distance, Point};

/// Chooses `k` seed indices with probability proportional to weight times squared
/// distance to the nearest already chosen seed.
pub(crate) fn kmeans_plus_plus(points: &[Point], weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let total_w: f64 = weights.iter().sum();
    let first = if total_w > 0.0 {
        sample(weights, rng.gen::<f64>() * total_w)
    } else {
        rng.gen_range(0..n)
    };
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = points.iter().map(|&p| squared_distance(p, points[first])).collect();
    while chosen.len() < k {
        let scores: Vec<f64> = (0..n)
            .map(|i| if taken[i] { 0.0 } else { weights[i] * nearest[i] })
            .collect();
        let total: f64 = scores.iter().sum();
        let next = if total > 0.0 {
            sample(&scores, rng.gen::<f64>() * total)
        } else {
            // every remaining point coincides with a seed
            (0..n).find(|&i| !taken[i]).expect("k <= n")
        };
        chosen.push(next);
        taken[next] = true;
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(points[i], points[next]));
        }
    }
    chosen
}

fn sample(scores: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            acc += s;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Index of the closest centroid; ties go to the lowest index.
pub(crate) fn nearest_centroid(p: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = squared_distance(p, q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

pub(crate) fn weighted_means(points: &[Point], weights: &[f64], labels: &[usize], previous: &[Point]) -> Vec<Point> {
    let k = previous.len();
    let mut sx = vec![0.0; k];
    let mut sy = vec![0.0; k];
    let mut sw = vec![0.0; k];
    for ((p, &w), &l) in points.iter().zip(weights).zip(labels) {
        sx[l] += w * p.x;
        sy[l] += w * p.y;
        sw[l] += w;
    }
    (0..k)
        .map(|c| {
            if sw[c] > 0.0 {
                Point::new(sx[c] / sw[c], sy[c] / sw[c])
            } else {
                previous[c]
            }
        })
        .collect()
}

/// Gives every empty cluster the point farthest from its current centroid, taken
/// from clusters that can spare one.
fn reseed_empty(points: &[Point], labels: &mut [usize], centroids: &mut [Point]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = (0..k).find(|&c| counts[c] == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = squared_distance(points[a], centroids[labels[a]]);
                let db = squared_distance(points[b], centroids[labels[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            });
        let Some(i) = donor else {
            return;
        };
        labels[i] = empty;
        centroids[empty] = points[i];
    }
}

/// Unweighted k-means over `points`.
pub fn kmeans(points: &[Point], k: usize, seed: u64, max_iterations: usize) -> Result<Clustering, ClusterError> {
    weighted_kmeans(points, &vec![1.0; points.len()], k, seed, max_iterations)
}

/// k-means where each point counts with its weight in the centroid update and seeding.
pub fn weighted_kmeans(
    points: &[Point],
    weights: &[f64],
    k: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<Clustering, ClusterError> {
    if k == 0 || points.len() < k {
        return Err(ClusterError::TooFewPoints {
            points: points.len(),
            clusters: k,
        });
    }
    let mut rng = rng(seed);
    let seeds = kmeans_plus_plus(points, weights, k, &mut rng);
    let mut centroids: Vec<Point> = seeds.iter().map(|&i| points[i]).collect();
    let mut labels: Vec<usize> = Vec::new();
    let mut iterations = 0;
    while iterations < max_iterations.max(1) {
        let mut next: Vec<usize> = points.iter().map(|&p| nearest_centroid(p, &centroids)).collect();
        reseed_empty(points, &mut next, &mut centroids);
        if next == labels {
            break;
        }
        labels = next;
        centroids = weighted_means(points, weights, &labels, &centroids);
        iterations += 1;
    }
    Ok(Clustering {
        labels,
        centroids,
        iterations,
    })
}
