//! Expectation-maximisation for a two-dimensional Gaussian mixture with full covariances.

use std::f64::consts::PI;

use super::kmeans::kmeans_plus_plus;
use super::{rng, ClusterError, Clustering};
use crate::model::{squared_distance, Point};

/// Added to both covariance diagonal entries after each M-step.
pub const COVARIANCE_REGULARIZATION: f64 = 1e-6;
/// Mixture weight below which a component counts as collapsed.
pub const MIN_COMPONENT_WEIGHT: f64 = 1e-8;

/// Symmetric 2x2 covariance `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Covariance {
    pub fn isotropic(variance: f64) -> Self {
        Self {
            xx: variance,
            xy: 0.0,
            yy: variance,
        }
    }

    fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    fn log_density(&self, mean: Point, p: Point) -> f64 {
        let det = self.det();
        let dx = p.x - mean.x;
        let dy = p.y - mean.y;
        let quad = (self.yy * dx * dx - 2.0 * self.xy * dx * dy + self.xx * dy * dy) / det;
        -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * quad
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<Point>,
    pub covariances: Vec<Covariance>,
    /// Hard assignment (argmax responsibility), with every component non-empty.
    pub clustering: Clustering,
    /// Log-likelihood of the data after each E-step.
    pub log_likelihood: Vec<f64>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct Mixture {
    weights: Vec<f64>,
    means: Vec<Point>,
    covs: Vec<Covariance>,
}

impl Mixture {
    /// Fills `resp` with responsibilities and returns the data log-likelihood.
    fn e_step(&self, points: &[Point], resp: &mut [Vec<f64>]) -> f64 {
        let k = self.weights.len();
        let mut ll = 0.0;
        let mut logs = vec![0.0; k];
        for (i, &p) in points.iter().enumerate() {
            for c in 0..k {
                logs[c] = self.weights[c].ln() + self.covs[c].log_density(self.means[c], p);
            }
            let norm = log_sum_exp(&logs);
            ll += norm;
            for c in 0..k {
                resp[i][c] = (logs[c] - norm).exp();
            }
        }
        ll
    }

    /// Returns the first component whose weight collapsed, if any.
    fn m_step(&mut self, points: &[Point], resp: &[Vec<f64>]) -> Option<usize> {
        let n = points.len() as f64;
        let mut collapsed = None;
        for c in 0..self.weights.len() {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            if nk / n < MIN_COMPONENT_WEIGHT {
                collapsed.get_or_insert(c);
                continue;
            }
            let mx = resp.iter().zip(points).map(|(r, p)| r[c] * p.x).sum::<f64>() / nk;
            let my = resp.iter().zip(points).map(|(r, p)| r[c] * p.y).sum::<f64>() / nk;
            let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
            for (r, p) in resp.iter().zip(points) {
                let dx = p.x - mx;
                let dy = p.y - my;
                xx += r[c] * dx * dx;
                xy += r[c] * dx * dy;
                yy += r[c] * dy * dy;
            }
            self.weights[c] = nk / n;
            self.means[c] = Point::new(mx, my);
            self.covs[c] = Covariance {
                xx: xx / nk + COVARIANCE_REGULARIZATION,
                xy: xy / nk,
                yy: yy / nk + COVARIANCE_REGULARIZATION,
            };
        }
        collapsed
    }
}

/// Fits a `k`-component mixture by EM. Means start at k-means++ seeds, covariances
/// isotropic; iteration stops once the relative log-likelihood gain drops below
/// `tolerance` or after `max_iterations` E-steps.
pub fn fit_gmm(
    points: &[Point],
    k: usize,
    seed: u64,
    max_iterations: usize,
    tolerance: f64,
) -> Result<GmmFit, ClusterError> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(ClusterError::TooFewPoints { points: n, clusters: k });
    }
    let mut rng = rng(seed);
    let seeds = kmeans_plus_plus(points, &vec![1.0; n], k, &mut rng);
    let means: Vec<Point> = seeds.iter().map(|&i| points[i]).collect();
    let spread: f64 = points
        .iter()
        .map(|&p| means.iter().map(|&m| squared_distance(p, m)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / (2.0 * n as f64);
    let init_var = if spread > COVARIANCE_REGULARIZATION { spread } else { 1.0 };

    let mut mix = Mixture {
        weights: vec![1.0 / k as f64; k],
        means,
        covs: vec![Covariance::isotropic(init_var); k],
    };
    let mut resp = vec![vec![0.0; k]; n];
    let mut reseeded = vec![false; k];
    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;
    for _ in 0..max_iterations.max(1) {
        let ll = mix.e_step(points, &mut resp);
        trace.push(ll);
        if let Some(prev) = previous {
            if ll - prev < tolerance * prev.abs() {
                break;
            }
        }
        if let Some(c) = mix.m_step(points, &resp) {
            if reseeded[c] {
                return Err(ClusterError::DegenerateComponent { component: c });
            }
            reseeded[c] = true;
            // restart the component on the worst-explained point
            let worst = (0..n)
                .min_by(|&a, &b| {
                    let la = log_sum_exp(&mixture_logs(&mix, points[a]));
                    let lb = log_sum_exp(&mixture_logs(&mix, points[b]));
                    la.total_cmp(&lb)
                })
                .expect("n >= k >= 1");
            mix.means[c] = points[worst];
            mix.covs[c] = Covariance::isotropic(init_var);
            mix.weights[c] = 1.0 / k as f64;
            let total: f64 = mix.weights.iter().sum();
            mix.weights.iter_mut().for_each(|w| *w /= total);
            previous = None;
            continue;
        }
        previous = Some(ll);
    }

    let mut labels: Vec<usize> = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for c in 1..k {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    fill_empty(&resp, &mut labels, k);
    let centroids = super::kmeans::weighted_means(points, &vec![1.0; n], &labels, &mix.means);
    Ok(GmmFit {
        weights: mix.weights,
        means: mix.means,
        covariances: mix.covs,
        clustering: Clustering {
            labels,
            centroids,
            iterations: trace.len(),
        },
        log_likelihood: trace,
    })
}

fn mixture_logs(mix: &Mixture, p: Point) -> Vec<f64> {
    (0..mix.weights.len())
        .map(|c| mix.weights[c].ln() + mix.covs[c].log_density(mix.means[c], p))
        .collect()
}

/// Hands each empty component the point with the highest responsibility for it among
/// components holding more than one point.
fn fill_empty(resp: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = (0..k).find(|&c| counts[c] == 0) else {
            return;
        };
        let Some(i) = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| resp[a][empty].total_cmp(&resp[b][empty]).then(b.cmp(&a)))
        else {
            return;
        };
        labels[i] = empty;
    }
}
