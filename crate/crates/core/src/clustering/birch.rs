//! BIRCH: a clustering-feature tree summarises the points into leaf entries, then a
//! weighted k-means over the entry centroids produces exactly `k` groups.

use super::kmeans::weighted_kmeans;
use super::{ClusterError, Clustering};
use crate::model::{squared_distance, Point};

/// Leaf entries allowed per requested cluster before the threshold is doubled.
pub const ENTRIES_PER_CLUSTER: usize = 8;

/// Clustering feature: count, linear sum and sum of squared norms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cf {
    pub n: f64,
    pub lx: f64,
    pub ly: f64,
    pub ss: f64,
}

impl Cf {
    pub fn of_point(p: Point) -> Self {
        Self {
            n: 1.0,
            lx: p.x,
            ly: p.y,
            ss: p.x * p.x + p.y * p.y,
        }
    }

    pub fn add(&mut self, o: &Cf) {
        self.n += o.n;
        self.lx += o.lx;
        self.ly += o.ly;
        self.ss += o.ss;
    }

    pub fn merged(&self, o: &Cf) -> Cf {
        let mut m = *self;
        m.add(o);
        m
    }

    pub fn centroid(&self) -> Point {
        Point::new(self.lx / self.n, self.ly / self.n)
    }

    /// Root-mean-square distance of the members to their centroid.
    pub fn radius(&self) -> f64 {
        let c = self.centroid();
        (self.ss / self.n - (c.x * c.x + c.y * c.y)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone)]
struct Entry {
    cf: Cf,
    members: Vec<usize>,
}

#[derive(Debug)]
struct Child {
    cf: Cf,
    node: Box<Node>,
}

#[derive(Debug)]
enum Node {
    Leaf(Vec<Entry>),
    Inner(Vec<Child>),
}

impl Node {
    fn summary(&self) -> Cf {
        let mut cf = Cf::default();
        match self {
            Node::Leaf(entries) => entries.iter().for_each(|e| cf.add(&e.cf)),
            Node::Inner(children) => children.iter().for_each(|c| cf.add(&c.cf)),
        }
        cf
    }

    fn collect(self, out: &mut Vec<Entry>) {
        match self {
            Node::Leaf(entries) => out.extend(entries),
            Node::Inner(children) => children.into_iter().for_each(|c| c.node.collect(out)),
        }
    }
}

fn closest(cfs: impl Iterator<Item = Cf>, target: Point) -> Option<usize> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for (i, cf) in cfs.enumerate() {
        let d = squared_distance(cf.centroid(), target);
        if d < best_d {
            best_d = d;
            best = Some(i);
        }
    }
    best
}

/// Splits `items` around the farthest pair of centroids; returns the second group.
fn split<T>(items: &mut Vec<T>, cf_of: impl Fn(&T) -> Cf) -> Vec<T> {
    let cents: Vec<Point> = items.iter().map(|it| cf_of(it).centroid()).collect();
    let (mut a, mut b, mut far) = (0, 1, -1.0);
    for i in 0..cents.len() {
        for j in (i + 1)..cents.len() {
            let d = squared_distance(cents[i], cents[j]);
            if d > far {
                far = d;
                a = i;
                b = j;
            }
        }
    }
    let (seed_a, seed_b) = (cents[a], cents[b]);
    let mut keep = Vec::new();
    let mut moved = Vec::new();
    for (i, it) in items.drain(..).enumerate() {
        let to_b = i == b || (i != a && squared_distance(cents[i], seed_b) < squared_distance(cents[i], seed_a));
        if to_b {
            moved.push(it);
        } else {
            keep.push(it);
        }
    }
    *items = keep;
    moved
}

struct CfTree {
    root: Node,
    threshold: f64,
    branching: usize,
    leaf_entries: usize,
}

impl CfTree {
    fn new(threshold: f64, branching: usize) -> Self {
        Self {
            root: Node::Leaf(Vec::new()),
            threshold,
            branching: branching.max(2),
            leaf_entries: 0,
        }
    }

    fn insert(&mut self, entry: Entry) {
        let (threshold, branching) = (self.threshold, self.branching);
        if let Some(sibling) = insert_into(&mut self.root, entry, threshold, branching, &mut self.leaf_entries) {
            let old = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
            self.root = Node::Inner(vec![
                Child {
                    cf: old.summary(),
                    node: Box::new(old),
                },
                Child {
                    cf: sibling.summary(),
                    node: Box::new(sibling),
                },
            ]);
        }
    }

    fn into_entries(self) -> Vec<Entry> {
        let mut out = Vec::with_capacity(self.leaf_entries);
        self.root.collect(&mut out);
        out
    }
}

fn insert_into(node: &mut Node, entry: Entry, threshold: f64, branching: usize, count: &mut usize) -> Option<Node> {
    match node {
        Node::Leaf(entries) => {
            let target = entry.cf.centroid();
            match closest(entries.iter().map(|e| e.cf), target) {
                Some(i) if entries[i].cf.merged(&entry.cf).radius() <= threshold => {
                    entries[i].cf.add(&entry.cf);
                    entries[i].members.extend(entry.members);
                }
                _ => {
                    entries.push(entry);
                    *count += 1;
                }
            }
            if entries.len() > branching {
                Some(Node::Leaf(split(entries, |e| e.cf)))
            } else {
                None
            }
        }
        Node::Inner(children) => {
            let i = closest(children.iter().map(|c| c.cf), entry.cf.centroid()).expect("inner nodes are never empty");
            let cf = entry.cf;
            match insert_into(&mut children[i].node, entry, threshold, branching, count) {
                None => children[i].cf.add(&cf),
                Some(sibling) => {
                    children[i].cf = children[i].node.summary();
                    children.insert(
                        i + 1,
                        Child {
                            cf: sibling.summary(),
                            node: Box::new(sibling),
                        },
                    );
                }
            }
            if children.len() > branching {
                Some(Node::Inner(split(children, |c| c.cf)))
            } else {
                None
            }
        }
    }
}

/// Result of phase 1 plus the final clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct BirchFit {
    pub clustering: Clustering,
    /// Leaf entry count of the final CF-tree.
    pub leaf_entries: usize,
    /// Threshold in effect after any rebuilds.
    pub threshold: f64,
}

fn build_tree(points: &[Point], threshold: f64, branching: usize, max_entries: usize) -> (Vec<Entry>, f64) {
    let mut threshold = threshold;
    let mut tree = CfTree::new(threshold, branching);
    for (i, &p) in points.iter().enumerate() {
        tree.insert(Entry {
            cf: Cf::of_point(p),
            members: vec![i],
        });
        while tree.leaf_entries > max_entries {
            threshold = if threshold > 0.0 { threshold * 2.0 } else { 1e-6 };
            let entries = std::mem::replace(&mut tree, CfTree::new(threshold, branching)).into_entries();
            for e in entries {
                tree.insert(e);
            }
        }
    }
    (tree.into_entries(), threshold)
}

/// Runs both BIRCH phases. Points keep their leaf entry's phase-2 label.
pub fn birch(
    points: &[Point],
    k: usize,
    threshold: f64,
    branching: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<BirchFit, ClusterError> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(ClusterError::TooFewPoints { points: n, clusters: k });
    }
    let max_entries = ENTRIES_PER_CLUSTER * k;
    let (mut entries, mut used) = build_tree(points, threshold, branching, max_entries);
    // A threshold too coarse for k groups is tightened until enough entries exist.
    let mut attempts = 0;
    while entries.len() < k && attempts < 64 {
        used /= 2.0;
        entries = build_tree(points, used, branching, max_entries).0;
        attempts += 1;
    }
    if entries.len() < k {
        entries = points
            .iter()
            .enumerate()
            .map(|(i, &p)| Entry {
                cf: Cf::of_point(p),
                members: vec![i],
            })
            .collect();
    }

    let centers: Vec<Point> = entries.iter().map(|e| e.cf.centroid()).collect();
    let weights: Vec<f64> = entries.iter().map(|e| e.cf.n).collect();
    let global = weighted_kmeans(&centers, &weights, k, seed, max_iterations)?;
    let mut labels = vec![0; n];
    for (e, &l) in entries.iter().zip(&global.labels) {
        for &i in &e.members {
            labels[i] = l;
        }
    }
    let centroids = super::kmeans::weighted_means(points, &vec![1.0; n], &labels, &global.centroids);
    Ok(BirchFit {
        clustering: Clustering {
            labels,
            centroids,
            iterations: global.iterations,
        },
        leaf_entries: entries.len(),
        threshold: used,
    })
}
