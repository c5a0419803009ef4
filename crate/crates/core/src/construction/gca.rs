use super::{infeasible, ConstructionError, SubInstance, CAPACITY_SLACK};
use crate::model::DEPOT;

#[derive(Clone, Copy)]
enum ArcKind {
    /// Vehicle (sub-instance index) anchor to local customer.
    Anchor(usize, usize),
    /// Local customer to local customer.
    Link(usize, usize),
    /// Local customer to the depot.
    Depot(usize),
}

struct Arc {
    dist: f64,
    class: u8,
    ends: (usize, usize),
    kind: ArcKind,
}

#[derive(Clone, Copy, Default)]
struct Component {
    load: f64,
    size: usize,
    vehicle: Option<usize>,
    has_depot: bool,
}

struct Forest {
    parent: Vec<usize>,
    comp: Vec<Component>,
}

impl Forest {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize, merged: Component) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[rb] = ra;
        self.comp[ra] = merged;
    }
}

/// Global cheapest arc: all anchor-customer, customer-customer and customer-depot arcs
/// are scanned in ascending length and accepted whenever the partial solution stays a
/// set of capacity-feasible paths (degree at most two, no cycle, one vehicle and one
/// depot end per path). With a single vehicle, a path may only join anchor and depot
/// once it holds every customer. Paths left unattached afterwards are inserted whole at
/// the start or end of the route where they add the least distance.
pub fn construct_global_cheapest_arc(sub: &SubInstance) -> Result<Vec<Vec<usize>>, ConstructionError> {
    let problem = sub.problem();
    let single = sub.is_single_vehicle();
    if single {
        sub.check_single_capacity()?;
    } else {
        sub.check_demands_fit()?;
    }
    let nodes = sub.customers();
    let vehicles = sub.vehicles();
    let (n, m) = (nodes.len(), vehicles.len());
    if n == 0 {
        return Ok(vec![Vec::new(); m]);
    }
    let max_residual = sub.max_residual();
    let capacity = |c: &Component| c.vehicle.map_or(max_residual, |v| problem.residual(vehicles[v]));

    let mut arcs = Vec::with_capacity(n * (n - 1) / 2 + n * (m + 1));
    for (v, &k) in vehicles.iter().enumerate() {
        let s = problem.anchor_node(k);
        for (c, &node) in nodes.iter().enumerate() {
            arcs.push(Arc {
                dist: problem.dist(s, node),
                class: 0,
                ends: (s, node),
                kind: ArcKind::Anchor(v, c),
            });
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            arcs.push(Arc {
                dist: problem.dist(nodes[a], nodes[b]),
                class: 1,
                ends: (nodes[a], nodes[b]),
                kind: ArcKind::Link(a, b),
            });
        }
        arcs.push(Arc {
            dist: problem.dist(DEPOT, nodes[a]),
            class: 2,
            ends: (DEPOT, nodes[a]),
            kind: ArcKind::Depot(a),
        });
    }
    arcs.sort_by(|x, y| {
        x.dist
            .total_cmp(&y.dist)
            .then(x.class.cmp(&y.class))
            .then(x.ends.cmp(&y.ends))
    });

    // local ids: customers 0..n, anchors n..n+m
    let mut forest = Forest {
        parent: (0..n + m).collect(),
        comp: (0..n + m)
            .map(|i| {
                if i < n {
                    Component {
                        load: problem.demand(nodes[i]),
                        size: 1,
                        vehicle: None,
                        has_depot: false,
                    }
                } else {
                    Component {
                        vehicle: Some(i - n),
                        ..Component::default()
                    }
                }
            })
            .collect(),
    };
    let mut degree = vec![0u8; n + m];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    let mut depot_end = vec![false; n];
    let mut depot_degree = 0;
    let depot_limit = if single { 1 } else { m };
    // a single-vehicle path may close only when complete
    let closable = |c: &Component| !single || c.size == n;

    for arc in &arcs {
        match arc.kind {
            ArcKind::Anchor(v, c) => {
                if degree[n + v] > 0 || degree[c] >= 2 {
                    continue;
                }
                let rc = forest.find(c);
                let comp = forest.comp[rc];
                if comp.vehicle.is_some()
                    || comp.load > problem.residual(vehicles[v]) + CAPACITY_SLACK
                    || (comp.has_depot && !closable(&comp))
                {
                    continue;
                }
                forest.union(n + v, c, Component { vehicle: Some(v), ..comp });
                degree[n + v] += 1;
                degree[c] += 1;
                adj[n + v].push(c);
                adj[c].push(n + v);
            }
            ArcKind::Link(a, b) => {
                if degree[a] >= 2 || degree[b] >= 2 {
                    continue;
                }
                let (ra, rb) = (forest.find(a), forest.find(b));
                if ra == rb {
                    continue;
                }
                let (ca, cb) = (forest.comp[ra], forest.comp[rb]);
                if (ca.vehicle.is_some() && cb.vehicle.is_some()) || (ca.has_depot && cb.has_depot) {
                    continue;
                }
                let merged = Component {
                    load: ca.load + cb.load,
                    size: ca.size + cb.size,
                    vehicle: ca.vehicle.or(cb.vehicle),
                    has_depot: ca.has_depot || cb.has_depot,
                };
                if merged.load > capacity(&merged) + CAPACITY_SLACK
                    || (merged.vehicle.is_some() && merged.has_depot && !closable(&merged))
                {
                    continue;
                }
                forest.union(a, b, merged);
                degree[a] += 1;
                degree[b] += 1;
                adj[a].push(b);
                adj[b].push(a);
            }
            ArcKind::Depot(c) => {
                if degree[c] >= 2 || depot_degree >= depot_limit {
                    continue;
                }
                let rc = forest.find(c);
                let comp = forest.comp[rc];
                if comp.has_depot || (comp.vehicle.is_some() && !closable(&comp)) {
                    continue;
                }
                forest.comp[rc].has_depot = true;
                degree[c] += 1;
                depot_end[c] = true;
                depot_degree += 1;
            }
        }
    }

    let walk = |from: usize, visited: &mut Vec<bool>| -> Vec<usize> {
        let mut out = Vec::new();
        let mut prev = usize::MAX;
        let mut cur = Some(from);
        while let Some(c) = cur {
            if c < n {
                visited[c] = true;
                out.push(c);
            }
            let next = adj[c].iter().copied().find(|&x| x != prev);
            prev = c;
            cur = next;
        }
        out
    };

    let mut visited = vec![false; n];
    let mut routes: Vec<Vec<usize>> = (0..m)
        .map(|v| walk(n + v, &mut visited).into_iter().map(|c| nodes[c]).collect())
        .collect();
    let mut loose: Vec<Vec<usize>> = Vec::new();
    for c in 0..n {
        // start at the free end so a depot end comes last
        if !visited[c] && adj[c].len() <= 1 && !(depot_end[c] && adj[c].len() == 1) {
            loose.push(walk(c, &mut visited).into_iter().map(|i| nodes[i]).collect());
        }
    }
    debug_assert!(visited.iter().all(|&v| v), "accepted arcs never close a cycle");

    let mut loads: Vec<f64> = routes.iter().map(|r| problem.route_load(r)).collect();
    let loose_load = |c: &Vec<usize>| problem.route_load(c);
    loose.sort_by(|a, b| loose_load(b).total_cmp(&loose_load(a)).then(a[0].cmp(&b[0])));
    for chain in loose {
        let load = loose_load(&chain);
        let (c0, c1) = (chain[0], *chain.last().expect("chains are non-empty"));
        let mut best: Option<(f64, usize, bool, bool)> = None;
        for (v, &k) in vehicles.iter().enumerate() {
            if loads[v] + load > problem.residual(k) + CAPACITY_SLACK {
                continue;
            }
            let s = problem.anchor_node(k);
            let first = routes[v].first().copied().unwrap_or(DEPOT);
            let last = routes[v].last().copied().unwrap_or(s);
            for at_start in [true, false] {
                for reversed in [false, true] {
                    let (h, t) = if reversed { (c1, c0) } else { (c0, c1) };
                    let delta = if at_start {
                        problem.dist(s, h) + problem.dist(t, first) - problem.dist(s, first)
                    } else {
                        problem.dist(last, h) + problem.dist(t, DEPOT) - problem.dist(last, DEPOT)
                    };
                    if best.map_or(true, |b| delta < b.0) {
                        best = Some((delta, v, at_start, reversed));
                    }
                }
            }
        }
        let Some((_, v, at_start, reversed)) = best else {
            return Err(infeasible(format!(
                "a path of load {load} fits no vehicle"
            )));
        };
        let mut block = chain;
        if reversed {
            block.reverse();
        }
        if at_start {
            block.extend_from_slice(&routes[v]);
            routes[v] = block;
        } else {
            routes[v].extend(block);
        }
        loads[v] += load;
    }
    Ok(routes)
}
