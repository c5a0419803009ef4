use super::{infeasible, ConstructionError, SubInstance, CAPACITY_SLACK};

/// Path cheapest arc: each route grows from its vehicle's anchor by repeatedly
/// appending the nearest unrouted customer that still fits. Vehicles are filled one
/// after another in sub-instance order. Ties go to the lowest node.
pub fn construct_path_cheapest_arc(sub: &SubInstance) -> Result<Vec<Vec<usize>>, ConstructionError> {
    let problem = sub.problem();
    if sub.is_single_vehicle() {
        sub.check_single_capacity()?;
    }
    let mut unrouted: Vec<usize> = sub.customers().to_vec();
    let mut routes = Vec::with_capacity(sub.vehicles().len());
    for &k in sub.vehicles() {
        let mut route = Vec::new();
        let mut at = problem.anchor_node(k);
        let mut room = problem.residual(k);
        loop {
            let next = unrouted
                .iter()
                .enumerate()
                .filter(|(_, &n)| problem.demand(n) <= room + CAPACITY_SLACK)
                .min_by(|(_, &a), (_, &b)| problem.dist(at, a).total_cmp(&problem.dist(at, b)).then(a.cmp(&b)));
            let Some((pos, &n)) = next else { break };
            unrouted.remove(pos);
            room -= problem.demand(n);
            route.push(n);
            at = n;
        }
        routes.push(route);
    }
    if let Some(&n) = unrouted.first() {
        return Err(infeasible(format!(
            "customer {} fits no route ({} unrouted)",
            problem.customer_at(n).id,
            unrouted.len()
        )));
    }
    Ok(routes)
}
