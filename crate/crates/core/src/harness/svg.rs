use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::model::{Customer, CustomerId, Instance, ModelError, Plan, Point};

use super::ReportError;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const LEGEND_WIDTH: f64 = 220.0;

/// Evenly spaced hues, so every route gets its own stroke colour.
fn stroke(route: usize, routes: usize) -> String {
    let hue = 360.0 * route as f64 / routes.max(1) as f64;
    format!("hsl({hue:.1},70%,40%)")
}

/// Draws the plan: the depot as a square, every planned customer as a circle whose
/// area grows with demand, one polyline per route and a legend with route costs.
pub fn plan_to_svg(plan: &Plan, instance: &Instance) -> Result<String, ModelError> {
    let lookup: HashMap<CustomerId, &Customer> = instance.all_customers().map(|c| (c.id, c)).collect();
    let locate = |id: CustomerId| lookup.get(&id).map(|c| c.location);

    let mut lines = Vec::with_capacity(plan.routes.len());
    for route in &plan.routes {
        let mut pts = vec![route.start];
        pts.extend(route.waypoints(locate)?);
        lines.push((pts, route.cost(locate)?));
    }
    let all = lines.iter().flat_map(|(p, _)| p.iter().copied()).chain([instance.depot]);
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in all {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let px = |p: Point| (MARGIN + (p.x - lo.x) * scale, SIZE - MARGIN - (p.y - lo.y) * scale);

    let mut svg = String::new();
    let width = SIZE + LEGEND_WIDTH;
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{SIZE}" viewBox="0 0 {width} {SIZE}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let n = lines.len();
    for (i, (pts, _)) in lines.iter().enumerate() {
        let coords: Vec<String> = pts.iter().map(|&p| px(p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(
            svg,
            r#"<polyline class="route" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            coords.join(" "),
            stroke(i, n)
        )
        .unwrap();
    }
    for route in &plan.routes {
        for id in route.all_visits() {
            let c = lookup.get(&id).ok_or(ModelError::UnknownCustomerId(id))?;
            let (x, y) = px(c.location);
            let r = 2.0 + 1.5 * c.demand.sqrt();
            writeln!(
                svg,
                r#"<circle class="customer" cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="black" fill-opacity="0.6"><title>{id} demand {}</title></circle>"#,
                c.demand
            )
            .unwrap();
        }
    }
    let (dx, dy) = px(instance.depot);
    writeln!(
        svg,
        r#"<rect class="depot" x="{:.2}" y="{:.2}" width="12" height="12" fill="red"/>"#,
        dx - 6.0,
        dy - 6.0
    )
    .unwrap();
    writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="14">"#).unwrap();
    for (i, (route, (_, cost))) in plan.routes.iter().zip(&lines).enumerate() {
        let y = MARGIN + 22.0 * i as f64;
        writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{tx}" y="{ty}">vehicle {}: {cost:.1}</text>"#,
            stroke(i, n),
            route.vehicle_id,
            x0 = SIZE + 10.0,
            x1 = SIZE + 40.0,
            tx = SIZE + 48.0,
            ty = y + 5.0,
        )
        .unwrap();
    }
    let total_y = MARGIN + 22.0 * n as f64 + 10.0;
    writeln!(svg, r#"<text x="{}" y="{total_y}">total: {:.1}</text>"#, SIZE + 10.0, plan.total_cost).unwrap();
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

pub fn emit_svg(plan: &Plan, instance: &Instance, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    std::fs::write(path, plan_to_svg(plan, instance)?).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}
