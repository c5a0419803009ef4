use crate::model::{euclidean_distance, Customer, CustomerId, ModelError, Point, Route};

/// One place a vehicle drives to: a customer, or the depot when `customer` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Stop {
    pub location: Point,
    pub customer: Option<Customer>,
}

impl Stop {
    pub fn depot(location: Point) -> Self {
        Self {
            location,
            customer: None,
        }
    }

    pub fn visit(customer: Customer) -> Self {
        Self {
            location: customer.location,
            customer: Some(customer),
        }
    }
}

/// Expands a route into the stops after its start, in driving order.
pub(crate) fn route_stops(
    route: &Route,
    mut lookup: impl FnMut(CustomerId) -> Option<Customer>,
) -> Result<Vec<Stop>, ModelError> {
    let mut visit = |id| lookup(id).map(Stop::visit).ok_or(ModelError::UnknownCustomerId(id));
    let mut stops = Vec::with_capacity(route.visits.len() + 3);
    if let Some(id) = route.committed {
        stops.push(visit(id)?);
    }
    if route.restock {
        stops.push(Stop::depot(route.end));
    }
    for &id in &route.visits {
        stops.push(visit(id)?);
    }
    stops.push(Stop::depot(route.end));
    Ok(stops)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Walk {
    pub position: Point,
    /// Stops fully reached.
    pub reached: usize,
    pub travelled: f64,
}

/// Drives from `start` through `stops` for at most `distance` units. A stop is
/// reached only when the distance left strictly exceeds the leg to it.
pub(crate) fn walk(start: Point, stops: &[Stop], distance: f64) -> Walk {
    let mut at = start;
    let mut left = distance;
    let mut travelled = 0.0;
    for (i, stop) in stops.iter().enumerate() {
        let leg = euclidean_distance(at, stop.location);
        if leg < left {
            left -= leg;
            travelled += leg;
            at = stop.location;
        } else {
            if leg > 0.0 {
                at = at.lerp(stop.location, left / leg);
            }
            return Walk {
                position: at,
                reached: i,
                travelled: travelled + left,
            };
        }
    }
    Walk {
        position: at,
        reached: stops.len(),
        travelled,
    }
}

/// Where a vehicle is at `query_time` and which customers it has served.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteProgress {
    pub position: Point,
    /// Customers reached strictly before the query time, in visiting order.
    pub served: Vec<CustomerId>,
    /// Waypoints reached, counting the restock and final depot stops.
    pub waypoints_reached: usize,
}

/// Follows `route` at constant `speed` from `departure_time`, with zero service time.
pub fn vehicle_position_at(
    route: &Route,
    mut locate: impl FnMut(CustomerId) -> Option<Point>,
    departure_time: f64,
    speed: f64,
    query_time: f64,
) -> Result<RouteProgress, ModelError> {
    let stops = route_stops(route, |id| {
        locate(id).map(|p| Customer {
            id,
            location: p,
            demand: 0.0,
            arrival_time: 0.0,
        })
    })?;
    let elapsed = (query_time - departure_time).max(0.0);
    let w = walk(route.start, &stops, elapsed * speed);
    Ok(RouteProgress {
        position: w.position,
        served: stops[..w.reached].iter().filter_map(|s| s.customer.map(|c| c.id)).collect(),
        waypoints_reached: w.reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one_leg() -> (Route, impl Fn(CustomerId) -> Option<Point>) {
        let route = Route::from_depot(0, Point::new(0.0, 0.0), vec![CustomerId(1)]);
        (route, |id: CustomerId| (id.0 == 1).then_some(Point::new(3.0, 4.0)))
    }

    #[test]
    fn midway_along_the_first_leg() {
        let (route, locate) = one_leg();
        let p = vehicle_position_at(&route, locate, 10.0, 1.0, 12.5).unwrap();
        assert_relative_eq!(p.position.x, 1.5);
        assert_relative_eq!(p.position.y, 2.0);
        assert!(p.served.is_empty());
    }

    #[test]
    fn at_departure_nothing_has_happened() {
        let (route, locate) = one_leg();
        let p = vehicle_position_at(&route, locate, 4.0, 2.0, 4.0).unwrap();
        assert_eq!(p.position, route.start);
        assert!(p.served.is_empty());
    }

    #[test]
    fn arriving_exactly_at_the_query_is_not_yet_served() {
        let (route, locate) = one_leg();
        let p = vehicle_position_at(&route, &locate, 0.0, 1.0, 5.0).unwrap();
        assert_eq!(p.position, Point::new(3.0, 4.0));
        assert!(p.served.is_empty());
        let p = vehicle_position_at(&route, &locate, 0.0, 1.0, 5.0 + 1e-9).unwrap();
        assert_eq!(p.served, vec![CustomerId(1)]);
    }

    #[test]
    fn after_the_route_the_vehicle_is_home() {
        let (route, locate) = one_leg();
        let p = vehicle_position_at(&route, locate, 0.0, 1.0, 10.5).unwrap();
        assert_eq!(p.position, route.end);
        assert_eq!(p.served, vec![CustomerId(1)]);
        assert_eq!(p.waypoints_reached, 2);
    }

    #[test]
    fn committed_and_restock_stops_come_first() {
        let route = Route {
            vehicle_id: 0,
            start: Point::new(0.0, 10.0),
            committed: Some(CustomerId(1)),
            restock: true,
            visits: vec![CustomerId(2)],
            end: Point::new(0.0, 0.0),
        };
        let locate = |id: CustomerId| match id.0 {
            1 => Some(Point::new(0.0, 20.0)),
            2 => Some(Point::new(0.0, -5.0)),
            _ => None,
        };
        // 10 to the committed customer, 20 back to the depot, 5 more to customer 2
        let p = vehicle_position_at(&route, locate, 0.0, 1.0, 33.0).unwrap();
        assert_eq!(p.served, vec![CustomerId(1)]);
        assert_eq!(p.waypoints_reached, 2);
        assert_relative_eq!(p.position.y, -3.0);
        let p = vehicle_position_at(&route, locate, 0.0, 1.0, 37.0).unwrap();
        assert_eq!(p.served, vec![CustomerId(1), CustomerId(2)]);
        assert_eq!(p.waypoints_reached, 3);
        assert_relative_eq!(p.position.y, -3.0);
    }

    proptest! {
        #[test]
        fn travelled_distance_is_speed_times_time(
            pts in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 1..6),
            t in 0.0..400.0f64,
        ) {
            let stops: Vec<Stop> = pts.iter().map(|&(x, y)| Stop::depot(Point::new(x, y))).collect();
            let total: f64 = std::iter::once(Point::default())
                .chain(stops.iter().map(|s| s.location))
                .collect::<Vec<_>>()
                .windows(2)
                .map(|w| euclidean_distance(w[0], w[1]))
                .sum();
            let w = walk(Point::default(), &stops, t);
            prop_assert!((w.travelled - t.min(total)).abs() < 1e-9);
        }
    }
}
