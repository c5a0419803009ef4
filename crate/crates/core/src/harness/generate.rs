use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ArrivalEvent, Customer, FleetSpec, Instance, ModelError, Point};

/// Parameters of a random instance. Coordinates are integers drawn uniformly from
/// `grid` on both axes; demands cycle through `demand_cycle` by customer id.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub name: String,
    pub n_static: usize,
    pub n_dynamic: usize,
    pub grid: (i64, i64),
    pub demand_cycle: Vec<f64>,
    pub fleet: FleetSpec,
    pub event_count: usize,
    /// Event times are distinct integers drawn from this closed range.
    pub horizon: (u32, u32),
    /// Defaults to the grid centre.
    pub depot: Option<Point>,
    pub seed: u64,
}

impl GeneratorConfig {
    /// 100 static and 100 dynamic customers, four vehicles of capacity 125.
    pub fn case2_analog(seed: u64) -> Self {
        Self {
            name: format!("case2-analog-{seed}"),
            n_static: 100,
            n_dynamic: 100,
            grid: (0, 100),
            demand_cycle: vec![1.0, 2.0, 3.0],
            fleet: FleetSpec {
                vehicle_count: 4,
                capacity: 125.0,
                speed: 1.0,
            },
            event_count: 25,
            horizon: (5, 120),
            depot: None,
            seed,
        }
    }
}

pub fn generate_instance(config: &GeneratorConfig) -> Result<Instance, ModelError> {
    if config.n_static < config.fleet.vehicle_count {
        return Err(ModelError::invalid("need at least one static customer per vehicle"));
    }
    if config.demand_cycle.is_empty() {
        return Err(ModelError::invalid("demand cycle is empty"));
    }
    let (lo, hi) = config.grid;
    if lo > hi {
        return Err(ModelError::invalid("empty grid"));
    }
    let (t_lo, t_hi) = config.horizon;
    let slots = (t_hi.saturating_sub(t_lo) + 1) as usize;
    if config.n_dynamic > 0 && (config.event_count == 0 || config.event_count > slots || t_lo == 0) {
        return Err(ModelError::invalid("events need distinct positive times within the horizon"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let customer = |index: usize, rng: &mut ChaCha8Rng| {
        let x = rng.gen_range(lo..=hi) as f64;
        let y = rng.gen_range(lo..=hi) as f64;
        let demand = config.demand_cycle[index % config.demand_cycle.len()];
        Customer::new(index as u32 + 1, x, y, demand)
    };
    let statics: Vec<Customer> = (0..config.n_static).map(|i| customer(i, &mut rng)).collect();
    let dynamics: Vec<Customer> = (config.n_static..config.n_static + config.n_dynamic)
        .map(|i| customer(i, &mut rng))
        .collect();

    let mut events = Vec::new();
    if config.n_dynamic > 0 {
        let mut times: Vec<u32> = sample(&mut rng, slots, config.event_count)
            .into_iter()
            .map(|i| t_lo + i as u32)
            .collect();
        times.sort_unstable();
        let per_event = config.n_dynamic / config.event_count;
        let extra = config.n_dynamic % config.event_count;
        let mut rest = dynamics.as_slice();
        for (e, t) in times.into_iter().enumerate() {
            let take = per_event + usize::from(e < extra);
            let (batch, tail) = rest.split_at(take);
            rest = tail;
            if !batch.is_empty() {
                events.push(ArrivalEvent {
                    time: t as f64,
                    customers: batch.to_vec(),
                });
            }
        }
    }
    let centre = (lo + hi) as f64 / 2.0;
    let depot = config.depot.unwrap_or(Point::new(centre, centre));
    Instance::new(config.name.clone(), depot, config.fleet, statics, events)
}
