//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line straight to stderr,
//! so the verdicts show up even when the harness captures test output.
//!
//! Criteria whose targets are reference costs from a run with an unknown depot
//! (construction band, clustering benefit, Case-2 direction) report `FAIL` without
//! panicking; everything else is asserted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use dvrp::clustering::{ClusteringConfig, ClusteringMethod};
use dvrp::construction::ConstructionMethod;
use dvrp::datasets::case1;
use dvrp::harness::{emit_csv, generate_instance, run_experiment_matrix, ExperimentMatrix, GeneratorConfig, MatrixOptions};
use dvrp::improvement::{improve, Clock, ImprovementConfig, ImprovementMethod};
use dvrp::model::{validate_plan, Customer, FleetSpec, Instance, Plan, Point, RoutingProblem};
use dvrp::pipeline::{build_initial_plan, solve, PipelineConfig, PipelineError};
use dvrp::sim::{simulate, SimulationTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Timing-sensitive criteria must not share the single core with each other.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "\n{status} criterion {criterion}: {detail}").unwrap();
}

const IMPROVERS: [ImprovementMethod; 3] = [ImprovementMethod::Gls, ImprovementMethod::Sa, ImprovementMethod::Tabu];
const CLUSTERERS: [ClusteringMethod; 3] = [ClusteringMethod::KMeans, ClusteringMethod::Gmm, ClusteringMethod::Birch];

fn virtual_config(method: ImprovementMethod, budget: f64, seed: u64) -> ImprovementConfig {
    ImprovementConfig {
        clock: Clock::virtual_default(),
        ..ImprovementConfig::new(method, budget, seed)
    }
}

fn static_problem(inst: &Instance) -> RoutingProblem {
    RoutingProblem::at_depot(inst.depot, &inst.fleet, inst.customers.clone()).unwrap()
}

fn within(value: f64, target: f64, tolerance: f64) -> bool {
    (value - target).abs() <= tolerance * target
}

fn band(target: f64) -> String {
    format!("[{:.1}, {:.1}]", 0.8 * target, 1.2 * target)
}

/// A random instance whose total demand, dynamic customers included, fits one trip
/// of the whole fleet with some slack.
fn random_instance(rng: &mut ChaCha8Rng, dynamic: bool) -> Instance {
    let vehicles = rng.gen_range(1..=5);
    let n_static = rng.gen_range(vehicles..=vehicles + 60);
    let (n_dynamic, event_count) = if dynamic {
        let n = rng.gen_range(0..=40);
        (n, if n == 0 { 0 } else { rng.gen_range(1..=n.min(8)) })
    } else {
        (0, 0)
    };
    let cycle_len = rng.gen_range(1..=4);
    let demand_cycle: Vec<f64> = (0..cycle_len).map(|_| rng.gen_range(1..=5) as f64).collect();
    let total_demand: f64 = (0..n_static + n_dynamic).map(|i| demand_cycle[i % cycle_len]).sum();
    let max_demand = demand_cycle.iter().copied().fold(0.0, f64::max);
    let slack = rng.gen_range(1.15..2.0);
    let capacity = (total_demand / vehicles as f64 * slack).ceil().max(max_demand);
    let depot = rng.gen_bool(0.5).then(|| Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)));
    let config = GeneratorConfig {
        name: "random".into(),
        n_static,
        n_dynamic,
        grid: (0, 100),
        demand_cycle,
        fleet: FleetSpec {
            vehicle_count: vehicles,
            capacity,
            speed: rng.gen_range(0.5..3.0),
        },
        event_count,
        horizon: (1, 80),
        depot,
        seed: rng.gen(),
    };
    generate_instance(&config).unwrap()
}

fn random_pipeline(rng: &mut ChaCha8Rng) -> PipelineConfig {
    let clusterer = ClusteringMethod::ALL[rng.gen_range(0..4)];
    let construction = ConstructionMethod::ALL[rng.gen_range(0..3)];
    let method = ImprovementMethod::ALL[rng.gen_range(0..4)];
    let budget = rng.gen_range(0.002..0.02);
    PipelineConfig::new(clusterer, construction, virtual_config(method, budget, rng.gen()))
}

/// Violations in every replan of a simulation, plus whether all customers were served once.
fn check_trace(inst: &Instance, trace: &SimulationTrace) -> (usize, bool) {
    let mut violations = 0;
    for record in &trace.records {
        let problem = record.problem(trace.depot).unwrap();
        violations += validate_plan(&record.plan, &problem).violations.len();
    }
    let ids: BTreeSet<_> = trace.served.iter().map(|s| s.customer).collect();
    let all = inst.all_customers().count();
    (violations, ids.len() == all && trace.served.len() == all)
}

#[test]
fn criterion_1_feasibility() {
    let _guard = serial();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let (mut solves, mut attempts, mut infeasible, mut violations) = (0, 0, 0, 0);
    while solves < 1000 && attempts < 1500 {
        attempts += 1;
        let inst = random_instance(&mut rng, false);
        let config = random_pipeline(&mut rng);
        let problem = static_problem(&inst);
        match solve(&problem, &config) {
            Ok(outcome) => {
                solves += 1;
                violations += validate_plan(&outcome.initial.plan, &problem).violations.len();
                violations += validate_plan(&outcome.plan, &problem).violations.len();
            }
            Err(PipelineError::InvalidPlan(v)) => violations += v.len(),
            Err(e) if e.is_infeasible() => infeasible += 1,
            Err(e) => panic!("unexpected error: {e}"),
        }
    }

    let (mut sims, mut sim_attempts, mut sim_failures, mut unserved) = (0, 0, 0, 0);
    while sims < 100 && sim_attempts < 150 {
        let inst = if sim_attempts % 10 == 0 {
            generate_instance(&GeneratorConfig::case2_analog(sim_attempts)).unwrap()
        } else {
            random_instance(&mut rng, true)
        };
        sim_attempts += 1;
        let config = random_pipeline(&mut rng);
        match simulate(&inst, &config, rng.gen()) {
            Ok(trace) => {
                sims += 1;
                let (v, complete) = check_trace(&inst, &trace);
                violations += v;
                unserved += usize::from(!complete);
            }
            Err(e) if e.source.is_infeasible() => sim_failures += 1,
            Err(e) => panic!("unexpected simulation error: {e}"),
        }
    }

    let secs = started.elapsed().as_secs_f64();
    let pass = solves >= 1000 && sims >= 100 && violations == 0 && unserved == 0 && secs < 600.0;
    verdict(
        "1 (feasibility)",
        pass,
        &format!(
            "{solves} solves ({infeasible} infeasible of {attempts} attempts), {sims} simulations \
             ({sim_failures} infeasible of {sim_attempts} attempts), {violations} violations, {unserved} incomplete, {secs:.0} s"
        ),
    );
    assert!(pass);
}

/// Every improver from every constructed plan: cost never rises and traces never climb.
fn monotone_runs(problem: &RoutingProblem, clusterers: &[ClusteringMethod], seeds: u64, budget: f64) -> (usize, usize) {
    let (mut runs, mut bad) = (0, 0);
    for &clusterer in clusterers {
        for construction in ConstructionMethod::ALL {
            for method in IMPROVERS {
                for seed in 0..seeds {
                    let config = PipelineConfig::new(clusterer, construction, virtual_config(method, budget, seed));
                    let outcome = solve(problem, &config).unwrap();
                    let trace = &outcome.improvement.trace;
                    let ok = outcome.plan.total_cost <= outcome.initial.plan.total_cost
                        && trace[0].cost == outcome.improvement.initial_cost
                        && trace.windows(2).all(|w| w[1].cost <= w[0].cost && w[1].time >= w[0].time)
                        && trace.last().unwrap().cost >= outcome.plan.total_cost - 1e-9;
                    runs += 1;
                    bad += usize::from(!ok);
                }
            }
        }
    }
    (runs, bad)
}

#[test]
fn criterion_2_monotone_improvement() {
    let _guard = serial();
    let (runs1, bad1) = monotone_runs(&static_problem(&case1()), &CLUSTERERS, 10, 0.05);
    let case2 = generate_instance(&GeneratorConfig::case2_analog(1)).unwrap();
    let (runs2, bad2) = monotone_runs(&static_problem(&case2), &[ClusteringMethod::KMeans], 3, 0.05);
    let pass = bad1 + bad2 == 0;
    verdict(
        "2 (monotone improvement)",
        pass,
        &format!("{runs1} Case 1 runs and {runs2} Case-2 analog runs, {} non-monotone", bad1 + bad2),
    );
    assert!(pass);
}

/// Shortest closed tour from `depot` through every point, by full enumeration.
fn brute_force_tour(depot: Point, points: &[Point]) -> f64 {
    fn d(a: Point, b: Point) -> f64 {
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
    }
    fn extend(depot: Point, points: &[Point], used: &mut [bool], last: Point, len: f64, left: usize, best: &mut f64) {
        if left == 0 {
            *best = best.min(len + d(last, depot));
            return;
        }
        for i in 0..points.len() {
            if !used[i] {
                used[i] = true;
                extend(depot, points, used, points[i], len + d(last, points[i]), left - 1, best);
                used[i] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    extend(depot, points, &mut vec![false; points.len()], depot, 0.0, points.len(), &mut best);
    best
}

#[test]
fn brute_force_tour_of_a_square() {
    let corners = [Point::new(1.0, 0.0), Point::new(-1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.0, -1.0)];
    let expected = 2.0 + 3.0 * 2f64.sqrt();
    assert!((brute_force_tour(Point::new(0.0, 0.0), &corners) - expected).abs() < 1e-12);
}

#[test]
fn criterion_3_oracle_optimality() {
    let _guard = serial();
    let instances: Vec<(Instance, f64)> = (0..20)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
            let depot = Point::new(50.0, 50.0);
            let points: Vec<Point> =
                (0..8).map(|_| Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))).collect();
            let optimum = brute_force_tour(depot, &points);
            let customers =
                points.iter().enumerate().map(|(i, p)| Customer::new(i as u32 + 1, p.x, p.y, 1.0)).collect();
            let fleet = FleetSpec {
                vehicle_count: 1,
                capacity: 8.0,
                speed: 1.0,
            };
            (Instance::new("oracle", depot, fleet, customers, vec![]).unwrap(), optimum)
        })
        .collect();

    let mut pass = true;
    let mut parts = Vec::new();
    let mut below = 0;
    for method in IMPROVERS {
        let mut matched = 0;
        for (seed, (inst, optimum)) in instances.iter().enumerate() {
            let config = PipelineConfig::new(
                ClusteringMethod::None,
                ConstructionMethod::PathCheapestArc,
                virtual_config(method, 2.0, seed as u64),
            );
            let cost = solve(&static_problem(inst), &config).unwrap().plan.total_cost;
            matched += usize::from((cost - optimum).abs() <= 1e-6 * optimum);
            below += usize::from(cost < optimum - 1e-6 * optimum);
        }
        let needed = if method == ImprovementMethod::Sa { 16 } else { 18 };
        pass &= matched >= needed;
        parts.push(format!("{method} {matched}/20 (need {needed})"));
    }
    pass &= below == 0;
    verdict("3 (oracle optimality)", pass, &format!("{}, {below} below optimum", parts.join(", ")));
    assert!(pass);
}

fn case1_baselines() -> BTreeMap<&'static str, f64> {
    let problem = static_problem(&case1());
    let none = ClusteringConfig {
        method: ClusteringMethod::None,
        ..ClusteringConfig::default()
    };
    ConstructionMethod::ALL
        .iter()
        .map(|&m| {
            let initial = build_initial_plan(&problem, &none, m).unwrap();
            assert!(validate_plan(&initial.plan, &problem).is_ok());
            (m.name(), initial.plan.total_cost)
        })
        .collect()
}

#[test]
fn criterion_4_case1_construction_band() {
    let _guard = serial();
    let started = Instant::now();
    let costs = case1_baselines();
    let secs = started.elapsed().as_secs_f64();
    let targets = [("savings", 1142.7), ("pca", 1189.2), ("gca", 1080.1)];
    let mut pass = secs < 5.0;
    let mut parts = Vec::new();
    for (name, target) in targets {
        let cost = costs[name];
        let ok = within(cost, target, 0.2);
        pass &= ok;
        parts.push(format!("{name} {cost:.1} in {} {}", band(target), if ok { "yes" } else { "no" }));
    }
    verdict("4 (Case 1 construction band)", pass, &format!("{}, {secs:.2} s", parts.join(", ")));
    assert!(secs < 5.0);
}

#[test]
fn criterion_5_clustering_benefit() {
    let _guard = serial();
    let problem = static_problem(&case1());
    let baseline = case1_baselines()["savings"];

    let mut starts: Vec<Plan> = Vec::new();
    for seed in 0..10 {
        let config = ClusteringConfig {
            method: ClusteringMethod::KMeans,
            seed,
            ..ClusteringConfig::default()
        };
        starts.push(build_initial_plan(&problem, &config, ConstructionMethod::Savings).unwrap().plan);
    }
    let below = starts.iter().filter(|p| p.total_cost < baseline).count();
    let min_start = starts.iter().map(|p| p.total_cost).fold(f64::INFINITY, f64::min);

    // GLS ignores its seed, so equal starting plans give equal results.
    let mut improved: HashMap<Vec<Vec<u32>>, f64> = HashMap::new();
    for (seed, start) in starts.iter().enumerate() {
        improved.entry(start.visit_lists()).or_insert_with(|| {
            let config = PipelineConfig {
                clustering: ClusteringConfig {
                    method: ClusteringMethod::KMeans,
                    seed: seed as u64,
                    ..ClusteringConfig::default()
                },
                construction: ConstructionMethod::Savings,
                improvement: virtual_config(ImprovementMethod::Gls, 50.0, seed as u64),
            };
            let outcome = solve(&problem, &config).unwrap();
            assert_eq!(outcome.initial.plan.visit_lists(), start.visit_lists());
            outcome.plan.total_cost
        });
    }
    let best = improved.values().copied().fold(f64::INFINITY, f64::min);

    let direction = below >= 8;
    let start_band = within(min_start, 949.6, 0.2);
    let gls_band = within(best, 930.6, 0.2);
    verdict(
        "5 (clustering benefit)",
        direction && start_band && gls_band,
        &format!(
            "kmeans+savings below unclustered savings ({baseline:.1}) on {below}/10 seeds (need 8), \
             best start {min_start:.1} in {} {}, kmeans+savings+gls 50 s best {best:.1} in {} {} \
             ({} distinct starts)",
            band(949.6),
            if start_band { "yes" } else { "no" },
            band(930.6),
            if gls_band { "yes" } else { "no" },
            improved.len()
        ),
    );
}

#[test]
fn criterion_6_dynamic_replay() {
    let _guard = serial();
    let inst = case1();
    let mut pass = true;
    let mut parts = Vec::new();
    for (clusterer, construction, method) in [
        (ClusteringMethod::KMeans, ConstructionMethod::Savings, ImprovementMethod::Gls),
        (ClusteringMethod::None, ConstructionMethod::GlobalCheapestArc, ImprovementMethod::Tabu),
    ] {
        let config = PipelineConfig::new(clusterer, construction, virtual_config(method, 0.05, 0));
        let trace = simulate(&inst, &config, 0).unwrap();
        let times: Vec<f64> = trace.records.iter().map(|r| r.time).collect();
        let (violations, complete) = check_trace(&inst, &trace);
        let ok = times == [0.0, 13.0, 31.0, 45.0, 51.0, 66.0] && complete && violations == 0;
        pass &= ok;
        parts.push(format!("{clusterer}+{construction}+{method}: replans at {times:?}, {} served", trace.served.len()));

        let quiet = simulate(&inst.without_events(), &config, 0).unwrap();
        let planned = quiet.records[0].cost;
        let gap = (quiet.total_distance - planned).abs() / planned;
        pass &= quiet.records.len() == 1 && gap <= 1e-6;
        parts.push(format!("no-event distance {:.4} vs plan {planned:.4}", quiet.total_distance));
    }
    verdict("6 (dynamic replay)", pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_7_budget_adherence() {
    let _guard = serial();
    let instances = [
        static_problem(&case1()),
        static_problem(&generate_instance(&GeneratorConfig::case2_analog(2)).unwrap()),
    ];
    let budgets = [0.5, 1.0, 2.0, 5.0];
    let clusterers = [ClusteringMethod::KMeans, ClusteringMethod::None];
    let mut within_budget = 0;
    let mut worst: f64 = 0.0;
    for run in 0..200 {
        let problem = &instances[run % 2];
        let budget = budgets[run % 4];
        let method = IMPROVERS[run % 3];
        let clustering = ClusteringConfig {
            method: clusterers[(run / 4) % 2],
            seed: run as u64,
            ..ClusteringConfig::default()
        };
        let initial = build_initial_plan(problem, &clustering, ConstructionMethod::ALL[(run / 8) % 3]).unwrap();
        let config = ImprovementConfig::new(method, budget, run as u64);
        let started = Instant::now();
        improve(problem, &initial.plan, &config, initial.neighborhoods()).unwrap();
        let ratio = started.elapsed().as_secs_f64() / budget;
        worst = worst.max(ratio);
        within_budget += usize::from(ratio <= 1.10);
    }
    let pass = within_budget >= 190;
    verdict(
        "7 (budget adherence)",
        pass,
        &format!("{within_budget}/200 runs within 1.10x budget (need 190), worst ratio {worst:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_determinism() {
    let _guard = serial();
    let dir = tempfile::tempdir().unwrap();
    let matrix = ExperimentMatrix {
        budgets: vec![0.02, 0.05],
        repetitions: 2,
        base_seed: 11,
        ..ExperimentMatrix::default()
    };
    let options = MatrixOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, inst) in [
        ("case1", case1()),
        ("case2-analog", generate_instance(&GeneratorConfig::case2_analog(4)).unwrap()),
    ] {
        let files: Vec<Vec<u8>> = ["a", "b"]
            .iter()
            .map(|run| {
                let path = dir.path().join(format!("{name}-{run}.csv"));
                emit_csv(&run_experiment_matrix(&inst, &matrix, &options).unwrap(), &path).unwrap();
                std::fs::read(path).unwrap()
            })
            .collect();
        let same = files[0] == files[1];
        pass &= same && !files[0].is_empty();
        parts.push(format!("{name} {} bytes {}", files[0].len(), if same { "identical" } else { "differ" }));
    }
    verdict("8 (determinism)", pass, &parts.join(", "));
    assert!(pass);
}

#[test]
fn case2_analog_direction() {
    let _guard = serial();
    let matrix = ExperimentMatrix {
        budgets: vec![0.1],
        repetitions: 1,
        ..ExperimentMatrix::default()
    };
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..10 {
        let inst = generate_instance(&GeneratorConfig::case2_analog(seed)).unwrap();
        let table = run_experiment_matrix(
            &inst,
            &ExperimentMatrix {
                base_seed: seed,
                ..matrix.clone()
            },
            &MatrixOptions::default(),
        )
        .unwrap();
        let improved = table.rows.iter().filter(|r| r.improver != ImprovementMethod::None);
        let best = improved
            .clone()
            .filter(|r| r.clusterer != ClusteringMethod::None)
            .filter_map(|r| r.cost)
            .fold(f64::INFINITY, f64::min);
        let worst = improved
            .filter(|r| r.clusterer == ClusteringMethod::None)
            .filter_map(|r| r.cost)
            .fold(f64::NEG_INFINITY, f64::max);
        wins += usize::from(best < worst);
        parts.push(format!("{best:.0}/{worst:.0}"));
    }
    verdict(
        "Case-2 direction",
        wins >= 7,
        &format!(
            "best three-stage beats worst unclustered baseline on {wins}/10 seeds (need 7), best/worst {}",
            parts.join(" ")
        ),
    );
}
