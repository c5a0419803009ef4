use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use dvrp::clustering::ClusteringMethod;
use dvrp::construction::ConstructionMethod;
use dvrp::harness::{
    emit_csv, generate_instance, instance_to_json, load_instance, plan_to_svg, run_experiment_matrix,
    ExperimentMatrix, GeneratorConfig, MatrixOptions, ReportRow, ReportTable,
};
use dvrp::improvement::{Clock, ImprovementConfig, ImprovementMethod};
use dvrp::model::{Instance, Point, RoutingProblem};
use dvrp::pipeline::{solve, PipelineConfig, PipelineError};
use dvrp::sim::{simulate, trace_to_jsonl};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "dvrp", version, about = "Cluster, construct and improve routes for dynamic CVRP instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance.
    Gen(GenArgs),
    /// Solve the static customers of an instance once.
    Solve(RunArgs),
    /// Replay an instance's arrival events, replanning at each one.
    Simulate(RunArgs),
    /// Run the experiment matrix and write one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
    Svg,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    n_static: usize,
    #[arg(long, default_value_t = 100)]
    n_dynamic: usize,
    #[arg(long, default_value_t = 4)]
    vehicles: usize,
    #[arg(long, default_value_t = 125.0)]
    capacity: f64,
    #[arg(long, default_value_t = 25)]
    events: usize,
    /// Grid bounds as `lo,hi`.
    #[arg(long, default_value = "0,100")]
    grid: String,
    /// Demands cycle through this list.
    #[arg(long, default_value = "1,2,3")]
    demands: String,
    /// Event times are drawn from `lo,hi`.
    #[arg(long, default_value = "5,120")]
    horizon: String,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    #[arg(long)]
    depot: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Override the depot as `x,y`.
    #[arg(long)]
    depot: Option<String>,
    /// Override the vehicle speed (distance units per second).
    #[arg(long)]
    speed: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, default_value = "kmeans")]
    clusterer: String,
    #[arg(long, default_value = "savings")]
    construct: String,
    #[arg(long, default_value = "gls")]
    improve: String,
    /// Improvement budget in seconds, per replan.
    #[arg(long, default_value_t = 1.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Comma-separated list.
    #[arg(long, default_value = "none,kmeans,gmm,birch")]
    clusterer: String,
    #[arg(long, default_value = "savings,pca,gca")]
    construct: String,
    #[arg(long, default_value = "gls,sa,tabu")]
    improve: String,
    /// Comma-separated budgets in seconds.
    #[arg(long, default_value = "0.5,1,2,5,50")]
    time_limit: String,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Base seed; repetition r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Measure budgets in real time instead of counted work; the CSV is then not reproducible.
    #[arg(long)]
    wall_clock: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: anyhow::Error) -> Self {
        Self { code: EXIT_INPUT, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self::input(error)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if e.is_infeasible() { EXIT_INFEASIBLE } else { EXIT_INPUT };
        Self { code, error: e.into() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve_cmd(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn parse_list<T: FromStr<Err = String>>(text: &str) -> anyhow::Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(anyhow::Error::msg))
        .collect()
}

fn parse_pair<T: FromStr>(text: &str, what: &str) -> anyhow::Result<(T, T)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => anyhow::bail!("{what} `{text}` is not a pair of numbers"),
        },
        _ => anyhow::bail!("{what} must be given as `a,b`, got `{text}`"),
    }
}

fn parse_depot(text: &str) -> anyhow::Result<Point> {
    let (x, y) = parse_pair::<f64>(text, "depot")?;
    Ok(Point::new(x, y))
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(args: &InstanceArgs) -> anyhow::Result<Instance> {
    let mut instance = load_instance(&args.instance)?;
    if let Some(depot) = &args.depot {
        instance = instance.with_depot(parse_depot(depot)?);
    }
    if let Some(speed) = args.speed {
        anyhow::ensure!(speed > 0.0 && speed.is_finite(), "speed must be positive");
        instance.fleet.speed = speed;
    }
    instance.validate()?;
    Ok(instance)
}

fn pipeline(args: &RunArgs) -> anyhow::Result<PipelineConfig> {
    let clusterer: ClusteringMethod = args.clusterer.parse().map_err(anyhow::Error::msg)?;
    let construction: ConstructionMethod = args.construct.parse().map_err(anyhow::Error::msg)?;
    let improver: ImprovementMethod = args.improve.parse().map_err(anyhow::Error::msg)?;
    anyhow::ensure!(
        args.time_limit >= 0.0 && args.time_limit.is_finite(),
        "time limit must be a non-negative number of seconds"
    );
    Ok(PipelineConfig::new(
        clusterer,
        construction,
        ImprovementConfig::new(improver, args.time_limit, args.seed),
    ))
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let config = GeneratorConfig {
        name: format!("generated-{}", args.seed),
        n_static: args.n_static,
        n_dynamic: args.n_dynamic,
        grid: parse_pair(&args.grid, "grid")?,
        demand_cycle: parse_list_f64(&args.demands)?,
        fleet: dvrp::model::FleetSpec {
            vehicle_count: args.vehicles,
            capacity: args.capacity,
            speed: args.speed,
        },
        event_count: args.events,
        horizon: parse_pair(&args.horizon, "horizon")?,
        depot: args.depot.as_deref().map(parse_depot).transpose()?,
        seed: args.seed,
    };
    let instance = generate_instance(&config).map_err(anyhow::Error::from)?;
    write_output(args.out.as_deref(), &instance_to_json(&instance))?;
    Ok(())
}

fn parse_list_f64(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("`{s}` is not a number")))
        .collect()
}

fn solve_cmd(args: RunArgs) -> Result<(), Failure> {
    let instance = load(&args.input)?;
    let config = pipeline(&args)?;
    let problem = RoutingProblem::at_depot(instance.depot, &instance.fleet, instance.customers.clone())
        .map_err(anyhow::Error::from)?;
    let out = solve(&problem, &config)?;
    let text = match args.format {
        None => {
            let mut s = String::new();
            writeln!(s, "constructed {:.3}", out.initial.plan.total_cost).unwrap();
            writeln!(s, "improved    {:.3}", out.plan.total_cost).unwrap();
            for (route, ids) in out.plan.routes.iter().zip(out.plan.visit_lists()) {
                let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
                writeln!(s, "vehicle {}: {}", route.vehicle_id, ids.join(" ")).unwrap();
            }
            s
        }
        Some(Format::Svg) => plan_to_svg(&out.plan, &instance).map_err(anyhow::Error::from)?,
        Some(Format::Jsonl) => {
            let v = serde_json::json!({
                "cost": out.plan.total_cost,
                "constructed": out.initial.plan.total_cost,
                "routes": out.plan.visit_lists(),
            });
            v.to_string() + "\n"
        }
        Some(Format::Csv) => {
            let improver = config.improvement.method;
            let row = ReportRow {
                clusterer: config.clustering.method,
                constructor: config.construction,
                improver,
                budget_s: (improver != ImprovementMethod::None).then_some(args.time_limit),
                rep: 0,
                seed: args.seed,
                cost: Some(out.plan.total_cost),
                wall_time_s: out.improvement.elapsed,
                improvement_pct: None,
                status: "ok".into(),
            };
            ReportTable { rows: vec![row] }.to_csv().map_err(anyhow::Error::from)?
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(())
}

fn simulate_cmd(args: RunArgs) -> Result<(), Failure> {
    let instance = load(&args.input)?;
    let config = pipeline(&args)?;
    let trace = simulate(&instance, &config, args.seed).map_err(|e| Failure::from(e.source.clone()))?;
    let text = match args.format.unwrap_or(Format::Jsonl) {
        Format::Jsonl => trace_to_jsonl(&trace),
        Format::Svg => {
            let last = trace.records.last().expect("at least one replan");
            plan_to_svg(&last.plan, &instance).map_err(anyhow::Error::from)?
        }
        Format::Csv => {
            let mut s = String::from("t,cost,served,pending\n");
            for r in &trace.records {
                writeln!(s, "{},{},{},{}", r.time, r.cost, r.fleet.served_count(), r.pending.len()).unwrap();
            }
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    eprintln!(
        "{} replans, {} customers served, distance {:.3}, done at t = {:.3}",
        trace.records.len(),
        trace.served.len(),
        trace.total_distance,
        trace.completion_time
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let instance = load(&args.input)?;
    if !matches!(args.format, Format::Csv) {
        return Err(Failure::input(anyhow::anyhow!("bench writes csv only")));
    }
    let improvers = parse_list::<ImprovementMethod>(&args.improve)?;
    let matrix = ExperimentMatrix {
        clusterers: parse_list(&args.clusterer)?,
        constructors: parse_list(&args.construct)?,
        improvers,
        budgets: parse_list_f64(&args.time_limit)?,
        repetitions: args.reps,
        base_seed: args.seed,
    };
    let options = MatrixOptions {
        workers: args.workers.max(1),
        clock: if args.wall_clock { Clock::Wall } else { Clock::virtual_default() },
    };
    let report = run_experiment_matrix(&instance, &matrix, &options).map_err(anyhow::Error::from)?;
    match &args.out {
        Some(path) => emit_csv(&report, path).map_err(anyhow::Error::from)?,
        None => print!("{}", report.to_csv().map_err(anyhow::Error::from)?),
    }
    for s in report.summaries() {
        let budget = s.key.budget_s.map_or("-".to_string(), |b| b.to_string());
        let pct = s.mean_improvement_pct.map_or("-".to_string(), |p| format!("{p:.2}%"));
        eprintln!(
            "{:<7} {:<8} {:<5} {:>5}  mean {:>9.2}  min {:>9.2}  std {:>6.2}  vs baseline {:>8}{}{}",
            s.key.clusterer,
            s.key.constructor,
            s.key.improver,
            budget,
            s.mean,
            s.min,
            s.std_dev,
            pct,
            if s.flagged { "  [std > 5.3]" } else { "" },
            if s.failures > 0 { format!("  [{} failed]", s.failures) } else { String::new() },
        );
    }
    Ok(())
}
