use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::info;

use flexsim::engine::{write_metrics_csv, write_summary_csv};
use flexsim::schedulers::ScoreWeights;
use flexsim::{
    generate_synthetic, load_workload, run_simulation, write_workload, ClusterConfig, Error,
    ResourceVector, SchedulerKind, SimulationConfig, SyntheticSpec, Workload,
};

/// Simulate a cluster under one scheduling policy and write per-tick metrics.
#[derive(Debug, Parser)]
#[command(name = "flexsim", version)]
struct Args {
    /// fifo, lrf, leastfit, oversub, flexf or flexl
    #[arg(long, default_value = "flexf", value_parser = parse_kind)]
    scheduler: String,

    #[arg(long, default_value_t = 4000)]
    nodes: usize,
    #[arg(long, default_value_t = 64.0)]
    node_cpu: f64,
    #[arg(long, default_value_t = 128.0)]
    node_mem: f64,

    /// Oversubscription factor for `oversub`.
    #[arg(long, default_value_t = 2.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.5)]
    p0: f64,
    #[arg(long, default_value_t = 1.0)]
    pmin: f64,
    #[arg(long, default_value_t = 0.99)]
    qos_target: f64,

    /// Seconds per simulation tick.
    #[arg(long, default_value_t = 10.0)]
    tick: f64,
    #[arg(long, default_value_t = 60.0)]
    monitor_interval: f64,
    #[arg(long, default_value_t = 60.0)]
    penalty_interval: f64,
    /// Stop at this simulated time (seconds) instead of when the workload drains.
    #[arg(long)]
    horizon: Option<f64>,

    /// Task list (`task_id,job_id,arrival_s,duration_s,cpu_req,mem_req`).
    #[arg(long, requires = "usage", conflicts_with = "synthetic")]
    workload: Option<PathBuf>,
    /// Usage samples (`task_id,offset_s,cpu_use,mem_use`).
    #[arg(long, requires = "workload")]
    usage: Option<PathBuf>,
    /// Generated workload, e.g. `n=5000,rate=1.2,ratio=0.45`.
    #[arg(long)]
    synthetic: Option<String>,

    /// Multiplies every demand sample.
    #[arg(long, default_value_t = 1.0)]
    demand_scale: f64,

    #[arg(long, default_value_t = 0.7)]
    score_load_weight: f64,
    #[arg(long, default_value_t = 0.3)]
    score_spread_weight: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value = "metrics.csv")]
    out: PathBuf,
    #[arg(long, default_value = "summary.csv")]
    summary: PathBuf,

    /// Also write the workload used to these two files (tasks, usage).
    #[arg(long, num_args = 2, value_names = ["TASKS", "USAGE"])]
    dump_workload: Option<Vec<PathBuf>>,
}

fn parse_kind(s: &str) -> Result<String, String> {
    s.parse::<SchedulerKind>().map(|_| s.to_ascii_lowercase())
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            file: path.clone(),
            source,
        })
}

fn run(args: Args) -> Result<(), Error> {
    let kind = SchedulerKind::parse_with_theta(&args.scheduler, args.theta)
        .map_err(Error::InvalidConfig)?;
    let cluster = ClusterConfig {
        n_nodes: args.nodes,
        node_capacity: ResourceVector::new(args.node_cpu, args.node_mem),
        theta: args.theta,
        qos_target: args.qos_target,
        tick_seconds: args.tick,
        monitor_interval_seconds: args.monitor_interval,
        penalty_interval_seconds: args.penalty_interval,
        alpha: args.alpha,
        beta: args.beta,
        p0: args.p0,
        p_min: args.pmin,
        seed: args.seed,
        ..Default::default()
    };
    let config = SimulationConfig {
        cluster,
        demand_scale: args.demand_scale,
        horizon_seconds: args.horizon,
        score_weights: ScoreWeights {
            load: args.score_load_weight,
            spread: args.score_spread_weight,
        },
        ..Default::default()
    };

    let workload: Workload = match (&args.workload, &args.usage, &args.synthetic) {
        (Some(tasks), Some(usage), _) => load_workload(tasks, usage)?,
        (_, _, Some(raw)) => {
            let mut spec: SyntheticSpec = raw.parse()?;
            if !raw.contains("seed=") {
                spec.seed = args.seed;
            }
            spec.node_capacity = config.cluster.node_capacity;
            generate_synthetic(&spec)?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "either --workload/--usage or --synthetic is required".into(),
            ))
        }
    };
    info!("loaded {} tasks", workload.len());

    if let Some(paths) = &args.dump_workload {
        write_workload(&workload, &paths[0], &paths[1])?;
    }

    let output = run_simulation(&config, &workload, kind)?;
    write_metrics_csv(create(&args.out)?, &output.metrics)?;
    write_summary_csv(create(&args.summary)?, &output.summary)?;

    let s = &output.summary;
    println!(
        "{}: ticks={} req=({:.3},{:.3}) use=({:.3},{:.3}) violations={:.4} mean_p={:.3} admitted={} unschedulable={}",
        s.scheduler,
        s.ticks,
        s.avg_request.cpu,
        s.avg_request.mem,
        s.avg_usage.cpu,
        s.avg_usage.mem,
        s.violation_fraction,
        s.mean_p,
        s.admitted,
        s.unschedulable
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
