use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rumor_core::bench::{
    run_localization_experiment, run_recovery_experiment, CsvSink, ExperimentConfig, MetricsRecord,
};
use rumor_core::Error;

#[derive(Parser)]
#[command(name = "rumorloc", version, about = "Rumor source localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mask observations, recover them, and report the recovery error.
    Recover(RunArgs),
    /// Run two-stage source localization and report hop distances.
    Localize(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `ba`, `ws`, `tree`, `two-clique`, or a path to an edge list.
    #[arg(long)]
    network: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Sensor percentages of the node count, comma separated.
    #[arg(long)]
    sensor_pct: Option<String>,
    /// Missing rates in [0, 1], comma separated.
    #[arg(long)]
    missing: Option<String>,
    /// `sporadic` or `burst`.
    #[arg(long)]
    mode: Option<String>,
    /// `cs`, `dn`, `dn-renewal` or `none`.
    #[arg(long)]
    method: Option<String>,
    /// Compressed-sensing basis: `principal` or `dct`.
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k2: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append to the output file instead of replacing it.
    #[arg(long)]
    append: bool,
    /// Observed cascade file (repeatable); replaces simulated trials.
    #[arg(long)]
    cascade: Vec<PathBuf>,
}

enum Failure {
    Usage(String),
    Fatal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse { .. } => Failure::Usage(e.to_string()),
            other => Failure::Fatal(other.to_string()),
        }
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_kv(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    let flags = [
        ("network", args.network.clone()),
        ("nodes", args.nodes.map(|v| v.to_string())),
        ("sensor_pct", args.sensor_pct.clone()),
        ("missing", args.missing.clone()),
        ("mode", args.mode.clone()),
        ("method", args.method.clone()),
        ("basis", args.basis.clone()),
        ("trials", args.trials.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("k2", args.k2.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.cascades.extend(args.cascade.iter().cloned());
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(g: &MetricsRecord) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
    eprintln!(
        "{} pct={} missing={} method={} trials={} failed={} mse={} hops={} time={:.2}s",
        g.experiment.name(),
        g.sensor_pct,
        g.missing_rate,
        g.method,
        g.trials.len(),
        g.failures,
        fmt(g.recovery_mse),
        fmt(g.source_distance),
        g.wall_time.as_secs_f64()
    );
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (args, localize) = match &cli.command {
        Command::Recover(a) => (a, false),
        Command::Localize(a) => (a, true),
    };
    let cfg = build_config(args)?;
    let mut sink = match &cfg.out {
        Some(path) if args.append => Some(CsvSink::append(path)?),
        Some(path) => Some(CsvSink::create(path)?),
        None => None,
    };
    let on_group = |g: &MetricsRecord| {
        summarize(g);
        if let Some(s) = sink.as_mut() {
            for t in &g.trials {
                s.write(t)?;
            }
            s.flush()?;
        }
        Ok(())
    };
    if localize {
        run_localization_experiment(&cfg, on_group)?;
    } else {
        run_recovery_experiment(&cfg, on_group)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Fatal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
