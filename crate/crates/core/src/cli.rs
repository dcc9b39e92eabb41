//! Command-line front end: single runs, FIFO-vs-IRA comparisons over a
//! shared workload, and multi-seed/multi-beta sweeps. All outputs are
//! deterministic; rerunning a command overwrites its files with identical
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, RunOutput};
use crate::metrics::{self, MetricsError, RunMetrics};
use crate::scenario::{parse_scenario, ScenarioConfig, ScenarioError};
use crate::scheduler::Discipline;
use crate::workload;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("--{0}: cannot parse `{1}`")]
    BadFlag(&'static str, String),
}

#[derive(Debug, Parser)]
#[command(
    name = "daas-sim",
    about = "Simulate SLA-priority scheduling and resource overbooking in a DaaS datacenter"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file; omitted means the built-in default scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the scenario output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its trace and metrics.
    Run(CommonArgs),
    /// Run FIFO and IRA over the identical workload and write the paired
    /// metrics, a comparison report, and per-class plot data.
    Compare(CommonArgs),
    /// Run the cross-product of seeds and betas, merging metrics.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated seeds; defaults to the scenario seed.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated beta values; defaults to the scenario beta.
        #[arg(long)]
        betas: Option<String>,
    },
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let mut config = match &common.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_scenario(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn parse_list<T: std::str::FromStr>(flag: &'static str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::BadFlag(flag, s.to_string()))
        })
        .collect()
}

fn print_summary(label: &str, metrics: &RunMetrics) {
    let agg = &metrics.aggregate;
    println!(
        "{label}: n={} mean_wait={:.3}s violation_rate={:.4} reserved_util={:.4} actual_util={:.4} overload={:.4}",
        agg.count,
        agg.mean_wait,
        agg.violation_rate,
        agg.mean_reserved_utilization,
        agg.mean_actual_utilization,
        agg.overload_time_fraction,
    );
}

/// `run`: one simulation, `trace.csv` + `metrics.csv`.
pub fn cmd_run(config: &ScenarioConfig) -> Result<(), CliError> {
    let out = engine::run(&config.workload, &config.run_config()?)?;
    let dir = &config.output_dir;
    write_file(dir, "trace.csv", &out.trace.to_csv())?;
    let csv = metrics::metrics_csv(&[("0".to_string(), &out.metrics)]);
    write_file(dir, "metrics.csv", &csv)?;
    print_summary(
        &format!("{} seed={}", config.discipline.as_str(), config.seed()),
        &out.metrics,
    );
    println!("wrote {}", dir.join("trace.csv").display());
    println!("wrote {}", dir.join("metrics.csv").display());
    Ok(())
}

fn run_discipline(
    config: &ScenarioConfig,
    requests: &[crate::model::Request],
    discipline: Discipline,
) -> Result<RunOutput, CliError> {
    let mut cfg = config.run_config()?;
    cfg.policy = crate::scheduler::SchedulerPolicy::new(discipline);
    Ok(engine::run_requests(requests, config.seed(), &cfg)?)
}

/// `compare`: both disciplines over one generated workload.
pub fn cmd_compare(config: &ScenarioConfig) -> Result<(), CliError> {
    let requests = workload::generate(&config.workload)
        .map_err(EngineError::from)?;
    let fifo = run_discipline(config, &requests, Discipline::Fifo)?;
    let ira = run_discipline(config, &requests, Discipline::Ira)?;
    // both runs must have consumed the identical workload
    assert_eq!(
        fifo.metrics.meta.workload_digest,
        ira.metrics.meta.workload_digest
    );
    let report = metrics::compare(&fifo.metrics, &ira.metrics)?;

    let dir = &config.output_dir;
    write_file(dir, "trace_fifo.csv", &fifo.trace.to_csv())?;
    write_file(dir, "trace_ira.csv", &ira.trace.to_csv())?;
    write_file(
        dir,
        "metrics_fifo.csv",
        &metrics::metrics_csv(&[("0".to_string(), &fifo.metrics)]),
    )?;
    write_file(
        dir,
        "metrics_ira.csv",
        &metrics::metrics_csv(&[("1".to_string(), &ira.metrics)]),
    )?;

    let mut plot = String::from("priority_class,fifo_mean_wait_s,ira_mean_wait_s\n");
    for (f, i) in fifo.metrics.per_class.iter().zip(&ira.metrics.per_class) {
        plot.push_str(&format!("{},{},{}\n", f.class, f.mean_wait, i.mean_wait));
    }
    write_file(dir, "plot_mean_wait_by_class.csv", &plot)?;

    let summary = serde_json::json!({
        "fifo": fifo.metrics,
        "ira": ira.metrics,
        "comparison": report,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("serializable report");
    text.push('\n');
    write_file(dir, "comparison.json", &text)?;

    print_summary("fifo", &fifo.metrics);
    print_summary("ira ", &ira.metrics);
    println!(
        "ira P1-P3 violation rates not worse than fifo: {}",
        report.candidate_p123_not_worse
    );
    println!("wrote {}", dir.join("comparison.json").display());
    Ok(())
}

/// `sweep`: cross-product of seeds and betas under the scenario discipline,
/// merged into one metrics CSV ordered by (seed, beta).
pub fn cmd_sweep(
    config: &ScenarioConfig,
    seeds: &[u64],
    betas: &[f64],
) -> Result<(), CliError> {
    let mut cases = Vec::new();
    for seed in seeds {
        for beta in betas {
            let mut c = config.clone();
            c.set_seed(*seed);
            c.beta = *beta;
            c.validate()?;
            cases.push(c);
        }
    }
    let results: Vec<Result<RunOutput, CliError>> = cases
        .par_iter()
        .map(|c| Ok(engine::run(&c.workload, &c.run_config()?)?))
        .collect();
    let mut rows: Vec<(String, RunMetrics)> = Vec::with_capacity(results.len());
    for (idx, result) in results.into_iter().enumerate() {
        rows.push((idx.to_string(), result?.metrics));
    }
    let borrowed: Vec<(String, &RunMetrics)> =
        rows.iter().map(|(id, m)| (id.clone(), m)).collect();
    let dir = &config.output_dir;
    write_file(dir, "metrics.csv", &metrics::metrics_csv(&borrowed))?;
    for ((run_id, m), case) in rows.iter().zip(&cases) {
        print_summary(
            &format!(
                "run {} seed={} beta={} {}",
                run_id,
                case.seed(),
                case.beta,
                case.discipline.as_str()
            ),
            m,
        );
    }
    println!("wrote {}", dir.join("metrics.csv").display());
    Ok(())
}

/// Parse argv and dispatch; returns the process exit code.
pub fn main_with(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => cmd_run(&load_config(&common)?),
        Command::Compare(common) => cmd_compare(&load_config(&common)?),
        Command::Sweep {
            common,
            seeds,
            betas,
        } => {
            let config = load_config(&common)?;
            let seeds = match seeds {
                Some(text) => parse_list("seeds", &text)?,
                None => vec![config.seed()],
            };
            let betas = match betas {
                Some(text) => parse_list("betas", &text)?,
                None => vec![config.beta],
            };
            cmd_sweep(&config, &seeds, &betas)
        }
    }
}
