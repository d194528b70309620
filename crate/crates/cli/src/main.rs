//! Command-line front end: validate scenarios, generate fixtures, run
//! rollout batches, and compute metrics.
//!
//! Logs and the resolved configuration go to stderr; data goes to files or
//! stdout, so output stays pipeline-safe. Exit codes: 0 success, 1
//! validation failure, 2 I/O or schema error.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use cadsim_core::fixture::{FixtureConfig, generate_scenario};
use cadsim_core::metrics::{
    self, BatchMetrics, MetricsError, compute_batch_metrics, compute_min_ade_filtered,
    load_ground_truth,
};
use cadsim_core::rollout::{self, RolloutBatch, RolloutError, load_batch, load_config,
    simulate_batch};
use cadsim_core::scenario::{self, ScenarioError, load_scenario, partition_agents};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO_SCHEMA: u8 = 2;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Scenario(#[from] ScenarioError),

    #[error("{0}")]
    Rollout(#[from] RolloutError),

    #[error("{0}")]
    Metrics(#[from] MetricsError),

    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

fn rollout_exit_code(err: &RolloutError) -> u8 {
    use cadsim_core::predictors::PredictorError;
    match err {
        RolloutError::Io { .. } | RolloutError::Parse { .. } => EXIT_IO_SCHEMA,
        RolloutError::Predictor {
            source: PredictorError::Io { .. } | PredictorError::Parse { .. },
            ..
        } => EXIT_IO_SCHEMA,
        RolloutError::BatchItem { source, .. } => rollout_exit_code(source),
        _ => EXIT_VALIDATION,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(ScenarioError::Validation(_)) => EXIT_VALIDATION,
            CliError::Scenario(_) => EXIT_IO_SCHEMA,
            CliError::Rollout(err) => rollout_exit_code(err),
            CliError::Metrics(MetricsError::Io { .. } | MetricsError::Parse { .. }) => {
                EXIT_IO_SCHEMA
            }
            CliError::Metrics(_) => EXIT_VALIDATION,
            CliError::Write { .. } => EXIT_IO_SCHEMA,
            CliError::Usage(_) => EXIT_VALIDATION,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cadsim",
    version,
    about = "Multi-agent trajectory rollout engine with collision-avoidance detour resampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the schema and invariants.
    Validate {
        /// Scenario JSON file.
        scenario: PathBuf,
    },

    /// Generate a deterministic synthetic scenario file.
    Fixture {
        /// Number of agents (agent 0 is the ADV).
        #[arg(long, default_value_t = 8)]
        agents: usize,
        /// Generation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// History steps per agent.
        #[arg(long, default_value_t = 11)]
        history_len: usize,
        /// Prediction steps.
        #[arg(long, default_value_t = 80)]
        horizon: usize,
        /// Seconds per step.
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Output scenario path.
        #[arg(short, long)]
        output: PathBuf,
    },

    /// Run a rollout batch over a scenario.
    Simulate {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Rollout config JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Output batch path.
        #[arg(short, long)]
        output: PathBuf,
        /// Cap on worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Also dump per-step positions as CSV for external plotting.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
    },

    /// Compute metrics over a batch file.
    Metrics {
        /// Batch JSON file produced by `simulate`.
        #[arg(long)]
        batch: PathBuf,
        /// Optional ground-truth future file; enables minADE.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Scenario file, needed by --predicted-only to resolve groups.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Restrict minADE to the ADV and world_p agents.
        #[arg(long, requires = "scenario")]
        predicted_only: bool,
        /// Output metrics JSON path.
        #[arg(short, long)]
        output: PathBuf,
        /// Optional CSV output path (one row per scenario).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn echo_config(value: serde_json::Value) {
    eprintln!("resolved config: {value}");
}

fn run_validate(path: &PathBuf) -> Result<(), CliError> {
    echo_config(json!({"subcommand": "validate", "scenario": path.display().to_string()}));
    let scenario = load_scenario(path)?;
    let partition = partition_agents(&scenario);
    println!(
        "ok: scenario {:?}, {} agents (adv={}, world_p={}, world_o={}), H={}, T={}, dt={}",
        scenario.scenario_id,
        scenario.agents.len(),
        partition.adv.map(|id| id.to_string()).unwrap_or_else(|| "none".to_string()),
        partition.world_p.len(),
        partition.world_o.len(),
        scenario.history_len,
        scenario.horizon,
        scenario.dt,
    );
    Ok(())
}

fn run_fixture(
    agents: usize,
    seed: u64,
    history_len: usize,
    horizon: usize,
    dt: f64,
    output: &PathBuf,
) -> Result<(), CliError> {
    echo_config(json!({
        "subcommand": "fixture",
        "agents": agents,
        "seed": seed,
        "history_len": history_len,
        "horizon": horizon,
        "dt": dt,
        "output": output.display().to_string(),
    }));
    let scenario = generate_scenario(&FixtureConfig {
        agents,
        seed,
        history_len,
        horizon,
        dt,
    });
    scenario.validate()?;
    scenario.save(output)?;
    eprintln!("wrote scenario {:?} to {}", scenario.scenario_id, output.display());
    Ok(())
}

fn batch_positions_csv(batch: &RolloutBatch) -> String {
    let mut out = String::from("rollout,agent_id,step,x,y,z,heading\n");
    for (index, rollout) in batch.rollouts.iter().enumerate() {
        for (id, pose) in &rollout.agents {
            for (step, (pos, heading)) in
                pose.positions.iter().zip(&pose.headings).enumerate()
            {
                out.push_str(&format!(
                    "{index},{id},{step},{},{},{},{}\n",
                    pos[0], pos[1], pos[2], heading
                ));
            }
        }
    }
    out
}

fn run_simulate(
    scenario_path: &PathBuf,
    config_path: &PathBuf,
    output: &PathBuf,
    jobs: Option<usize>,
    dump_csv: Option<&PathBuf>,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path)?;
    let config = load_config(config_path)?;
    echo_config(json!({
        "subcommand": "simulate",
        "scenario": scenario_path.display().to_string(),
        "output": output.display().to_string(),
        "jobs": jobs,
        "config": serde_json::to_value(&config).expect("config serializes"),
    }));

    let batch = match jobs {
        Some(jobs) if jobs >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?
            .install(|| simulate_batch(&scenario, &config)),
        Some(_) => return Err(CliError::Usage("--jobs must be at least 1".to_string())),
        None => simulate_batch(&scenario, &config),
    }?;

    write_file(output, &rollout::batch_to_json(&batch))?;
    eprintln!(
        "wrote {} rollouts for scenario {:?} to {}",
        batch.rollouts.len(),
        batch.scenario_id,
        output.display()
    );
    if let Some(csv_path) = dump_csv {
        write_file(csv_path, &batch_positions_csv(&batch))?;
        eprintln!("wrote per-step positions to {}", csv_path.display());
    }
    Ok(())
}

fn run_metrics(
    batch_path: &PathBuf,
    truth_path: Option<&PathBuf>,
    scenario_path: Option<&PathBuf>,
    predicted_only: bool,
    output: &PathBuf,
    csv: Option<&PathBuf>,
) -> Result<(), CliError> {
    echo_config(json!({
        "subcommand": "metrics",
        "batch": batch_path.display().to_string(),
        "truth": truth_path.map(|p| p.display().to_string()),
        "scenario": scenario_path.map(|p| p.display().to_string()),
        "predicted_only": predicted_only,
        "output": output.display().to_string(),
    }));
    let batch = load_batch(batch_path)?;
    let mut result: BatchMetrics =
        compute_batch_metrics(&batch, batch.config.cad.collision_threshold)?;

    if let Some(truth_path) = truth_path {
        let truth = load_ground_truth(truth_path)?;
        let restrict: Option<BTreeSet<scenario::AgentId>> = if predicted_only {
            let scenario_path = scenario_path.expect("clap enforces --scenario");
            let scenario = load_scenario(scenario_path)?;
            let partition = partition_agents(&scenario);
            let mut set = partition.world_p.clone();
            if let Some(adv) = partition.adv {
                set.insert(adv);
            }
            Some(set)
        } else {
            None
        };
        let report = compute_min_ade_filtered(&batch, &truth, restrict.as_ref())?;
        for id in &report.skipped {
            eprintln!("warning: agent {id} skipped (no valid ground truth)");
        }
        result.min_ade = Some(report.value);
    }

    let record = json!({
        "scenario_id": batch.scenario_id,
        "min_ade": result.min_ade,
        "residual_collision_rate": result.residual_collision_rate,
        "mean_trials_adv": result.mean_trials_adv,
        "mean_trials_world_p": result.mean_trials_world_p,
        "distinct_rollout_count": result.distinct_rollout_count,
    });
    write_file(output, &serde_json::to_string_pretty(&record).expect("metrics serialize"))?;
    eprintln!("wrote metrics to {}", output.display());
    if let Some(csv_path) = csv {
        write_file(csv_path, &metrics::metrics_to_csv(&batch.scenario_id, &result))?;
        eprintln!("wrote metrics CSV to {}", csv_path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { scenario } => run_validate(scenario),
        Command::Fixture {
            agents,
            seed,
            history_len,
            horizon,
            dt,
            output,
        } => run_fixture(*agents, *seed, *history_len, *horizon, *dt, output),
        Command::Simulate {
            scenario,
            config,
            output,
            jobs,
            dump_csv,
        } => run_simulate(scenario, config, output, *jobs, dump_csv.as_ref()),
        Command::Metrics {
            batch,
            truth,
            scenario,
            predicted_only,
            output,
            csv,
        } => run_metrics(
            batch,
            truth.as_ref(),
            scenario.as_ref(),
            *predicted_only,
            output,
            csv.as_ref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
