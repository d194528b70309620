//! Batch diagnostics: minADE against ground truth, residual collision rate,
//! and resampling-trial statistics.
//!
//! Residual collisions are expected: the groups never coordinate, so a
//! cross-group near-miss survives resampling by design. The rate reported
//! here quantifies that cost.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cad::detect_collision_with;
use crate::predictors::CandidateTrajectory;
use crate::rollout::{Rollout, RolloutBatch};
use crate::scenario::{AgentId, AgentState};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("batch has no rollouts")]
    EmptyBatch,

    #[error("no agents with usable ground truth")]
    NoAgents,

    #[error("agent {id}: ground truth has {found} steps, rollouts have {expected}")]
    HorizonMismatch {
        id: AgentId,
        expected: usize,
        found: usize,
    },

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("ground-truth schema error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Observed future states keyed by agent id; validity flags mark the steps
/// that count.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTruthFuture {
    pub agents: BTreeMap<AgentId, Vec<AgentState>>,
}

/// Load a ground-truth file: a JSON object mapping agent id to an array of
/// agent states, one per horizon step.
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruthFuture, MetricsError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| MetricsError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|err| MetricsError::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    })
}

/// minADE along with the agents that had to be skipped for lack of valid
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinAdeReport {
    /// Mean over agents of the per-agent minimum (over rollouts) average
    /// xy displacement error, meters.
    pub value: f64,
    pub skipped: Vec<AgentId>,
}

/// Aggregate diagnostics for one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ade: Option<f64>,
    pub residual_collision_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_trials_adv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_trials_world_p: Option<f64>,
    pub distinct_rollout_count: usize,
}

fn agent_ids(batch: &RolloutBatch) -> BTreeSet<AgentId> {
    batch
        .rollouts
        .first()
        .map(|r| r.agents.keys().copied().collect())
        .unwrap_or_default()
}

/// minADE restricted to `restrict` when given, otherwise over every
/// simulated agent. Errors when the batch is empty or no agent has usable
/// truth; agents without valid truth steps are skipped and reported.
pub fn compute_min_ade_filtered(
    batch: &RolloutBatch,
    truth: &GroundTruthFuture,
    restrict: Option<&BTreeSet<AgentId>>,
) -> Result<MinAdeReport, MetricsError> {
    if batch.rollouts.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let mut skipped = Vec::new();
    let mut per_agent_min = Vec::new();
    for id in agent_ids(batch) {
        if restrict.is_some_and(|set| !set.contains(&id)) {
            continue;
        }
        let Some(states) = truth.agents.get(&id) else {
            skipped.push(id);
            continue;
        };
        let valid_steps: Vec<usize> = states
            .iter()
            .enumerate()
            .filter_map(|(step, s)| s.valid.then_some(step))
            .collect();
        if valid_steps.is_empty() {
            skipped.push(id);
            continue;
        }
        let mut min_ade = f64::INFINITY;
        for rollout in &batch.rollouts {
            let pose = &rollout.agents[&id];
            if states.len() != pose.len() {
                return Err(MetricsError::HorizonMismatch {
                    id,
                    expected: pose.len(),
                    found: states.len(),
                });
            }
            let total: f64 = valid_steps
                .iter()
                .map(|&step| {
                    let p = pose.positions[step];
                    (p[0] - states[step].x).hypot(p[1] - states[step].y)
                })
                .sum();
            min_ade = min_ade.min(total / valid_steps.len() as f64);
        }
        per_agent_min.push(min_ade);
    }
    if per_agent_min.is_empty() {
        return Err(MetricsError::NoAgents);
    }
    Ok(MinAdeReport {
        value: per_agent_min.iter().sum::<f64>() / per_agent_min.len() as f64,
        skipped,
    })
}

/// minADE over all simulated agents.
pub fn compute_min_ade(
    batch: &RolloutBatch,
    truth: &GroundTruthFuture,
) -> Result<MinAdeReport, MetricsError> {
    compute_min_ade_filtered(batch, truth, None)
}

fn rollout_has_collision(rollout: &Rollout, threshold: f64, batch: &RolloutBatch) -> bool {
    if rollout.agents.len() < 2 {
        return false;
    }
    let trajectories: BTreeMap<AgentId, CandidateTrajectory> = rollout
        .agents
        .iter()
        .map(|(&id, pose)| {
            let traj = CandidateTrajectory::new(pose.positions.clone())
                .expect("rollout positions are finite and non-empty");
            (id, traj)
        })
        .collect();
    let refs: BTreeMap<AgentId, &CandidateTrajectory> =
        trajectories.iter().map(|(&id, t)| (id, t)).collect();
    detect_collision_with(
        &refs,
        threshold,
        batch.config.cad.distance_mode,
        batch.config.cad.spatial_hash,
    )
    .expect("rollout trajectories share the horizon")
    .is_some()
}

fn rollout_fingerprint(rollout: &Rollout) -> Vec<(AgentId, Vec<u64>)> {
    rollout
        .agents
        .iter()
        .map(|(&id, pose)| {
            let bits: Vec<u64> = pose
                .positions
                .iter()
                .flat_map(|p| p.iter().map(|c| c.to_bits()))
                .chain(pose.headings.iter().map(|h| h.to_bits()))
                .collect();
            (id, bits)
        })
        .collect()
}

fn mean_of(values: impl Iterator<Item = u32>) -> Option<f64> {
    let collected: Vec<u32> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().map(|&v| v as f64).sum::<f64>() / collected.len() as f64)
    }
}

/// Everything except minADE; the collision re-check runs over ALL kept
/// trajectories, cross-group pairs included, using the batch's configured
/// distance mode and the given threshold.
pub fn compute_batch_metrics(
    batch: &RolloutBatch,
    threshold: f64,
) -> Result<BatchMetrics, MetricsError> {
    if batch.rollouts.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let colliding = batch
        .rollouts
        .iter()
        .filter(|r| rollout_has_collision(r, threshold, batch))
        .count();
    let distinct: BTreeSet<Vec<(AgentId, Vec<u64>)>> = batch
        .rollouts
        .iter()
        .map(rollout_fingerprint)
        .collect();
    Ok(BatchMetrics {
        min_ade: None,
        residual_collision_rate: colliding as f64 / batch.rollouts.len() as f64,
        mean_trials_adv: mean_of(
            batch
                .rollouts
                .iter()
                .filter_map(|r| r.diagnostics.adv_trials),
        ),
        mean_trials_world_p: mean_of(
            batch
                .rollouts
                .iter()
                .filter_map(|r| r.diagnostics.world_p_trials),
        ),
        distinct_rollout_count: distinct.len(),
    })
}

fn csv_cell_f64(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV row per scenario, with a header.
pub fn metrics_to_csv(scenario_id: &str, metrics: &BatchMetrics) -> String {
    format!(
        "scenario_id,min_ade,residual_collision_rate,mean_trials_adv,mean_trials_world_p,distinct_rollout_count\n{},{},{},{},{},{}\n",
        scenario_id,
        csv_cell_f64(metrics.min_ade),
        metrics.residual_collision_rate,
        csv_cell_f64(metrics.mean_trials_adv),
        csv_cell_f64(metrics.mean_trials_world_p),
        metrics.distinct_rollout_count,
    )
}
