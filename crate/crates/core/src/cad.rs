//! Collision-avoidance detour resampling.
//!
//! Each trial draws every agent's trajectory mode independently from its
//! categorical distribution, then checks all agent pairs for a center
//! distance below the threshold at any step. A collision-free draw returns
//! immediately; otherwise all agents are redrawn, up to the trial budget.
//! Hitting the budget returns the final draw along with whether it happened
//! to be collision-free.
//!
//! Mode draws consume one uniform value per agent, in ascending agent-id
//! order, then trial order, so a run is fully determined by the input
//! distributions and the stream seed.
//!
//! Collisions compare center positions only; agent extents are ignored. The
//! comparison is done in squared space (`|a-b|^2 < threshold^2`), which is
//! how both the plain scan and the spatial-hash path evaluate it, so the two
//! agree bit-for-bit on boundary cases.

use std::collections::{BTreeMap, HashMap};

use rand::RngExt as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictors::{CandidateTrajectory, TrajectoryDistribution};
use crate::scenario::AgentId;
use crate::streams::StreamRng;

/// Above this ratio of coordinate magnitude to threshold, grid-cell indices
/// lose integer precision, so detection falls back to the plain scan.
const HASH_PRECISION_LIMIT: f64 = (1u64 << 40) as f64;

#[derive(Debug, Error)]
pub enum CadError {
    #[error("no agents to resample")]
    EmptyAgentSet,

    #[error("agent {id}: trajectory length {found} does not match expected {expected}")]
    MismatchedLengths {
        id: AgentId,
        expected: usize,
        found: usize,
    },

    #[error("invalid resampling config: {0}")]
    InvalidConfig(String),
}

/// Which coordinates participate in the center-distance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DistanceMode {
    #[default]
    #[serde(rename = "3d")]
    ThreeD,
    #[serde(rename = "xy")]
    Xy,
}

/// Resampling parameters. The defaults are a budget of 10 trials and a
/// 0.1 m center-distance threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CadConfig {
    pub max_trials: u32,
    pub collision_threshold: f64,
    pub distance_mode: DistanceMode,
    pub spatial_hash: bool,
    /// Stream seed for standalone use; the rollout engine derives per-group
    /// streams from its master seed instead.
    pub seed: u64,
}

impl Default for CadConfig {
    fn default() -> Self {
        Self {
            max_trials: 10,
            collision_threshold: 0.1,
            distance_mode: DistanceMode::ThreeD,
            spatial_hash: false,
            seed: 0,
        }
    }
}

impl CadConfig {
    pub fn validate(&self) -> Result<(), CadError> {
        if self.max_trials < 1 {
            return Err(CadError::InvalidConfig(
                "max_trials must be at least 1".to_string(),
            ));
        }
        if !(self.collision_threshold.is_finite() && self.collision_threshold > 0.0) {
            return Err(CadError::InvalidConfig(format!(
                "collision_threshold must be finite and positive, got {}",
                self.collision_threshold
            )));
        }
        Ok(())
    }
}

/// The first colliding step and agent pair, in (step, first, second) scan
/// order with `first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionWitness {
    pub step: usize,
    pub first: AgentId,
    pub second: AgentId,
}

/// Outcome of one resampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CadResult {
    /// Mode index drawn for each agent on the returned trial.
    pub selected_mode: BTreeMap<AgentId, usize>,
    /// The trajectories named by `selected_mode`.
    pub trajectories: BTreeMap<AgentId, CandidateTrajectory>,
    /// Trials consumed, in `1..=max_trials`.
    pub trials_used: u32,
    /// Whether the returned joint sample is collision-free.
    pub collision_free: bool,
}

fn squared_distance(a: &[f64; 3], b: &[f64; 3], mode: DistanceMode) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    match mode {
        DistanceMode::ThreeD => {
            let dz = a[2] - b[2];
            dx * dx + dy * dy + dz * dz
        }
        DistanceMode::Xy => dx * dx + dy * dy,
    }
}

fn check_lengths(trajectories: &BTreeMap<AgentId, &CandidateTrajectory>) -> Result<usize, CadError> {
    let mut iter = trajectories.iter();
    let (_, first) = iter.next().ok_or(CadError::EmptyAgentSet)?;
    let expected = first.len();
    for (&id, traj) in iter {
        if traj.len() != expected {
            return Err(CadError::MismatchedLengths {
                id,
                expected,
                found: traj.len(),
            });
        }
    }
    Ok(expected)
}

fn scan_pairwise(
    agents: &[(AgentId, &CandidateTrajectory)],
    threshold_sq: f64,
    mode: DistanceMode,
    horizon: usize,
) -> Option<CollisionWitness> {
    for step in 0..horizon {
        for (qi, (q_id, q_traj)) in agents.iter().enumerate() {
            let q_pos = &q_traj.positions()[step];
            for (r_id, r_traj) in &agents[qi + 1..] {
                if squared_distance(q_pos, &r_traj.positions()[step], mode) < threshold_sq {
                    return Some(CollisionWitness {
                        step,
                        first: *q_id,
                        second: *r_id,
                    });
                }
            }
        }
    }
    None
}

fn cell_key(pos: &[f64; 3], cell_size: f64, mode: DistanceMode) -> (i64, i64, i64) {
    let k = |c: f64| (c / cell_size).floor() as i64;
    match mode {
        DistanceMode::ThreeD => (k(pos[0]), k(pos[1]), k(pos[2])),
        DistanceMode::Xy => (k(pos[0]), k(pos[1]), 0),
    }
}

fn scan_spatial_hash(
    agents: &[(AgentId, &CandidateTrajectory)],
    threshold: f64,
    threshold_sq: f64,
    mode: DistanceMode,
    horizon: usize,
) -> Option<CollisionWitness> {
    let z_range = match mode {
        DistanceMode::ThreeD => -1i64..=1,
        DistanceMode::Xy => 0i64..=0,
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for step in 0..horizon {
        grid.clear();
        for (index, (_, traj)) in agents.iter().enumerate() {
            grid.entry(cell_key(&traj.positions()[step], threshold, mode))
                .or_default()
                .push(index);
        }
        // Agents are indexed in ascending id order, so the first index with
        // any hit, paired with its smallest hit, is the lexicographic-first
        // witness, identical to the plain scan.
        for (qi, (q_id, q_traj)) in agents.iter().enumerate() {
            let q_pos = &q_traj.positions()[step];
            let (cx, cy, cz) = cell_key(q_pos, threshold, mode);
            let mut best: Option<usize> = None;
            for dx in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dz in z_range.clone() {
                        let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        for &ri in bucket {
                            if ri <= qi || best.is_some_and(|b| b <= ri) {
                                continue;
                            }
                            let r_pos = &agents[ri].1.positions()[step];
                            if squared_distance(q_pos, r_pos, mode) < threshold_sq {
                                best = Some(ri);
                            }
                        }
                    }
                }
            }
            if let Some(ri) = best {
                return Some(CollisionWitness {
                    step,
                    first: *q_id,
                    second: agents[ri].0,
                });
            }
        }
    }
    None
}

/// Full-control collision check: distance mode and spatial-hash selection.
///
/// Returns `Ok(None)` when no two distinct agents ever come within
/// `threshold` of each other, otherwise the first witness in (step, first,
/// second) lexicographic order.
pub fn detect_collision_with(
    trajectories: &BTreeMap<AgentId, &CandidateTrajectory>,
    threshold: f64,
    mode: DistanceMode,
    spatial_hash: bool,
) -> Result<Option<CollisionWitness>, CadError> {
    let horizon = check_lengths(trajectories)?;
    if threshold <= 0.0 {
        // Squared distance is never below zero, so no pair can collide.
        return Ok(None);
    }
    let agents: Vec<(AgentId, &CandidateTrajectory)> =
        trajectories.iter().map(|(&id, &t)| (id, t)).collect();

    let max_coord = agents
        .iter()
        .flat_map(|(_, t)| t.positions().iter())
        .flat_map(|p| p.iter())
        .fold(0.0f64, |acc, c| acc.max(c.abs()));
    let hash_usable = max_coord / threshold < HASH_PRECISION_LIMIT;

    Ok(if spatial_hash && hash_usable {
        scan_spatial_hash(&agents, threshold, threshold * threshold, mode, horizon)
    } else {
        scan_pairwise(&agents, threshold * threshold, mode, horizon)
    })
}

/// 3-D center-distance collision check over all agent pairs and steps.
pub fn detect_collision(
    trajectories: &BTreeMap<AgentId, &CandidateTrajectory>,
    threshold: f64,
) -> Result<Option<CollisionWitness>, CadError> {
    detect_collision_with(trajectories, threshold, DistanceMode::ThreeD, false)
}

/// Draw one mode index from the distribution's categorical probabilities,
/// consuming exactly one uniform value.
fn sample_mode(dist: &TrajectoryDistribution, rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut fallback = 0;
    for (index, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 {
            fallback = index;
        }
        acc += p;
        if u < acc {
            return index;
        }
    }
    // The cumulative sum can fall a hair short of 1; land on the last mode
    // that has any probability mass.
    fallback
}

/// Sample a joint collision-free future by rejection, or the final trial's
/// draw once the budget is spent.
pub fn cad_resample(
    dists: &BTreeMap<AgentId, TrajectoryDistribution>,
    config: &CadConfig,
    rng: &mut StreamRng,
) -> Result<CadResult, CadError> {
    if dists.is_empty() {
        return Err(CadError::EmptyAgentSet);
    }
    if config.max_trials < 1 {
        return Err(CadError::InvalidConfig(
            "max_trials must be at least 1".to_string(),
        ));
    }
    if !(config.collision_threshold.is_finite() && config.collision_threshold >= 0.0) {
        return Err(CadError::InvalidConfig(format!(
            "collision_threshold must be finite and non-negative, got {}",
            config.collision_threshold
        )));
    }

    for trial in 1..=config.max_trials {
        let selected_mode: BTreeMap<AgentId, usize> = dists
            .iter()
            .map(|(&id, dist)| (id, sample_mode(dist, rng)))
            .collect();
        let drawn: BTreeMap<AgentId, &CandidateTrajectory> = selected_mode
            .iter()
            .map(|(&id, &mode)| (id, &dists[&id].modes()[mode]))
            .collect();
        let witness = detect_collision_with(
            &drawn,
            config.collision_threshold,
            config.distance_mode,
            config.spatial_hash,
        )?;
        if witness.is_none() || trial == config.max_trials {
            let trajectories = drawn
                .into_iter()
                .map(|(id, traj)| (id, traj.clone()))
                .collect();
            return Ok(CadResult {
                selected_mode,
                trajectories,
                trials_used: trial,
                collision_free: witness.is_none(),
            });
        }
    }
    unreachable!("loop always returns by the final trial")
}
