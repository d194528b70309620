//! Rollout orchestration: per-group prediction, group-isolated resampling,
//! heading estimation, and batch aggregation.
//!
//! One rollout runs three independent passes. The ADV-bound predictor covers
//! the ADV together with the world-p agents and its output goes through one
//! resampling pass, of which only the ADV trajectory is kept. The
//! world-p-bound predictor covers the same agent set and goes through a
//! separate resampling pass, of which only the world-p trajectories are
//! kept. World-o agents sample straight from the constant-velocity noise
//! model. Every pass draws from its own named stream, so each group's output
//! depends only on (scenario, its own binding, master seed, rollout index):
//! swapping another group's predictor cannot change it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cad::{CadConfig, CadError, cad_resample};
use crate::kinematics::{KinematicsError, PoseTrajectory, estimate_headings};
use crate::predictors::{
    GroupTag, PredictorError, PredictorOutput, SyntheticConfig, predict_constant_velocity,
    predict_from_file, predict_synthetic_multimodal,
};
use crate::scenario::{AgentId, Partition, Scenario};
use crate::streams::{StreamRng, group_stream};

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("{} predictor: {source}", group_name(*group))]
    Predictor {
        group: GroupTag,
        source: PredictorError,
    },

    #[error("{} resampling: {source}", group_name(*group))]
    Cad { group: GroupTag, source: CadError },

    #[error("heading estimation for agent {id}: {source}")]
    Kinematics {
        id: AgentId,
        source: KinematicsError,
    },

    #[error("{} predictor returned no distribution for agent {id}", group_name(*group))]
    MissingAgent { group: GroupTag, id: AgentId },

    #[error(
        "{} predictor horizon {found} does not match scenario horizon {expected} (agent {id})",
        group_name(*group)
    )]
    HorizonMismatch {
        group: GroupTag,
        id: AgentId,
        expected: usize,
        found: usize,
    },

    #[error("invalid rollout config: {0}")]
    InvalidConfig(String),

    #[error("rollout index {index} out of range for {num_rollouts} rollouts")]
    IndexOutOfRange { index: u64, num_rollouts: usize },

    #[error("rollout {index} failed: {source}")]
    BatchItem {
        index: usize,
        source: Box<RolloutError>,
    },

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("schema error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

fn group_name(group: GroupTag) -> &'static str {
    match group {
        GroupTag::AdvModel => "adv",
        GroupTag::WorldPModel => "world_p",
        GroupTag::WorldOModel => "world_o",
    }
}

/// Which implementation serves a group, in the config-file string forms
/// `"synthetic"`, `"file:<path>"`, and `"constant_velocity"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PredictorBinding {
    Synthetic,
    File(PathBuf),
    ConstantVelocity,
}

impl From<PredictorBinding> for String {
    fn from(binding: PredictorBinding) -> String {
        match binding {
            PredictorBinding::Synthetic => "synthetic".to_string(),
            PredictorBinding::File(path) => format!("file:{}", path.display()),
            PredictorBinding::ConstantVelocity => "constant_velocity".to_string(),
        }
    }
}

impl TryFrom<String> for PredictorBinding {
    type Error = String;

    fn try_from(value: String) -> Result<Self, String> {
        match value.as_str() {
            "synthetic" => Ok(PredictorBinding::Synthetic),
            "constant_velocity" => Ok(PredictorBinding::ConstantVelocity),
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(PredictorBinding::File(PathBuf::from(path))),
                _ => Err(format!(
                    "unknown predictor binding {value:?}; expected \"synthetic\", \
                     \"constant_velocity\", or \"file:<path>\""
                )),
            },
        }
    }
}

/// Per-group predictor bindings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorBindings {
    pub adv: PredictorBinding,
    pub world_p: PredictorBinding,
    pub world_o: PredictorBinding,
}

impl Default for PredictorBindings {
    fn default() -> Self {
        Self {
            adv: PredictorBinding::Synthetic,
            world_p: PredictorBinding::Synthetic,
            world_o: PredictorBinding::ConstantVelocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutConfig {
    pub num_rollouts: usize,
    /// Gaussian noise scale for the constant-velocity model.
    pub noise_scale: f64,
    pub master_seed: u64,
    pub cad: CadConfig,
    pub bindings: PredictorBindings,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            num_rollouts: 32,
            noise_scale: 0.01,
            master_seed: 0,
            cad: CadConfig::default(),
            bindings: PredictorBindings::default(),
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<(), RolloutError> {
        if self.num_rollouts < 1 {
            return Err(RolloutError::InvalidConfig(
                "num_rollouts must be at least 1".to_string(),
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(RolloutError::InvalidConfig(format!(
                "noise_scale must be finite and non-negative, got {}",
                self.noise_scale
            )));
        }
        self.cad
            .validate()
            .map_err(|e| RolloutError::InvalidConfig(e.to_string()))?;
        for (name, binding) in [("adv", &self.bindings.adv), ("world_p", &self.bindings.world_p)]
        {
            if *binding == PredictorBinding::ConstantVelocity {
                return Err(RolloutError::InvalidConfig(format!(
                    "{name} binding must be \"synthetic\" or \"file:<path>\""
                )));
            }
        }
        if self.bindings.world_o != PredictorBinding::ConstantVelocity {
            return Err(RolloutError::InvalidConfig(
                "world_o binding must be \"constant_velocity\"".to_string(),
            ));
        }
        Ok(())
    }
}

/// Load and validate a rollout config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RolloutConfig, RolloutError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| RolloutError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    let config: RolloutConfig =
        serde_json::from_str(&text).map_err(|err| RolloutError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        })?;
    config.validate()?;
    Ok(config)
}

/// Trial counts and collision outcomes of the per-group resampling passes;
/// fields are absent when the scenario has no agents in that group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adv_trials: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world_p_trials: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adv_collision_free: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world_p_collision_free: Option<bool>,
}

/// One sampled joint future for every partitioned agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub agents: BTreeMap<AgentId, PoseTrajectory>,
    pub diagnostics: RolloutDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutBatch {
    pub scenario_id: String,
    pub config: RolloutConfig,
    pub rollouts: Vec<Rollout>,
}

fn run_binding(
    binding: &PredictorBinding,
    scenario: &Scenario,
    ids: &BTreeSet<AgentId>,
    group: GroupTag,
    noise_scale: f64,
    rng: &mut StreamRng,
) -> Result<PredictorOutput, RolloutError> {
    let result = match binding {
        PredictorBinding::Synthetic => {
            predict_synthetic_multimodal(scenario, ids, &SyntheticConfig::default(), group, rng)
        }
        PredictorBinding::File(path) => predict_from_file(path, ids, group),
        PredictorBinding::ConstantVelocity => {
            predict_constant_velocity(scenario, ids, noise_scale, group, rng)
        }
    };
    let output = result.map_err(|source| RolloutError::Predictor { group, source })?;
    for &id in ids {
        let dist = output
            .per_agent
            .get(&id)
            .ok_or(RolloutError::MissingAgent { group, id })?;
        if dist.horizon() != scenario.horizon {
            return Err(RolloutError::HorizonMismatch {
                group,
                id,
                expected: scenario.horizon,
                found: dist.horizon(),
            });
        }
    }
    Ok(output)
}

fn pose_for(
    scenario: &Scenario,
    id: AgentId,
    positions: &[[f64; 3]],
) -> Result<PoseTrajectory, RolloutError> {
    let state = scenario
        .agent(id)
        .and_then(|a| a.current_state())
        .expect("partitioned agents have a current state");
    let headings = estimate_headings(state.position(), positions, state.heading)
        .map_err(|source| RolloutError::Kinematics { id, source })?;
    PoseTrajectory::new(positions.to_vec(), headings)
        .map_err(|source| RolloutError::Kinematics { id, source })
}

/// Simulate one rollout. The three groups draw from streams derived as
/// (master seed, rollout index, group), so their outputs are mutually
/// independent by construction.
pub fn simulate_one(
    scenario: &Scenario,
    partition: &Partition,
    config: &RolloutConfig,
    rollout_index: u64,
) -> Result<Rollout, RolloutError> {
    if rollout_index >= config.num_rollouts as u64 {
        return Err(RolloutError::IndexOutOfRange {
            index: rollout_index,
            num_rollouts: config.num_rollouts,
        });
    }

    let mut agents = BTreeMap::new();
    let mut diagnostics = RolloutDiagnostics::default();

    // The two model-backed groups predict over the same union so each sees
    // an anticipated future for its neighbors, then each keeps only its own
    // agents.
    let mut joint_ids: BTreeSet<AgentId> = partition.world_p.clone();
    if let Some(adv_id) = partition.adv {
        joint_ids.insert(adv_id);
    }

    if let Some(adv_id) = partition.adv {
        let mut rng = group_stream(config.master_seed, rollout_index, GroupTag::AdvModel);
        let output = run_binding(
            &config.bindings.adv,
            scenario,
            &joint_ids,
            GroupTag::AdvModel,
            config.noise_scale,
            &mut rng,
        )?;
        let result = cad_resample(&output.per_agent, &config.cad, &mut rng).map_err(|source| {
            RolloutError::Cad {
                group: GroupTag::AdvModel,
                source,
            }
        })?;
        diagnostics.adv_trials = Some(result.trials_used);
        diagnostics.adv_collision_free = Some(result.collision_free);
        let kept = &result.trajectories[&adv_id];
        agents.insert(adv_id, pose_for(scenario, adv_id, kept.positions())?);
    }

    if !partition.world_p.is_empty() {
        let mut rng = group_stream(config.master_seed, rollout_index, GroupTag::WorldPModel);
        let output = run_binding(
            &config.bindings.world_p,
            scenario,
            &joint_ids,
            GroupTag::WorldPModel,
            config.noise_scale,
            &mut rng,
        )?;
        let result = cad_resample(&output.per_agent, &config.cad, &mut rng).map_err(|source| {
            RolloutError::Cad {
                group: GroupTag::WorldPModel,
                source,
            }
        })?;
        diagnostics.world_p_trials = Some(result.trials_used);
        diagnostics.world_p_collision_free = Some(result.collision_free);
        for &id in &partition.world_p {
            let kept = &result.trajectories[&id];
            agents.insert(id, pose_for(scenario, id, kept.positions())?);
        }
    }

    if !partition.world_o.is_empty() {
        let mut rng = group_stream(config.master_seed, rollout_index, GroupTag::WorldOModel);
        let output = run_binding(
            &config.bindings.world_o,
            scenario,
            &partition.world_o,
            GroupTag::WorldOModel,
            config.noise_scale,
            &mut rng,
        )?;
        for &id in &partition.world_o {
            // Single-mode distribution: the noisy extrapolation is the sample.
            let positions = output.per_agent[&id].modes()[0].positions();
            agents.insert(id, pose_for(scenario, id, positions)?);
        }
    }

    debug_assert_eq!(
        agents.keys().copied().collect::<BTreeSet<_>>(),
        partition.all_ids()
    );
    Ok(Rollout {
        agents,
        diagnostics,
    })
}

/// Simulate the full batch. Rollouts are independent work items; execution
/// order never affects the result, and the batch is a pure function of
/// (scenario, config).
pub fn simulate_batch(
    scenario: &Scenario,
    config: &RolloutConfig,
) -> Result<RolloutBatch, RolloutError> {
    config.validate()?;
    scenario
        .validate()
        .map_err(|e| RolloutError::InvalidConfig(e.to_string()))?;
    let partition = crate::scenario::partition_agents(scenario);

    let results: Vec<Result<Rollout, RolloutError>> = (0..config.num_rollouts as u64)
        .into_par_iter()
        .map(|index| simulate_one(scenario, &partition, config, index))
        .collect();

    let mut rollouts = Vec::with_capacity(results.len());
    for (index, result) in results.into_iter().enumerate() {
        match result {
            Ok(rollout) => rollouts.push(rollout),
            Err(source) => {
                return Err(RolloutError::BatchItem {
                    index,
                    source: Box::new(source),
                });
            }
        }
    }
    Ok(RolloutBatch {
        scenario_id: scenario.scenario_id.clone(),
        config: config.clone(),
        rollouts,
    })
}

/// Compact JSON for batch files; a fixed field order and sorted agent maps
/// make equal batches serialize to identical bytes.
pub fn batch_to_json(batch: &RolloutBatch) -> String {
    serde_json::to_string(batch).expect("batch serialization cannot fail")
}

pub fn save_batch(path: impl AsRef<Path>, batch: &RolloutBatch) -> Result<(), RolloutError> {
    std::fs::write(path.as_ref(), batch_to_json(batch)).map_err(|source| RolloutError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}

/// Load a batch file, checking rollout count and per-agent length agreement.
pub fn load_batch(path: impl AsRef<Path>) -> Result<RolloutBatch, RolloutError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| RolloutError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    let batch: RolloutBatch =
        serde_json::from_str(&text).map_err(|err| RolloutError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        })?;
    if batch.rollouts.len() != batch.config.num_rollouts {
        return Err(RolloutError::InvalidConfig(format!(
            "batch holds {} rollouts but config says {}",
            batch.rollouts.len(),
            batch.config.num_rollouts
        )));
    }
    for rollout in &batch.rollouts {
        for (id, pose) in &rollout.agents {
            if pose.positions.len() != pose.headings.len() {
                return Err(RolloutError::InvalidConfig(format!(
                    "agent {id}: positions and headings differ in length"
                )));
            }
        }
    }
    Ok(batch)
}
