//! Multi-modal future-trajectory predictors.
//!
//! Three interchangeable sources produce the same output shape, a set of
//! candidate trajectories with a categorical probability vector per agent:
//!
//! * [`predict_constant_velocity`]: linear extrapolation of the current
//!   velocity with scaled unit Gaussian noise added per coordinate per step
//!   (noise scale `k`, default 0.01). Single mode, probability 1.
//! * [`predict_synthetic_multimodal`]: six closed-form kinematic templates
//!   (straight, low/high yaw-rate arcs both ways, braking) with a fixed
//!   softmax over template priors. Stands in for a learned predictor.
//! * [`predict_from_file`]: distributions exported offline, loaded verbatim.
//!
//! All predictors are pure functions of their inputs and the stream state:
//! repeat calls with equal seeds are bit-identical. Random draws happen in
//! ascending agent-id order, then step order, then coordinate order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{AgentId, Scenario};
use crate::streams::StreamRng;

/// Probability vectors must sum to one within this tolerance once a
/// distribution is constructed.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Prediction files may be off by this much before renormalization; anything
/// worse is a validation error.
pub const FILE_PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("agent {0} not present in scenario")]
    UnknownAgent(AgentId),

    #[error("agent {0}: current state invalid")]
    InvalidCurrentState(AgentId),

    #[error("noise scale must be finite and non-negative, got {0}")]
    InvalidNoiseScale(f64),

    #[error("no prediction for agent {0}")]
    MissingPrediction(AgentId),

    #[error("invalid distribution{}: {reason}", id.map(|i| format!(" for agent {i}")).unwrap_or_default())]
    InvalidDistribution { id: Option<AgentId>, reason: String },

    #[error("mode count must be between 1 and 6, got {0}")]
    InvalidModeCount(usize),

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("prediction schema error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Which group a predictor output was produced for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTag {
    AdvModel,
    WorldPModel,
    WorldOModel,
}

/// One candidate future: T center positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateTrajectory {
    positions: Vec<[f64; 3]>,
}

impl CandidateTrajectory {
    pub fn new(positions: Vec<[f64; 3]>) -> Result<Self, PredictorError> {
        if positions.is_empty() {
            return Err(PredictorError::InvalidDistribution {
                id: None,
                reason: "trajectory has zero steps".to_string(),
            });
        }
        if let Some(step) = positions
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(PredictorError::InvalidDistribution {
                id: None,
                reason: format!("non-finite coordinate at step {step}"),
            });
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// K candidate trajectories with a categorical probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDistribution {
    modes: Vec<CandidateTrajectory>,
    probs: Vec<f64>,
}

impl TrajectoryDistribution {
    pub fn new(modes: Vec<CandidateTrajectory>, probs: Vec<f64>) -> Result<Self, PredictorError> {
        let invalid = |reason: String| PredictorError::InvalidDistribution { id: None, reason };
        if modes.is_empty() {
            return Err(invalid("distribution has no modes".to_string()));
        }
        if modes.len() != probs.len() {
            return Err(invalid(format!(
                "{} modes but {} probabilities",
                modes.len(),
                probs.len()
            )));
        }
        let horizon = modes[0].len();
        if modes.iter().any(|m| m.len() != horizon) {
            return Err(invalid("modes differ in length".to_string()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid(format!("probability {p} is negative or non-finite")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self { modes, probs })
    }

    pub fn modes(&self) -> &[CandidateTrajectory] {
        &self.modes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Steps per mode.
    pub fn horizon(&self) -> usize {
        self.modes[0].len()
    }
}

/// Per-agent distributions tagged with the group they were produced for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorOutput {
    pub group_tag: GroupTag,
    pub per_agent: BTreeMap<AgentId, TrajectoryDistribution>,
}

/// A predictor bound to a group: anything that maps (scenario, agent set,
/// random stream) to per-agent trajectory distributions.
pub trait MotionPredictor {
    fn predict(
        &self,
        scenario: &Scenario,
        ids: &BTreeSet<AgentId>,
        group: GroupTag,
        rng: &mut StreamRng,
    ) -> Result<PredictorOutput, PredictorError>;
}

fn current_state_checked(
    scenario: &Scenario,
    id: AgentId,
) -> Result<&crate::scenario::AgentState, PredictorError> {
    let agent = scenario.agent(id).ok_or(PredictorError::UnknownAgent(id))?;
    match agent.current_state() {
        Some(state) if state.valid => Ok(state),
        _ => Err(PredictorError::InvalidCurrentState(id)),
    }
}

/// Linear extrapolation of each agent's current velocity, with `noise_scale`
/// times unit Gaussian noise added to every coordinate of every step. The z
/// coordinate holds the current value (plus noise). With `noise_scale == 0`
/// the output is the exact extrapolation formula, bit for bit, and the
/// stream is left untouched.
pub fn predict_constant_velocity(
    scenario: &Scenario,
    ids: &BTreeSet<AgentId>,
    noise_scale: f64,
    group: GroupTag,
    rng: &mut StreamRng,
) -> Result<PredictorOutput, PredictorError> {
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(PredictorError::InvalidNoiseScale(noise_scale));
    }
    let mut per_agent = BTreeMap::new();
    for &id in ids {
        let state = current_state_checked(scenario, id)?;
        let mut positions = Vec::with_capacity(scenario.horizon);
        for step in 1..=scenario.horizon {
            let elapsed = step as f64 * scenario.dt;
            let mut pos = [
                state.x + state.vx * elapsed,
                state.y + state.vy * elapsed,
                state.z,
            ];
            if noise_scale > 0.0 {
                for coord in &mut pos {
                    let n: f64 = StandardNormal.sample(rng);
                    *coord += noise_scale * n;
                }
            }
            positions.push(pos);
        }
        let mode = CandidateTrajectory::new(positions)?;
        per_agent.insert(id, TrajectoryDistribution::new(vec![mode], vec![1.0])?);
    }
    Ok(PredictorOutput {
        group_tag: group,
        per_agent,
    })
}

/// Template parameters for the synthetic multi-modal predictor. The six
/// templates are, in order: straight constant velocity, low yaw-rate arcs
/// left and right, high yaw-rate arcs left and right, and a braking profile
/// that ramps speed to zero over `braking_frac` of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// How many of the six templates to emit (softmax renormalizes).
    pub mode_count: usize,
    /// Gentle arc yaw rate, rad/s.
    pub yaw_rate_low: f64,
    /// Sharp arc yaw rate, rad/s.
    pub yaw_rate_high: f64,
    /// Fraction of the horizon over which the braking template stops.
    pub braking_frac: f64,
    /// Unnormalized log-priors, one per template.
    pub template_logits: [f64; 6],
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            mode_count: 6,
            yaw_rate_low: 0.15,
            yaw_rate_high: 0.5,
            braking_frac: 0.5,
            template_logits: [1.5, 0.5, 0.5, -0.5, -0.5, 0.0],
        }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Speed multiplier of template `template` at 1-based step `step`.
fn template_speed_scale(template: usize, step: usize, horizon: usize, config: &SyntheticConfig) -> f64 {
    if template == 5 {
        let stop_after = config.braking_frac * horizon as f64;
        (1.0 - step as f64 / stop_after).max(0.0)
    } else {
        1.0
    }
}

fn template_yaw_rate(template: usize, config: &SyntheticConfig) -> f64 {
    match template {
        1 => config.yaw_rate_low,
        2 => -config.yaw_rate_low,
        3 => config.yaw_rate_high,
        4 => -config.yaw_rate_high,
        _ => 0.0,
    }
}

/// Six deterministic kinematic templates per agent, probabilities from a
/// fixed softmax over the configured priors. Closed-form in the scenario and
/// config; the stream argument keeps the predictor signature uniform but no
/// draws are consumed, so equal inputs are bit-identical regardless of seed.
/// Every template's displacement scales with current speed, so an agent at
/// rest stays exactly at its start position in all modes.
pub fn predict_synthetic_multimodal(
    scenario: &Scenario,
    ids: &BTreeSet<AgentId>,
    config: &SyntheticConfig,
    group: GroupTag,
    _rng: &mut StreamRng,
) -> Result<PredictorOutput, PredictorError> {
    if config.mode_count == 0 || config.mode_count > 6 {
        return Err(PredictorError::InvalidModeCount(config.mode_count));
    }
    let probs = softmax(&config.template_logits[..config.mode_count]);
    let mut per_agent = BTreeMap::new();
    for &id in ids {
        let state = current_state_checked(scenario, id)?;
        let speed = state.vx.hypot(state.vy);
        let course = if speed > 0.0 {
            state.vy.atan2(state.vx)
        } else {
            0.0
        };
        let mut modes = Vec::with_capacity(config.mode_count);
        for template in 0..config.mode_count {
            let yaw_rate = template_yaw_rate(template, config);
            let mut positions = Vec::with_capacity(scenario.horizon);
            let mut pos = [state.x, state.y, state.z];
            let mut heading = course;
            for step in 1..=scenario.horizon {
                let step_speed =
                    speed * template_speed_scale(template, step, scenario.horizon, config);
                pos[0] += step_speed * scenario.dt * heading.cos();
                pos[1] += step_speed * scenario.dt * heading.sin();
                positions.push(pos);
                heading += yaw_rate * scenario.dt;
            }
            modes.push(CandidateTrajectory::new(positions)?);
        }
        per_agent.insert(id, TrajectoryDistribution::new(modes, probs.clone())?);
    }
    Ok(PredictorOutput {
        group_tag: group,
        per_agent,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionEntry {
    probs: Vec<f64>,
    modes: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionFile {
    agents: BTreeMap<AgentId, PredictionEntry>,
}

/// Load per-agent distributions exported offline.
///
/// Distributions come back exactly as stored when their probabilities sum to
/// one within 1e-9; sums off by up to 1e-6 are renormalized, anything worse
/// is rejected. Requested ids without an entry are an error; extra entries
/// in the file are ignored.
pub fn predict_from_file(
    path: impl AsRef<Path>,
    ids: &BTreeSet<AgentId>,
    group: GroupTag,
) -> Result<PredictorOutput, PredictorError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PredictorError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: PredictionFile =
        serde_json::from_str(&text).map_err(|err| PredictorError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        })?;

    let mut per_agent = BTreeMap::new();
    for &id in ids {
        let entry = file
            .agents
            .get(&id)
            .ok_or(PredictorError::MissingPrediction(id))?;
        let sum: f64 = entry.probs.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > FILE_PROB_SUM_TOLERANCE {
            return Err(PredictorError::InvalidDistribution {
                id: Some(id),
                reason: format!("probabilities sum to {sum}, expected 1 within 1e-6"),
            });
        }
        let probs: Vec<f64> = if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            entry.probs.iter().map(|p| p / sum).collect()
        } else {
            entry.probs.clone()
        };
        let modes = entry
            .modes
            .iter()
            .map(|positions| CandidateTrajectory::new(positions.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| tag_agent(e, id))?;
        per_agent.insert(
            id,
            TrajectoryDistribution::new(modes, probs).map_err(|e| tag_agent(e, id))?,
        );
    }
    Ok(PredictorOutput {
        group_tag: group,
        per_agent,
    })
}

fn tag_agent(err: PredictorError, id: AgentId) -> PredictorError {
    match err {
        PredictorError::InvalidDistribution { id: None, reason } => {
            PredictorError::InvalidDistribution {
                id: Some(id),
                reason,
            }
        }
        other => other,
    }
}

/// Serialize an output in the prediction-file schema.
pub fn prediction_output_to_json(output: &PredictorOutput) -> String {
    let file = PredictionFile {
        agents: output
            .per_agent
            .iter()
            .map(|(&id, dist)| {
                (
                    id,
                    PredictionEntry {
                        probs: dist.probs().to_vec(),
                        modes: dist
                            .modes()
                            .iter()
                            .map(|m| m.positions().to_vec())
                            .collect(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("prediction serialization cannot fail")
}

/// Write an output as a prediction file loadable by [`predict_from_file`].
pub fn save_prediction_file(
    path: impl AsRef<Path>,
    output: &PredictorOutput,
) -> Result<(), PredictorError> {
    std::fs::write(path.as_ref(), prediction_output_to_json(output)).map_err(|source| {
        PredictorError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    })
}

/// Constant-velocity predictor with configurable noise scale.
#[derive(Debug, Clone)]
pub struct ConstantVelocityPredictor {
    pub noise_scale: f64,
}

impl MotionPredictor for ConstantVelocityPredictor {
    fn predict(
        &self,
        scenario: &Scenario,
        ids: &BTreeSet<AgentId>,
        group: GroupTag,
        rng: &mut StreamRng,
    ) -> Result<PredictorOutput, PredictorError> {
        predict_constant_velocity(scenario, ids, self.noise_scale, group, rng)
    }
}

/// Template-based multi-modal predictor.
#[derive(Debug, Clone, Default)]
pub struct SyntheticPredictor {
    pub config: SyntheticConfig,
}

impl MotionPredictor for SyntheticPredictor {
    fn predict(
        &self,
        scenario: &Scenario,
        ids: &BTreeSet<AgentId>,
        group: GroupTag,
        rng: &mut StreamRng,
    ) -> Result<PredictorOutput, PredictorError> {
        predict_synthetic_multimodal(scenario, ids, &self.config, group, rng)
    }
}

/// File-backed predictor; reads the file on every call so bindings stay
/// cheap to construct.
#[derive(Debug, Clone)]
pub struct FilePredictor {
    pub path: std::path::PathBuf,
}

impl MotionPredictor for FilePredictor {
    fn predict(
        &self,
        _scenario: &Scenario,
        ids: &BTreeSet<AgentId>,
        group: GroupTag,
        _rng: &mut StreamRng,
    ) -> Result<PredictorOutput, PredictorError> {
        predict_from_file(&self.path, ids, group)
    }
}
