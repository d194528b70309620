//! Scenario data model, JSON loading, validation, and agent partitioning.
//!
//! A scenario carries static metadata plus every agent's past states. Valid
//! agents split into three mutually exclusive groups: the single autonomous
//! vehicle (`adv`), agents flagged for prediction (`world_p`), and everything
//! else (`world_o`). Validity is evaluated at the current step, i.e. the last
//! history entry; agents invalid there are simulated by no group.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
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

    #[error("validation error: {0}")]
    Validation(String),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(err: serde_json::Error) -> Self {
        ScenarioError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// Unique non-negative agent identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Vehicle,
    Pedestrian,
    Cyclist,
}

/// One observed state of an agent at a single history step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Radians in `(-pi, pi]` whenever `valid` is true.
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub valid: bool,
}

impl AgentState {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agent {
    pub id: AgentId,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub is_adv: bool,
    pub tracks_to_predict: bool,
    /// Exactly `history_len` entries; the last one is the current state.
    pub past: Vec<AgentState>,
}

impl Agent {
    /// State at the current step (last history entry).
    pub fn current_state(&self) -> Option<&AgentState> {
        self.past.last()
    }

    /// Whether this agent participates in simulation at all.
    pub fn is_currently_valid(&self) -> bool {
        self.current_state().is_some_and(|s| s.valid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario_id: String,
    /// History steps per agent (H), at least 2.
    pub history_len: usize,
    /// Prediction steps (T), at least 1.
    pub horizon: usize,
    /// Seconds per step, positive.
    pub dt: f64,
    pub agents: Vec<Agent>,
}

/// The three mutually exclusive agent groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub adv: Option<AgentId>,
    pub world_p: BTreeSet<AgentId>,
    pub world_o: BTreeSet<AgentId>,
}

impl Partition {
    /// All partitioned agent ids, across the three groups.
    pub fn all_ids(&self) -> BTreeSet<AgentId> {
        let mut ids: BTreeSet<AgentId> = self.world_p.union(&self.world_o).copied().collect();
        if let Some(adv) = self.adv {
            ids.insert(adv);
        }
        ids
    }
}

impl Scenario {
    pub fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// Check every structural invariant, naming the offending agent and rule.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Validation(msg));

        if self.history_len < 2 {
            return fail(format!(
                "history_len must be at least 2, got {}",
                self.history_len
            ));
        }
        if self.horizon < 1 {
            return fail("horizon must be at least 1".to_string());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return fail(format!("dt must be finite and positive, got {}", self.dt));
        }

        let mut seen = HashSet::new();
        let mut adv_count = 0usize;
        for agent in &self.agents {
            if !seen.insert(agent.id) {
                return fail(format!("duplicate id {}", agent.id));
            }
            if agent.is_adv {
                adv_count += 1;
                if adv_count > 1 {
                    return fail(format!(
                        "agent {}: more than one agent has is_adv set",
                        agent.id
                    ));
                }
            }
            if agent.past.len() != self.history_len {
                return fail(format!(
                    "agent {}: past has {} entries, expected history_len {}",
                    agent.id,
                    agent.past.len(),
                    self.history_len
                ));
            }
            for dim in [agent.length, agent.width, agent.height] {
                if !dim.is_finite() {
                    return fail(format!("agent {}: non-finite extent", agent.id));
                }
            }
            for (step, state) in agent.past.iter().enumerate() {
                if !state.valid {
                    continue;
                }
                for (name, value) in [
                    ("x", state.x),
                    ("y", state.y),
                    ("z", state.z),
                    ("vx", state.vx),
                    ("vy", state.vy),
                ] {
                    if !value.is_finite() {
                        return fail(format!(
                            "agent {}: non-finite {name} in valid state at step {step}",
                            agent.id
                        ));
                    }
                }
                if !state.heading.is_finite()
                    || state.heading <= -std::f64::consts::PI
                    || state.heading > std::f64::consts::PI
                {
                    return fail(format!(
                        "agent {}: heading {} outside (-pi, pi] in valid state at step {step}",
                        agent.id, state.heading
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        std::fs::write(path.as_ref(), self.to_json()).map_err(|source| ScenarioError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })
    }
}

/// Parse and validate a scenario from a JSON string.
pub fn parse_scenario(json: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(json)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Load and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| ScenarioError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Split currently-valid agents into the three groups.
///
/// `is_adv` wins over `tracks_to_predict` when both flags are set, keeping
/// the ADV group a singleton. Agents whose current state is invalid appear
/// in no group.
pub fn partition_agents(scenario: &Scenario) -> Partition {
    let mut partition = Partition {
        adv: None,
        world_p: BTreeSet::new(),
        world_o: BTreeSet::new(),
    };
    for agent in &scenario.agents {
        if !agent.is_currently_valid() {
            continue;
        }
        if agent.is_adv {
            partition.adv = Some(agent.id);
        } else if agent.tracks_to_predict {
            partition.world_p.insert(agent.id);
        } else {
            partition.world_o.insert(agent.id);
        }
    }
    partition
}
