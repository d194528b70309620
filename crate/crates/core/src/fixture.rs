//! Deterministic synthetic scenario generation for tests and demos.

use rand::RngExt as _;
use rand::SeedableRng as _;

use crate::kinematics::wrap_angle;
use crate::scenario::{Agent, AgentId, AgentKind, AgentState, Scenario};
use crate::streams::StreamRng;

/// Generation parameters. The defaults mirror a 1.1 s history and an 8 s
/// horizon at 10 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub agents: usize,
    pub seed: u64,
    pub history_len: usize,
    pub horizon: usize,
    pub dt: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            agents: 8,
            seed: 0,
            history_len: 11,
            horizon: 80,
            dt: 0.1,
        }
    }
}

fn kind_for(index: usize) -> AgentKind {
    match index % 3 {
        0 => AgentKind::Vehicle,
        1 => AgentKind::Pedestrian,
        _ => AgentKind::Cyclist,
    }
}

fn speed_range(kind: AgentKind) -> std::ops::Range<f64> {
    match kind {
        AgentKind::Vehicle => 3.0..15.0,
        AgentKind::Pedestrian => 0.5..2.0,
        AgentKind::Cyclist => 1.0..6.0,
    }
}

fn extents(kind: AgentKind) -> (f64, f64, f64) {
    match kind {
        AgentKind::Vehicle => (4.5, 2.0, 1.6),
        AgentKind::Pedestrian => (0.6, 0.6, 1.8),
        AgentKind::Cyclist => (1.8, 0.7, 1.7),
    }
}

/// Build a scenario with `config.agents` agents: agent 0 is the ADV, every
/// id congruent to 1 mod 3 gets the prediction flag, and histories are
/// backward constant-velocity extrapolations of a random current state.
/// In scenarios with at least six agents, agent 2 is invalid at the current
/// step so the validity rule gets exercised end to end.
pub fn generate_scenario(config: &FixtureConfig) -> Scenario {
    let mut rng = StreamRng::seed_from_u64(config.seed);
    let mut agents = Vec::with_capacity(config.agents);
    for index in 0..config.agents {
        let kind = if index == 0 {
            AgentKind::Vehicle
        } else {
            kind_for(index)
        };
        let (length, width, height) = extents(kind);
        let x0: f64 = rng.random_range(-40.0..40.0);
        let y0: f64 = rng.random_range(-40.0..40.0);
        let heading = wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let speed = rng.random_range(speed_range(kind));
        let vx = speed * heading.cos();
        let vy = speed * heading.sin();

        let invalid_current = config.agents >= 6 && index == 2;
        let past: Vec<AgentState> = (0..config.history_len)
            .map(|step| {
                let back = (config.history_len - 1 - step) as f64;
                let valid = !(invalid_current && step == config.history_len - 1);
                AgentState {
                    x: x0 - vx * back * config.dt,
                    y: y0 - vy * back * config.dt,
                    z: 0.0,
                    heading,
                    vx,
                    vy,
                    valid,
                }
            })
            .collect();

        agents.push(Agent {
            id: AgentId(index as u64),
            kind,
            length,
            width,
            height,
            is_adv: index == 0,
            tracks_to_predict: index != 0 && index % 3 == 1,
            past,
        });
    }
    Scenario {
        scenario_id: format!("fixture-{}-{}", config.agents, config.seed),
        history_len: config.history_len,
        horizon: config.horizon,
        dt: config.dt,
        agents,
    }
}
