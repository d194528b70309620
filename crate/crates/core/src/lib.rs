//! Multi-agent trajectory rollout engine.
//!
//! The pipeline partitions a scenario's agents into three mutually exclusive
//! groups (the single autonomous vehicle, the flagged world agents, and all
//! other valid agents), forecasts each group with an independently bound
//! motion predictor, enforces intra-group collision avoidance by rejection
//! resampling, derives headings from the sampled positions, and aggregates
//! everything into batches of seed-reproducible rollouts.
//!
//! Cross-group conditional independence is structural: every
//! (rollout, group) pair draws from its own random stream, so swapping one
//! group's predictor can never perturb another group's output.

pub mod cad;
pub mod fixture;
pub mod kinematics;
pub mod metrics;
pub mod predictors;
pub mod rollout;
pub mod scenario;
pub mod streams;

pub use cad::{CadConfig, CadError, CadResult, CollisionWitness, DistanceMode};
pub use kinematics::{KinematicsError, PoseTrajectory};
pub use metrics::{BatchMetrics, GroundTruthFuture, MetricsError, MinAdeReport};
pub use predictors::{
    CandidateTrajectory, GroupTag, MotionPredictor, PredictorError, PredictorOutput,
    SyntheticConfig, TrajectoryDistribution,
};
pub use rollout::{
    PredictorBinding, Rollout, RolloutBatch, RolloutConfig, RolloutDiagnostics, RolloutError,
};
pub use scenario::{Agent, AgentId, AgentKind, AgentState, Partition, Scenario, ScenarioError};
pub use streams::StreamRng;
