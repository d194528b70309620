//! Velocity-based heading estimation over predicted position sequences.
//!
//! Headings come from the quadrant-correct arctangent of consecutive xy
//! displacements. The first predicted step differences against the last
//! observed position, and steps whose displacement falls below
//! [`MIN_DISPLACEMENT`] carry the previous heading forward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Displacements shorter than this (meters) carry the previous heading.
pub const MIN_DISPLACEMENT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("non-finite input at step {step}")]
    NonFiniteInput { step: usize },

    #[error("non-finite reference heading {value}")]
    NonFiniteHeading { value: f64 },

    #[error("positions ({positions}) and headings ({headings}) differ in length")]
    LengthMismatch { positions: usize, headings: usize },
}

/// A position sequence paired with per-step headings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseTrajectory {
    /// Center positions, one `[x, y, z]` triple per step.
    pub positions: Vec<[f64; 3]>,
    /// Headings in radians, wrapped to `(-pi, pi]`.
    pub headings: Vec<f64>,
}

impl PoseTrajectory {
    pub fn new(positions: Vec<[f64; 3]>, headings: Vec<f64>) -> Result<Self, KinematicsError> {
        if positions.len() != headings.len() {
            return Err(KinematicsError::LengthMismatch {
                positions: positions.len(),
                headings: headings.len(),
            });
        }
        for (step, h) in headings.iter().enumerate() {
            if !h.is_finite() {
                return Err(KinematicsError::NonFiniteInput { step });
            }
        }
        Ok(Self {
            positions,
            headings,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(2.0 * std::f64::consts::PI);
    if wrapped > std::f64::consts::PI {
        wrapped - 2.0 * std::f64::consts::PI
    } else {
        wrapped
    }
}

/// Estimate per-step headings from consecutive positions.
///
/// `origin` is the last observed position and `initial_heading` the heading
/// held there; step 1 differences against `origin` so the output is defined
/// from the first predicted step. Steps that move less than
/// [`MIN_DISPLACEMENT`] in the xy plane keep the previous heading. The z
/// coordinate never affects headings.
pub fn estimate_headings(
    origin: [f64; 3],
    positions: &[[f64; 3]],
    initial_heading: f64,
) -> Result<Vec<f64>, KinematicsError> {
    if !initial_heading.is_finite() {
        return Err(KinematicsError::NonFiniteHeading {
            value: initial_heading,
        });
    }
    if !origin.iter().all(|c| c.is_finite()) {
        return Err(KinematicsError::NonFiniteInput { step: 0 });
    }

    let mut headings = Vec::with_capacity(positions.len());
    let mut prev_pos = origin;
    let mut prev_heading = wrap_angle(initial_heading);
    for (step, pos) in positions.iter().enumerate() {
        if !pos.iter().all(|c| c.is_finite()) {
            return Err(KinematicsError::NonFiniteInput { step: step + 1 });
        }
        let dx = pos[0] - prev_pos[0];
        let dy = pos[1] - prev_pos[1];
        let heading = if dx.hypot(dy) < MIN_DISPLACEMENT {
            prev_heading
        } else {
            wrap_angle(dy.atan2(dx))
        };
        headings.push(heading);
        prev_pos = *pos;
        prev_heading = heading;
    }
    Ok(headings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn straight_line(start: [f64; 3], step: [f64; 3], len: usize) -> Vec<[f64; 3]> {
        (1..=len)
            .map(|t| {
                [
                    start[0] + step[0] * t as f64,
                    start[1] + step[1] * t as f64,
                    start[2] + step[2] * t as f64,
                ]
            })
            .collect()
    }

    #[test]
    fn straight_motion_along_x_gives_zero_heading() {
        let positions = straight_line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 5);
        let headings = estimate_headings([0.0, 0.0, 0.0], &positions, 0.3).unwrap();
        assert_eq!(headings, vec![0.0; 5]);
    }

    #[test]
    fn diagonal_motion_gives_quarter_pi() {
        let positions = straight_line([0.0, 0.0, 0.0], [1.0, 1.0, 0.0], 4);
        let headings = estimate_headings([0.0, 0.0, 0.0], &positions, 0.0).unwrap();
        for h in headings {
            assert!((h - PI / 4.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn stationary_agent_carries_initial_heading() {
        let positions = vec![[2.0, 3.0, 1.0]; 6];
        let headings = estimate_headings([2.0, 3.0, 1.0], &positions, 0.7).unwrap();
        assert_eq!(headings, vec![0.7; 6]);
    }

    #[test]
    fn stationary_prefix_then_motion() {
        let mut positions = vec![[0.0, 0.0, 0.0]; 2];
        positions.push([0.0, 1.0, 0.0]);
        positions.push([0.0, 2.0, 0.0]);
        let headings = estimate_headings([0.0, 0.0, 0.0], &positions, -1.0).unwrap();
        assert_eq!(headings[0], -1.0);
        assert_eq!(headings[1], -1.0);
        assert!((headings[2] - PI / 2.0).abs() <= 1e-12);
        assert!((headings[3] - PI / 2.0).abs() <= 1e-12);
    }

    #[test]
    fn reversing_motion_gets_pi_not_zero() {
        let positions = straight_line([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 3);
        let headings = estimate_headings([0.0, 0.0, 0.0], &positions, 0.0).unwrap();
        for h in headings {
            assert_eq!(h, PI);
        }
    }

    #[test]
    fn negative_zero_dy_wraps_to_positive_pi() {
        // dy = -0.0 - 0.0 makes atan2 return -pi, which must wrap to +pi.
        let positions = vec![[-1.0, -0.0, 0.0]];
        let headings = estimate_headings([0.0, 0.0, 0.0], &positions, 0.0).unwrap();
        assert_eq!(headings[0], PI);
        assert!(headings[0].is_sign_positive());
    }

    #[test]
    fn z_changes_do_not_affect_heading() {
        let positions = vec![[1.0, 0.0, 5.0], [2.0, 0.0, -3.0], [3.0, 0.0, 9.0]];
        let headings = estimate_headings([0.0, 0.0, 0.0], &positions, 1.0).unwrap();
        assert_eq!(headings, vec![0.0; 3]);
    }

    #[test]
    fn non_finite_position_rejected() {
        let positions = vec![[1.0, 0.0, 0.0], [f64::NAN, 0.0, 0.0]];
        let err = estimate_headings([0.0, 0.0, 0.0], &positions, 0.0).unwrap_err();
        assert!(matches!(err, KinematicsError::NonFiniteInput { step: 2 }));
    }

    #[test]
    fn non_finite_initial_heading_rejected() {
        let err = estimate_headings([0.0, 0.0, 0.0], &[[1.0, 0.0, 0.0]], f64::INFINITY).unwrap_err();
        assert!(matches!(err, KinematicsError::NonFiniteHeading { .. }));
    }

    #[test]
    fn outputs_stay_in_half_open_interval() {
        let mut rng_state = 0x1234_5678_u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 * 20.0 - 10.0
        };
        for _ in 0..200 {
            let origin = [next(), next(), 0.0];
            let positions: Vec<[f64; 3]> = (0..10).map(|_| [next(), next(), next()]).collect();
            let headings = estimate_headings(origin, &positions, next()).unwrap();
            for h in headings {
                assert!(h > -PI && h <= PI, "heading {h} out of range");
            }
        }
    }

    #[test]
    fn rotation_equivariance() {
        use rand::RngExt as _;
        use rand::SeedableRng as _;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let theta: f64 = rng.random_range(-PI..PI);
            let (sin_t, cos_t) = theta.sin_cos();
            let rotate = |p: [f64; 3]| {
                [
                    p[0] * cos_t - p[1] * sin_t,
                    p[0] * sin_t + p[1] * cos_t,
                    p[2],
                ]
            };
            let origin = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), 0.0];
            let h0: f64 = rng.random_range(-PI..PI);
            let mut positions = Vec::new();
            let mut prev = origin;
            for _ in 0..12 {
                let ang: f64 = rng.random_range(-PI..PI);
                let mag: f64 = rng.random_range(0.05..2.0);
                prev = [prev[0] + mag * ang.cos(), prev[1] + mag * ang.sin(), prev[2]];
                positions.push(prev);
            }
            let base = estimate_headings(origin, &positions, h0).unwrap();
            let rotated_positions: Vec<[f64; 3]> = positions.iter().map(|&p| rotate(p)).collect();
            let rotated = estimate_headings(rotate(origin), &rotated_positions, h0 + theta).unwrap();
            for (b, r) in base.iter().zip(&rotated) {
                let diff = wrap_angle(r - b - theta).abs();
                let diff = diff.min((2.0 * PI - diff).abs());
                assert!(diff <= 1e-12, "equivariance violated: {diff}");
            }
        }
    }

    #[test]
    fn heading_unit_vector_parallel_to_displacement() {
        use rand::RngExt as _;
        use rand::SeedableRng as _;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let origin = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0];
            let mut prev = origin;
            let mut positions = Vec::new();
            for _ in 0..8 {
                prev = [
                    prev[0] + rng.random_range(-2.0..2.0),
                    prev[1] + rng.random_range(-2.0..2.0),
                    0.0,
                ];
                positions.push(prev);
            }
            let headings = estimate_headings(origin, &positions, 0.0).unwrap();
            let mut from = origin;
            for (pos, h) in positions.iter().zip(&headings) {
                let dx = pos[0] - from[0];
                let dy = pos[1] - from[1];
                let norm = dx.hypot(dy);
                if norm >= MIN_DISPLACEMENT {
                    let dot = (h.cos() * dx + h.sin() * dy) / norm;
                    assert!(dot >= 1.0 - 1e-12, "unit vector not parallel: {dot}");
                }
                from = *pos;
            }
        }
    }

    #[test]
    fn pose_trajectory_rejects_mismatched_lengths() {
        let err = PoseTrajectory::new(vec![[0.0; 3]; 3], vec![0.0; 2]).unwrap_err();
        assert!(matches!(err, KinematicsError::LengthMismatch { .. }));
    }
}
