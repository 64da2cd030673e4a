//! Wall-free point mass rewarded once per episode for getting `lambda` away
//! from the origin.

use alloc::format;

use crate::error::{check_dim, Error, Result};
use crate::math;
use crate::sampler::ActionSpace;
use crate::vector::{self, Vector};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparsePointMassSpec {
    pub dim: usize,
    /// Sparsity threshold (distance from the origin).
    pub lambda: f64,
    pub action_space: ActionSpace,
    /// Velocity cap: displacements longer than this are scaled down.
    pub max_step: f64,
    pub max_episode_steps: u64,
}

impl SparsePointMassSpec {
    /// 2D task with the action box `[-1, 1]^2` and unit velocity cap.
    pub fn planar(lambda: f64) -> Self {
        SparsePointMassSpec {
            dim: 2,
            lambda,
            action_space: ActionSpace::symmetric(2, 1.0).expect("valid box"),
            max_step: 1.0,
            max_episode_steps: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.action_space.dim() != self.dim {
            return Err(Error::InvalidConfig("action box dimension differs from dim".into()));
        }
        if !(self.max_step > 0.0) || self.max_episode_steps == 0 {
            return Err(Error::InvalidConfig("max_step and max_episode_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn reset(&self) -> PointMassState {
        PointMassState {
            position: Vector::zeros(self.dim),
            steps_elapsed: 0,
            done: false,
            rewarded: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMassState {
    pub position: Vector,
    pub steps_elapsed: u64,
    pub done: bool,
    /// The threshold reward was already paid this episode.
    pub rewarded: bool,
}

/// Moves by the (clipped, speed-capped) action; pays +1 the first time the
/// distance from the origin reaches `lambda`.
pub fn step_pointmass(
    spec: &SparsePointMassSpec,
    state: &PointMassState,
    action: &[f64],
) -> Result<(PointMassState, f64, bool)> {
    if state.done {
        return Err(Error::EpisodeDone);
    }
    check_dim(spec.dim, action.len())?;
    let mut a = Vector::from(action);
    spec.action_space.clip(&mut a);
    let n = a.norm();
    if n > spec.max_step {
        a = a.scaled(spec.max_step / n);
    }
    let position = state.position.add(&a);
    let crossed = math::sqrt(vector::norm_sq(&position)) >= spec.lambda;
    let reward = if crossed && !state.rewarded { 1.0 } else { 0.0 };
    let steps_elapsed = state.steps_elapsed + 1;
    let done = steps_elapsed >= spec.max_episode_steps;
    Ok((
        PointMassState {
            position,
            steps_elapsed,
            done,
            rewarded: state.rewarded || crossed,
        },
        reward,
        done,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_is_paid_once() {
        let spec = SparsePointMassSpec::planar(2.0);
        let mut s = spec.reset();
        let mut total = 0.0;
        for a in [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [1.0, 0.0]] {
            let (next, r, _) = step_pointmass(&spec, &s, &a).unwrap();
            total += r;
            s = next;
        }
        assert_eq!(total, 1.0);
    }

    #[test]
    fn inside_threshold_pays_nothing() {
        let spec = SparsePointMassSpec::planar(10.0);
        let mut s = spec.reset();
        let mut total = 0.0;
        while !s.done {
            let a = if s.steps_elapsed.is_multiple_of(2) { [1.0, 1.0] } else { [-1.0, -1.0] };
            let (next, r, _) = step_pointmass(&spec, &s, &a).unwrap();
            total += r;
            s = next;
        }
        assert_eq!(total, 0.0);
        assert_eq!(s.steps_elapsed, 200);
        assert!(step_pointmass(&spec, &s, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn speed_is_capped() {
        let spec = SparsePointMassSpec::planar(10.0);
        let (s, _, _) = step_pointmass(&spec, &spec.reset(), &[1.0, 1.0]).unwrap();
        assert!((s.position.norm() - 1.0).abs() < 1e-12);
        let (s, _, _) = step_pointmass(&spec, &spec.reset(), &[5.0, 0.0]).unwrap();
        assert_eq!(s.position, Vector::from([1.0, 0.0]));
    }
}
