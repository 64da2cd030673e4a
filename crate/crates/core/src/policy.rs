//! The exploring/exploiting behaviour policy.
//!
//! While exploring, actions come from the angle-constrained sampler and the
//! visited states are tracked as a chain. After each transition the change in
//! the squared radius of gyration is checked against the lower and upper
//! bounds; leaving the band hands control to the target policy. While
//! exploiting, each step draws `kappa` and keeps following the target policy
//! when `kappa <= delta`, otherwise a fresh exploratory segment starts at the
//! current state.

use alloc::format;
use core::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bounds::{self, BoundInputs};
use crate::error::{Error, Result};
use crate::gyration::GyrationTracker;
use crate::math;
use crate::sampler::{self, ActionSpace};
use crate::vector::Vector;

/// Distribution of the switch variable `kappa` compared against `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SwitchDistribution {
    /// `kappa ~ N(0, 1)`: greedy with probability `Phi(delta)`.
    #[default]
    Normal,
    /// `kappa ~ U(0, 1)`: greedy with probability `delta`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PolyRlParams {
    /// Exploration factor in `delta = 1 - exp(-beta N)`.
    pub beta: f64,
    /// Mean correlation angle (radians).
    pub theta: f64,
    /// Variance of the sampled angle.
    pub sigma_sq: f64,
    pub switch_distribution: SwitchDistribution,
    /// Also leave exploration when two consecutive state bonds form an
    /// obtuse angle.
    pub break_on_obtuse_angle: bool,
    /// Segments shorter than this are accepted without consulting the bounds.
    pub min_segment_states: usize,
}

impl Default for PolyRlParams {
    fn default() -> Self {
        PolyRlParams {
            beta: 0.01,
            theta: 0.2,
            sigma_sq: 1e-4,
            switch_distribution: SwitchDistribution::Normal,
            break_on_obtuse_angle: false,
            min_segment_states: 3,
        }
    }
}

impl PolyRlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!("beta must be in (0, 1), got {}", self.beta)));
        }
        if !(self.theta > 0.0 && self.theta < FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "theta must be in (0, pi/2), got {}",
                self.theta
            )));
        }
        if !(self.sigma_sq >= 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_sq must be >= 0, got {}",
                self.sigma_sq
            )));
        }
        if self.min_segment_states < 3 {
            return Err(Error::InvalidConfig(
                "min_segment_states must be >= 3".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exploring,
    Exploiting,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exploring => "exploring",
            Mode::Exploiting => "exploiting",
        }
    }
}

/// Which path of the decision procedure produced an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Exploiting and `kappa <= delta`: target action.
    Greedy,
    /// Exploiting and `kappa > delta`: new segment, sampled action.
    Restart,
    /// Exploring on a segment too short for the bounds.
    Warmup,
    /// Exploring and `LB <= dU <= UB`.
    Persist,
    /// Exploring and the change left the band: target action.
    OutOfBounds,
    /// Exploring and an obtuse state-bond angle was seen: target action.
    ObtuseBreak,
    /// The bounds could not be evaluated: target action.
    BoundError,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Greedy => "greedy",
            Branch::Restart => "restart",
            Branch::Warmup => "warmup",
            Branch::Persist => "persist",
            Branch::OutOfBounds => "out_of_bounds",
            Branch::ObtuseBreak => "obtuse_break",
            Branch::BoundError => "bound_error",
        }
    }

    pub fn is_greedy(self) -> bool {
        matches!(
            self,
            Branch::Greedy | Branch::OutOfBounds | Branch::ObtuseBreak | Branch::BoundError
        )
    }
}

/// Per-step record of the decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub branch: Branch,
    /// Mode after the decision.
    pub mode: Mode,
    pub delta_ug2: Option<f64>,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub greedy_steps: u64,
    pub exploratory_steps: u64,
    pub segments: u64,
    pub clip_events: u64,
    pub fallback_events: u64,
    pub bound_errors: u64,
    /// Steps where `LB > UB` was observed.
    pub anomalies: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct Pending {
    delta_ug2: f64,
    /// Bound inputs of the segment before the new state, if long enough.
    inputs: Option<Result<BoundInputs>>,
    obtuse: bool,
}

/// Mutable state of one run of the behaviour policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationState {
    pub mode: Mode,
    pub segment: GyrationTracker,
    pub last_action: Vector,
    pub episode: u64,
    /// Scheduled delta for the current episode (not clamped).
    pub delta: f64,
    pub counters: Counters,
    pending: Option<Pending>,
}

/// Online persistence-number estimate from a mean bond cosine.
pub fn lp_from_mean_cos(mean_cos: f64) -> f64 {
    let c = mean_cos.clamp(1e-6, 1.0 - 1e-6);
    1.0 / math::ln(c).abs()
}

/// The behaviour policy: parameters, action box and run state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyRl {
    params: PolyRlParams,
    space: ActionSpace,
    state: ExplorationState,
}

impl PolyRl {
    /// Creates the policy; call [`PolyRl::begin_episode`] before stepping.
    pub fn new(params: PolyRlParams, space: ActionSpace) -> Result<Self> {
        params.validate()?;
        let dim = space.dim();
        Ok(PolyRl {
            params,
            state: ExplorationState {
                mode: Mode::Exploring,
                segment: GyrationTracker::new(Vector::zeros(dim)),
                last_action: Vector::zeros(dim),
                episode: 0,
                delta: 0.0,
                counters: Counters::default(),
                pending: None,
            },
            space,
        })
    }

    pub fn params(&self) -> &PolyRlParams {
        &self.params
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn state(&self) -> &ExplorationState {
        &self.state
    }

    pub fn mode(&self) -> Mode {
        self.state.mode
    }

    pub fn counters(&self) -> Counters {
        self.state.counters
    }

    /// Forces the scheduled delta; useful to probe the switch behaviour.
    pub fn set_delta(&mut self, delta: f64) {
        self.state.delta = delta;
    }

    /// Forces the mode without touching the segment.
    pub fn set_mode(&mut self, mode: Mode) {
        self.state.mode = mode;
    }

    /// Starts episode `episode` at state `s0`. `a0` defaults to a uniform
    /// draw from the action box.
    pub fn begin_episode<R: Rng + ?Sized>(
        &mut self,
        episode: u64,
        s0: &[f64],
        a0: Option<Vector>,
        rng: &mut R,
    ) -> Result<()> {
        let a0 = match a0 {
            Some(a) => {
                crate::error::check_dim(self.space.dim(), a.dim())?;
                a
            }
            None => self.space.sample_uniform(rng),
        };
        let st = &mut self.state;
        st.episode = episode;
        st.delta = bounds::delta_schedule(self.params.beta, episode);
        st.mode = Mode::Exploring;
        st.segment = GyrationTracker::new(Vector::from(s0));
        st.last_action = a0;
        st.pending = None;
        st.counters.segments += 1;
        Ok(())
    }

    /// Feeds the state reached by the last action. No-op while exploiting.
    pub fn observe_transition(&mut self, next_obs: &[f64]) -> Result<()> {
        if self.state.mode == Mode::Exploiting {
            return Ok(());
        }
        let seg = &self.state.segment;
        let inputs = (seg.count() >= self.params.min_segment_states).then(|| self.bound_inputs());
        let delta_ug2 = self.state.segment.append_state(next_obs)?;
        let obtuse = self.state.segment.last_cos().is_some_and(|c| c < 0.0);
        self.state.pending = Some(Pending {
            delta_ug2,
            inputs,
            obtuse,
        });
        Ok(())
    }

    /// Bound inputs from the current segment and its online estimates.
    fn bound_inputs(&self) -> Result<BoundInputs> {
        let seg = &self.state.segment;
        let b0_sq = seg
            .mean_bond_sq()
            .filter(|b| *b > 0.0)
            .ok_or_else(|| Error::domain("segment has no non-zero bonds"))?;
        let mean_cos = seg
            .mean_cos()
            .ok_or_else(|| Error::domain("segment has no bond pairs"))?;
        Ok(BoundInputs::from_tracker(
            seg,
            b0_sq,
            lp_from_mean_cos(mean_cos),
            bounds::clamp_delta(self.state.delta),
        ))
    }

    /// Chooses the next action at observation `obs`.
    pub fn next_action<R, F>(&mut self, obs: &[f64], target: F, rng: &mut R) -> Result<(Vector, Decision)>
    where
        R: Rng + ?Sized,
        F: FnOnce(&[f64]) -> Result<Vector>,
    {
        let (action, decision) = match self.state.mode {
            Mode::Exploiting => {
                let kappa: f64 = match self.params.switch_distribution {
                    SwitchDistribution::Normal => StandardNormal.sample(rng),
                    SwitchDistribution::Uniform => rng.random(),
                };
                if kappa <= self.state.delta {
                    let a = self.greedy(obs, target)?;
                    (a, self.decision(Branch::Greedy, None, None, None))
                } else {
                    self.state.segment = GyrationTracker::new(Vector::from(obs));
                    self.state.pending = None;
                    self.state.mode = Mode::Exploring;
                    self.state.counters.segments += 1;
                    let a = self.explore(rng)?;
                    (a, self.decision(Branch::Restart, None, None, None))
                }
            }
            Mode::Exploring => {
                let pending = self.state.pending.take();
                match pending {
                    None
                    | Some(Pending {
                        inputs: None,
                        ..
                    }) => {
                        let du = pending.map(|p| p.delta_ug2);
                        let a = self.explore(rng)?;
                        (a, self.decision(Branch::Warmup, du, None, None))
                    }
                    Some(Pending {
                        delta_ug2,
                        inputs: Some(inputs),
                        obtuse,
                    }) => self.check_bounds(obs, delta_ug2, inputs, obtuse, target, rng)?,
                }
            }
        };
        self.state.last_action = action.clone();
        Ok((action, decision))
    }

    fn check_bounds<R, F>(
        &mut self,
        obs: &[f64],
        delta_ug2: f64,
        inputs: Result<BoundInputs>,
        obtuse: bool,
        target: F,
        rng: &mut R,
    ) -> Result<(Vector, Decision)>
    where
        R: Rng + ?Sized,
        F: FnOnce(&[f64]) -> Result<Vector>,
    {
        let evaluated = inputs.and_then(|i| Ok((bounds::lower_bound(&i)?, bounds::upper_bound(&i)?)));
        let (lb, ub) = match evaluated {
            Ok(b) => b,
            Err(e) => {
                log::debug!("bound evaluation failed, switching to target policy: {e}");
                self.state.counters.bound_errors += 1;
                self.state.mode = Mode::Exploiting;
                let a = self.greedy(obs, target)?;
                return Ok((a, self.decision(Branch::BoundError, Some(delta_ug2), None, None)));
            }
        };
        if lb > ub {
            log::warn!("lower bound {lb} exceeds upper bound {ub}");
            self.state.counters.anomalies += 1;
        }
        let branch = if self.params.break_on_obtuse_angle && obtuse {
            Branch::ObtuseBreak
        } else if lb <= delta_ug2 && delta_ug2 <= ub {
            Branch::Persist
        } else {
            Branch::OutOfBounds
        };
        let action = if branch == Branch::Persist {
            self.explore(rng)?
        } else {
            self.state.mode = Mode::Exploiting;
            self.greedy(obs, target)?
        };
        Ok((action, self.decision(branch, Some(delta_ug2), Some(lb), Some(ub))))
    }

    fn greedy<F>(&mut self, obs: &[f64], target: F) -> Result<Vector>
    where
        F: FnOnce(&[f64]) -> Result<Vector>,
    {
        let a = target(obs)?;
        crate::error::check_dim(self.space.dim(), a.dim())?;
        self.state.counters.greedy_steps += 1;
        Ok(a)
    }

    fn explore<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vector> {
        let eta = sampler::sample_eta(self.params.theta, self.params.sigma_sq, rng);
        let s = sampler::sample_action(&self.state.last_action, eta, &self.space, rng)?;
        let c = &mut self.state.counters;
        c.exploratory_steps += 1;
        c.clip_events += s.clipped as u64;
        c.fallback_events += s.fallback as u64;
        Ok(s.action)
    }

    fn decision(&self, branch: Branch, du: Option<f64>, lb: Option<f64>, ub: Option<f64>) -> Decision {
        Decision {
            branch,
            mode: self.state.mode,
            delta_ug2: du,
            lb,
            ub,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn policy(switch: SwitchDistribution) -> PolyRl {
        let params = PolyRlParams {
            switch_distribution: switch,
            ..Default::default()
        };
        PolyRl::new(params, ActionSpace::symmetric(2, 1.0).unwrap()).unwrap()
    }

    fn east(_: &[f64]) -> Result<Vector> {
        Ok(Vector::from([1.0, 0.0]))
    }

    #[test]
    fn params_validation() {
        let bad = [
            PolyRlParams { beta: 0.0, ..Default::default() },
            PolyRlParams { beta: 1.0, ..Default::default() },
            PolyRlParams { theta: 0.0, ..Default::default() },
            PolyRlParams { theta: 1.6, ..Default::default() },
            PolyRlParams { sigma_sq: -1.0, ..Default::default() },
            PolyRlParams { min_segment_states: 2, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        assert!(PolyRlParams::default().validate().is_ok());
    }

    #[test]
    fn begin_episode_resets() {
        let mut p = policy(SwitchDistribution::Normal);
        let mut rng = substream(1, 0);
        p.begin_episode(0, &[5.0, 5.0], None, &mut rng).unwrap();
        assert_eq!(p.state().delta, 0.0);
        assert_eq!(p.mode(), Mode::Exploring);
        assert_eq!(p.state().segment.count(), 1);
        assert!(p.space().contains(&p.state().last_action));
        p.set_mode(Mode::Exploiting);
        p.begin_episode(100, &[1.0, 1.0], Some(Vector::from([0.5, 0.0])), &mut rng)
            .unwrap();
        assert!((p.state().delta - 0.632_120_558_828_558).abs() < 1e-12);
        assert_eq!(p.mode(), Mode::Exploring);
        assert_eq!(p.state().last_action, Vector::from([0.5, 0.0]));
    }

    #[test]
    fn short_segments_skip_bounds() {
        let mut p = policy(SwitchDistribution::Normal);
        let mut rng = substream(2, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        let (_, d) = p.next_action(&[0.0, 0.0], east, &mut rng).unwrap();
        assert_eq!(d.branch, Branch::Warmup);
        p.observe_transition(&[0.5, 0.0]).unwrap();
        // two states in the segment: still warming up
        let (_, d) = p.next_action(&[0.5, 0.0], east, &mut rng).unwrap();
        assert_eq!(d.branch, Branch::Warmup);
        assert!(d.lb.is_none());
        p.observe_transition(&[1.0, 0.1]).unwrap();
        let (_, d) = p.next_action(&[1.0, 0.1], east, &mut rng).unwrap();
        assert_eq!(d.branch, Branch::Warmup);
        p.observe_transition(&[1.5, 0.25]).unwrap();
        // the pre-append segment now holds three states
        let (_, d) = p.next_action(&[1.5, 0.25], east, &mut rng).unwrap();
        assert!(d.lb.is_some() && d.ub.is_some());
    }

    #[test]
    fn uniform_switch_with_zero_delta_never_greedy() {
        let mut p = policy(SwitchDistribution::Uniform);
        let mut rng = substream(3, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        for _ in 0..10_000 {
            p.set_mode(Mode::Exploiting);
            let (_, d) = p.next_action(&[0.0, 0.0], east, &mut rng).unwrap();
            assert_eq!(d.branch, Branch::Restart);
            assert_eq!(d.mode, Mode::Exploring);
        }
    }

    #[test]
    fn normal_switch_greedy_fraction() {
        let mut p = policy(SwitchDistribution::Normal);
        let mut rng = substream(4, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        p.set_delta(1.0);
        let n = 10_000;
        let mut greedy = 0;
        for _ in 0..n {
            p.set_mode(Mode::Exploiting);
            let (_, d) = p.next_action(&[0.0, 0.0], east, &mut rng).unwrap();
            greedy += (d.branch == Branch::Greedy) as usize;
        }
        let frac = greedy as f64 / n as f64;
        // Phi(1) = 0.841344746...
        assert!((frac - 0.841_344_746).abs() < 0.02, "{frac}");
    }

    #[test]
    fn restart_reseeds_segment() {
        let mut p = policy(SwitchDistribution::Uniform);
        let mut rng = substream(5, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        for x in 1..6 {
            p.observe_transition(&[x as f64, 0.0]).unwrap();
        }
        assert_eq!(p.state().segment.count(), 6);
        p.set_mode(Mode::Exploiting);
        p.observe_transition(&[9.0, 9.0]).unwrap();
        assert_eq!(p.state().segment.count(), 6, "dormant while exploiting");
        let (_, d) = p.next_action(&[7.0, 7.0], east, &mut rng).unwrap();
        assert_eq!(d.branch, Branch::Restart);
        assert_eq!(p.state().segment.count(), 1);
        assert_eq!(p.state().segment.last_state(), &Vector::from([7.0, 7.0]));
    }

    #[test]
    fn zero_bonds_force_target_policy() {
        let mut p = policy(SwitchDistribution::Normal);
        let mut rng = substream(6, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        for _ in 0..3 {
            p.observe_transition(&[0.0, 0.0]).unwrap();
        }
        let (a, d) = p.next_action(&[0.0, 0.0], east, &mut rng).unwrap();
        assert_eq!(d.branch, Branch::BoundError);
        assert_eq!(a, Vector::from([1.0, 0.0]));
        assert_eq!(p.mode(), Mode::Exploiting);
        assert_eq!(p.state().last_action, a);
    }

    #[test]
    fn obtuse_break_when_enabled() {
        let params = PolyRlParams {
            break_on_obtuse_angle: true,
            ..Default::default()
        };
        let mut p = PolyRl::new(params, ActionSpace::symmetric(2, 1.0).unwrap()).unwrap();
        let mut rng = substream(7, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        for s in [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [2.5, 0.1]] {
            p.observe_transition(&s).unwrap();
        }
        let (_, d) = p.next_action(&[2.5, 0.1], east, &mut rng).unwrap();
        assert_eq!(d.branch, Branch::ObtuseBreak);
        assert_eq!(p.mode(), Mode::Exploiting);
    }

    #[test]
    fn target_errors_propagate() {
        let mut p = policy(SwitchDistribution::Normal);
        let mut rng = substream(8, 0);
        p.begin_episode(0, &[0.0, 0.0], None, &mut rng).unwrap();
        p.set_mode(Mode::Exploiting);
        p.set_delta(1e9);
        let r = p.next_action(&[0.0, 0.0], |_| Err(Error::Diverged("boom".into())), &mut rng);
        assert!(r.is_err());
    }

    #[test]
    fn lp_estimate_examples() {
        assert!((lp_from_mean_cos(0.98) - 49.498_316_452_509).abs() < 1e-9);
        assert!((lp_from_mean_cos(1.0) - 1.0 / math::ln(1.0 - 1e-6).abs()).abs() < 1e-3);
        assert!(lp_from_mean_cos(-0.5) > 0.0);
    }
}
