//! Continuous 2D navigation with stop-at-contact walls.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::geometry::{Disc, Point, Rect, Segment};
use crate::error::{check_dim, Error, Result};
use crate::math;
use crate::vector::Vector;

/// Distance kept between the agent and a wall it ran into.
pub const CONTACT_BACKOFF: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NavSpec {
    pub width: f64,
    pub height: f64,
    /// Interior walls; the outer box is implicit.
    pub walls: Vec<Segment>,
    pub start: Disc,
    pub goal: Disc,
    pub goal_reward: f64,
    pub puddle: Option<Rect>,
    pub puddle_reward: f64,
    /// Actions longer than this are scaled down to it.
    pub max_step_length: f64,
    pub max_episode_steps: u64,
}

impl NavSpec {
    /// A 50x50 room with a door, inside a 100x100 chamber. The start disc is
    /// in the room; the goal disc (diameter 1, +100) sits in the corridor
    /// beyond the door, midway to the outer wall.
    pub fn nested_chambers() -> Self {
        Self::nested_chambers_with_door(4.0)
    }

    pub fn nested_chambers_with_door(door_width: f64) -> Self {
        let (lo, hi) = (25.0, 75.0);
        let (d0, d1) = (50.0 - door_width / 2.0, 50.0 + door_width / 2.0);
        NavSpec {
            width: 100.0,
            height: 100.0,
            walls: alloc::vec![
                Segment::new([lo, lo], [hi, lo]),
                Segment::new([hi, lo], [hi, hi]),
                Segment::new([lo, lo], [lo, hi]),
                // top wall, split by the door
                Segment::new([lo, hi], [d0, hi]),
                Segment::new([d1, hi], [hi, hi]),
            ],
            start: Disc { center: [50.0, 50.0], radius: 0.5 },
            goal: Disc { center: [50.0, 87.5], radius: 0.5 },
            goal_reward: 100.0,
            puddle: None,
            puddle_reward: -100.0,
            max_step_length: 1.0,
            max_episode_steps: 2000,
        }
    }

    /// Open 400x400 chamber, goal reward +1000.
    pub fn chamber() -> Self {
        NavSpec {
            width: 400.0,
            height: 400.0,
            walls: Vec::new(),
            start: Disc { center: [50.0, 50.0], radius: 0.5 },
            goal: Disc { center: [350.0, 350.0], radius: 10.0 },
            goal_reward: 1000.0,
            puddle: None,
            puddle_reward: -100.0,
            max_step_length: 1.0,
            max_episode_steps: 2000,
        }
    }

    /// The 400x400 chamber with a 40x40 puddle (-100 per step inside) midway
    /// between start and goal.
    pub fn chamber_with_puddle() -> Self {
        NavSpec {
            puddle: Some(Rect { min: [180.0, 180.0], max: [220.0, 220.0] }),
            ..Self::chamber()
        }
    }

    /// Wall-free box of the given size with the start at its centre. The goal
    /// sits on a corner the agent can never reach.
    pub fn open(size: f64) -> Self {
        NavSpec {
            width: size,
            height: size,
            walls: Vec::new(),
            start: Disc { center: [size / 2.0, size / 2.0], radius: 0.0 },
            goal: Disc { center: [size, size], radius: 1e-9 },
            goal_reward: 0.0,
            puddle: None,
            puddle_reward: 0.0,
            max_step_length: 1.0,
            max_episode_steps: u64::MAX,
        }
    }

    pub fn bounds(&self) -> Rect {
        Rect { min: [0.0, 0.0], max: [self.width, self.height] }
    }

    /// Interior walls followed by the four sides of the outer box.
    pub fn all_walls(&self) -> impl Iterator<Item = Segment> + '_ {
        let (w, h) = (self.width, self.height);
        self.walls.iter().copied().chain([
            Segment::new([0.0, 0.0], [w, 0.0]),
            Segment::new([w, 0.0], [w, h]),
            Segment::new([w, h], [0.0, h]),
            Segment::new([0.0, h], [0.0, 0.0]),
        ])
    }

    fn inside_open_box(&self, p: Point) -> bool {
        p[0] > 0.0 && p[0] < self.width && p[1] > 0.0 && p[1] < self.height
    }

    fn on_wall(&self, p: Point) -> bool {
        self.walls.iter().any(|w| point_on_segment(p, w))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("navigation spec: {m}")));
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad("box must have positive size");
        }
        if !(self.goal.radius > 0.0) {
            return bad("goal radius must be > 0");
        }
        if !(self.start.radius >= 0.0) {
            return bad("start radius must be >= 0");
        }
        if !(self.max_step_length > 0.0) {
            return bad("max_step_length must be > 0");
        }
        if self.max_episode_steps == 0 {
            return bad("max_episode_steps must be >= 1");
        }
        let c = self.start.center;
        if !self.inside_open_box(c) || self.on_wall(c) {
            return bad("start must lie inside the box and off the walls");
        }
        let g = self.goal.center;
        if !self.bounds().contains(g) {
            return bad("goal must lie inside the box");
        }
        // the start disc must not straddle a wall
        if self.walls.iter().any(|w| distance_to_segment(self.start.center, w) <= self.start.radius) {
            return bad("start disc intersects a wall");
        }
        Ok(())
    }

    /// Moves from `p` by `d` (already length-capped), stopping just short of
    /// the first wall or box side the motion would cross.
    pub fn move_point(&self, p: Point, d: Point) -> Point {
        let len = math::sqrt(d[0] * d[0] + d[1] * d[1]);
        if len == 0.0 {
            return p;
        }
        let t_hit = self
            .all_walls()
            .filter_map(|w| w.hit(p, d))
            .fold(f64::INFINITY, f64::min);
        if t_hit.is_finite() {
            let travel = (t_hit * len - CONTACT_BACKOFF).max(0.0);
            let s = travel / len;
            [p[0] + s * d[0], p[1] + s * d[1]]
        } else {
            [p[0] + d[0], p[1] + d[1]]
        }
    }

    /// Caps an action to `max_step_length`.
    pub fn displacement(&self, action: &[f64]) -> Point {
        let n = math::sqrt(action[0] * action[0] + action[1] * action[1]);
        if n > self.max_step_length {
            let s = self.max_step_length / n;
            [action[0] * s, action[1] * s]
        } else {
            [action[0], action[1]]
        }
    }
}

fn distance_to_segment(p: Point, s: &Segment) -> f64 {
    let d = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let len_sq = d[0] * d[0] + d[1] * d[1];
    let t = if len_sq > 0.0 {
        (((p[0] - s.a[0]) * d[0] + (p[1] - s.a[1]) * d[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [s.a[0] + t * d[0] - p[0], s.a[1] + t * d[1] - p[1]];
    math::sqrt(q[0] * q[0] + q[1] * q[1])
}

fn point_on_segment(p: Point, s: &Segment) -> bool {
    distance_to_segment(p, s) < 1e-12
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavState {
    pub position: Vector,
    pub steps_elapsed: u64,
    pub done: bool,
}

impl NavState {
    pub fn point(&self) -> Point {
        [self.position[0], self.position[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: NavState,
    pub reward: f64,
    pub done: bool,
    pub reached_goal: bool,
    pub in_puddle: bool,
}

/// Uniform position in the start disc.
pub fn reset<R: Rng + ?Sized>(spec: &NavSpec, rng: &mut R) -> NavState {
    let c = spec.start.center;
    let position = if spec.start.radius > 0.0 {
        let r = spec.start.radius * math::sqrt(rng.random::<f64>());
        let a = 2.0 * PI * rng.random::<f64>();
        Vector::from([c[0] + r * math::cos(a), c[1] + r * math::sin(a)])
    } else {
        Vector::from(c)
    };
    NavState { position, steps_elapsed: 0, done: false }
}

/// Applies `action` as a displacement.
///
/// The goal pays `goal_reward` and ends the episode as soon as the motion
/// segment touches the goal disc; ending a step inside the puddle pays
/// `puddle_reward` without ending it.
pub fn step(spec: &NavSpec, state: &NavState, action: &[f64]) -> Result<StepOutcome> {
    if state.done {
        return Err(Error::EpisodeDone);
    }
    check_dim(2, action.len())?;
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::domain("action must be finite"));
    }
    let p = state.point();
    let q = spec.move_point(p, spec.displacement(action));
    let reached_goal = spec.goal.touched_by(p, q);
    let in_puddle = spec.puddle.is_some_and(|r| r.contains(q));
    let mut reward = 0.0;
    if reached_goal {
        reward += spec.goal_reward;
    }
    if in_puddle {
        reward += spec.puddle_reward;
    }
    let steps_elapsed = state.steps_elapsed + 1;
    let done = reached_goal || steps_elapsed >= spec.max_episode_steps;
    Ok(StepOutcome {
        state: NavState { position: Vector::from(q), steps_elapsed, done },
        reward,
        done,
        reached_goal,
        in_puddle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn presets_are_valid() {
        NavSpec::nested_chambers().validate().unwrap();
        NavSpec::chamber().validate().unwrap();
        NavSpec::chamber_with_puddle().validate().unwrap();
        NavSpec::open(100.0).validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = NavSpec::nested_chambers();
        s.goal.radius = 0.0;
        assert!(s.validate().is_err());
        let mut s = NavSpec::nested_chambers();
        s.goal.center = [150.0, 10.0];
        assert!(s.validate().is_err());
        let mut s = NavSpec::nested_chambers();
        s.start.center = [25.0, 50.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn reset_stays_in_start_disc() {
        let spec = NavSpec::nested_chambers();
        let mut rng = substream(1, 0);
        for _ in 0..1000 {
            let s = reset(&spec, &mut rng);
            assert!(spec.start.contains(s.point()));
            assert_eq!(s.steps_elapsed, 0);
            assert!(!s.done);
            // inside the inner room
            assert!(s.position.iter().all(|x| (25.0..=75.0).contains(x)));
        }
        let mut exact = spec.clone();
        exact.start.radius = 0.0;
        assert_eq!(reset(&exact, &mut rng).point(), [50.0, 50.0]);
    }

    #[test]
    fn zero_action_is_a_no_op() {
        let spec = NavSpec::nested_chambers();
        let s0 = reset(&spec, &mut substream(2, 0));
        let out = step(&spec, &s0, &[0.0, 0.0]).unwrap();
        assert_eq!(out.state.position, s0.position);
        assert_eq!(out.reward, 0.0);
        assert!(!out.done);
    }

    #[test]
    fn goal_pays_and_terminates() {
        let spec = NavSpec::nested_chambers();
        let s = NavState { position: Vector::from([49.0, 87.5]), steps_elapsed: 3, done: false };
        let out = step(&spec, &s, &[1.0, 0.0]).unwrap();
        assert!(out.reached_goal && out.done);
        assert_eq!(out.reward, 100.0);
        assert!(matches!(step(&spec, &out.state, &[1.0, 0.0]), Err(Error::EpisodeDone)));
        // passing through the disc mid-step also counts
        let s = NavState { position: Vector::from([49.3, 87.7]), ..s };
        assert!(step(&spec, &s, &[1.0, 0.0]).unwrap().reached_goal);
    }

    #[test]
    fn walls_stop_motion_at_contact() {
        let spec = NavSpec::nested_chambers();
        let s = NavState { position: Vector::from([74.5, 50.0]), steps_elapsed: 0, done: false };
        let out = step(&spec, &s, &[1.0, 0.0]).unwrap();
        assert!((out.state.position[0] - (75.0 - CONTACT_BACKOFF)).abs() < 1e-9);
        assert_eq!(out.state.position[1], 50.0);
        // long actions are capped before moving
        let s = NavState { position: Vector::from([60.0, 60.0]), ..s };
        let out = step(&spec, &s, &[30.0, 40.0]).unwrap();
        assert!((out.state.position[0] - 60.6).abs() < 1e-12);
        assert!((out.state.position[1] - 60.8).abs() < 1e-12);
    }

    #[test]
    fn door_lets_the_agent_out() {
        let spec = NavSpec::nested_chambers();
        let s = NavState { position: Vector::from([50.0, 74.6]), steps_elapsed: 0, done: false };
        let out = step(&spec, &s, &[0.0, 1.0]).unwrap();
        assert!((out.state.position[1] - 75.6).abs() < 1e-12);
    }

    #[test]
    fn puddle_is_non_terminal() {
        let spec = NavSpec::chamber_with_puddle();
        let s = NavState { position: Vector::from([179.5, 200.0]), steps_elapsed: 0, done: false };
        let out = step(&spec, &s, &[1.0, 0.0]).unwrap();
        assert!(out.in_puddle);
        assert_eq!(out.reward, -100.0);
        assert!(!out.done);
    }

    #[test]
    fn step_cap_ends_episode() {
        let mut spec = NavSpec::chamber();
        spec.max_episode_steps = 2;
        let s = reset(&spec, &mut substream(0, 0));
        let a = step(&spec, &s, &[0.1, 0.0]).unwrap();
        assert!(!a.done);
        let b = step(&spec, &a.state, &[0.1, 0.0]).unwrap();
        assert!(b.done && !b.reached_goal);
    }

    #[test]
    fn bad_actions_are_rejected() {
        let spec = NavSpec::chamber();
        let s = reset(&spec, &mut substream(0, 0));
        assert!(step(&spec, &s, &[0.1]).is_err());
        assert!(step(&spec, &s, &[f64::NAN, 0.0]).is_err());
    }
}
