//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use polyrl_core::envs::{Disc, NavSpec, SparsePointMassSpec};
use polyrl_core::learner::LearnerConfig;
use polyrl_core::policy::PolyRlParams;
use polyrl_core::sampler::ActionSpace;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Polyrl,
    EpsilonGreedy,
    Uniform,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Polyrl => "polyrl",
            Method::EpsilonGreedy => "epsilon-greedy",
            Method::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    NestedChambers,
    Chamber,
    ChamberPuddle,
    Open,
    PointMass,
}

/// A preset plus optional overrides of its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub door_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub puddle_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_episode_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig {
            preset: Preset::NestedChambers,
            size: None,
            door_width: None,
            start: None,
            start_radius: None,
            goal: None,
            goal_radius: None,
            goal_reward: None,
            puddle_reward: None,
            max_step_length: None,
            max_episode_steps: None,
            lambda: None,
        }
    }
}

/// A built environment.
#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Nav(NavSpec),
    PointMass(SparsePointMassSpec),
}

impl EnvironmentConfig {
    pub fn build(&self) -> Result<Environment> {
        if self.preset == Preset::PointMass {
            let mut s = SparsePointMassSpec::planar(self.lambda.unwrap_or(10.0));
            if let Some(m) = self.max_step_length {
                s.max_step = m;
                s.action_space = ActionSpace::symmetric(2, m)?;
            }
            if let Some(n) = self.max_episode_steps {
                s.max_episode_steps = n;
            }
            s.validate()?;
            return Ok(Environment::PointMass(s));
        }
        let mut s = match self.preset {
            Preset::NestedChambers => NavSpec::nested_chambers_with_door(self.door_width.unwrap_or(4.0)),
            Preset::Chamber => NavSpec::chamber(),
            Preset::ChamberPuddle => NavSpec::chamber_with_puddle(),
            Preset::Open => NavSpec::open(self.size.unwrap_or(100.0)),
            Preset::PointMass => unreachable!(),
        };
        if let Some(c) = self.start {
            s.start = Disc { center: c, ..s.start };
        }
        if let Some(r) = self.start_radius {
            s.start.radius = r;
        }
        if let Some(c) = self.goal {
            s.goal.center = c;
        }
        if let Some(r) = self.goal_radius {
            s.goal.radius = r;
        }
        if let Some(r) = self.goal_reward {
            s.goal_reward = r;
        }
        if let Some(r) = self.puddle_reward {
            s.puddle_reward = r;
        }
        if let Some(m) = self.max_step_length {
            s.max_step_length = m;
        }
        if let Some(n) = self.max_episode_steps {
            s.max_episode_steps = n;
        }
        s.validate()?;
        Ok(Environment::Nav(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationConfig {
    pub method: Method,
    pub epsilon: f64,
    /// With `epsilon_decay_episodes`, epsilon falls linearly to this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_decay_episodes: Option<u64>,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            method: Method::Polyrl,
            epsilon: 0.1,
            epsilon_final: None,
            epsilon_decay_episodes: None,
        }
    }
}

impl ExplorationConfig {
    pub fn epsilon_at(&self, episode: u64) -> f64 {
        match (self.epsilon_final, self.epsilon_decay_episodes) {
            (Some(end), Some(n)) if n > 0 => {
                let f = (episode as f64 / n as f64).min(1.0);
                self.epsilon + (end - self.epsilon) * f
            }
            _ => self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub episodes: u64,
    /// Evaluate (and write a metrics row) every this many episodes.
    pub eval_interval: u64,
    pub eval_episodes: u64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Side of the square cells used for coverage.
    pub coverage_cell: f64,
    pub trajectories: bool,
    pub decisions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            episodes: 20,
            eval_interval: 1,
            eval_episodes: 1,
            seeds: vec![0, 1, 2, 3, 4],
            out_dir: PathBuf::from("out"),
            coverage_cell: 2.0,
            trajectories: false,
            decisions: false,
        }
    }
}

/// Grid for `sweep`; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub thetas: Vec<f64>,
    pub sigma_sqs: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub exploration: ExplorationConfig,
    pub polyrl: PolyRlParams,
    pub learner: LearnerConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything and returns the built environment.
    pub fn validate(&self) -> Result<Environment> {
        let r = &self.run;
        if r.seeds.is_empty() {
            return Err(LabError::Config("at least one seed is required".into()));
        }
        if r.episodes == 0 {
            return Err(LabError::Config("episodes must be >= 1".into()));
        }
        if r.eval_interval == 0 {
            return Err(LabError::Config("eval_interval must be >= 1".into()));
        }
        if !(r.coverage_cell > 0.0) {
            return Err(LabError::Config("coverage_cell must be > 0".into()));
        }
        let e = &self.exploration;
        for eps in [Some(e.epsilon), e.epsilon_final].into_iter().flatten() {
            if !(0.0..=1.0).contains(&eps) {
                return Err(LabError::Config(format!("epsilon must be in [0, 1], got {eps}")));
            }
        }
        self.polyrl.validate()?;
        self.learner.validate()?;
        let env = self.environment.build()?;
        if matches!(env, Environment::PointMass(_)) && e.method == Method::EpsilonGreedy {
            return Err(LabError::Config(
                "epsilon-greedy needs a learner; the point-mass task has none".into(),
            ));
        }
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file() {
        let c = ExperimentConfig::from_toml(
            r#"
            [environment]
            preset = "chamber-puddle"
            goal_reward = 500.0

            [exploration]
            method = "epsilon-greedy"

            [run]
            episodes = 3
            seeds = [7]
            "#,
        )
        .unwrap();
        assert_eq!(c.exploration.method, Method::EpsilonGreedy);
        assert_eq!(c.polyrl, PolyRlParams::default());
        match c.validate().unwrap() {
            Environment::Nav(s) => {
                assert_eq!(s.goal_reward, 500.0);
                assert!(s.puddle.is_some());
            }
            _ => panic!("expected a navigation task"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::default();
        c.run.episodes = 0;
        assert!(matches!(c.validate(), Err(LabError::Config(_))));
        let mut c = ExperimentConfig::default();
        c.run.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.polyrl.theta = 2.0;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        assert!(ExperimentConfig::from_toml("[run]\nbogus = 1").is_err());
    }

    #[test]
    fn epsilon_decay() {
        let e = ExplorationConfig {
            epsilon: 0.5,
            epsilon_final: Some(0.1),
            epsilon_decay_episodes: Some(4),
            ..Default::default()
        };
        assert_eq!(e.epsilon_at(0), 0.5);
        assert!((e.epsilon_at(2) - 0.3).abs() < 1e-12);
        assert!((e.epsilon_at(10) - 0.1).abs() < 1e-12);
    }
}
