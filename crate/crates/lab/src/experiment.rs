//! Seeded training runs: environment, exploration policy and learner in one
//! episode loop, plus greedy evaluation rollouts.

use std::path::Path;

use polyrl_core::envs::{self, CoverageGrid, NavSpec, SparsePointMassSpec};
use polyrl_core::learner::{FeatureMap, LinearQ};
use polyrl_core::policy::{Decision, PolyRl};
use polyrl_core::rng::{substream, StreamRng};
use polyrl_core::sampler::ActionSpace;
use polyrl_core::{Error as CoreError, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Environment, ExperimentConfig, Method};
use crate::csvio;
use crate::error::{LabError, Result};

const ENV_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;
const TARGET_STREAM: u64 = 3;

pub const METRICS_HEADER: &[&str] = &[
    "seed",
    "episode",
    "train_return",
    "eval_return",
    "steps_to_goal",
    "reached_goal",
    "coverage",
    "greedy_fraction",
    "segment_count",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub episode: u64,
    pub train_return: f64,
    /// Mean return of the greedy rollouts; empty for tasks without a learner.
    pub eval_return: Option<f64>,
    /// Step at which the goal (or first reward) was reached, else the step cap.
    pub steps_to_goal: u64,
    pub reached_goal: bool,
    /// Cumulative visited-cell fraction over all training episodes so far.
    pub coverage: Option<f64>,
    pub greedy_fraction: f64,
    pub segment_count: u64,
    pub status: String,
}

pub const TRAJECTORY_HEADER: &[&str] = &["episode", "step", "x", "y", "reward", "done"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub episode: u64,
    pub step: u64,
    pub x: f64,
    pub y: f64,
    pub reward: f64,
    pub done: bool,
}

pub const DECISION_HEADER: &[&str] = &["episode", "step", "branch", "delta_ug2", "lb", "ub", "mode"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub episode: u64,
    pub step: u64,
    pub branch: String,
    pub delta_ug2: Option<f64>,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub mode: String,
}

impl DecisionRow {
    fn new(episode: u64, step: u64, d: &Decision) -> Self {
        DecisionRow {
            episode,
            step,
            branch: d.branch.as_str().to_string(),
            delta_ug2: d.delta_ug2,
            lb: d.lb,
            ub: d.ub,
            mode: d.mode.as_str().to_string(),
        }
    }
}

pub const WEIGHTS_HEADER: &[&str] = &["index", "weight"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Diverged(String),
    Failed(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged(_) => "diverged",
            RunStatus::Failed(_) => "failed",
        }
    }

    fn from_error(e: CoreError) -> Self {
        match e {
            CoreError::Diverged(m) => RunStatus::Diverged(m),
            other => RunStatus::Failed(other.to_string()),
        }
    }
}

/// Everything one seed produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub status: RunStatus,
    pub metrics: Vec<MetricsRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub decisions: Vec<DecisionRow>,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Default, Clone, Copy)]
struct EpisodeStats {
    ret: f64,
    steps: u64,
    goal_step: Option<u64>,
    greedy_steps: u64,
    segments: u64,
}

struct Recorder {
    trajectories: bool,
    decisions: bool,
    trajectory: Vec<TrajectoryRow>,
    decision_rows: Vec<DecisionRow>,
}

impl Recorder {
    fn point(&mut self, episode: u64, step: u64, p: &[f64], reward: f64, done: bool) {
        if self.trajectories {
            self.trajectory.push(TrajectoryRow {
                episode,
                step,
                x: p[0],
                y: p.get(1).copied().unwrap_or(0.0),
                reward,
                done,
            });
        }
    }

    fn decision(&mut self, episode: u64, step: u64, d: &Decision) {
        if self.decisions {
            self.decision_rows.push(DecisionRow::new(episode, step, d));
        }
    }
}

struct Rngs {
    env: StreamRng,
    policy: StreamRng,
    eval: StreamRng,
    target: StreamRng,
}

impl Rngs {
    fn new(seed: u64) -> Self {
        Rngs {
            env: substream(seed, ENV_STREAM),
            policy: substream(seed, POLICY_STREAM),
            eval: substream(seed, EVAL_STREAM),
            target: substream(seed, TARGET_STREAM),
        }
    }
}

/// Feature map and zero-initialised learner for a navigation task.
pub fn build_learner(cfg: &ExperimentConfig, spec: &NavSpec) -> Result<(FeatureMap, LinearQ)> {
    let l = &cfg.learner;
    let fm = FeatureMap::new(
        l.tilings,
        l.tiles_per_dim,
        Vector::from([0.0, 0.0]),
        Vector::from([spec.width, spec.height]),
        l.directions,
    )?;
    let q = LinearQ::new(&fm, l.alpha, l.gamma, spec.max_step_length)?;
    Ok((fm, q))
}

/// Mean return of `episodes` greedy rollouts.
pub fn evaluate_greedy(
    spec: &NavSpec,
    fm: &FeatureMap,
    q: &LinearQ,
    episodes: u64,
    rng: &mut StreamRng,
) -> polyrl_core::Result<f64> {
    if episodes == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut st = envs::reset(spec, rng);
        while !st.done {
            let a = q.greedy_action(fm, &st.position)?;
            let out = envs::step(spec, &st, &a)?;
            total += out.reward;
            st = out.state;
        }
    }
    Ok(total / episodes as f64)
}

struct NavRun<'a> {
    cfg: &'a ExperimentConfig,
    spec: &'a NavSpec,
    fm: FeatureMap,
    q: LinearQ,
    space: ActionSpace,
    poly: Option<PolyRl>,
}

impl NavRun<'_> {
    fn episode(
        &mut self,
        ep: u64,
        rngs: &mut Rngs,
        grid: &mut CoverageGrid,
        rec: &mut Recorder,
    ) -> polyrl_core::Result<EpisodeStats> {
        let mut st = envs::reset(self.spec, &mut rngs.env);
        grid.visit(&st.position);
        rec.point(ep, 0, &st.position, 0.0, false);
        let seg_before = match self.poly.as_mut() {
            Some(p) => {
                let before = p.counters().segments;
                p.begin_episode(ep, &st.position, None, &mut rngs.policy)?;
                before
            }
            None => 0,
        };
        let eps = self.cfg.exploration.epsilon_at(ep);
        let mut stats = EpisodeStats::default();
        while !st.done {
            let s = st.position.clone();
            let (action, idx, greedy) = match self.cfg.exploration.method {
                Method::Polyrl => {
                    let (fm, q) = (&self.fm, &self.q);
                    let poly = self.poly.as_mut().expect("policy exists for polyrl");
                    let (a, d) = poly.next_action(&s, |o| q.greedy_action(fm, o), &mut rngs.policy)?;
                    rec.decision(ep, stats.steps, &d);
                    let idx = q.nearest_index(&a);
                    (a, idx, d.branch.is_greedy())
                }
                Method::EpsilonGreedy => {
                    let (idx, g) = self.q.epsilon_greedy_index(&self.fm, &s, eps, &mut rngs.policy)?;
                    (self.q.directions()[idx].clone(), idx, g)
                }
                Method::Uniform => {
                    let a = self.space.sample_uniform(&mut rngs.policy);
                    let idx = self.q.nearest_index(&a);
                    (a, idx, false)
                }
            };
            let out = envs::step(self.spec, &st, &action)?;
            if let Some(p) = self.poly.as_mut() {
                p.observe_transition(&out.state.position)?;
            }
            self.q
                .td_update(&self.fm, &s, idx, out.reward, &out.state.position, out.reached_goal)?;
            stats.steps += 1;
            stats.ret += out.reward;
            stats.greedy_steps += greedy as u64;
            if out.reached_goal {
                stats.goal_step = Some(stats.steps);
            }
            grid.visit(&out.state.position);
            rec.point(ep, stats.steps, &out.state.position, out.reward, out.done);
            st = out.state;
        }
        if let Some(p) = &self.poly {
            stats.segments = p.counters().segments - seg_before;
        }
        Ok(stats)
    }
}

fn metrics_row(seed: u64, ep: u64, s: &EpisodeStats, status: &RunStatus) -> MetricsRow {
    MetricsRow {
        seed,
        episode: ep,
        train_return: s.ret,
        eval_return: None,
        steps_to_goal: s.goal_step.unwrap_or(s.steps),
        reached_goal: s.goal_step.is_some(),
        coverage: None,
        greedy_fraction: if s.steps > 0 {
            s.greedy_steps as f64 / s.steps as f64
        } else {
            0.0
        },
        segment_count: s.segments,
        status: status.as_str().to_string(),
    }
}

fn run_nav(cfg: &ExperimentConfig, spec: &NavSpec, seed: u64) -> polyrl_core::Result<SeedRun> {
    let (fm, q) = build_learner(cfg, spec).map_err(|e| match e {
        LabError::Core(c) => c,
        other => CoreError::InvalidConfig(other.to_string()),
    })?;
    let space = ActionSpace::symmetric(2, spec.max_step_length)?;
    let poly = match cfg.exploration.method {
        Method::Polyrl => Some(PolyRl::new(cfg.polyrl.clone(), space.clone())?),
        _ => None,
    };
    let mut run = NavRun {
        cfg,
        spec,
        fm,
        q,
        space,
        poly,
    };
    let mut rngs = Rngs::new(seed);
    let mut grid = CoverageGrid::new(spec, cfg.run.coverage_cell);
    let mut rec = Recorder {
        trajectories: cfg.run.trajectories,
        decisions: cfg.run.decisions,
        trajectory: Vec::new(),
        decision_rows: Vec::new(),
    };
    let mut status = RunStatus::Ok;
    let mut metrics = Vec::new();
    for ep in 0..cfg.run.episodes {
        let stats = match run.episode(ep, &mut rngs, &mut grid, &mut rec) {
            Ok(s) => s,
            Err(e) => {
                status = RunStatus::from_error(e);
                log::warn!("seed {seed}: episode {ep}: {status:?}");
                let mut row = metrics_row(seed, ep, &EpisodeStats::default(), &status);
                row.coverage = Some(grid.fraction());
                metrics.push(row);
                break;
            }
        };
        if (ep + 1) % cfg.run.eval_interval == 0 {
            let mut row = metrics_row(seed, ep, &stats, &status);
            row.coverage = Some(grid.fraction());
            match evaluate_greedy(spec, &run.fm, &run.q, cfg.run.eval_episodes, &mut rngs.eval) {
                Ok(r) => row.eval_return = Some(r),
                Err(e) => {
                    status = RunStatus::from_error(e);
                    row.status = status.as_str().to_string();
                    metrics.push(row);
                    break;
                }
            }
            metrics.push(row);
        }
        log::debug!("seed {seed} episode {ep}: return {} steps {}", stats.ret, stats.steps);
    }
    Ok(SeedRun {
        seed,
        status,
        metrics,
        trajectory: rec.trajectory,
        decisions: rec.decision_rows,
        weights: Some(run.q.weights().to_vec()),
    })
}

fn run_pointmass(cfg: &ExperimentConfig, spec: &SparsePointMassSpec, seed: u64) -> polyrl_core::Result<SeedRun> {
    let space = spec.action_space.clone();
    let mut poly = match cfg.exploration.method {
        Method::Polyrl => Some(PolyRl::new(cfg.polyrl.clone(), space.clone())?),
        _ => None,
    };
    let mut rngs = Rngs::new(seed);
    let mut rec = Recorder {
        trajectories: cfg.run.trajectories,
        decisions: cfg.run.decisions,
        trajectory: Vec::new(),
        decision_rows: Vec::new(),
    };
    let status = RunStatus::Ok;
    let mut metrics = Vec::new();
    for ep in 0..cfg.run.episodes {
        let mut st = spec.reset();
        rec.point(ep, 0, &st.position, 0.0, false);
        let seg_before = match poly.as_mut() {
            Some(p) => {
                let before = p.counters().segments;
                p.begin_episode(ep, &st.position, None, &mut rngs.policy)?;
                before
            }
            None => 0,
        };
        let mut stats = EpisodeStats::default();
        while !st.done {
            let (action, greedy) = match poly.as_mut() {
                Some(p) => {
                    let target = &mut rngs.target;
                    let sp = &space;
                    let (a, d) = p.next_action(&st.position, |_| Ok(sp.sample_uniform(target)), &mut rngs.policy)?;
                    rec.decision(ep, stats.steps, &d);
                    (a, d.branch.is_greedy())
                }
                None => (space.sample_uniform(&mut rngs.policy), false),
            };
            let (next, reward, done) = envs::step_pointmass(spec, &st, &action)?;
            if let Some(p) = poly.as_mut() {
                p.observe_transition(&next.position)?;
            }
            stats.steps += 1;
            stats.ret += reward;
            stats.greedy_steps += greedy as u64;
            if reward > 0.0 && stats.goal_step.is_none() {
                stats.goal_step = Some(stats.steps);
            }
            rec.point(ep, stats.steps, &next.position, reward, done);
            st = next;
        }
        if let Some(p) = &poly {
            stats.segments = p.counters().segments - seg_before;
        }
        if (ep + 1) % cfg.run.eval_interval == 0 {
            metrics.push(metrics_row(seed, ep, &stats, &status));
        }
    }
    Ok(SeedRun {
        seed,
        status,
        metrics,
        trajectory: rec.trajectory,
        decisions: rec.decision_rows,
        weights: None,
    })
}

/// Runs one seed. Learner divergence and other runtime failures are
/// reported through [`SeedRun::status`].
pub fn run_seed(cfg: &ExperimentConfig, env: &Environment, seed: u64) -> SeedRun {
    let res = match env {
        Environment::Nav(spec) => run_nav(cfg, spec, seed),
        Environment::PointMass(spec) => run_pointmass(cfg, spec, seed),
    };
    res.unwrap_or_else(|e| {
        log::error!("seed {seed}: {e}");
        SeedRun {
            seed,
            status: RunStatus::from_error(e),
            metrics: Vec::new(),
            trajectory: Vec::new(),
            decisions: Vec::new(),
            weights: None,
        }
    })
}

/// Validates the config and runs every seed, in parallel, in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    let env = cfg.validate()?;
    Ok(cfg
        .run
        .seeds
        .par_iter()
        .map(|&s| run_seed(cfg, &env, s))
        .collect())
}

/// Writes `metrics.csv`, the resolved `config.toml` and per-seed
/// trajectory, decision and weight files into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, runs: &[SeedRun], dir: &Path) -> Result<()> {
    let metrics: Vec<&MetricsRow> = runs.iter().flat_map(|r| &r.metrics).collect();
    csvio::write_csv(&dir.join("metrics.csv"), METRICS_HEADER, &metrics)?;
    csvio::write_atomic(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    for r in runs {
        if cfg.run.trajectories {
            csvio::write_csv(&trajectory_path(dir, r.seed), TRAJECTORY_HEADER, &r.trajectory)?;
        }
        if cfg.run.decisions && cfg.exploration.method == Method::Polyrl {
            let p = dir.join(format!("decisions_seed{}.csv", r.seed));
            csvio::write_csv(&p, DECISION_HEADER, &r.decisions)?;
        }
        if let Some(w) = &r.weights {
            write_weights(&weights_path(dir, r.seed), w)?;
        }
    }
    Ok(())
}

pub fn trajectory_path(dir: &Path, seed: u64) -> std::path::PathBuf {
    dir.join(format!("trajectory_seed{seed}.csv"))
}

pub fn weights_path(dir: &Path, seed: u64) -> std::path::PathBuf {
    dir.join(format!("weights_seed{seed}.csv"))
}

pub fn write_weights(path: &Path, w: &[f64]) -> Result<()> {
    let rows: Vec<WeightRow> = w
        .iter()
        .enumerate()
        .map(|(index, &weight)| WeightRow { index, weight })
        .collect();
    csvio::write_csv(path, WEIGHTS_HEADER, &rows)
}

pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let rows: Vec<WeightRow> = csvio::read_csv(path)?;
    if rows.iter().enumerate().any(|(i, r)| r.index != i) {
        return Err(LabError::parse(path, "weight indices must be 0, 1, 2, ..."));
    }
    Ok(rows.into_iter().map(|r| r.weight).collect())
}

pub const EVAL_HEADER: &[&str] = &["seed", "episode", "return"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub seed: u64,
    pub episode: u64,
    #[serde(rename = "return")]
    pub ret: f64,
}

/// Greedy rollouts of a saved weight vector, one row per episode.
pub fn eval_weights(cfg: &ExperimentConfig, weights: Vec<f64>, seed: u64, episodes: u64) -> Result<Vec<EvalRow>> {
    let spec = match cfg.validate()? {
        Environment::Nav(s) => s,
        Environment::PointMass(_) => {
            return Err(LabError::Config("eval needs a navigation task".into()))
        }
    };
    let (fm, mut q) = build_learner(cfg, &spec)?;
    q.set_weights(weights)
        .map_err(|e| LabError::Config(format!("weights do not fit the learner: {e}")))?;
    let mut rng = substream(seed, EVAL_STREAM);
    (0..episodes)
        .map(|episode| {
            let ret = evaluate_greedy(&spec, &fm, &q, 1, &mut rng)?;
            Ok(EvalRow { seed, episode, ret })
        })
        .collect()
}
