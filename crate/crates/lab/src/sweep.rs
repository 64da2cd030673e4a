//! Grid sweeps over the PolyRL angle, angle variance and exploration factor.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::csvio;
use crate::error::{LabError, Result};
use crate::experiment::{self, RunStatus, SeedRun};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    pub sigma_sq: f64,
    pub beta: f64,
}

/// Cartesian product of the sweep axes, theta outermost.
pub fn grid(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let axis = |v: &[f64], base: f64| if v.is_empty() { vec![base] } else { v.to_vec() };
    let p = &cfg.polyrl;
    let mut out = Vec::new();
    for &theta in &axis(&cfg.sweep.thetas, p.theta) {
        for &sigma_sq in &axis(&cfg.sweep.sigma_sqs, p.sigma_sq) {
            for &beta in &axis(&cfg.sweep.betas, p.beta) {
                out.push(SweepPoint { theta, sigma_sq, beta });
            }
        }
    }
    out
}

pub const SWEEP_HEADER: &[&str] = &[
    "point",
    "theta",
    "sigma_sq",
    "beta",
    "seeds",
    "failed",
    "eval_return_mean",
    "eval_return_se",
    "coverage_mean",
    "coverage_se",
    "goal_rate_mean",
    "goal_rate_se",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: usize,
    pub theta: f64,
    pub sigma_sq: f64,
    pub beta: f64,
    pub seeds: usize,
    pub failed: usize,
    pub eval_return_mean: Option<f64>,
    pub eval_return_se: Option<f64>,
    pub coverage_mean: Option<f64>,
    pub coverage_se: Option<f64>,
    pub goal_rate_mean: Option<f64>,
    pub goal_rate_se: Option<f64>,
}

/// Mean and standard error of the mean; `None` for an empty sample.
pub fn mean_se(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = if xs.len() < 2 {
        0.0
    } else {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    (Some(mean), Some(se))
}

/// Aggregates the seeds of one grid point: last evaluation return, last
/// coverage and fraction of training episodes that reached the goal.
pub fn aggregate(point: usize, p: SweepPoint, runs: &[SeedRun]) -> SweepRow {
    let ok: Vec<&SeedRun> = runs.iter().filter(|r| r.status == RunStatus::Ok).collect();
    let last = |f: fn(&experiment::MetricsRow) -> Option<f64>| -> Vec<f64> {
        ok.iter().filter_map(|r| r.metrics.last().and_then(f)).collect()
    };
    let goal_rates: Vec<f64> = ok
        .iter()
        .filter(|r| !r.metrics.is_empty())
        .map(|r| r.metrics.iter().filter(|m| m.reached_goal).count() as f64 / r.metrics.len() as f64)
        .collect();
    let (eval_return_mean, eval_return_se) = mean_se(&last(|m| m.eval_return));
    let (coverage_mean, coverage_se) = mean_se(&last(|m| m.coverage));
    let (goal_rate_mean, goal_rate_se) = mean_se(&goal_rates);
    SweepRow {
        point,
        theta: p.theta,
        sigma_sq: p.sigma_sq,
        beta: p.beta,
        seeds: runs.len(),
        failed: runs.len() - ok.len(),
        eval_return_mean,
        eval_return_se,
        coverage_mean,
        coverage_se,
        goal_rate_mean,
        goal_rate_se,
    }
}

/// Runs every grid point over all seeds. With `out`, each point gets its own
/// `point_NNN` directory of run outputs and `sweep.csv` holds the
/// aggregates.
pub fn sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let points = grid(cfg);
    if points.is_empty() {
        return Err(LabError::Config("empty sweep grid".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    for (i, p) in points.into_iter().enumerate() {
        let mut c = cfg.clone();
        c.polyrl.theta = p.theta;
        c.polyrl.sigma_sq = p.sigma_sq;
        c.polyrl.beta = p.beta;
        log::info!("sweep point {i}: theta {} sigma_sq {} beta {}", p.theta, p.sigma_sq, p.beta);
        let runs = experiment::run_experiment(&c)?;
        if let Some(dir) = out {
            experiment::write_outputs(&c, &runs, &dir.join(format!("point_{i:03}")))?;
        }
        rows.push(aggregate(i, p, &runs));
    }
    if let Some(dir) = out {
        csvio::write_csv(&dir.join("sweep.csv"), SWEEP_HEADER, &rows)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_product_and_defaults() {
        let mut c = ExperimentConfig::default();
        assert_eq!(grid(&c).len(), 1);
        c.sweep.thetas = vec![0.1, 0.2];
        c.sweep.betas = vec![0.0004, 0.001, 0.01];
        let g = grid(&c);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], SweepPoint { theta: 0.1, sigma_sq: c.polyrl.sigma_sq, beta: 0.0004 });
        assert_eq!(g[5].theta, 0.2);
        assert_eq!(g[5].beta, 0.01);
    }

    #[test]
    fn mean_and_standard_error() {
        assert_eq!(mean_se(&[]), (None, None));
        assert_eq!(mean_se(&[3.0]), (Some(3.0), Some(0.0)));
        let (m, s) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
