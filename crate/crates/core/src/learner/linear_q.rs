use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::tiles::FeatureMap;
use crate::error::{Error, Result};
use crate::math;
use crate::vector::{self, Vector};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Number of discrete directions `K`.
    pub directions: usize,
    pub tilings: usize,
    pub tiles_per_dim: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.01,
            gamma: 0.99,
            directions: 16,
            tilings: 8,
            tiles_per_dim: 16,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if self.directions < 2 {
            return Err(Error::InvalidConfig("need at least 2 directions".into()));
        }
        Ok(())
    }
}

/// Linear action values over a [`FeatureMap`] with `K` planar directions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    weights: Vec<f64>,
    alpha: f64,
    gamma: f64,
    directions: Vec<Vector>,
}

impl LinearQ {
    /// Zero weights; direction `k` points at angle `2 pi k / K` and has
    /// length `step_length`.
    pub fn new(fm: &FeatureMap, alpha: f64, gamma: f64, step_length: f64) -> Result<Self> {
        let k = fm.n_actions();
        let directions = (0..k)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / k as f64;
                Vector::from([step_length * math::cos(a), step_length * math::sin(a)])
            })
            .collect();
        Self::with_directions(fm, alpha, gamma, directions)
    }

    pub fn with_directions(
        fm: &FeatureMap,
        alpha: f64,
        gamma: f64,
        directions: Vec<Vector>,
    ) -> Result<Self> {
        if directions.len() != fm.n_actions() {
            return Err(Error::InvalidConfig(format!(
                "{} directions for {} action blocks",
                directions.len(),
                fm.n_actions()
            )));
        }
        Ok(LinearQ {
            weights: alloc::vec![0.0; fm.len()],
            alpha,
            gamma,
            directions,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Replaces the weights, e.g. from a snapshot.
    pub fn set_weights(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: w.len(),
            });
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("weights must be finite"));
        }
        self.weights = w;
        Ok(())
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn n_actions(&self) -> usize {
        self.directions.len()
    }

    pub fn q_value(&self, fm: &FeatureMap, s: &[f64], a: usize) -> Result<f64> {
        Ok(fm.active(s, a)?.iter().map(|&i| self.weights[i]).sum())
    }

    /// Values of every action at `s`.
    pub fn q_values(&self, fm: &FeatureMap, s: &[f64]) -> Result<Vec<f64>> {
        let tiles = fm.state_tiles(s)?;
        Ok((0..self.n_actions())
            .map(|a| tiles.iter().map(|&t| self.weights[fm.index(t, a)]).sum())
            .collect())
    }

    /// Argmax action index; ties go to the lowest index.
    pub fn greedy_index(&self, fm: &FeatureMap, s: &[f64]) -> Result<usize> {
        let q = self.q_values(fm, s)?;
        let mut best = 0;
        for (i, v) in q.iter().enumerate().skip(1) {
            if *v > q[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn greedy_action(&self, fm: &FeatureMap, s: &[f64]) -> Result<Vector> {
        Ok(self.directions[self.greedy_index(fm, s)?].clone())
    }

    /// Uniform index with probability `epsilon`, otherwise greedy. The flag
    /// tells whether the greedy branch was taken.
    pub fn epsilon_greedy_index<R: Rng + ?Sized>(
        &self,
        fm: &FeatureMap,
        s: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<(usize, bool)> {
        if rng.random::<f64>() < epsilon {
            Ok((rng.random_range(0..self.n_actions()), false))
        } else {
            Ok((self.greedy_index(fm, s)?, true))
        }
    }

    pub fn epsilon_greedy_action<R: Rng + ?Sized>(
        &self,
        fm: &FeatureMap,
        s: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Vector> {
        Ok(self.directions[self.epsilon_greedy_index(fm, s, epsilon, rng)?.0].clone())
    }

    /// Direction index closest in angle to a continuous action (index 0 for
    /// a zero action).
    pub fn nearest_index(&self, action: &[f64]) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, d) in self.directions.iter().enumerate() {
            let v = vector::dot(d, action);
            if v > best_dot {
                best = i;
                best_dot = v;
            }
        }
        best
    }

    /// One Q-learning step; returns the TD error.
    pub fn td_update(
        &mut self,
        fm: &FeatureMap,
        s: &[f64],
        a: usize,
        r: f64,
        s_next: &[f64],
        done: bool,
    ) -> Result<f64> {
        let active = fm.active(s, a)?;
        let q: f64 = active.iter().map(|&i| self.weights[i]).sum();
        let bootstrap = if done {
            0.0
        } else {
            self.q_values(fm, s_next)?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let td = r + self.gamma * bootstrap - q;
        if !td.is_finite() {
            return Err(Error::Diverged(format!("non-finite TD error {td}")));
        }
        let step = self.alpha * td;
        for i in active {
            self.weights[i] += step;
            if !self.weights[i].is_finite() {
                return Err(Error::Diverged(format!("weight {i} became non-finite")));
            }
        }
        Ok(td)
    }
}
