//! Radius of gyration squared of a state trajectory, in batch and
//! incremental form.
//!
//! The spread measure is `U_g^2 = 1/(n-1) * sum_i ||s_i - c||^2` with `c` the
//! mean state; the `n - 1` divisor is used everywhere, including the batch
//! oracle.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::vector::{self, Vector};

/// Batch evaluation of the squared radius of gyration.
pub fn gyration_squared_batch<S: AsRef<[f64]>>(states: &[S]) -> Result<f64> {
    let n = states.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "radius of gyration needs >= 2 states, got {n}"
        )));
    }
    let dim = states[0].as_ref().len();
    let mut center = alloc::vec![0.0; dim];
    for s in states {
        let s = s.as_ref();
        check_dim(dim, s.len())?;
        for (c, x) in center.iter_mut().zip(s) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c /= n as f64);
    let sum: f64 = states
        .iter()
        .map(|s| vector::dist_sq(s.as_ref(), &center))
        .sum();
    Ok(sum / (n - 1) as f64)
}

/// Offset `s_n - c` of a new state from the centre of the `n` previous states,
/// expressed through bond vectors only: `w_n + (1/n) * sum_{i=1}^{n-1} i * w_i`.
///
/// `bonds` holds `w_1 .. w_{n-1}` of the existing trajectory and `new_bond` is
/// `w_n = s_n - s_{n-1}`.
pub fn center_offset_via_bonds<S: AsRef<[f64]>>(bonds: &[S], new_bond: &[f64]) -> Result<Vector> {
    if bonds.is_empty() {
        return Err(Error::InsufficientData(
            "need at least one existing bond".into(),
        ));
    }
    let dim = new_bond.len();
    let n = (bonds.len() + 1) as f64;
    let mut weighted = alloc::vec![0.0; dim];
    for (i, b) in bonds.iter().enumerate() {
        let b = b.as_ref();
        check_dim(dim, b.len())?;
        let k = (i + 1) as f64;
        for (w, x) in weighted.iter_mut().zip(b) {
            *w += k * x;
        }
    }
    Ok(new_bond
        .iter()
        .zip(&weighted)
        .map(|(b, w)| b + w / n)
        .collect())
}

/// Running record of a trajectory segment.
///
/// Besides `U_g^2` the tracker keeps the weighted bond sum `W = sum i * w_i`
/// and the raw bond-length and bond-angle sums used for online estimates of
/// the mean squared bond length and the persistence number. Pairs that
/// contain a zero bond are left out of the angle statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GyrationTracker {
    count: usize,
    center: Vector,
    ug2: f64,
    weighted_bond_sum: Vector,
    sum_bond_sq: f64,
    sum_cos: f64,
    cos_pairs: usize,
    last_cos: Option<f64>,
    last_state: Vector,
    last_bond: Option<Vector>,
}

impl GyrationTracker {
    /// Starts a segment at `start`.
    pub fn new(start: Vector) -> Self {
        let dim = start.dim();
        GyrationTracker {
            count: 1,
            center: start.clone(),
            ug2: 0.0,
            weighted_bond_sum: Vector::zeros(dim),
            sum_bond_sq: 0.0,
            sum_cos: 0.0,
            cos_pairs: 0,
            last_cos: None,
            last_state: start,
            last_bond: None,
        }
    }

    /// Appends a state and returns the change in `U_g^2`.
    pub fn append_state(&mut self, s: &[f64]) -> Result<f64> {
        check_dim(self.dim(), s.len())?;
        let n = self.count + 1;
        let offset_sq = vector::dist_sq(s, &self.center);
        let old = self.ug2;
        self.ug2 = if n == 2 {
            // Two states: spread is half the squared bond length.
            offset_sq / 2.0
        } else {
            ((n - 2) as f64 / (n - 1) as f64) * old + offset_sq / n as f64
        };

        let inv_n = 1.0 / n as f64;
        for (c, x) in self.center.iter_mut().zip(s) {
            *c += (x - *c) * inv_n;
        }

        let bond = Vector::from(vector::sub(s, &self.last_state));
        let k = (n - 1) as f64;
        for (w, b) in self.weighted_bond_sum.iter_mut().zip(bond.iter()) {
            *w += k * b;
        }
        self.sum_bond_sq += bond.norm_sq();
        self.last_cos = self
            .last_bond
            .as_ref()
            .and_then(|prev| vector::cos_angle(prev, &bond));
        if let Some(c) = self.last_cos {
            self.sum_cos += c;
            self.cos_pairs += 1;
        }
        self.last_state = Vector::from(s);
        self.last_bond = Some(bond);
        self.count = n;
        Ok(self.ug2 - old)
    }

    pub fn dim(&self) -> usize {
        self.last_state.dim()
    }

    /// Number of states in the segment.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn bond_count(&self) -> usize {
        self.count - 1
    }

    pub fn ug2(&self) -> f64 {
        self.ug2
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn weighted_bond_sum(&self) -> &Vector {
        &self.weighted_bond_sum
    }

    pub fn sum_bond_sq(&self) -> f64 {
        self.sum_bond_sq
    }

    pub fn sum_cos(&self) -> f64 {
        self.sum_cos
    }

    /// Number of consecutive non-zero bond pairs seen.
    pub fn cos_pairs(&self) -> usize {
        self.cos_pairs
    }

    /// Cosine between the two most recent bonds, if both are non-zero.
    pub fn last_cos(&self) -> Option<f64> {
        self.last_cos
    }

    pub fn last_state(&self) -> &Vector {
        &self.last_state
    }

    pub fn last_bond(&self) -> Option<&Vector> {
        self.last_bond.as_ref()
    }

    /// Mean squared bond length of the segment.
    pub fn mean_bond_sq(&self) -> Option<f64> {
        (self.count > 1).then(|| self.sum_bond_sq / (self.count - 1) as f64)
    }

    /// Mean cosine between consecutive bonds.
    pub fn mean_cos(&self) -> Option<f64> {
        (self.cos_pairs > 0).then(|| self.sum_cos / self.cos_pairs as f64)
    }
}

/// Recomputes `sum_{i=1}^{n-1} i * w_i` for a list of states.
pub fn weighted_bond_sum<S: AsRef<[f64]>>(states: &[S]) -> Vec<f64> {
    let dim = states.first().map_or(0, |s| s.as_ref().len());
    let mut w = alloc::vec![0.0; dim];
    for (i, pair) in states.windows(2).enumerate() {
        let k = (i + 1) as f64;
        for ((wj, a), b) in w.iter_mut().zip(pair[0].as_ref()).zip(pair[1].as_ref()) {
            *wj += k * (b - a);
        }
    }
    w
}
