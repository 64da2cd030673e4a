//! High-probability bounds on the change of the squared radius of gyration
//! when one more state is appended to an exploratory segment, and the
//! exploration-factor schedule that tightens them over episodes.
//!
//! With `T` the number of states in the current segment, `U` its squared
//! radius of gyration, `W = sum_{i=1}^{T-1} i w_i`, `b0^2` the mean squared
//! bond length and `Lp` the persistence number:
//!
//! ```text
//! Lambda = -U / (T - 1)
//! Gamma  = b0^2 / T + ||W||^2 / T^3
//! UB = Lambda + (1/delta) [Gamma + (2 b0^2 / T^2) sum_{i=1}^{T-1} i exp(-(T-i)/Lp)]
//! LB = Lambda + (1 - sqrt(2 - 2 delta)) [Gamma + ((T-1)(T-2)/T^2) b0^2 exp(-(T-1)/Lp)]
//! ```

use alloc::format;

use crate::error::{Error, Result};
use crate::gyration::GyrationTracker;
use crate::math;

/// Smallest delta used when evaluating the bounds.
pub const DELTA_MIN: f64 = 1e-6;
/// Largest delta used when evaluating the bounds.
pub const DELTA_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// State count of the current segment.
    pub n_states: usize,
    pub ug2: f64,
    /// `||sum_i i w_i||^2`.
    pub weighted_bond_sum_norm_sq: f64,
    /// Estimated mean squared bond length.
    pub b0_sq: f64,
    /// Estimated persistence number.
    pub lp: f64,
    pub delta: f64,
}

impl BoundInputs {
    /// Inputs for a segment held by `tracker`, with explicit `b0^2` and `Lp`.
    pub fn from_tracker(tracker: &GyrationTracker, b0_sq: f64, lp: f64, delta: f64) -> Self {
        BoundInputs {
            n_states: tracker.count(),
            ug2: tracker.ug2(),
            weighted_bond_sum_norm_sq: tracker.weighted_bond_sum().norm_sq(),
            b0_sq,
            lp,
            delta,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_states < 3 {
            return Err(Error::domain(format!(
                "bounds need a segment of >= 3 states, got {}",
                self.n_states
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.b0_sq > 0.0) || !(self.lp > 0.0) {
            return Err(Error::domain("b0^2 and Lp must be positive"));
        }
        if !(self.ug2 >= 0.0) || !(self.weighted_bond_sum_norm_sq >= 0.0) {
            return Err(Error::domain("U_g^2 and ||W||^2 must be non-negative"));
        }
        Ok(())
    }
}

/// `Lambda = -U_g^2 / (T - 1)`.
pub fn lambda_term(inputs: &BoundInputs) -> Result<f64> {
    if inputs.n_states < 2 {
        return Err(Error::domain("Lambda needs >= 2 states"));
    }
    Ok(-inputs.ug2 / (inputs.n_states - 1) as f64)
}

/// `Gamma = b0^2 / T + ||W||^2 / T^3`.
pub fn gamma_term(inputs: &BoundInputs) -> Result<f64> {
    if inputs.n_states < 1 || !(inputs.b0_sq > 0.0) {
        return Err(Error::domain("Gamma needs >= 1 state and b0^2 > 0"));
    }
    let t = inputs.n_states as f64;
    Ok(inputs.b0_sq / t + inputs.weighted_bond_sum_norm_sq / (t * t * t))
}

/// Upper confidence bound on the next change of `U_g^2`.
pub fn upper_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let t = inputs.n_states;
    let tf = t as f64;
    let decay = decay_sum(t, inputs.lp);
    let bracket = gamma_term(inputs)? + 2.0 * inputs.b0_sq / (tf * tf) * decay;
    Ok(lambda_term(inputs)? + bracket / inputs.delta)
}

/// `sum_{i=1}^{t-1} i exp(-(t-i)/lp)` in constant time.
pub(crate) fn decay_sum(t: usize, lp: f64) -> f64 {
    let tf = t as f64;
    if t <= 64 {
        return (1..t).map(|i| i as f64 * math::exp(-((t - i) as f64) / lp)).sum();
    }
    // With j = t - i the sum is t S1 - S2, S1 = sum r^j, S2 = sum j r^j, j = 1..m.
    let m = tf - 1.0;
    let x = 1.0 / lp;
    if m * x < 1e-3 {
        // Taylor series of exp(-j x) to third order over power sums of j.
        let p = [
            m,
            m * (m + 1.0) / 2.0,
            m * (m + 1.0) * (2.0 * m + 1.0) / 6.0,
            (m * (m + 1.0) / 2.0) * (m * (m + 1.0) / 2.0),
            m * (m + 1.0) * (2.0 * m + 1.0) * (3.0 * m * m + 3.0 * m - 1.0) / 30.0,
        ];
        let mut coef = 1.0;
        let mut total = 0.0;
        for n in 0..4 {
            total += coef * (tf * p[n] - p[n + 1]);
            coef *= -x / (n + 1) as f64;
        }
        return total;
    }
    let q = -math::expm1(-x);
    let r = math::exp(-x);
    let one_minus_rm = -math::expm1(-m * x);
    let rm = math::exp(-m * x);
    let s1 = r * one_minus_rm / q;
    let s2 = r * (one_minus_rm - m * q * rm) / (q * q);
    tf * s1 - s2
}

/// Lower confidence bound on the next change of `U_g^2`.
pub fn lower_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let tf = inputs.n_states as f64;
    let factor = 1.0 - math::sqrt(2.0 - 2.0 * inputs.delta);
    let bracket = gamma_term(inputs)?
        + (tf - 1.0) * (tf - 2.0) / (tf * tf) * inputs.b0_sq * math::exp(-(tf - 1.0) / inputs.lp);
    Ok(lambda_term(inputs)? + factor * bracket)
}

/// `delta = 1 - exp(-beta * episode)`.
pub fn delta_schedule(beta: f64, episode: u64) -> f64 {
    1.0 - math::exp(-beta * episode as f64)
}

/// Clamps a scheduled delta into `[DELTA_MIN, DELTA_MAX]`.
pub fn clamp_delta(delta: f64) -> f64 {
    delta.clamp(DELTA_MIN, DELTA_MAX)
}
