//! Angle-constrained action sampling.
//!
//! A random point `P` of the action box is split into its projection `Vp`
//! on the previous action and the orthogonal remainder `Vr`; the remainder
//! is rescaled so the result `Q = k Vr + Vp` makes angle `eta` with the
//! previous action. `Q` is mirrored when `P` lies behind the previous action,
//! which keeps the walk moving forward, and finally clipped to the box.

use alloc::format;
use core::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chain;
use crate::error::{check_dim, Error, Result};
use crate::math;
use crate::vector::{self, Vector};

/// Smallest angle returned by [`sample_eta`].
pub const ETA_MIN: f64 = 1e-4;
/// Largest angle returned by [`sample_eta`]; `tan` diverges at pi/2.
pub const ETA_MAX: f64 = FRAC_PI_2 - 1e-3;

const MAX_RESAMPLES: usize = 16;

/// Axis-aligned box of admissible actions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionSpace {
    low: Vector,
    high: Vector,
}

impl ActionSpace {
    pub fn new(low: Vector, high: Vector) -> Result<Self> {
        check_dim(low.dim(), high.dim())?;
        if low.dim() < 2 {
            return Err(Error::domain("action space needs dimension >= 2"));
        }
        if low.iter().zip(high.iter()).any(|(l, h)| !(l < h)) {
            return Err(Error::domain("action bounds need low < high in every dimension"));
        }
        Ok(ActionSpace { low, high })
    }

    /// The box `[-m, m]^dim`.
    pub fn symmetric(dim: usize, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::domain(format!("box half-width must be positive, got {m}")));
        }
        Self::new(Vector::from(alloc::vec![-m; dim]), Vector::from(alloc::vec![m; dim]))
    }

    pub fn dim(&self) -> usize {
        self.low.dim()
    }

    pub fn low(&self) -> &Vector {
        &self.low
    }

    pub fn high(&self) -> &Vector {
        &self.high
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.len() == self.dim()
            && a
                .iter()
                .zip(self.low.iter().zip(self.high.iter()))
                .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    /// Componentwise clip; returns whether any component moved.
    pub fn clip(&self, a: &mut [f64]) -> bool {
        let mut moved = false;
        for (x, (l, h)) in a.iter_mut().zip(self.low.iter().zip(self.high.iter())) {
            let c = x.clamp(*l, *h);
            moved |= c != *x;
            *x = c;
        }
        moved
    }

    /// Uniform point of the box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        self.low
            .iter()
            .zip(self.high.iter())
            .map(|(l, h)| l + (h - l) * rng.random::<f64>())
            .collect()
    }

    pub fn mean_half_width(&self) -> f64 {
        self.low
            .iter()
            .zip(self.high.iter())
            .map(|(l, h)| 0.5 * (h - l))
            .sum::<f64>()
            / self.dim() as f64
    }
}

/// Draws `eta ~ N(theta, sigma^2)` and clamps it into `[ETA_MIN, ETA_MAX]`.
pub fn sample_eta<R: Rng + ?Sized>(theta: f64, sigma_sq: f64, rng: &mut R) -> f64 {
    let eta = if sigma_sq > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        theta + math::sqrt(sigma_sq) * z
    } else {
        theta
    };
    clamp_eta(eta)
}

pub fn clamp_eta(eta: f64) -> f64 {
    eta.clamp(ETA_MIN, ETA_MAX)
}

/// Result of one call to [`sample_action`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    /// Action after clipping to the box.
    pub action: Vector,
    /// Action before clipping.
    pub pre_clip: Vector,
    pub clipped: bool,
    /// The uniform-direction fallback was used (degenerate previous action
    /// or too many collinear draws).
    pub fallback: bool,
}

/// Samples the next action at angle `eta` from `prev`.
pub fn sample_action<R: Rng + ?Sized>(
    prev: &[f64],
    eta: f64,
    space: &ActionSpace,
    rng: &mut R,
) -> Result<SampledAction> {
    check_dim(space.dim(), prev.len())?;
    let prev_sq = vector::norm_sq(prev);
    if prev_sq > 1e-18 {
        let tan_eta = math::tan(eta);
        let unit = Vector::from(prev).scaled(1.0 / math::sqrt(prev_sq));
        let mut spin = Vector::zeros(prev.len());
        for _ in 0..MAX_RESAMPLES {
            let mut p = space.sample_uniform(rng);
            let d = vector::dot(prev, &p);
            let along = d / prev_sq;
            let residual = math::sqrt(
                p.iter()
                    .zip(prev)
                    .map(|(x, v)| (x - along * v) * (x - along * v))
                    .sum::<f64>(),
            );
            if d == 0.0 || residual < 1e-12 {
                continue;
            }
            // Spin P about prev so the residual direction is isotropic;
            // a box alone favours its diagonals.
            chain::perpendicular_unit(&unit, rng, &mut spin);
            p.iter_mut()
                .zip(prev.iter().zip(spin.iter()))
                .for_each(|(x, (v, w))| *x = along * v + residual * w);
            if let Some(q) = rotate_towards(prev, prev_sq, &p, tan_eta) {
                return Ok(finish(q, space, false));
            }
        }
    }
    Ok(finish(uniform_direction(space, rng), space, true))
}

/// Deterministic core of the sampler for a given random point `p`.
///
/// Returns `None` when `p` is orthogonal or collinear to `prev`.
pub fn rotate_towards(prev: &[f64], prev_sq: f64, p: &[f64], tan_eta: f64) -> Option<Vector> {
    let d = vector::dot(prev, p);
    if d == 0.0 {
        return None;
    }
    let scale = d / prev_sq;
    let vp: Vector = prev.iter().map(|x| scale * x).collect();
    let vr: Vector = p.iter().zip(vp.iter()).map(|(a, b)| a - b).collect();
    let vr_norm = vr.norm();
    if vr_norm < 1e-12 {
        return None;
    }
    let l = vp.norm() * tan_eta;
    let k = l / vr_norm;
    let sign = if d > 0.0 { 1.0 } else { -1.0 };
    Some(
        vr.iter()
            .zip(vp.iter())
            .map(|(r, v)| sign * (k * r + v))
            .collect(),
    )
}

fn uniform_direction<R: Rng + ?Sized>(space: &ActionSpace, rng: &mut R) -> Vector {
    let scale = space.mean_half_width();
    loop {
        let g: Vector = (0..space.dim())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let n = g.norm();
        if n > 1e-12 {
            return g.scaled(scale / n);
        }
    }
}

fn finish(pre_clip: Vector, space: &ActionSpace, fallback: bool) -> SampledAction {
    let mut action = pre_clip.clone();
    let clipped = space.clip(&mut action);
    SampledAction {
        action,
        pre_clip,
        clipped,
        fallback,
    }
}
