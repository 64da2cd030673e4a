//! d-dimensional real vectors: states, actions and bond vectors.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("vector must have dimension >= 1"));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("vector components must be finite"));
        }
        Ok(Vector(components))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    pub fn scaled(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * k).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        Vector(sub(&self.0, other))
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        Vector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        debug_assert!(v.iter().all(|c| c.is_finite()));
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector::from(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector::from(v.to_vec())
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(norm_sq(a))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `||a - b||^2` without allocating.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Cosine of the angle between `a` and `b`, or `None` if either is (near) zero.
pub fn cos_angle(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm_sq(a);
    let nb = norm_sq(b);
    if na < ZERO_BOND_SQ || nb < ZERO_BOND_SQ {
        return None;
    }
    Some((dot(a, b) / math::sqrt(na * nb)).clamp(-1.0, 1.0))
}

/// Squared-norm threshold under which a bond counts as zero (norm < 1e-12).
pub const ZERO_BOND_SQ: f64 = 1e-24;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![]).is_err());
        assert_eq!(Vector::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }

    #[test]
    fn cos_angle_skips_zero_vectors() {
        assert_eq!(cos_angle(&[0.0, 0.0], &[1.0, 0.0]), None);
        let c = cos_angle(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
