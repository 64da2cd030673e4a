use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::math;
use crate::vector::Vector;

/// Tile coding over a box of states, one weight block per discrete action.
///
/// Each of the `tilings` grids has `tiles_per_dim + 1` tiles per dimension
/// (the extra row absorbs the offset) and is shifted by a fraction of a tile
/// using the usual asymmetric displacement `(2d + 1) * t / tilings`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    tilings: usize,
    tiles_per_dim: usize,
    low: Vector,
    high: Vector,
    n_actions: usize,
    tiles_per_tiling: usize,
}

impl FeatureMap {
    pub fn new(
        tilings: usize,
        tiles_per_dim: usize,
        low: Vector,
        high: Vector,
        n_actions: usize,
    ) -> Result<Self> {
        check_dim(low.dim(), high.dim())?;
        if tilings == 0 || tiles_per_dim == 0 || n_actions == 0 {
            return Err(Error::InvalidConfig(
                "tilings, tiles_per_dim and n_actions must be >= 1".into(),
            ));
        }
        if low.iter().zip(high.iter()).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidConfig("state bounds need low < high".into()));
        }
        let tiles_per_tiling = (tiles_per_dim + 1)
            .checked_pow(low.dim() as u32)
            .ok_or_else(|| Error::InvalidConfig(format!("too many tiles for dim {}", low.dim())))?;
        Ok(FeatureMap {
            tilings,
            tiles_per_dim,
            low,
            high,
            n_actions,
            tiles_per_tiling,
        })
    }

    pub fn tilings(&self) -> usize {
        self.tilings
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn dim(&self) -> usize {
        self.low.dim()
    }

    /// Features per action block.
    pub fn block_len(&self) -> usize {
        self.tilings * self.tiles_per_tiling
    }

    /// Total feature vector length.
    pub fn len(&self) -> usize {
        self.block_len() * self.n_actions
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Active feature offsets of a state inside one action block, one per
    /// tiling. States outside the box are clamped onto it.
    pub fn state_tiles(&self, s: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.dim(), s.len())?;
        let n = self.tiles_per_dim as f64;
        let mut clamped = false;
        let scaled: Vec<f64> = s
            .iter()
            .zip(self.low.iter().zip(self.high.iter()))
            .map(|(x, (l, h))| {
                let c = x.clamp(*l, *h);
                clamped |= c != *x;
                (c - l) / (h - l) * n
            })
            .collect();
        if clamped {
            log::trace!("state {s:?} outside feature bounds, clamped");
        }
        let side = self.tiles_per_dim + 1;
        let out = (0..self.tilings)
            .map(|t| {
                let mut idx = 0;
                for (d, u) in scaled.iter().enumerate().rev() {
                    let offset = ((2 * d + 1) * t % self.tilings) as f64 / self.tilings as f64;
                    let coord = (math::floor(u + offset) as usize).min(self.tiles_per_dim);
                    idx = idx * side + coord;
                }
                t * self.tiles_per_tiling + idx
            })
            .collect();
        Ok(out)
    }

    /// Global feature index of a state tile under action `a`.
    #[inline]
    pub fn index(&self, state_tile: usize, a: usize) -> usize {
        a * self.block_len() + state_tile
    }

    /// Active feature indices of `(s, a)`.
    pub fn active(&self, s: &[f64], a: usize) -> Result<Vec<usize>> {
        if a >= self.n_actions {
            return Err(Error::domain(format!("action index {a} out of range")));
        }
        Ok(self.state_tiles(s)?.into_iter().map(|t| self.index(t, a)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fm() -> FeatureMap {
        FeatureMap::new(8, 16, Vector::from([0.0, 0.0]), Vector::from([100.0, 100.0]), 16).unwrap()
    }

    #[test]
    fn construction_errors() {
        let l = Vector::from([0.0, 0.0]);
        let h = Vector::from([1.0, 1.0]);
        assert!(FeatureMap::new(0, 4, l.clone(), h.clone(), 2).is_err());
        assert!(FeatureMap::new(2, 4, h.clone(), l.clone(), 2).is_err());
        assert!(FeatureMap::new(2, 4, l, Vector::from([1.0]), 2).is_err());
    }

    #[test]
    fn nearby_states_share_most_tiles() {
        let f = fm();
        let a = f.state_tiles(&[50.0, 50.0]).unwrap();
        let b = f.state_tiles(&[50.3, 50.0]).unwrap();
        let shared = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert!(shared >= 6, "{shared}");
        let far = f.state_tiles(&[90.0, 10.0]).unwrap();
        assert!(a.iter().zip(&far).all(|(x, y)| x != y));
    }

    #[test]
    fn out_of_range_action() {
        assert!(fm().active(&[1.0, 1.0], 16).is_err());
    }

    proptest! {
        #[test]
        fn one_feature_per_tiling_in_range(x in -50.0f64..150.0, y in -50.0f64..150.0, a in 0usize..16) {
            let f = fm();
            let act = f.active(&[x, y], a).unwrap();
            prop_assert_eq!(act.len(), 8);
            for (t, i) in act.iter().enumerate() {
                prop_assert!(*i < f.len());
                let within = i - a * f.block_len();
                prop_assert_eq!(within / f.tiles_per_tiling, t);
            }
        }
    }
}
