//! Q-learning with linear function approximation over tile-coded features,
//! a greedy target policy over a fixed set of directions, and the
//! epsilon-greedy baseline.

mod linear_q;
mod tiles;

pub use linear_q::{LearnerConfig, LinearQ};
pub use tiles::FeatureMap;
