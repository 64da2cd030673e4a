//! Sparse-reward environments: continuous 2D navigation with walls, a goal
//! disc and an optional puddle, plus a wall-free point mass rewarded once for
//! crossing a distance threshold.

mod coverage;
mod geometry;
mod nav;
mod pointmass;

pub use coverage::{coverage, CoverageGrid};
pub use geometry::{Disc, Rect, Segment};
pub use nav::{reset, step, NavSpec, NavState, StepOutcome, CONTACT_BACKOFF};
pub use pointmass::{step_pointmass, PointMassState, SparsePointMassSpec};
