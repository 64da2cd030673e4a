//! Persistent exploration built on polymer-chain statistics.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure
//! algorithmic parts of the method:
//!
//! - [`chain`]: vector geometry helpers, freely-jointed and freely-rotating
//!   chain generators, ensemble estimators;
//! - [`gyration`]: batch and incremental radius-of-gyration tracking;
//! - [`bounds`]: high-probability bounds on the change of the squared radius
//!   of gyration and the exploration-factor schedule;
//! - [`sampler`]: angle-constrained action sampling;
//! - [`policy`]: the exploring/exploiting behaviour-policy state machine;
//! - [`envs`]: sparse-reward 2D navigation and point-mass tasks;
//! - [`learner`]: linear Q-learning over tile-coded features.
//!
//! All randomness is passed in explicitly through [`rand::Rng`] handles.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bounds;
pub mod chain;
pub mod envs;
pub mod error;
pub mod gyration;
pub mod learner;
pub mod math;
pub mod policy;
pub mod rng;
pub mod sampler;
pub mod vector;

pub use error::{Error, Result};
pub use vector::Vector;
