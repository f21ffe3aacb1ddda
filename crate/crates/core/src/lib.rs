//! Sticker-album completion modeled as an absorbing Markov chain.
//!
//! A collector buys single stickers, each drawn uniformly from the `n`
//! distinct stickers of the album. The number of distinct stickers pasted
//! after `t` purchases is a Markov chain on `{0, ..., n}` whose only
//! absorbing state is `n`. This crate answers how many purchases complete
//! the album at a given confidence, both exactly and by simulation:
//!
//! - [`album`]: the problem instance and the chain's transition structure.
//! - [`exact`]: the exact law of the chain and of the completion time,
//!   quantiles, geometric stage statistics and an inclusion-exclusion oracle.
//! - [`bounds`]: the `n ln n + cn` threshold and its `e^{-c}` tail bound.
//! - [`simulation`]: seeded, reproducible Monte Carlo collectors.
//! - [`report`]: integer-cent cost model and the command-line front end.

pub mod album;
pub mod bounds;
mod error;
pub mod exact;
pub mod report;
pub mod simulation;

pub use album::{AlbumSpec, CollectorState, TransitionMatrix};
pub use bounds::{BoundQuery, BoundResult};
pub use error::{Error, Result};
pub use exact::{CompletionLaw, GeometricLaw, StateDistribution};
pub use report::CostReport;
pub use simulation::{SimulationConfig, SimulationReport, TransitionTable};
