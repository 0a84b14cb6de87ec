//! Simulation and verification toolkit for k-winners-take-all dynamics on
//! geometric random graphs.
//!
//! The crate has three largely independent parts:
//!
//! * the discrete engine ([`graph`], [`engine`], [`metrics`], [`trace`]):
//!   a directed random graph whose vertices live in `[0,1]^d` and whose
//!   edges are drawn with probability decaying in distance, plus the
//!   iterated top-k selection process on it and the cluster/radius/firing
//!   statistics used to study its convergence;
//! * the continuous limit ([`continuous`]): the measure-preserving
//!   superlevel-set iteration on finite interval unions in `[0,1]`, solved
//!   with closed-form fields and bisection rather than sampling;
//! * a toolbox of concentration bounds ([`bounds`]) with Monte Carlo and
//!   exact dynamic-programming validators.
//!
//! Everything is deterministic given the seeds: all randomness flows
//! through counter-based hashes ([`rng`]), so edge queries can be replayed
//! in any order and runs are reproducible byte for byte.

pub mod bounds;
pub mod continuous;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
