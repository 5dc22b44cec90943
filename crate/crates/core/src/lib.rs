//! Robust three-state mean-field games on networks: the game itself, its
//! stationary equilibria, and the honeybee-swarm, virus-propagation and
//! smart-grid models built on it.

pub mod cli;
pub mod epidemic;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod grid;
pub mod mfg;
pub mod network;
pub mod model;
pub mod ode;
pub mod parallel;
pub mod scenario;
pub mod simplex;
pub mod stationary;
pub mod swarm;

pub use error::{Error, Result};
pub use graph::Graph;
pub use model::{Congestion, CostWeights, RateMatrix, State, ValueVector};
pub use simplex::{make_simplex, SimplexState};
