//! Optimal green/brown investment and transboundary pollution on weighted networks.
//!
//! The crate computes, node by node, the investment policy that maximizes
//! discounted welfare when pollution diffuses over a graph, together with the
//! shadow cost of emissions, pollution trajectories and steady states.
//!
//! Modules, bottom-up:
//! - [`network`]: graph builders, the operator `L` and the generator `L - delta`;
//! - [`transition`]: matrix exponential and state transition matrices;
//! - [`alpha`]: per-node shadow cost of emissions;
//! - [`policy`]: closed-form node policies and a brute-force oracle;
//! - [`dynamics`]: trajectories, steady states, welfare and admissibility;
//! - [`scenario`]: JSON configs, CSV/JSON outputs and the built-in figures;
//! - [`certify`]: closed forms checked against the oracle on random draws.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod certify;
pub mod dynamics;
pub mod error;
pub mod network;
pub mod ode;
pub mod policy;
pub mod scenario;
pub mod table;
pub mod transition;

pub use error::{Error, Result};
