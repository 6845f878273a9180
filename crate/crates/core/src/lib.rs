//! Capacity planning for stateless services under crash and transient
//! faults.
//!
//! The crate builds continuous-time Markov chain models of a server cluster
//! (passive failover or active route anywhere, in the cloud or on premises)
//! and of a single node's integrity under silent data corruption, solves them
//! for availability over a horizon, and searches for the smallest amount of
//! over-provisioning that reaches an availability target. A Monte Carlo
//! simulator of the same chains serves as an independent check.

pub mod avail;
pub mod ctmc;
mod error;
pub mod integrity;
pub mod kinds;
pub mod perf;
pub mod planner;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
pub use kinds::{Deployment, NodeVariant, Technique};
