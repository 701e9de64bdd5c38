//! Online POMDP planning for continuous observation spaces.
//!
//! [`labecop::LabecopPlanner`] plans by sampling whole episodes and lazily
//! re-deriving the beliefs along each new episode from re-weighted stored
//! episodes, so it never needs to discretise observations.
//! [`pomcp::PomcpPlanner`] is a tree-search baseline that branches on
//! discretised observation keys. Executed beliefs are tracked with the SIR
//! filter in [`filter`], and [`harness`] runs seeded simulation batches and
//! writes their results as CSV.

pub mod belief;
pub mod error;
pub mod filter;
pub mod harness;
pub mod labecop;
pub mod model;
pub mod planning;
pub mod pomcp;
pub mod problems;

pub use belief::{Particle, WeightedBelief};
pub use error::{Error, Result};
pub use model::{Observation, Outcome, PomdpModel, StepResult};
pub use planning::{Budget, PlanResult, Planner};
