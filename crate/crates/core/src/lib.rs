//! Step-graphon calculus: cut norm and cut distance, the dyadic weak* metric,
//! the stepping operator, flatness of pushforward measures, structuredness
//! order probes and multiway cut sets.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cohen;
pub mod coupling;
pub mod error;
pub mod graphon;
pub mod lp;
pub mod measures;
pub mod metrics;
pub mod multiway;
pub mod named;
pub mod order;
pub mod reproduce;

pub use coupling::Coupling;
pub use error::{GraphonError, Result};
pub use graphon::{
    common_refinement, interval_coupling, l1_distance, CanonicalForm, PartitionSpec, SignedStepKernel, StepFunction1D,
    StepGraphon,
};
