//! Cut norm, cut distance, the dyadic weak* metric and Hausdorff distances.

mod cutdist;
mod cutnorm;
mod hausdorff;
mod weak_star;

pub use crate::coupling::Coupling;
pub use cutdist::{cut_distance, CutDistance, OptimizerConfig};
pub use cutnorm::{cut_norm, cut_norm_distance, CutNormMode, CutNormResult, DEFAULT_RESTARTS, EXACT_BLOCK_LIMIT};
pub use hausdorff::hausdorff_distance;
pub use weak_star::{dyadic_intervals, rectangle_signature, signature_distance, signature_len, weak_star_distance};
