//! Matching weights between trees and between oriented-edge subtrees, and
//! their Monte Carlo growth rate.

mod lap;
mod rate;
mod weights;

pub use lap::{lap_max, LapScore};
pub use rate::{estimate_matching_rate, DepthStat, RateEstimate, RateModel, MAX_REJECTIONS_PER_TRIAL};
pub use weights::{edge_matching_weight, matching_weight, matching_weight_canonical, matching_weight_levels, Adjacency, OrientedEdges, WeightTable};
