//! Seeded samplers for Galton–Watson trees, correlated tree pairs and
//! correlated Erdős–Rényi graphs.

mod graphs;
mod gw;
mod rng;
mod trees;

pub use graphs::{sample_correlated_er, CorrelatedGraphs, GraphSidecar, SparseGraph};
pub use gw::{gw_probability, GwLaw};
pub use rng::{ln_factorial, poisson, poisson_pmf, poisson_positive, RngStream, POISSON_INVERSION_MAX};
pub use trees::{
    conditioned_degree_pmf, extinction_prob, sample_correlated_pair, sample_gw, sample_gw_conditioned,
    sample_null_pair, sample_shifted_pair, CorrelatedSample, ModelParams, ShiftedSample,
};
