//! Orthogonal eigenfunctions of the likelihood ratio and their checks.

mod basis;
mod series;
mod verify;

pub use basis::{charlier, EigenBasis};
pub use series::MultiIndexSeries;
pub use verify::{
    decomposition_with, dual_orthogonality, eigen_sum, gaussian_covariance_check, index_set, kl_gaussian_limit,
    mixed_moment, mixed_moment_limit, series_tail, verify_decomposition, verify_orthogonality, CovarianceReport,
    DecompositionReport, EigenReport, GaussianKl, MixedMoment, OrthogonalityReport, Support, SUPPORT_GUARD,
};
