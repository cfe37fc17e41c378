//! Likelihood ratio between the correlated and independent tree models.

mod estimators;
mod propagation;
mod ratio;

pub use estimators::{
    calibrate_lr_test, cyclic_moment_analytic, estimate_cyclic_moment_mc, estimate_kl_mc, estimate_lr_mean_p1, kl_curve,
    kl_curve_csv, one_sided_lr_test, BetaRule, CyclicMoment, KlPoint, LrCalibration, MomentEstimate, KL_CSV_HEADER,
};
pub use propagation::{
    estimate_poisson_moment4, estimate_z_moments, poisson_central_moment4, propagation_constants, sigma_rule, z_statistic,
    EventSpec, PropagationConstants, TypeSet, ZMoments,
};
pub use ratio::{
    correlated_pmf_depth1, likelihood_ratio, log_likelihood_ratio, log_psi, psi, Likelihood, LikelihoodParams,
    DP_STATE_GUARD,
};
