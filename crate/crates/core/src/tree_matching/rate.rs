//! Monte Carlo growth rate of the matching weight.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weights::matching_weight;
use crate::error::{Error, Result};
use crate::random_models::{
    sample_correlated_pair, sample_gw_conditioned, sample_shifted_pair, ModelParams, RngStream,
};
use crate::tree_core::LabeledTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    Null,
    Correlated,
    Shifted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthStat {
    pub d: u32,
    pub mean_log_w: f64,
    pub stderr: f64,
    pub n_survived: usize,
    /// Rejected draws spent on survival conditioning.
    pub rejected: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub d_min: u32,
    pub d_max: u32,
    pub per_depth: Vec<DepthStat>,
}

impl RateEstimate {
    /// Rows `d,mean_logW,stderr,n_survived` under one header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,mean_logW,stderr,n_survived\n");
        for s in &self.per_depth {
            out.push_str(&format!("{},{},{},{}\n", s.d, s.mean_log_w, s.stderr, s.n_survived));
        }
        out
    }
}

/// Draws allowed per trial before survival conditioning gives up.
pub const MAX_REJECTIONS_PER_TRIAL: usize = 10_000;

/// Mean log W_d over survival-conditioned pairs for each depth, and the
/// least-squares slope of those means against d.
///
/// The slope's standard error propagates the per-depth standard errors
/// through the OLS weights (depths are sampled independently).
pub fn estimate_matching_rate(
    model: RateModel,
    params: &ModelParams,
    d_min: u32,
    d_max: u32,
    trials: usize,
    stream: RngStream,
) -> Result<RateEstimate> {
    params.validate()?;
    if d_min > d_max || d_min == 0 {
        return Err(Error::Domain(format!("bad depth range {d_min}..={d_max}")));
    }
    if trials < 30 {
        return Err(Error::Domain(format!("need at least 30 trials, got {trials}")));
    }
    if model == RateModel::Shifted && (params.delta == 0 || params.delta > d_min) {
        return Err(Error::Domain(format!("shift δ = {} must satisfy 1 ≤ δ ≤ d_min", params.delta)));
    }
    let mut per_depth = Vec::new();
    for d in d_min..=d_max {
        let depth_stream = stream.substream(u64::from(d));
        let draws: Vec<Option<(f64, usize)>> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = depth_stream.substream(i as u64).rng();
                let p = ModelParams { depth: d, ..*params };
                let mut rejected = 0usize;
                loop {
                    if let Some(w) = draw_weight(model, &p, &mut rng) {
                        return Some(((w as f64).ln(), rejected));
                    }
                    rejected += 1;
                    if rejected >= MAX_REJECTIONS_PER_TRIAL {
                        return None;
                    }
                }
            })
            .collect();
        let logs: Vec<f64> = draws.iter().flatten().map(|x| x.0).collect();
        let rejected = draws.iter().flatten().map(|x| x.1).sum();
        if logs.is_empty() {
            return Err(Error::Statistical(format!(
                "no surviving pair at depth {d} after {MAX_REJECTIONS_PER_TRIAL} draws per trial"
            )));
        }
        let (mean, se) = mean_stderr(&logs);
        per_depth.push(DepthStat { d, mean_log_w: mean, stderr: se, n_survived: logs.len(), rejected });
    }
    let (slope, intercept, stderr) = ols(&per_depth);
    Ok(RateEstimate { slope, stderr, intercept, d_min, d_max, per_depth })
}

// One pair from the model; None when the survival condition fails.
fn draw_weight(model: RateModel, p: &ModelParams, rng: &mut rand_chacha::ChaCha8Rng) -> Option<u64> {
    let d = p.depth;
    match model {
        RateModel::Null => {
            let a = sample_gw_conditioned(p, rng).ok()?;
            let b = sample_gw_conditioned(p, rng).ok()?;
            Some(matching_weight(&a, &b, d))
        }
        RateModel::Correlated => {
            let c = sample_correlated_pair(p, rng).ok()?;
            if c.intersection.depth() < d {
                return None;
            }
            Some(matching_weight(&c.t, &c.t_prime, d))
        }
        RateModel::Shifted => {
            let sh = sample_shifted_pair(p, rng).ok()?;
            let rho_prime = sh.path[p.delta as usize];
            if !reaches(&sh.t, rho_prime, d) || sh.t_prime.depth() < d {
                return None;
            }
            let w = matching_weight(&sh.t, &sh.t_prime, d);
            (w > 0).then_some(w)
        }
    }
}

// Whether some descendant of `u` sits at absolute depth `d`.
fn reaches(t: &LabeledTree, u: usize, d: u32) -> bool {
    let mut stack = vec![u];
    while let Some(x) = stack.pop() {
        if t.node_depth(x) == d {
            return true;
        }
        stack.extend_from_slice(t.children(x));
    }
    false
}

pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn ols(stats: &[DepthStat]) -> (f64, f64, f64) {
    let n = stats.len() as f64;
    let xbar = stats.iter().map(|s| f64::from(s.d)).sum::<f64>() / n;
    let ybar = stats.iter().map(|s| s.mean_log_w).sum::<f64>() / n;
    let sxx: f64 = stats.iter().map(|s| (f64::from(s.d) - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, ybar, f64::NAN);
    }
    let sxy: f64 = stats.iter().map(|s| (f64::from(s.d) - xbar) * (s.mean_log_w - ybar)).sum();
    let slope = sxy / sxx;
    let var: f64 = stats.iter().map(|s| ((f64::from(s.d) - xbar) / sxx).powi(2) * s.stderr.powi(2)).sum();
    (slope, ybar - slope * xbar, var.sqrt())
}
