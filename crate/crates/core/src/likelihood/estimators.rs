//! Cyclic moments, KL and the one-sided likelihood-ratio test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ratio::{Likelihood, LikelihoodParams};
use crate::error::{Error, Result};
use crate::random_models::{sample_correlated_pair, sample_gw, ModelParams, RngStream};
use crate::tree_core::{log_phi, phi_eval, CanonicalTree, OTTER_ALPHA};

/// Monte Carlo mean with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    /// Sample standard deviation over √trials.
    pub stderr: f64,
    pub trials: usize,
    /// Largest single-trial share of the summed values.
    pub max_share: f64,
    /// Set when one trial carries more than half the sum or a value overflowed.
    pub heavy_tail: bool,
}

impl MomentEstimate {
    pub fn from_values(values: &[f64]) -> MomentEstimate {
        let n = values.len();
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { f64::NAN };
        let abs_total: f64 = values.iter().map(|v| v.abs()).sum();
        let max_share = if abs_total > 0.0 {
            values.iter().map(|v| v.abs()).fold(0.0, f64::max) / abs_total
        } else {
            0.0
        };
        MomentEstimate {
            estimate: mean,
            stderr: (var / nf).sqrt(),
            trials: n,
            max_share,
            heavy_tail: max_share > 0.5 || !mean.is_finite(),
        }
    }

    /// |estimate − target| in units of stderr.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target).abs() / self.stderr
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclicMoment {
    pub value: f64,
    pub tail_bound: f64,
    /// False when the series tail could not be bounded.
    pub tail_rigorous: bool,
    /// Set for d = ∞ when s^m is at or beyond the radius of convergence.
    pub divergent: bool,
}

/// C_{d,m} = Φ_d(s^m), which does not depend on λ. `depth = None` means d = ∞.
pub fn cyclic_moment_analytic(depth: Option<u32>, s: f64, m: u32, n: usize) -> Result<CyclicMoment> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("cyclic moment needs 0 ≤ s < 1, got {s}")));
    }
    if m < 2 {
        return Err(Error::Domain(format!("cyclic moment needs m ≥ 2, got {m}")));
    }
    let x = s.powi(m as i32);
    if depth.is_none() && x >= OTTER_ALPHA {
        return Ok(CyclicMoment { value: f64::INFINITY, tail_bound: f64::INFINITY, tail_rigorous: false, divergent: true });
    }
    let v = phi_eval(depth, x, n)?;
    if let Some(d) = depth {
        if !v.tail_rigorous || v.tail_bound > 1e-9 * v.value {
            // The functional recursion is exact for finite depth.
            return Ok(CyclicMoment { value: log_phi(d, x)?.exp(), tail_bound: 0.0, tail_rigorous: true, divergent: false });
        }
    }
    Ok(CyclicMoment { value: v.value, tail_bound: v.tail_bound, tail_rigorous: v.tail_rigorous, divergent: false })
}

fn check_trials(trials: usize, min: usize) -> Result<()> {
    if trials < min {
        return Err(Error::Domain(format!("need at least {min} trials, got {trials}")));
    }
    Ok(())
}

fn model(params: &LikelihoodParams) -> ModelParams {
    ModelParams::new(params.lambda, params.s, params.depth)
}

/// E_0[L_d(T_1,T_2) ⋯ L_d(T_m,T_1)] over i.i.d. GW(λ)_d trees.
pub fn estimate_cyclic_moment_mc(params: &LikelihoodParams, m: u32, trials: usize, stream: RngStream) -> Result<MomentEstimate> {
    params.validate()?;
    if m < 2 {
        return Err(Error::Domain(format!("cyclic moment needs m ≥ 2, got {m}")));
    }
    check_trials(trials, 1000)?;
    let mp = model(params);
    let values = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i as u64).rng();
            let trees: Vec<CanonicalTree> = (0..m).map(|_| sample_gw(&mp, &mut rng).canonicalize()).collect();
            let mut lik = Likelihood::new(*params)?;
            let mut log_prod = 0.0;
            for j in 0..trees.len() {
                log_prod += lik.log_ratio(&trees[j], &trees[(j + 1) % trees.len()])?;
            }
            Ok(log_prod.exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MomentEstimate::from_values(&values))
}

/// E_1[L_d], which equals the second cyclic moment.
pub fn estimate_lr_mean_p1(params: &LikelihoodParams, trials: usize, stream: RngStream) -> Result<MomentEstimate> {
    estimate_under_p1(params, trials, stream, f64::exp)
}

/// KL(P1_d ‖ P0_d) = E_1[log L_d].
pub fn estimate_kl_mc(params: &LikelihoodParams, trials: usize, stream: RngStream) -> Result<MomentEstimate> {
    estimate_under_p1(params, trials, stream, |x| x)
}

fn estimate_under_p1(
    params: &LikelihoodParams,
    trials: usize,
    stream: RngStream,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<MomentEstimate> {
    params.validate()?;
    check_trials(trials, 1000)?;
    let mp = model(params);
    let values = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i as u64).rng();
            let c = sample_correlated_pair(&mp, &mut rng)?;
            let mut lik = Likelihood::new(*params)?;
            Ok(f(lik.log_ratio(&c.t.canonicalize(), &c.t_prime.canonicalize())?))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MomentEstimate::from_values(&values))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlPoint {
    pub d: u32,
    pub kl_estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub lambda: f64,
    pub s: f64,
}

/// KL_d for each requested depth. Each trial draws one pair at the largest
/// depth and truncates it, so all depths share the same samples.
pub fn kl_curve(lambda: f64, s: f64, depths: &[u32], trials: usize, stream: RngStream) -> Result<Vec<KlPoint>> {
    let d_max = *depths.iter().max().ok_or_else(|| Error::Domain("no depths requested".into()))?;
    let params = LikelihoodParams { lambda, s, depth: d_max, log_domain: true };
    params.validate()?;
    check_trials(trials, 1000)?;
    let mp = model(&params);
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i as u64).rng();
            let c = sample_correlated_pair(&mp, &mut rng)?;
            let (t, t2) = (c.t.canonicalize(), c.t_prime.canonicalize());
            let mut lik = Likelihood::new(params)?;
            depths.iter().map(|&d| lik.log_ratio_at(&t.truncate(d), &t2.truncate(d), d)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(depths
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let e = MomentEstimate::from_values(&col);
            KlPoint { d, kl_estimate: e.estimate, stderr: e.stderr, trials, lambda, s }
        })
        .collect())
}

pub const KL_CSV_HEADER: &str = "d,kl_estimate,stderr,trials,lambda,s";

pub fn kl_curve_csv(points: &[KlPoint]) -> String {
    let mut out = format!("{KL_CSV_HEADER}\n");
    for p in points {
        out.push_str(&format!("{},{},{},{},{},{}\n", p.d, p.kl_estimate, p.stderr, p.trials, p.lambda, p.s));
    }
    out
}

/// Whether L_d(t,t′) > β.
pub fn one_sided_lr_test(t: &CanonicalTree, t2: &CanonicalTree, lik: &mut Likelihood, beta: f64) -> Result<bool> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::Domain(format!("β must be non-negative, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(true);
    }
    Ok(lik.log_ratio(t, t2)? > beta.ln())
}

/// Threshold of the one-sided test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BetaRule {
    /// β = C_{d,2}^{1/16}.
    #[serde(rename = "C2_pow_1_16")]
    C2Pow1_16,
    #[serde(untagged)]
    Explicit(f64),
}

impl BetaRule {
    /// log β at depth d and correlation s.
    pub fn log_beta(&self, d: u32, s: f64) -> Result<f64> {
        match *self {
            BetaRule::C2Pow1_16 => Ok(log_phi(d, s * s)? / 16.0),
            BetaRule::Explicit(b) if b > 0.0 => Ok(b.ln()),
            BetaRule::Explicit(b) => Err(Error::Domain(format!("β must be positive, got {b}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrCalibration {
    pub beta_rule: BetaRule,
    pub log_beta: f64,
    pub lambda: f64,
    pub s: f64,
    pub d: u32,
    pub trials: usize,
    pub type1: f64,
    pub type1_stderr: f64,
    pub power: f64,
    pub power_stderr: f64,
    /// Markov bound 1/β on the type-I error.
    pub markov_bound: f64,
    /// Largest log L_d seen under each hypothesis.
    pub max_log_lr_null: f64,
    pub max_log_lr_planted: f64,
}

/// Empirical type-I error and power of the test over `trials` pairs per hypothesis.
pub fn calibrate_lr_test(params: &LikelihoodParams, rule: BetaRule, trials: usize, stream: RngStream) -> Result<LrCalibration> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let log_beta = rule.log_beta(params.depth, params.s)?;
    let mp = model(params);
    let null_stream = stream.substream(0);
    let planted_stream = stream.substream(1);
    let draws = |planted: bool| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = if planted { planted_stream } else { null_stream }.substream(i as u64).rng();
                let (t, t2) = if planted {
                    let c = sample_correlated_pair(&mp, &mut rng)?;
                    (c.t, c.t_prime)
                } else {
                    (sample_gw(&mp, &mut rng), sample_gw(&mp, &mut rng))
                };
                Likelihood::new(*params)?.log_ratio(&t.canonicalize(), &t2.canonicalize())
            })
            .collect::<Result<Vec<f64>>>()
    };
    let null = draws(false)?;
    let planted = draws(true)?;
    let rate = |xs: &[f64]| {
        let r: Vec<f64> = xs.iter().map(|&x| if x > log_beta { 1.0 } else { 0.0 }).collect();
        MomentEstimate::from_values(&r)
    };
    let (t1, pw) = (rate(&null), rate(&planted));
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LrCalibration {
        beta_rule: rule,
        log_beta,
        lambda: params.lambda,
        s: params.s,
        d: params.depth,
        trials,
        type1: t1.estimate,
        type1_stderr: t1.stderr,
        power: pw.estimate,
        power_stderr: pw.stderr,
        markov_bound: (-log_beta).exp(),
        max_log_lr_null: max(&null),
        max_log_lr_planted: max(&planted),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_cyclic_moment_is_geometric() {
        for s in [0.1, 0.5, 0.9] {
            let c = cyclic_moment_analytic(Some(1), s, 2, 200).unwrap();
            assert!((c.value - 1.0 / (1.0 - s * s)).abs() < 1e-9);
        }
        assert_eq!(cyclic_moment_analytic(Some(4), 0.0, 3, 50).unwrap().value, 1.0);
        assert!(cyclic_moment_analytic(None, 0.9, 2, 50).unwrap().divergent);
        assert!(cyclic_moment_analytic(Some(2), 1.0, 2, 50).is_err());
    }

    #[test]
    fn beta_rule_json() {
        assert_eq!(serde_json::to_string(&BetaRule::C2Pow1_16).unwrap(), "\"C2_pow_1_16\"");
        assert_eq!(serde_json::from_str::<BetaRule>("2.5").unwrap(), BetaRule::Explicit(2.5));
        assert_eq!(serde_json::from_str::<BetaRule>("\"C2_pow_1_16\"").unwrap(), BetaRule::C2Pow1_16);
    }

    #[test]
    fn lr_test_extremes() {
        let t: CanonicalTree = "((())())".parse().unwrap();
        let mut lik = Likelihood::new(LikelihoodParams::new(2.0, 0.5, 2)).unwrap();
        assert!(one_sided_lr_test(&t, &t, &mut lik, 0.0).unwrap());
        assert!(!one_sided_lr_test(&t, &t, &mut lik, f64::INFINITY).unwrap());
    }

    #[test]
    fn s_zero_gives_exact_values() {
        let p = LikelihoodParams::new(2.0, 0.0, 3);
        let kl = estimate_kl_mc(&p, 1000, RngStream::new(3, 0)).unwrap();
        assert_eq!((kl.estimate, kl.stderr), (0.0, 0.0));
        let c = estimate_cyclic_moment_mc(&p, 3, 1000, RngStream::new(3, 0)).unwrap();
        assert_eq!((c.estimate, c.stderr), (1.0, 0.0));
    }

    #[test]
    fn csv_layout() {
        let pts = vec![KlPoint { d: 2, kl_estimate: 0.5, stderr: 0.01, trials: 100, lambda: 4.0, s: 0.8 }];
        assert_eq!(kl_curve_csv(&pts), "d,kl_estimate,stderr,trials,lambda,s\n2,0.5,0.01,100,4,0.8\n");
    }
}
