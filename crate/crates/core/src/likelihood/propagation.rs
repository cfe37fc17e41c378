//! The Z_S statistic and the constants of the depth-propagation argument.

use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::estimators::MomentEstimate;
use super::ratio::{Likelihood, LikelihoodParams};
use crate::error::{Error, Result};
use crate::random_models::{poisson, sample_correlated_pair, sample_gw, GwLaw, ModelParams, RngStream};
use crate::tree_core::CanonicalTree;

/// A set of depth-d shapes, listed or given by complement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeSet {
    Only(Vec<CanonicalTree>),
    AllBut(Vec<CanonicalTree>),
}

impl TypeSet {
    pub fn contains(&self, t: &CanonicalTree) -> bool {
        match self {
            TypeSet::Only(v) => v.contains(t),
            TypeSet::AllBut(v) => !v.contains(t),
        }
    }

    fn listed(&self) -> Vec<CanonicalTree> {
        let (TypeSet::Only(v) | TypeSet::AllBut(v)) = self;
        let mut seen = FxHashSet::default();
        v.iter().filter(|t| seen.insert(t.id())).cloned().collect()
    }

    /// Σ_{τ∈A} (N_τ − λ GW_d(τ)) for the children of `t`.
    fn centered_count(&self, t: &CanonicalTree, d: u32, gw: &mut GwLaw) -> f64 {
        let listed = self.listed();
        let n_listed: f64 = listed.iter().map(|x| f64::from(t.multiplicity(x))).sum();
        let p_listed: f64 = listed.iter().map(|x| gw.prob(x, d)).sum();
        let lambda = gw.lambda();
        match self {
            TypeSet::Only(_) => n_listed - lambda * p_listed,
            TypeSet::AllBut(_) => (f64::from(t.degree()) - n_listed) - lambda * (1.0 - p_listed),
        }
    }
}

/// An event on pairs of depth-d trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSpec {
    Pairs { depth: u32, pairs: Vec<(CanonicalTree, CanonicalTree)> },
    Product { depth: u32, left: TypeSet, right: TypeSet },
    /// {L_d > e^{log_beta}} at the likelihood parameters in force.
    Threshold { depth: u32, log_beta: f64 },
}

impl EventSpec {
    pub fn depth(&self) -> u32 {
        match self {
            EventSpec::Pairs { depth, .. } | EventSpec::Product { depth, .. } | EventSpec::Threshold { depth, .. } => *depth,
        }
    }

    /// Membership of (t, t′). Threshold events need a likelihood evaluator.
    pub fn contains(&self, t: &CanonicalTree, t2: &CanonicalTree, lik: Option<&mut Likelihood>) -> Result<bool> {
        match self {
            EventSpec::Pairs { pairs, .. } => Ok(pairs.iter().any(|(a, b)| a == t && b == t2)),
            EventSpec::Product { left, right, .. } => Ok(left.contains(t) && right.contains(t2)),
            EventSpec::Threshold { depth, log_beta } => {
                let lik = lik.ok_or_else(|| Error::Domain("threshold event needs a likelihood evaluator".into()))?;
                Ok(lik.log_ratio_at(t, t2, *depth)? > *log_beta)
            }
        }
    }
}

/// Z_S = Σ_{(τ,τ′)∈S} Ñ_τ Ñ′_{τ′} with Ñ_τ = N_τ − λ GW_d(τ), where N_τ counts
/// the children of type τ of a depth-(d+1) tree.
pub fn z_statistic(t: &CanonicalTree, t2: &CanonicalTree, event: &EventSpec, gw: &mut GwLaw) -> Result<f64> {
    let d = event.depth();
    if t.depth() > d + 1 || t2.depth() > d + 1 {
        return Err(Error::Domain(format!("Z_S needs trees of depth ≤ {}", d + 1)));
    }
    match event {
        EventSpec::Pairs { pairs, .. } => {
            let lambda = gw.lambda();
            let mut seen = FxHashSet::default();
            let mut z = 0.0;
            for (a, b) in pairs {
                if seen.insert((a.id(), b.id())) {
                    let na = f64::from(t.multiplicity(a)) - lambda * gw.prob(a, d);
                    let nb = f64::from(t2.multiplicity(b)) - lambda * gw.prob(b, d);
                    z += na * nb;
                }
            }
            Ok(z)
        }
        EventSpec::Product { left, right, .. } => Ok(left.centered_count(t, d, gw) * right.centered_count(t2, d, gw)),
        EventSpec::Threshold { .. } => Err(Error::Domain("Z_S needs a finite or product event".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZMoments {
    pub lambda: f64,
    pub s: f64,
    /// E_0[Z_S], expected 0.
    pub null_mean: MomentEstimate,
    /// E_1[Z_S], expected λ s P1_d(S).
    pub planted_mean: MomentEstimate,
    pub p1_event: MomentEstimate,
    pub p0_event: MomentEstimate,
}

impl ZMoments {
    pub fn planted_target(&self) -> f64 {
        self.lambda * self.s * self.p1_event.estimate
    }

    /// Combined standard error of E_1[Z] − λ s P1_d(S).
    pub fn planted_gap_stderr(&self) -> f64 {
        (self.planted_mean.stderr.powi(2) + (self.lambda * self.s * self.p1_event.stderr).powi(2)).sqrt()
    }
}

/// Monte Carlo moments of Z_S under both hypotheses at depth d+1, plus
/// P0_d(S) and P1_d(S) from separate depth-d draws.
pub fn estimate_z_moments(event: &EventSpec, lambda: f64, s: f64, trials: usize, stream: RngStream) -> Result<ZMoments> {
    let d = event.depth();
    let lp = LikelihoodParams::new(lambda, s, d);
    lp.validate()?;
    if trials < 2 {
        return Err(Error::Domain("need at least two trials".into()));
    }
    let outer = ModelParams::new(lambda, s, d + 1);
    let inner = ModelParams::new(lambda, s, d);
    let run = |k: u64, f: &(dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync)| {
        let st = stream.substream(k);
        (0..trials)
            .into_par_iter()
            .map(|i| f(&mut st.substream(i as u64).rng()))
            .collect::<Result<Vec<f64>>>()
            .map(|v| MomentEstimate::from_values(&v))
    };
    let null_mean = run(0, &|rng| {
        let (a, b) = (sample_gw(&outer, rng).canonicalize(), sample_gw(&outer, rng).canonicalize());
        z_statistic(&a, &b, event, &mut GwLaw::new(lambda))
    })?;
    let planted_mean = run(1, &|rng| {
        let c = sample_correlated_pair(&outer, rng)?;
        z_statistic(&c.t.canonicalize(), &c.t_prime.canonicalize(), event, &mut GwLaw::new(lambda))
    })?;
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    let p1_event = run(2, &|rng| {
        let c = sample_correlated_pair(&inner, rng)?;
        let mut lik = Likelihood::new(lp)?;
        event.contains(&c.t.canonicalize(), &c.t_prime.canonicalize(), Some(&mut lik)).map(indicator)
    })?;
    let p0_event = run(3, &|rng| {
        let (a, b) = (sample_gw(&inner, rng).canonicalize(), sample_gw(&inner, rng).canonicalize());
        let mut lik = Likelihood::new(lp)?;
        event.contains(&a, &b, Some(&mut lik)).map(indicator)
    })?;
    Ok(ZMoments { lambda, s, null_mean, planted_mean, p1_event, p0_event })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConstants {
    pub s: f64,
    pub c: f64,
    /// λ_0(s,c) = max(8/(sc(1−c)), (6/(sc))⁴).
    pub lambda0: f64,
    /// ε(s,c) = min((sc/8)⁴, (1−c)s²c²/16).
    pub epsilon: f64,
}

pub fn propagation_constants(s: f64, c: f64) -> Result<PropagationConstants> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("need 0 < s ≤ 1, got {s}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("need 0 < c < 1, got {c}")));
    }
    let sc = s * c;
    Ok(PropagationConstants {
        s,
        c,
        lambda0: (8.0 / (sc * (1.0 - c))).max((6.0 / sc).powi(4)),
        epsilon: (sc / 8.0).powi(4).min((1.0 - c) * sc * sc / 16.0),
    })
}

/// σ = max(4λ P0_d(S)^{1/4}, 3λ^{3/4}).
pub fn sigma_rule(lambda: f64, p0_event: f64) -> f64 {
    (4.0 * lambda * p0_event.powf(0.25)).max(3.0 * lambda.powf(0.75))
}

/// E[(X − μ)⁴] for X ~ Poi(μ).
pub fn poisson_central_moment4(mu: f64) -> f64 {
    3.0 * mu * mu + mu
}

/// Sample mean of (X − μ)⁴ over `draws` Poisson variates.
pub fn estimate_poisson_moment4<R: Rng + ?Sized>(mu: f64, draws: usize, rng: &mut R) -> MomentEstimate {
    let v: Vec<f64> = (0..draws).map(|_| (poisson(rng, mu) as f64 - mu).powi(4)).collect();
    MomentEstimate::from_values(&v)
}
