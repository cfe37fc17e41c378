//! Galton–Watson trees and correlated tree pairs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{poisson, poisson_positive};
use crate::error::{Error, Result};
use crate::tree_core::LabeledTree;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub s: f64,
    pub depth: u32,
    #[serde(default)]
    pub delta: u32,
}

impl ModelParams {
    pub fn new(lambda: f64, s: f64, depth: u32) -> Self {
        ModelParams { lambda, s, depth, delta: 0 }
    }

    pub fn with_delta(mut self, delta: u32) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.s) {
            return Err(Error::Domain(format!("s out of [0,1]: {}", self.s)));
        }
        Ok(())
    }
}

/// p_d = P(GW(λ) has no node at depth d): p_0 = 0, p_d = exp(−λ(1 − p_{d−1})).
pub fn extinction_prob(lambda: f64, d: u32) -> f64 {
    let mut p = 0.0;
    for _ in 0..d {
        p = (-lambda * (1.0 - p)).exp();
    }
    p
}

/// Law of the root degree of the pruned tree T_d conditioned on survival:
/// q_{d,k} = P(Poi(μ) = k)/P(Poi(μ) > 0) with μ = λ(1 − p_{d−1}).
pub fn conditioned_degree_pmf(lambda: f64, d: u32, k: u64) -> f64 {
    assert!(d >= 1);
    if k == 0 {
        return 0.0;
    }
    let mu = lambda * (1.0 - extinction_prob(lambda, d - 1));
    super::rng::poisson_pmf(mu, k) / -(-mu).exp_m1()
}

/// Attaches a GW(λ) subtree of depth at most `levels` below the existing node `at`.
pub(crate) fn grow_gw<R: Rng + ?Sized>(
    t: &mut LabeledTree,
    at: usize,
    levels: u32,
    lambda: f64,
    rng: &mut R,
) {
    let mut frontier = vec![at];
    for _ in 0..levels {
        let mut next = Vec::new();
        for &u in &frontier {
            for _ in 0..poisson(rng, lambda) {
                next.push(t.add_child(u));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
}

/// GW(λ)_d: every node above depth d has Poi(λ) children.
pub fn sample_gw<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> LabeledTree {
    let mut t = LabeledTree::singleton();
    grow_gw(&mut t, 0, params.depth, params.lambda, rng);
    t
}

/// T_d: the pruned GW tree conditioned to reach depth d, sampled directly.
pub fn sample_gw_conditioned<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<LabeledTree> {
    if params.depth == 0 {
        return Err(Error::Domain("conditioned sampler needs d ≥ 1".into()));
    }
    let d = params.depth;
    let mus: Vec<f64> = (0..=d)
        .map(|k| if k == 0 { 0.0 } else { params.lambda * (1.0 - extinction_prob(params.lambda, k - 1)) })
        .collect();
    let mut t = LabeledTree::singleton();
    let mut frontier = vec![0usize];
    for level in 0..d {
        let remaining = d - level;
        let mut next = Vec::new();
        for &u in &frontier {
            for _ in 0..poisson_positive(rng, mus[remaining as usize]) {
                next.push(t.add_child(u));
            }
        }
        frontier = next;
    }
    Ok(t)
}

/// Two independent GW(λ)_d trees.
pub fn sample_null_pair<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> (LabeledTree, LabeledTree) {
    let a = sample_gw(params, rng);
    let b = sample_gw(params, rng);
    (a, b)
}

/// A correlated pair together with its intersection tree and how the
/// intersection embeds into each side.
#[derive(Clone, Debug)]
pub struct CorrelatedSample {
    pub t: LabeledTree,
    pub t_prime: LabeledTree,
    pub intersection: LabeledTree,
    /// `embed_t[v]` is the node of `t` carrying intersection node `v`.
    pub embed_t: Vec<usize>,
    pub embed_t_prime: Vec<usize>,
}

/// Copies `core` below node `at` of `t` and returns the image of each core node.
fn graft(t: &mut LabeledTree, at: usize, core: &LabeledTree) -> Vec<usize> {
    let mut image = vec![usize::MAX; core.len()];
    image[core.root()] = at;
    for u in core.bfs_order() {
        for &c in core.children(u) {
            image[c] = t.add_child(image[u]);
        }
    }
    image
}

/// Adds Poi(λ(1−s)) fresh children, each topped by GW(λ), to every core node
/// with relative depth below `core_depth`; nodes exactly at `core_depth` get
/// Poi(λ) fresh children when `boundary` is set. Subtrees are cut at `total` levels
/// below the core root.
#[allow(clippy::too_many_arguments)]
fn augment<R: Rng + ?Sized>(
    t: &mut LabeledTree,
    core: &LabeledTree,
    image: &[usize],
    core_depth: u32,
    total: u32,
    boundary: bool,
    params: &ModelParams,
    rng: &mut R,
) {
    let extra_mean = params.lambda * (1.0 - params.s);
    for u in core.bfs_order() {
        let k = core.node_depth(u);
        let mean = if k < core_depth {
            extra_mean
        } else if boundary && k < total {
            params.lambda
        } else {
            continue;
        };
        for _ in 0..poisson(rng, mean) {
            let c = t.add_child(image[u]);
            grow_gw(t, c, total - k - 1, params.lambda, rng);
        }
    }
}

/// τ* ~ GW(λs)_d, then T and T′ as independent (λ,s)-augmentations of τ*.
pub fn sample_correlated_pair<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<CorrelatedSample> {
    params.validate()?;
    let d = params.depth;
    let core_params = ModelParams { lambda: params.lambda * params.s, ..*params };
    let intersection = if params.s > 0.0 { sample_gw(&core_params, rng) } else { LabeledTree::singleton() };
    let mut t = LabeledTree::singleton();
    let embed_t = graft(&mut t, 0, &intersection);
    augment(&mut t, &intersection, &embed_t, d, d, false, params, rng);
    let mut t_prime = LabeledTree::singleton();
    let embed_t_prime = graft(&mut t_prime, 0, &intersection);
    augment(&mut t_prime, &intersection, &embed_t_prime, d, d, false, params, rng);
    Ok(CorrelatedSample { t, t_prime, intersection, embed_t, embed_t_prime })
}

/// A δ-shifted correlated pair: `t_prime` is rooted at the end of a path of
/// length δ leaving the root of `t`.
#[derive(Clone, Debug)]
pub struct ShiftedSample {
    pub t: LabeledTree,
    pub t_prime: LabeledTree,
    pub intersection: LabeledTree,
    /// Nodes ρ = path[0], …, ρ′ = path[δ] in `t`.
    pub path: Vec<usize>,
    pub embed_t: Vec<usize>,
    pub embed_t_prime: Vec<usize>,
}

/// The shifted model. Path nodes above ρ′ get Poi(λ) extra GW(λ) children in T.
/// From ρ′ an intersection τ* ~ GW(λs)_{d−δ} is augmented to relative depth
/// d−δ in T and to depth d in T′. In T′ the nodes of τ* at depth d−δ receive a
/// full Poi(λ) offspring, so that T′ is exactly GW(λ)_d.
pub fn sample_shifted_pair<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<ShiftedSample> {
    params.validate()?;
    let (d, delta) = (params.depth, params.delta);
    if delta == 0 || delta > d {
        return Err(Error::Domain(format!("shift δ = {delta} must satisfy 1 ≤ δ ≤ d = {d}")));
    }
    let mut t = LabeledTree::singleton();
    let mut path = vec![0usize];
    for _ in 0..delta {
        let next = t.add_child(*path.last().expect("non-empty path"));
        path.push(next);
    }
    for (i, &p) in path.iter().take(delta as usize).enumerate() {
        for _ in 0..poisson(rng, params.lambda) {
            let c = t.add_child(p);
            grow_gw(&mut t, c, d - i as u32 - 1, params.lambda, rng);
        }
    }
    let inner = d - delta;
    let core_params = ModelParams { lambda: params.lambda * params.s, depth: inner, ..*params };
    let intersection = if params.s > 0.0 { sample_gw(&core_params, rng) } else { LabeledTree::singleton() };
    let rho_prime = path[delta as usize];
    let embed_t = graft(&mut t, rho_prime, &intersection);
    augment(&mut t, &intersection, &embed_t, inner, inner, false, params, rng);
    let mut t_prime = LabeledTree::singleton();
    let embed_t_prime = graft(&mut t_prime, 0, &intersection);
    augment(&mut t_prime, &intersection, &embed_t_prime, inner, d, true, params, rng);
    Ok(ShiftedSample { t, t_prime, intersection, path, embed_t, embed_t_prime })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_models::RngStream;

    #[test]
    fn extinction_examples() {
        assert_eq!(extinction_prob(3.0, 0), 0.0);
        assert!((extinction_prob(1.0, 1) - (-1.0f64).exp()).abs() < 1e-15);
        // fixed point of x = exp(-2(1-x)) by bisection
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (-2.0 * (1.0 - mid)).exp() > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((extinction_prob(2.0, 50) - lo).abs() < 1e-9);
    }

    #[test]
    fn depth_zero_is_single_node() {
        let mut r = RngStream::new(1, 0).rng();
        for _ in 0..20 {
            assert_eq!(sample_gw(&ModelParams::new(5.0, 0.0, 0), &mut r).len(), 1);
        }
    }

    #[test]
    fn conditioned_trees_are_pruned() {
        let mut r = RngStream::new(2, 0).rng();
        let p = ModelParams::new(1.5, 0.0, 4);
        for _ in 0..200 {
            let t = sample_gw_conditioned(&p, &mut r).unwrap();
            let pruned = t.prune_to_depth(4).expect("survives");
            assert_eq!(pruned.canonicalize(), t.canonicalize());
        }
    }

    #[test]
    fn s_one_gives_identical_trees() {
        let mut r = RngStream::new(3, 0).rng();
        for _ in 0..50 {
            let c = sample_correlated_pair(&ModelParams::new(2.0, 1.0, 4), &mut r).unwrap();
            assert_eq!(c.t.canonicalize(), c.t_prime.canonicalize());
            assert_eq!(c.t.canonicalize(), c.intersection.canonicalize());
        }
    }

    #[test]
    fn intersection_embeds() {
        let mut r = RngStream::new(4, 0).rng();
        for _ in 0..100 {
            let c = sample_correlated_pair(&ModelParams::new(1.8, 0.7, 4), &mut r).unwrap();
            for (side, embed) in [(&c.t, &c.embed_t), (&c.t_prime, &c.embed_t_prime)] {
                assert_eq!(embed[c.intersection.root()], side.root());
                for (p, v) in c.intersection.edges() {
                    assert_eq!(side.parent(embed[v]), Some(embed[p]));
                }
                assert!(side.depth() <= 4);
            }
        }
    }

    #[test]
    fn shifted_structure() {
        let mut r = RngStream::new(5, 0).rng();
        let p = ModelParams::new(2.0, 0.6, 5).with_delta(2);
        for _ in 0..100 {
            let sh = sample_shifted_pair(&p, &mut r).unwrap();
            assert!(sh.t.depth() >= 2);
            assert!(sh.t.depth() <= 5);
            assert!(sh.t_prime.depth() <= 5);
            assert_eq!(sh.t.node_depth(sh.path[2]), 2);
            assert_eq!(sh.embed_t[0], sh.path[2]);
        }
        assert!(sample_shifted_pair(&ModelParams::new(2.0, 0.5, 3), &mut r).is_err());
        assert!(sample_shifted_pair(&ModelParams::new(2.0, 0.5, 3).with_delta(4), &mut r).is_err());
    }
}
