//! Exact probabilities of unlabeled trees under GW(λ)_d.

use rustc_hash::FxHashMap;

use super::rng::ln_factorial;
use crate::tree_core::CanonicalTree;

/// Memoized evaluator of log GW_d(t), using
/// GW_d(t) = e^{−λ} Π_τ (λ GW_{d−1}(τ))^{N_τ} / N_τ! with GW_0(•) = 1.
#[derive(Debug)]
pub struct GwLaw {
    lambda: f64,
    memo: FxHashMap<(u64, u32), f64>,
}

impl GwLaw {
    pub fn new(lambda: f64) -> Self {
        GwLaw { lambda, memo: FxHashMap::default() }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// log P(GW(λ)_d = t); −∞ when `t` is deeper than `d`.
    pub fn log_prob(&mut self, t: &CanonicalTree, d: u32) -> f64 {
        if t.depth() > d {
            return f64::NEG_INFINITY;
        }
        if d == 0 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&(t.id(), d)) {
            return v;
        }
        let ln_lambda = self.lambda.ln();
        let mut v = -self.lambda;
        for (c, m) in t.children() {
            let m = u64::from(*m);
            v += m as f64 * (ln_lambda + self.log_prob(c, d - 1)) - ln_factorial(m);
        }
        self.memo.insert((t.id(), d), v);
        v
    }

    pub fn prob(&mut self, t: &CanonicalTree, d: u32) -> f64 {
        self.log_prob(t, d).exp()
    }
}

/// One-off P(GW(λ)_d = t).
pub fn gw_probability(t: &CanonicalTree, lambda: f64, d: u32) -> f64 {
    GwLaw::new(lambda).prob(t, d)
}
