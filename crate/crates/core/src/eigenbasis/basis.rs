//! Eigenfunctions f_{λ,d,α} of the likelihood ratio.

use rustc_hash::FxHashMap;

use super::series::MultiIndexSeries;
use crate::error::{Error, Result};
use crate::random_models::ln_factorial;
use crate::tree_core::{compensated_sum, CanonicalTree};

/// Normalized Charlier polynomial
/// f_{1,α}(ℓ) = √(α!) Σ_{j≤min(α,ℓ)} C(ℓ,j) λ^{−j/2} (−√λ)^{α−j} / (α−j)!.
pub fn charlier(alpha: u32, ell: u64, lambda: f64) -> f64 {
    let a = u64::from(alpha);
    let half_ln_afact = 0.5 * ln_factorial(a);
    let ln_sqrt_l = 0.5 * lambda.ln();
    compensated_sum((0..=a.min(ell)).map(|j| {
        let ln_binom = ln_factorial(ell) - ln_factorial(j) - ln_factorial(ell - j);
        let mag = half_ln_afact + ln_binom - j as f64 * ln_sqrt_l + (a - j) as f64 * ln_sqrt_l - ln_factorial(a - j);
        let sign = if (a - j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * mag.exp()
    }))
}

/// Lazily evaluated eigenbasis at a fixed λ, with indices of size at most `max_index_size`.
///
/// f_{d+1,β}(t) = √(Π β_α!) [x^β] e^{−√λ x_•} Π_τ (1 + Σ_α x_α f_{d,α}(τ)/√λ)^{N_τ},
/// where β_α and N_τ are child multiplicities of β and t.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    lambda: f64,
    depth: u32,
    max_index_size: u64,
    memo: FxHashMap<(u64, u64, u32), f64>,
}

impl EigenBasis {
    pub fn new(lambda: f64, depth: u32, max_index_size: u64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(EigenBasis { lambda, depth, max_index_size, memo: FxHashMap::default() })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn max_index_size(&self) -> u64 {
        self.max_index_size
    }

    /// f_{λ,d,α}(t) at the basis depth.
    pub fn eval(&mut self, alpha: &CanonicalTree, t: &CanonicalTree) -> Result<f64> {
        let d = self.depth;
        if alpha.depth() > d || t.depth() > d {
            return Err(Error::Domain(format!("index and argument must have depth ≤ {d}")));
        }
        if alpha.size() > self.max_index_size {
            return Err(Error::Resource(format!(
                "index of size {} exceeds the truncation; need K ≥ {}",
                alpha.size(),
                alpha.size()
            )));
        }
        Ok(self.eval_at(alpha, t, d))
    }

    fn eval_at(&mut self, beta: &CanonicalTree, t: &CanonicalTree, d: u32) -> f64 {
        if beta.is_leaf() || d == 0 {
            return 1.0;
        }
        let key = (beta.id(), t.id(), d);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let vars = beta.children();
        let caps: Vec<usize> = vars.iter().map(|(_, m)| *m as usize).collect();
        let sqrt_l = self.lambda.sqrt();
        let mut series = MultiIndexSeries::one(&caps);
        for (tau, n) in t.children() {
            let a: Vec<f64> = vars.iter().map(|(alpha, _)| self.eval_at(alpha, tau, d - 1) / sqrt_l).collect();
            series.mul_linear_pow(&a, u64::from(*n));
        }
        // Σ_τ GW_{d−1}(τ) f_{d−1,α}(τ) = 1_{α=•}, so only x_• carries the prefactor.
        if let Some(j) = vars.iter().position(|(alpha, _)| alpha.is_leaf()) {
            series.mul_exp(j, -sqrt_l);
        }
        let norm: f64 = caps.iter().map(|&m| 0.5 * ln_factorial(m as u64)).sum::<f64>().exp();
        let v = norm * series.coeff(&caps);
        self.memo.insert(key, v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charlier_low_orders() {
        let l = 2.7;
        for ell in 0..10u64 {
            let x = ell as f64;
            assert!((charlier(0, ell, l) - 1.0).abs() < 1e-14);
            assert!((charlier(1, ell, l) - (x - l) / l.sqrt()).abs() < 1e-13);
            let want = 2f64.sqrt() * (x * (x - 1.0) / (2.0 * l) - x + l / 2.0);
            assert!((charlier(2, ell, l) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn stars_reduce_to_charlier() {
        let mut b = EigenBasis::new(2.0, 1, 10).unwrap();
        for a in 0..=6 {
            for ell in 0..=6 {
                let v = b.eval(&CanonicalTree::star(a), &CanonicalTree::star(ell)).unwrap();
                let w = charlier(a, u64::from(ell), 2.0);
                assert!((v - w).abs() <= 1e-10 * w.abs().max(1.0), "{a} {ell}: {v} vs {w}");
            }
        }
    }

    #[test]
    fn trivial_index_is_one() {
        let mut b = EigenBasis::new(1.3, 3, 5).unwrap();
        for e in ["()", "((()))", "((())(()()))"] {
            assert_eq!(b.eval(&CanonicalTree::leaf(), &e.parse().unwrap()).unwrap(), 1.0);
        }
        let big: CanonicalTree = "(()()()()()())".parse().unwrap();
        assert!(matches!(b.eval(&big, &big), Err(Error::Resource(_))));
    }
}
