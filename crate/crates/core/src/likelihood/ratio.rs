//! The likelihood ratio L_d = P1_d / P0_d on pairs of unlabeled trees.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random_models::ln_factorial;
use crate::tree_core::CanonicalTree;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodParams {
    pub lambda: f64,
    pub s: f64,
    pub depth: u32,
    /// Evaluate with per-row rescaling in log space instead of raw products.
    pub log_domain: bool,
}

impl LikelihoodParams {
    /// Log-domain evaluation is the default from depth 3 on.
    pub fn new(lambda: f64, s: f64, depth: u32) -> Self {
        LikelihoodParams { lambda, s, depth, log_domain: depth >= 3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.s) {
            return Err(Error::Domain(format!("likelihood ratio needs 0 ≤ s < 1, got {}", self.s)));
        }
        Ok(())
    }
}

/// ψ(k,c,c′) = e^{λs} s^k (1−s)^{c+c′−2k} / (λ^k k!).
pub fn psi(k: u32, c: u32, c2: u32, lambda: f64, s: f64) -> Result<f64> {
    log_psi(k, c, c2, lambda, s).map(f64::exp)
}

pub fn log_psi(k: u32, c: u32, c2: u32, lambda: f64, s: f64) -> Result<f64> {
    if s >= 1.0 {
        return Err(Error::Domain("ψ needs s < 1".into()));
    }
    if k > c.min(c2) {
        return Err(Error::Domain(format!("ψ needs k ≤ min(c, c′), got k = {k}")));
    }
    let k_f = f64::from(k);
    let ls = if k == 0 { 0.0 } else { k_f * s.ln() };
    Ok(lambda * s + ls + f64::from(c + c2 - 2 * k) * (-s).ln_1p() - k_f * lambda.ln() - ln_factorial(u64::from(k)))
}

/// Default cap on the partial-matching DP state count (2^22).
pub const DP_STATE_GUARD: usize = 1 << 22;

/// Evaluator of L_d with a memo keyed on (shape id, shape id, depth).
///
/// L_d(t,t′) = e^{λs}(1−s)^{c+c′} Σ_m Π_{(i,j)∈m} s L_{d−1}(t_i,t′_j)/(λ(1−s)²),
/// where m runs over partial matchings between the two child lists. The
/// sum is a DP over children of one side, tracking how many children of each
/// shape on the other side are still free.
#[derive(Debug)]
pub struct Likelihood {
    params: LikelihoodParams,
    memo: Option<FxHashMap<(u64, u64, u32), f64>>,
    state_guard: usize,
    log_weight_scale: f64,
}

impl Likelihood {
    pub fn new(params: LikelihoodParams) -> Result<Self> {
        params.validate()?;
        let sbar = 1.0 - params.s;
        Ok(Likelihood {
            params,
            memo: Some(FxHashMap::default()),
            state_guard: DP_STATE_GUARD,
            log_weight_scale: params.s.ln() - params.lambda.ln() - 2.0 * sbar.ln(),
        })
    }

    /// Same evaluator with memoization switched off.
    pub fn without_memo(mut self) -> Self {
        self.memo = None;
        self
    }

    pub fn with_state_guard(mut self, guard: usize) -> Self {
        self.state_guard = guard;
        self
    }

    pub fn params(&self) -> &LikelihoodParams {
        &self.params
    }

    pub fn clear(&mut self) {
        if let Some(m) = self.memo.as_mut() {
            m.clear();
        }
    }

    /// log L_d at the configured depth.
    pub fn log_ratio(&mut self, t: &CanonicalTree, t2: &CanonicalTree) -> Result<f64> {
        self.log_ratio_at(t, t2, self.params.depth)
    }

    pub fn ratio(&mut self, t: &CanonicalTree, t2: &CanonicalTree) -> Result<f64> {
        self.log_ratio(t, t2).map(f64::exp)
    }

    /// log L_d at an explicit depth `d`.
    pub fn log_ratio_at(&mut self, t: &CanonicalTree, t2: &CanonicalTree, d: u32) -> Result<f64> {
        if t.depth() > d || t2.depth() > d {
            return Err(Error::Domain(format!("trees deeper than d = {d}")));
        }
        self.eval(t, t2, d)
    }

    fn eval(&mut self, t: &CanonicalTree, t2: &CanonicalTree, d: u32) -> Result<f64> {
        if d == 0 {
            return Ok(0.0);
        }
        if self.params.s == 0.0 {
            return Ok(0.0);
        }
        let key = (t.id(), t2.id(), d);
        if let Some(v) = self.memo.as_ref().and_then(|m| m.get(&key)) {
            return Ok(*v);
        }
        let (lambda, s) = (self.params.lambda, self.params.s);
        let c = f64::from(t.degree() + t2.degree());
        let log_sum = self.matching_sum(t, t2, d)?;
        let v = lambda * s + c * (-s).ln_1p() + log_sum;
        if let Some(m) = self.memo.as_mut() {
            m.insert(key, v);
        }
        Ok(v)
    }

    // log Σ_m Π w over partial matchings of the child lists.
    fn matching_sum(&mut self, t: &CanonicalTree, t2: &CanonicalTree, d: u32) -> Result<f64> {
        if t.is_leaf() || t2.is_leaf() {
            return Ok(0.0);
        }
        let ga = t.children();
        let gb = t2.children();
        let mut logw = vec![0.0; ga.len() * gb.len()];
        for (i, (a, _)) in ga.iter().enumerate() {
            for (j, (b, _)) in gb.iter().enumerate() {
                logw[i * gb.len() + j] = self.log_weight_scale + self.eval(a, b, d - 1)?;
            }
        }
        if ga.len() == 1 && gb.len() == 1 {
            return Ok(single_group_sum(ga[0].1, gb[0].1, logw[0], self.params.log_domain));
        }
        let states_a: f64 = ga.iter().map(|g| f64::from(g.1 + 1)).product();
        let states_b: f64 = gb.iter().map(|g| f64::from(g.1 + 1)).product();
        let (rows, cols, transposed) = if states_b <= states_a { (ga, gb, false) } else { (gb, ga, true) };
        let states = states_a.min(states_b);
        if states > self.state_guard as f64 {
            return Err(Error::Resource(format!(
                "partial-matching DP needs {states:.0} states (guard {}), degrees {} and {}",
                self.state_guard,
                t.degree(),
                t2.degree()
            )));
        }
        let at = |i: usize, j: usize| if transposed { logw[j * gb.len() + i] } else { logw[i * gb.len() + j] };
        Ok(multiset_dp(rows, cols, &at, self.params.log_domain))
    }
}

// Σ_k C(c,k) C(c′,k) k! w^k for one shape on each side.
fn single_group_sum(c: u32, c2: u32, logw: f64, log_domain: bool) -> f64 {
    let kmax = c.min(c2);
    if !log_domain {
        let w = logw.exp();
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=kmax {
            term *= f64::from(c - k + 1) * f64::from(c2 - k + 1) / f64::from(k) * w;
            sum += term;
        }
        return sum.ln();
    }
    let mut logs = Vec::with_capacity(kmax as usize + 1);
    let mut lt = 0.0;
    logs.push(0.0);
    for k in 1..=kmax {
        lt += (f64::from(c - k + 1) * f64::from(c2 - k + 1) / f64::from(k)).ln() + logw;
        logs.push(lt);
    }
    log_sum_exp(&logs)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

// Partial-matching sum. `rows` are expanded one child at a time; the state is
// the number of already-matched children of each shape among `cols`.
fn multiset_dp(
    rows: &[(CanonicalTree, u32)],
    cols: &[(CanonicalTree, u32)],
    logw: &dyn Fn(usize, usize) -> f64,
    log_domain: bool,
) -> f64 {
    let caps: Vec<usize> = cols.iter().map(|g| g.1 as usize).collect();
    let mut stride = vec![1usize; caps.len()];
    for j in 1..caps.len() {
        stride[j] = stride[j - 1] * (caps[j - 1] + 1);
    }
    let total = stride.last().map_or(1, |s| s * (caps.last().expect("non-empty") + 1));
    let mut dp = vec![0.0f64; total];
    let mut next = vec![0.0f64; total];
    dp[0] = 1.0;
    let mut log_scale = 0.0;
    let mut used = vec![0usize; caps.len()];
    let mut w = vec![0.0; caps.len()];
    for (i, (_, m)) in rows.iter().enumerate() {
        // Rescale so that the largest option of this row is 1.
        let lw: Vec<f64> = (0..caps.len()).map(|j| logw(i, j)).collect();
        let row_scale = if log_domain { lw.iter().copied().fold(0.0, f64::max) } else { 0.0 };
        let skip = (-row_scale).exp();
        for j in 0..caps.len() {
            w[j] = (lw[j] - row_scale).exp();
        }
        for _ in 0..*m {
            log_scale += row_scale;
            next.iter_mut().for_each(|x| *x = 0.0);
            used.iter_mut().for_each(|x| *x = 0);
            for idx in 0..total {
                let v = dp[idx];
                if v != 0.0 {
                    next[idx] += v * skip;
                    for j in 0..caps.len() {
                        let free = caps[j] - used[j];
                        if free > 0 {
                            next[idx + stride[j]] += v * free as f64 * w[j];
                        }
                    }
                }
                // advance the mixed-radix counter
                for j in 0..caps.len() {
                    used[j] += 1;
                    if used[j] <= caps[j] {
                        break;
                    }
                    used[j] = 0;
                }
            }
            std::mem::swap(&mut dp, &mut next);
        }
    }
    let sum: f64 = dp.iter().sum();
    log_scale + sum.ln()
}

/// L_d(t, t′) in one call.
pub fn likelihood_ratio(t: &CanonicalTree, t2: &CanonicalTree, params: &LikelihoodParams) -> Result<f64> {
    Likelihood::new(*params)?.ratio(t, t2)
}

pub fn log_likelihood_ratio(t: &CanonicalTree, t2: &CanonicalTree, params: &LikelihoodParams) -> Result<f64> {
    Likelihood::new(*params)?.log_ratio(t, t2)
}

/// P1_1(ℓ, ℓ′): root degrees of a depth-1 correlated pair, a bivariate Poisson
/// with common part Poi(λs) and private parts Poi(λ(1−s)).
pub fn correlated_pmf_depth1(l: u32, l2: u32, lambda: f64, s: f64) -> f64 {
    let common = lambda * s;
    let private = lambda * (1.0 - s);
    (0..=l.min(l2))
        .map(|k| {
            crate::random_models::poisson_pmf(common, u64::from(k))
                * crate::random_models::poisson_pmf(private, u64::from(l - k))
                * crate::random_models::poisson_pmf(private, u64::from(l2 - k))
        })
        .sum()
}
