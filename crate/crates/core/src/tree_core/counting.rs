//! Counting unlabeled rooted trees by size and depth, the generating functions
//! Φ_d, Otter's constant, and brute-force enumeration.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::FxHashMap;
use serde::Serialize;

use super::canonical::CanonicalTree;
use super::series::PowerSeries;
use crate::error::{Error, Result};

/// Otter's constant: the radius of convergence of Φ_∞.
pub const OTTER_ALPHA: f64 = 0.338_321_856_899_208_7;

/// Default cap on `max_size` for [`enumerate_trees`].
pub const ENUMERATION_GUARD: usize = 16;

/// Φ_d as a series: coefficient `k` is A_{d,k+1}, the number of trees with
/// `k + 1` nodes and depth at most `d`. `depth = None` means unbounded depth.
pub fn tree_counts(depth: Option<u32>, n: usize) -> PowerSeries<BigInt> {
    assert!(n >= 1, "need at least one coefficient");
    // A size-n tree has depth at most n-1, so n-1 steps reach the limit.
    let steps = match depth {
        Some(d) => d as usize,
        None => n - 1,
    };
    let mut phi = vec![BigInt::zero(); n];
    phi[0] = BigInt::one();
    for _ in 0..steps {
        let next = euler_step(&phi);
        if next == phi {
            break;
        }
        phi = next;
    }
    PowerSeries::from_coeffs(phi)
}

/// One step Φ_d → Φ_{d+1} = exp(Σ_j x^j Φ_d(x^j)/j) = Π_i (1−x^i)^{−A_{d,i}},
/// via m b_m = Σ_{k≤m} c_k b_{m−k} with c_k = Σ_{i|k} i A_{d,i}.
fn euler_step(phi: &[BigInt]) -> Vec<BigInt> {
    let n = phi.len();
    let mut c = vec![BigInt::zero(); n];
    for i in 1..n {
        let a = &phi[i - 1];
        if a.is_zero() {
            continue;
        }
        let term = a * BigInt::from(i);
        let mut k = i;
        while k < n {
            c[k] += &term;
            k += i;
        }
    }
    let mut b = vec![BigInt::zero(); n];
    b[0] = BigInt::one();
    for m in 1..n {
        let mut acc = BigInt::zero();
        for k in 1..=m {
            if !c[k].is_zero() {
                acc += &c[k] * &b[m - k];
            }
        }
        b[m] = acc / BigInt::from(m);
    }
    b
}

/// A_{d,n} for n = 1..=N, indexed from 1 (entry 0 is zero).
pub fn counts_by_size(depth: Option<u32>, n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero()];
    out.extend(tree_counts(depth, n).into_coeffs());
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiValue {
    /// Σ_{n≤N} A_{d,n} x^{n−1}.
    pub value: f64,
    /// Bound on the neglected terms; infinite when no bound is available.
    pub tail_bound: f64,
    /// False when `tail_bound` is only an estimate from the last ratio.
    pub tail_rigorous: bool,
}

/// Truncated Φ_d(x) with a tail bound.
///
/// The rigorous bound uses A_{d,n} ≤ A_n ≤ A_N α^{N−n} for n > N, valid for
/// x < α. For finite `d` and larger `x` the tail is extrapolated from the
/// last coefficient ratio and flagged as non-rigorous.
pub fn phi_eval(depth: Option<u32>, x: f64, n: usize) -> Result<PhiValue> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("Φ evaluated at x = {x}, need 0 ≤ x < 1")));
    }
    let a = to_f64(&tree_counts(depth, n));
    let value = compensated_sum(a.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)));
    let last = a[n - 1] * x.powi(n as i32 - 1);
    // Slightly below α so that 1/α_lower dominates every ratio A_{n+1}/A_n.
    let alpha_lower = 0.338_32;
    let q = x / alpha_lower;
    let all = to_f64(&tree_counts(None, n));
    let all_last = all[n - 1] * x.powi(n as i32 - 1);
    if x == 0.0 || last == 0.0 {
        return Ok(PhiValue { value, tail_bound: 0.0, tail_rigorous: true });
    }
    if q < 1.0 {
        return Ok(PhiValue { value, tail_bound: all_last * q / (1.0 - q), tail_rigorous: true });
    }
    let r = if n >= 2 && a[n - 2] > 0.0 { x * a[n - 1] / a[n - 2] } else { f64::INFINITY };
    let tail = if r < 1.0 { last * r / (1.0 - r) } else { f64::INFINITY };
    Ok(PhiValue { value, tail_bound: tail, tail_rigorous: false })
}

/// log Φ_d(x) through log Φ_d(x) = Σ_j (x^j/j) Φ_{d−1}(x^j), with no
/// truncation in size. Works where Φ_d(x) itself overflows.
pub fn log_phi(d: u32, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("Φ evaluated at x = {x}, need 0 ≤ x < 1")));
    }
    if d == 0 || x == 0.0 {
        return Ok(0.0);
    }
    let mut memo = FxHashMap::default();
    Ok(log_phi_pow(d, x, 1, &mut memo))
}

// log Φ_d(x^m)
fn log_phi_pow(d: u32, x: f64, m: u64, memo: &mut FxHashMap<(u32, u64), f64>) -> f64 {
    if d == 0 {
        return 0.0;
    }
    if d == 1 {
        return -(-x.powf(m as f64)).ln_1p();
    }
    if let Some(&v) = memo.get(&(d, m)) {
        return v;
    }
    let mut terms = Vec::new();
    let mut j = 1u64;
    loop {
        let y = x.powf((m * j) as f64);
        let inner = log_phi_pow(d - 1, x, m * j, memo).exp();
        let term = y / j as f64 * inner;
        if !term.is_finite() {
            memo.insert((d, m), f64::INFINITY);
            return f64::INFINITY;
        }
        terms.push(term);
        if term < 1e-18 * terms[0] || y < 1e-300 {
            break;
        }
        j += 1;
    }
    let v = compensated_sum(terms.into_iter());
    memo.insert((d, m), v);
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct OtterEstimate {
    pub estimate: f64,
    /// A_{N−1}/A_N before the prefactor correction.
    pub raw_ratio: f64,
    /// True when A_n/A_{n+1} is strictly decreasing and above the estimate on [N/2, N).
    pub monotone: bool,
    /// Smallest n from which the ratio sequence is strictly decreasing up to N.
    pub monotone_from: usize,
    pub n_max: usize,
}

/// Estimates α from A_n/A_{n+1} ≈ α (1 + 1/n)^{3/2}.
pub fn estimate_otter(n_max: usize) -> Result<OtterEstimate> {
    if n_max < 50 {
        return Err(Error::Domain(format!("need N ≥ 50, got {n_max}")));
    }
    let a = counts_by_size(None, n_max);
    let ratio = |n: usize| -> f64 { big_ratio(&a[n], &a[n + 1]) };
    let ratios: Vec<f64> = (1..n_max).map(ratio).collect();
    let n = n_max - 1;
    let raw = ratios[n - 1];
    let estimate = raw * (n as f64 / (n as f64 + 1.0)).powf(1.5);
    let mut monotone_from = n;
    while monotone_from > 1 && ratios[monotone_from - 2] > ratios[monotone_from - 1] {
        monotone_from -= 1;
    }
    let monotone = monotone_from <= n_max / 2 && ratios.iter().skip(n_max / 2 - 1).all(|&r| r > estimate);
    Ok(OtterEstimate { estimate, raw_ratio: raw, monotone, monotone_from, n_max })
}

fn big_ratio(a: &BigInt, b: &BigInt) -> f64 {
    // Shift both to keep 53 significant bits before converting.
    let shift = b.bits().saturating_sub(60);
    let a = (a >> shift).to_f64().unwrap_or(f64::NAN);
    let b = (b >> shift).to_f64().unwrap_or(f64::NAN);
    a / b
}

pub(crate) fn to_f64(s: &PowerSeries<BigInt>) -> Vec<f64> {
    s.coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY)).collect()
}

pub(crate) fn compensated_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// All trees with at most `max_size` nodes and depth at most `max_depth`,
/// sorted by size then encoding.
pub fn enumerate_trees(max_size: usize, max_depth: Option<u32>) -> Result<Vec<CanonicalTree>> {
    enumerate_trees_with_guard(max_size, max_depth, ENUMERATION_GUARD)
}

pub fn enumerate_trees_with_guard(
    max_size: usize,
    max_depth: Option<u32>,
    guard: usize,
) -> Result<Vec<CanonicalTree>> {
    if max_size == 0 {
        return Err(Error::Domain("max_size must be at least 1".into()));
    }
    if max_size > guard {
        return Err(Error::Resource(format!(
            "enumeration up to size {max_size} exceeds the guard {guard}"
        )));
    }
    let max_depth = max_depth.unwrap_or(u32::MAX);
    // by_size[n]: trees of size n and depth ≤ max_depth, sorted.
    let mut by_size: Vec<Vec<CanonicalTree>> = vec![Vec::new(), vec![CanonicalTree::leaf()]];
    for n in 2..=max_size {
        let mut found = Vec::new();
        if max_depth > 0 {
            let pool: Vec<&CanonicalTree> = by_size[1..n]
                .iter()
                .flatten()
                .filter(|t| t.depth() < max_depth)
                .collect();
            let mut current = Vec::new();
            multisets(&pool, pool.len(), n - 1, &mut current, &mut found);
        }
        found.sort_unstable();
        by_size.push(found);
    }
    Ok(by_size.into_iter().flatten().collect())
}

// Multisets of pool entries with index < `limit` whose sizes total `remaining`,
// generated with non-increasing indices so each multiset appears once.
fn multisets(
    pool: &[&CanonicalTree],
    limit: usize,
    remaining: usize,
    current: &mut Vec<CanonicalTree>,
    out: &mut Vec<CanonicalTree>,
) {
    if remaining == 0 {
        out.push(CanonicalTree::from_children(current.iter().cloned()));
        return;
    }
    for i in (0..limit).rev() {
        let s = pool[i].size() as usize;
        if s > remaining {
            continue;
        }
        current.push(pool[i].clone());
        multisets(pool, i + 1, remaining - s, current, out);
        current.pop();
    }
}
