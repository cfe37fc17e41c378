//! Numerical checks of the eigendecomposition.

use num_rational::Ratio;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::basis::{charlier, EigenBasis};
use crate::error::{Error, Result};
use crate::likelihood::{Likelihood, LikelihoodParams, MomentEstimate};
use crate::random_models::{ln_factorial, poisson_pmf, sample_correlated_pair, ModelParams, RngStream};
use crate::tree_core::{compensated_sum, enumerate_trees_with_guard, log_phi, to_f64, tree_counts, CanonicalTree};

/// Default cap on the number of trees in a support.
pub const SUPPORT_GUARD: usize = 4_000_000;

/// A finite set of trees with their GW(λ)_d probabilities.
#[derive(Clone, Debug)]
pub struct Support {
    pub depth: u32,
    pub lambda: f64,
    pub trees: Vec<CanonicalTree>,
    pub weights: Vec<f64>,
}

impl Support {
    pub fn mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Stars with 0..=cap children, i.e. the depth-1 support cut at ℓ ≤ cap.
    pub fn stars(lambda: f64, cap: u32) -> Support {
        Support {
            depth: 1,
            lambda,
            trees: (0..=cap).map(CanonicalTree::star).collect(),
            weights: (0..=cap).map(|l| poisson_pmf(lambda, u64::from(l))).collect(),
        }
    }

    /// Every depth-d tree whose GW(λ)_d probability is at least `min_prob`,
    /// among trees whose children come from the depth-(d−1) support at the
    /// same threshold.
    pub fn by_probability(lambda: f64, d: u32, min_prob: f64) -> Result<Support> {
        if d == 0 {
            return Ok(Support { depth: 0, lambda, trees: vec![CanonicalTree::leaf()], weights: vec![1.0] });
        }
        let inner = Support::by_probability(lambda, d - 1, min_prob)?;
        // Child types sorted by decreasing mean count.
        let mut types: Vec<(CanonicalTree, f64)> =
            inner.trees.into_iter().zip(inner.weights.iter().map(|p| lambda * p)).collect();
        types.sort_by(|a, b| b.1.total_cmp(&a.1));
        let excluded = (lambda - types.iter().map(|t| t.1).sum::<f64>()).max(0.0);
        let base = (-excluded).exp();
        // bound[i] = Π_{j≥i} max_n P(Poi(μ_j) = n)
        let mut bound = vec![base; types.len() + 1];
        for i in (0..types.len()).rev() {
            let mu = types[i].1;
            bound[i] = bound[i + 1] * poisson_pmf(mu, mu.floor() as u64);
        }
        let mut out = Support { depth: d, lambda, trees: Vec::new(), weights: Vec::new() };
        let mut counts = vec![0u32; types.len()];
        dfs(&types, &bound, 0, base, min_prob, &mut counts, &mut out)?;
        Ok(out)
    }
}

fn dfs(
    types: &[(CanonicalTree, f64)],
    bound: &[f64],
    i: usize,
    w: f64,
    min_prob: f64,
    counts: &mut Vec<u32>,
    out: &mut Support,
) -> Result<()> {
    if w * bound[i] < min_prob {
        return Ok(());
    }
    if i == types.len() {
        if out.trees.len() >= SUPPORT_GUARD {
            return Err(Error::Resource(format!("support exceeds {SUPPORT_GUARD} trees; raise the probability cut")));
        }
        let groups = types.iter().zip(counts.iter()).filter(|(_, &c)| c > 0).map(|(t, &c)| (t.0.clone(), c));
        out.trees.push(CanonicalTree::from_groups(groups));
        out.weights.push(w);
        return Ok(());
    }
    let mu = types[i].1;
    let mode = mu.floor() as u32;
    let mut n = 0u32;
    loop {
        let p = poisson_pmf(mu, u64::from(n));
        if n > mode && w * p * bound[i + 1] < min_prob {
            break;
        }
        counts[i] = n;
        dfs(types, bound, i + 1, w * p, min_prob, counts, out)?;
        n += 1;
    }
    counts[i] = 0;
    Ok(())
}

/// Σ_{n>k} A_{d,n} x^{n−1}, summed to a large size and closed with
/// Σ_{n>M} A_{d,n} x^{n−1} ≤ (x/z)^M Φ_d(z) at z = √x.
pub fn series_tail(d: u32, x: f64, k: usize) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let m = (4 * k).max(k + 200);
    let a = to_f64(&tree_counts(Some(d), m));
    let direct = compensated_sum((k..m).map(|i| a[i] * x.powi(i as i32)));
    let z = x.sqrt();
    let rest = (m as f64 * (x / z).ln() + log_phi(d, z)?).exp();
    Ok(direct + rest)
}

/// Indices α with depth ≤ d and |α| ≤ k.
pub fn index_set(d: u32, k: u64) -> Result<Vec<CanonicalTree>> {
    match d {
        0 => Ok(if k >= 1 { vec![CanonicalTree::leaf()] } else { vec![] }),
        1 => Ok((0..k as u32).map(CanonicalTree::star).collect()),
        _ => enumerate_trees_with_guard(k as usize, Some(d), 30),
    }
}

// f_α(t) for every index and support tree; rows follow `indices`.
fn evaluate(lambda: f64, d: u32, k: u64, indices: &[CanonicalTree], trees: &[CanonicalTree]) -> Result<Vec<Vec<f64>>> {
    let proto = EigenBasis::new(lambda, d, k)?;
    indices
        .par_iter()
        .map(|alpha| {
            let mut b = proto.clone();
            trees.iter().map(|t| b.eval(alpha, t)).collect::<Result<Vec<f64>>>()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub d: u32,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: u64,
    pub support_size: usize,
    pub support_mass: f64,
    /// max |Σ_t GW f_α f_α′ − 1_{α=α′}|
    pub gram_residual: f64,
    /// max |Σ_t GW f_α − 1_{α=•}|
    pub first_moment_residual: f64,
}

/// Gram matrix of the basis under GW(λ)_d restricted to `support`.
pub fn verify_orthogonality(k: u64, support: &Support) -> Result<OrthogonalityReport> {
    let (d, lambda) = (support.depth, support.lambda);
    let indices = index_set(d, k)?;
    let f = evaluate(lambda, d, k, &indices, &support.trees)?;
    let w = &support.weights;
    let mut gram_residual: f64 = 0.0;
    let mut first_moment_residual: f64 = 0.0;
    for a in 0..indices.len() {
        let m1 = compensated_sum((0..w.len()).map(|t| w[t] * f[a][t]));
        let want = if indices[a].is_leaf() { 1.0 } else { 0.0 };
        first_moment_residual = first_moment_residual.max((m1 - want).abs());
        for b in a..indices.len() {
            let g = compensated_sum((0..w.len()).map(|t| w[t] * f[a][t] * f[b][t]));
            let want = if a == b { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((g - want).abs());
        }
    }
    Ok(OrthogonalityReport {
        d,
        lambda,
        k,
        support_size: support.len(),
        support_mass: support.mass(),
        gram_residual,
        first_moment_residual,
    })
}

/// max_{ℓ,ℓ′≤ell_max} |√(π(ℓ)π(ℓ′)) Σ_{α≤max_alpha} f_{1,α}(ℓ) f_{1,α}(ℓ′) − 1_{ℓ=ℓ′}|
pub fn dual_orthogonality(lambda: f64, max_alpha: u32, ell_max: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for l in 0..=ell_max {
        for l2 in l..=ell_max {
            let s = compensated_sum((0..=max_alpha).map(|a| charlier(a, l, lambda) * charlier(a, l2, lambda)));
            let v = (poisson_pmf(lambda, l) * poisson_pmf(lambda, l2)).sqrt() * s;
            let want = if l == l2 { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub d: u32,
    pub lambda: f64,
    pub s: f64,
    #[serde(rename = "K")]
    pub k: u64,
    pub pairs: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Σ_{n>K} A_{d,n} s^{n−1}
    pub tail_bound: f64,
}

/// Σ_{|α|≤K} s^{|α|−1} f_α(t) f_α(t′), one value per pair, from a single basis.
pub fn eigen_sum(basis: &mut EigenBasis, s: f64, pairs: &[(CanonicalTree, CanonicalTree)]) -> Result<Vec<f64>> {
    let indices = index_set(basis.depth(), basis.max_index_size())?;
    pairs
        .iter()
        .map(|(t, t2)| {
            let terms = indices
                .iter()
                .map(|a| Ok(s.powi(a.size() as i32 - 1) * basis.eval(a, t)? * basis.eval(a, t2)?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(compensated_sum(terms.into_iter()))
        })
        .collect()
}

/// Compares the truncated eigen-sum against the exact likelihood ratio.
pub fn verify_decomposition(
    lambda: f64,
    d: u32,
    s: f64,
    k: u64,
    pairs: &[(CanonicalTree, CanonicalTree)],
) -> Result<DecompositionReport> {
    let mut basis = EigenBasis::new(lambda, d, k)?;
    decomposition_with(&mut basis, s, pairs)
}

/// Same check reusing an existing basis, which must not depend on s.
pub fn decomposition_with(
    basis: &mut EigenBasis,
    s: f64,
    pairs: &[(CanonicalTree, CanonicalTree)],
) -> Result<DecompositionReport> {
    let (lambda, d, k) = (basis.lambda(), basis.depth(), basis.max_index_size());
    let sums = eigen_sum(basis, s, pairs)?;
    let mut lik = Likelihood::new(LikelihoodParams { lambda, s, depth: d, log_domain: false })?;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for ((t, t2), e) in pairs.iter().zip(&sums) {
        let l = lik.ratio(t, t2)?;
        max_abs = max_abs.max((l - e).abs());
        max_rel = max_rel.max((l - e).abs() / l.abs());
    }
    Ok(DecompositionReport {
        d,
        lambda,
        s,
        k,
        pairs: pairs.len(),
        max_abs_error: max_abs,
        max_rel_error: max_rel,
        tail_bound: series_tail(d, s, k as usize)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedMoment {
    /// Σ_t GW(t) Π_i f_{α_i}(t) over the support.
    pub value: f64,
    pub limit_value: f64,
    pub support_mass: f64,
}

pub fn mixed_moment(indices: &[CanonicalTree], support: &Support) -> Result<MixedMoment> {
    if indices.len() < 2 {
        return Err(Error::Domain("mixed moment needs at least two indices".into()));
    }
    let k = indices.iter().map(|a| a.size()).max().unwrap_or(1);
    let f = evaluate(support.lambda, support.depth, k, indices, &support.trees)?;
    let value = compensated_sum((0..support.len()).map(|t| support.weights[t] * f.iter().map(|row| row[t]).product::<f64>()));
    Ok(MixedMoment { value, limit_value: mixed_moment_limit(indices)?, support_mass: support.mass() })
}

/// Π_i √(β⁽ⁱ⁾!) · [x_1^{β⁽¹⁾} ⋯ x_n^{β⁽ⁿ⁾}] exp(Σ_{i<j} ⟨x_i, x_j⟩), where β⁽ⁱ⁾
/// are the child multiplicities of α_i and each child shape is one coordinate.
pub fn mixed_moment_limit(indices: &[CanonicalTree]) -> Result<f64> {
    let mut by_type: FxHashMap<u64, Vec<u32>> = FxHashMap::default();
    for (i, a) in indices.iter().enumerate() {
        for (c, m) in a.children() {
            by_type.entry(c.id()).or_insert_with(|| vec![0; indices.len()])[i] = *m;
        }
    }
    let mut coeff = Ratio::from_integer(1i128);
    let mut keys: Vec<u64> = by_type.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        coeff *= pairing_coefficient(&by_type[&key])?;
        if coeff == Ratio::from_integer(0) {
            return Ok(0.0);
        }
    }
    let half_log_norm: f64 =
        indices.iter().flat_map(|a| a.children().iter().map(|(_, m)| 0.5 * ln_factorial(u64::from(*m)))).sum();
    Ok(*coeff.numer() as f64 / *coeff.denom() as f64 * half_log_norm.exp())
}

// [Π_i x_i^{b_i}] exp(Σ_{i<j} x_i x_j) = Σ over symmetric m_{ij} ≥ 0 with
// row sums b_i of Π_{i<j} 1/m_{ij}!.
fn pairing_coefficient(b: &[u32]) -> Result<Ratio<i128>> {
    let n = b.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut rest: Vec<u32> = b.to_vec();
    let mut total = Ratio::from_integer(0i128);
    fn go(pairs: &[(usize, usize)], k: usize, rest: &mut [u32], acc: Ratio<i128>, total: &mut Ratio<i128>) -> Result<()> {
        if k == pairs.len() {
            if rest.iter().all(|&r| r == 0) {
                *total += acc;
            }
            return Ok(());
        }
        let (i, j) = pairs[k];
        let top = rest[i].min(rest[j]);
        let mut fact: i128 = 1;
        for m in 0..=top {
            if m > 0 {
                fact = fact.checked_mul(i128::from(m)).ok_or_else(|| Error::Resource("factorial overflow".into()))?;
            }
            rest[i] -= m;
            rest[j] -= m;
            go(pairs, k + 1, rest, acc / fact, total)?;
            rest[i] += m;
            rest[j] += m;
        }
        Ok(())
    }
    go(&pairs, 0, &mut rest, Ratio::from_integer(1), &mut total)?;
    Ok(total)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub d: u32,
    pub lambda: f64,
    pub s: f64,
    pub trials: usize,
    pub indices: Vec<CanonicalTree>,
    /// E[y_α] for the first tree of the pair.
    pub means: Vec<MomentEstimate>,
    /// E[y_α y′_α′], row α, column α′.
    pub cross: Vec<Vec<MomentEstimate>>,
    /// max |E[y_α y′_α′] − s^{|α|} 1_{α=α′}| and the same in stderr units.
    pub max_deviation: f64,
    pub max_z: f64,
    pub max_mean_z: f64,
}

/// Projections y_α = (Σ_children f_{d,α}(τ) − λ 1_{α=•})/√λ of correlated
/// depth-(d+1) pairs, and their cross-covariance against s^{|α|} 1_{α=α′}.
pub fn gaussian_covariance_check(lambda: f64, d: u32, s: f64, k: u64, trials: usize, stream: RngStream) -> Result<CovarianceReport> {
    if trials < 2 {
        return Err(Error::Domain("need at least two trials".into()));
    }
    let indices = index_set(d, k)?;
    let mp = ModelParams::new(lambda, s, d + 1);
    mp.validate()?;
    let proto = EigenBasis::new(lambda, d, k)?;
    let sqrt_l = lambda.sqrt();
    let project = |b: &mut EigenBasis, t: &CanonicalTree| -> Result<Vec<f64>> {
        indices
            .iter()
            .map(|a| {
                let mut sum = 0.0;
                for (tau, n) in t.children() {
                    sum += f64::from(*n) * b.eval(a, tau)?;
                }
                let centre = if a.is_leaf() { lambda } else { 0.0 };
                Ok((sum - centre) / sqrt_l)
            })
            .collect()
    };
    let samples = (0..trials)
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |b, i| {
                let mut rng = stream.substream(i as u64).rng();
                let c = sample_correlated_pair(&mp, &mut rng)?;
                Ok((project(b, &c.t.canonicalize())?, project(b, &c.t_prime.canonicalize())?))
            },
        )
        .collect::<Result<Vec<(Vec<f64>, Vec<f64>)>>>()?;
    let n = indices.len();
    let means: Vec<MomentEstimate> =
        (0..n).map(|a| MomentEstimate::from_values(&samples.iter().map(|x| x.0[a]).collect::<Vec<_>>())).collect();
    let cross: Vec<Vec<MomentEstimate>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| MomentEstimate::from_values(&samples.iter().map(|x| x.0[a] * x.1[b]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    let mut max_deviation: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let want = if a == b { s.powi(indices[a].size() as i32) } else { 0.0 };
            max_deviation = max_deviation.max((cross[a][b].estimate - want).abs());
            max_z = max_z.max(cross[a][b].z_score(want));
        }
    }
    let max_mean_z = means.iter().map(|m| m.z_score(0.0)).fold(0.0, f64::max);
    Ok(CovarianceReport { d, lambda, s, trials, indices, means, cross, max_deviation, max_z, max_mean_z })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianKl {
    pub d: u32,
    pub s: f64,
    #[serde(rename = "K")]
    pub k: u64,
    /// −½ Σ_{α ∈ 𝒳_{d−1}, |α| ≤ K} log(1 − s^{2|α|})
    pub enumerated: f64,
    pub enumerated_tail_bound: f64,
    /// ½ log Φ_d(s²)
    pub closed_form: f64,
}

impl GaussianKl {
    pub fn gap(&self) -> f64 {
        (self.enumerated - self.closed_form).abs()
    }
}

pub fn kl_gaussian_limit(d: u32, s: f64, k: u64) -> Result<GaussianKl> {
    if d == 0 {
        return Err(Error::Domain("Gaussian KL limit needs d ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("need 0 ≤ s < 1, got {s}")));
    }
    let x = s * s;
    let counts = to_f64(&tree_counts(Some(d - 1), k as usize));
    let enumerated = -0.5 * compensated_sum(counts.iter().enumerate().map(|(i, a)| a * (-x.powi(i as i32 + 1)).ln_1p()));
    // −log(1−y) ≤ y/(1−y) and the remaining sizes have y ≤ x^{K+1}
    let y = x.powi(k as i32 + 1);
    let tail = 0.5 * x * series_tail(d - 1, x, k as usize)? / (1.0 - y);
    Ok(GaussianKl { d, s, k, enumerated, enumerated_tail_bound: tail, closed_form: 0.5 * log_phi(d, x)? })
}

/// Eigen-verification summary written by the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenReport {
    pub d: u32,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: u64,
    pub gram_residual: f64,
    pub decomposition_error: f64,
    pub tail_bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_models::GwLaw;

    #[test]
    fn support_matches_gw_law() {
        let sup = Support::by_probability(1.5, 2, 1e-9).unwrap();
        let mut gw = GwLaw::new(1.5);
        for (t, w) in sup.trees.iter().zip(&sup.weights).take(200) {
            assert!((gw.prob(t, 2) - w).abs() <= 1e-12 * w);
        }
        assert!(sup.mass() > 1.0 - 1e-5, "{}", sup.mass());
        let d1 = Support::by_probability(2.0, 1, 1e-12).unwrap();
        assert!(d1.trees.iter().all(|t| t.depth() <= 1));
    }

    #[test]
    fn pairing_coefficients() {
        assert_eq!(pairing_coefficient(&[1, 1, 2]).unwrap(), Ratio::from_integer(1));
        assert_eq!(pairing_coefficient(&[1, 1, 1]).unwrap(), Ratio::from_integer(0));
        assert_eq!(pairing_coefficient(&[3, 3]).unwrap(), Ratio::new(1, 6));
        assert_eq!(pairing_coefficient(&[2, 2, 2]).unwrap(), Ratio::from_integer(1));
        let star = |k| CanonicalTree::star(k);
        assert!((mixed_moment_limit(&[star(1), star(1), star(2)]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mixed_moment_limit(&[star(3), star(2)]).unwrap(), 0.0);
        assert!((mixed_moment_limit(&[star(3), star(3)]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn depth_one_gaussian_kl_is_exact() {
        let g = kl_gaussian_limit(1, 0.6, 3).unwrap();
        assert!((g.enumerated + 0.5 * (1.0 - 0.36f64).ln()).abs() < 1e-15);
        assert!(g.gap() < 1e-14);
        let z = kl_gaussian_limit(3, 0.0, 5).unwrap();
        assert_eq!((z.enumerated, z.closed_form), (0.0, 0.0));
    }
}
