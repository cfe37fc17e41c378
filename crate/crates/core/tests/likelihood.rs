use proptest::prelude::*;
use statrs::distribution::{Discrete, Poisson};
use treealign::likelihood::{
    correlated_pmf_depth1, cyclic_moment_analytic, likelihood_ratio, log_likelihood_ratio, Likelihood,
    LikelihoodParams,
};
use treealign::random_models::{ln_factorial, poisson, poisson_pmf, RngStream};
use treealign::tree_core::{enumerate_trees, CanonicalTree};

#[test]
fn poisson_helpers_match_statrs() {
    for mu in [0.3, 1.5, 4.0, 29.0, 45.0] {
        let d = Poisson::new(mu).unwrap();
        for k in 0..120u64 {
            let (a, b) = (poisson_pmf(mu, k), d.pmf(k));
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "mu {mu} k {k}: {a} vs {b}");
        }
    }
    for k in [0u64, 1, 5, 63, 64, 200, 10_000] {
        let want = statrs::function::factorial::ln_factorial(k);
        assert!((ln_factorial(k) - want).abs() <= 1e-10 * want.max(1.0), "{k}");
    }
}

#[test]
fn poisson_sampler_mean_and_variance() {
    // Both sides of the inversion/PTRS split.
    for mu in [2.0, 80.0] {
        let mut rng = RngStream::new(5, mu as u64).rng();
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| poisson(&mut rng, mu) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((mean - mu).abs() < 4.0 * (mu / n as f64).sqrt(), "mean {mean} for {mu}");
        assert!((var / mu - 1.0).abs() < 0.02, "variance {var} for {mu}");
    }
}

// Σ_{ℓ,ℓ′} π(ℓ)π(ℓ′) L_1(ℓ,ℓ′)^k over stars of degree ≤ cap.
fn star_moment(lambda: f64, s: f64, k: i32, cap: u32) -> f64 {
    let p = LikelihoodParams::new(lambda, s, 1);
    let mut terms = Vec::new();
    for l in 0..=cap {
        for l2 in 0..=cap {
            let lw = poisson_pmf(lambda, l.into()).ln() + poisson_pmf(lambda, l2.into()).ln();
            let lr = log_likelihood_ratio(&CanonicalTree::star(l), &CanonicalTree::star(l2), &p).unwrap();
            terms.push((lw + f64::from(k) * lr).exp());
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

#[test]
fn depth_one_ratio_is_the_joint_pmf_over_the_product() {
    let (lambda, s) = (2.5, 0.7);
    let p = LikelihoodParams::new(lambda, s, 1);
    for l in 0..8u32 {
        for l2 in 0..8u32 {
            let want = correlated_pmf_depth1(l, l2, lambda, s) / (poisson_pmf(lambda, l.into()) * poisson_pmf(lambda, l2.into()));
            let got = likelihood_ratio(&CanonicalTree::star(l), &CanonicalTree::star(l2), &p).unwrap();
            assert!((got - want).abs() <= 1e-12 * want, "{l},{l2}");
        }
    }
}

#[test]
fn null_mean_is_one_and_second_moment_is_geometric() {
    for (lambda, s) in [(1.5, 0.6), (4.0, 0.6), (3.0, 0.3)] {
        let m1 = star_moment(lambda, s, 1, 120);
        let m2 = star_moment(lambda, s, 2, 120);
        assert!((m1 - 1.0).abs() < 1e-12, "E0[L] = {m1}");
        assert!((m2 - 1.0 / (1.0 - s * s)).abs() < 1e-10, "E0[L²] = {m2}");
        let exact = cyclic_moment_analytic(Some(1), s, 2, 200).unwrap().value;
        assert!((m2 - exact).abs() < 1e-10);
    }
}

#[test]
fn depth_two_first_marginal_is_gw() {
    // The first marginal of P1_2 is GW_2, so truncated row sums stay below P0(t).
    let lambda = 1.2;
    let p = LikelihoodParams::new(lambda, 0.5, 2);
    let trees = enumerate_trees(11, Some(2)).unwrap();
    let mut gw = treealign::random_models::GwLaw::new(lambda);
    let probs: Vec<f64> = trees.iter().map(|t| gw.prob(t, 2)).collect();
    let mut lik = Likelihood::new(p).unwrap();
    let mut total = 0.0;
    for (a, pa) in trees.iter().zip(&probs) {
        let mut row = 0.0;
        for (b, pb) in trees.iter().zip(&probs) {
            row += pa * pb * lik.ratio(a, b).unwrap();
        }
        assert!(row <= pa * (1.0 + 1e-9), "{}", a.encoding());
        total += row;
    }
    let mass: f64 = probs.iter().sum();
    assert!(total <= mass + 1e-12 && total > 0.97, "total {total}, mass {mass}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratio_is_symmetric_and_positive(a in 0usize..200, b in 0usize..200, s in 0.05f64..0.95, lambda in 0.5f64..4.0) {
        let trees = enumerate_trees(7, Some(3)).unwrap();
        let (t, t2) = (&trees[a % trees.len()], &trees[b % trees.len()]);
        let p = LikelihoodParams::new(lambda, s, 3);
        let x = log_likelihood_ratio(t, t2, &p).unwrap();
        let y = log_likelihood_ratio(t2, t, &p).unwrap();
        prop_assert!(x.is_finite());
        prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn zero_correlation_gives_ratio_one(a in 0usize..200, b in 0usize..200, lambda in 0.5f64..4.0) {
        let trees = enumerate_trees(7, Some(3)).unwrap();
        let p = LikelihoodParams::new(lambda, 0.0, 3);
        let x = likelihood_ratio(&trees[a % trees.len()], &trees[b % trees.len()], &p).unwrap();
        prop_assert!((x - 1.0).abs() < 1e-12);
    }
}
