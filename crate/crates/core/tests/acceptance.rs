//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run alone with `cargo test -p treealign --test acceptance`; a substring
//! argument selects criteria. The exit status is non-zero on a FAIL only when
//! `ACCEPTANCE_STRICT` is set, so the workspace run always shows every line.

use std::collections::BTreeSet;
use std::time::Instant;

use treealign::eigenbasis::{
    kl_gaussian_limit, mixed_moment, verify_decomposition, verify_orthogonality, Support,
};
use treealign::graph_align::{ntma, ntma2, AlignParams};
use treealign::likelihood::{
    calibrate_lr_test, cyclic_moment_analytic, estimate_cyclic_moment_mc, estimate_poisson_moment4,
    estimate_z_moments, kl_curve, log_likelihood_ratio, poisson_central_moment4, BetaRule, EventSpec,
    LikelihoodParams, TypeSet,
};
use treealign::random_models::{poisson_pmf, sample_correlated_er, sample_gw, ModelParams, RngStream};
use treealign::tree_core::{counts_by_size, estimate_otter, CanonicalTree, OTTER_ALPHA};
use treealign::tree_matching::{estimate_matching_rate, RateModel};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// Rooted unlabeled trees on n nodes from every recursive labelling p[i] < i,
// deduplicated by sorted-children strings.
fn brute_force_count(n: usize) -> usize {
    fn shape(children: &[Vec<usize>], u: usize) -> String {
        let mut parts: Vec<String> = children[u].iter().map(|&c| shape(children, c)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }
    let mut seen = BTreeSet::new();
    let mut parent = vec![0usize; n];
    loop {
        let mut children = vec![Vec::new(); n];
        for i in 1..n {
            children[parent[i]].push(i);
        }
        seen.insert(shape(&children, 0));
        // odometer over parent[i] in 0..i
        let mut i = n.saturating_sub(1);
        loop {
            if i == 0 {
                return seen.len();
            }
            if parent[i] + 1 < i {
                parent[i] += 1;
                break;
            }
            parent[i] = 0;
            i -= 1;
        }
    }
}

fn a_series() -> Outcome {
    let t = Instant::now();
    let counts: Vec<u64> = counts_by_size(None, 10).iter().skip(1).map(|c| c.try_into().unwrap()).collect();
    let elapsed = t.elapsed().as_secs_f64();
    let brute: Vec<u64> = (1..=10).map(|n| brute_force_count(n) as u64).collect();
    let listed = [1, 1, 2, 4, 9, 20, 48, 115, 286, 719];
    outcome(
        counts == brute && counts == listed && elapsed < 1.0,
        format!("counts {counts:?}, brute force {brute:?}, {elapsed:.3}s"),
    )
}

fn otter() -> Outcome {
    let t = Instant::now();
    let e = estimate_otter(200).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let err = (e.estimate - 0.3383219).abs();
    outcome(
        err <= 1e-3 && elapsed < 10.0,
        format!("estimate {:.7} (reference {OTTER_ALPHA:.7}), error {err:.2e}, {elapsed:.2}s", e.estimate),
    )
}

fn charlier_orthogonality() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for lambda in [1.5, 4.0] {
        // index sizes 1..=9 are the Charlier orders 0..=8
        let r = verify_orthogonality(9, &Support::stars(lambda, 200)).unwrap();
        worst = worst.max(r.gram_residual);
        parts.push(format!("λ={lambda}: {:.2e}", r.gram_residual));
    }
    let elapsed = t.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && elapsed < 5.0, format!("Gram residual {}, {elapsed:.2}s", parts.join(", ")))
}

fn all_pairs(trees: &[CanonicalTree]) -> Vec<(CanonicalTree, CanonicalTree)> {
    trees.iter().flat_map(|a| trees.iter().map(move |b| (a.clone(), b.clone()))).collect()
}

// Ten independent GW(1.5)_2 pairs with at most seven nodes per tree.
fn small_random_pairs() -> Vec<(CanonicalTree, CanonicalTree)> {
    let mp = ModelParams::new(1.5, 0.0, 2);
    let mut rng = RngStream::new(SEED, 4).rng();
    let mut small = || loop {
        let t = sample_gw(&mp, &mut rng).canonicalize();
        if t.size() <= 7 {
            return t;
        }
    };
    (0..10).map(|_| (small(), small())).collect()
}

fn eigendecomposition() -> Outcome {
    let stars: Vec<CanonicalTree> = (0..=6).map(CanonicalTree::star).collect();
    let d1 = verify_decomposition(2.0, 1, 0.5, 40, &all_pairs(&stars)).unwrap();
    let d2 = verify_decomposition(1.5, 2, 0.4, 6, &small_random_pairs()).unwrap();
    outcome(
        d1.max_abs_error <= 1e-8 && d2.max_abs_error <= d2.tail_bound,
        format!(
            "d=1 K=40 max error {:.2e}; d=2 K=6 over {} random pairs max error {:.2e} (tail bound {:.2e})",
            d1.max_abs_error, d2.pairs, d2.max_abs_error, d2.tail_bound
        ),
    )
}

fn cyclic_lambda_independence() -> Outcome {
    let s = 0.6;
    let target = 1.0 / (1.0 - s * s);
    let mut parts = Vec::new();
    let mut pass = true;
    for lambda in [1.5, 4.0] {
        let p = LikelihoodParams::new(lambda, s, 1);
        let mut terms = Vec::new();
        for l in 0..=120u32 {
            for l2 in 0..=120u32 {
                let (a, b) = (CanonicalTree::star(l), CanonicalTree::star(l2));
                let log_w = poisson_pmf(lambda, l.into()).ln() + poisson_pmf(lambda, l2.into()).ln();
                terms.push((log_w + 2.0 * log_likelihood_ratio(&a, &b, &p).unwrap()).exp());
            }
        }
        terms.sort_by(f64::total_cmp);
        let sum: f64 = terms.iter().sum();
        pass &= (sum - target).abs() <= 1e-6;
        parts.push(format!("λ={lambda}: {sum:.10}"));
    }
    outcome(pass, format!("{} against 1/(1−s²) = {target:.10}", parts.join(", ")))
}

fn cyclic_mc() -> Outcome {
    let t = Instant::now();
    let p = LikelihoodParams::new(1.5, 0.6, 2);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [2u32, 3] {
        let exact = cyclic_moment_analytic(Some(2), 0.6, m, 400).unwrap().value;
        let mc = estimate_cyclic_moment_mc(&p, m, 200_000, RngStream::new(SEED, 6).substream(m.into())).unwrap();
        let z = mc.z_score(exact);
        pass &= z <= 3.0;
        parts.push(format!("m={m}: {:.4} ± {:.4} vs {exact:.4} (z {z:.2})", mc.estimate, mc.stderr));
    }
    let elapsed = t.elapsed().as_secs_f64();
    pass &= elapsed < 60.0;
    outcome(pass, format!("{}, {elapsed:.1}s", parts.join("; ")))
}

fn gaussian_kl() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [2, 3] {
        let g = kl_gaussian_limit(d, 0.5, 30).unwrap();
        pass &= g.gap() <= 1e-6;
        parts.push(format!("d={d}: {:.12} vs {:.12} (gap {:.1e})", g.enumerated, g.closed_form, g.gap()));
    }
    outcome(pass, parts.join("; "))
}

fn mixed_moment_scaling() -> Outcome {
    let idx = vec![CanonicalTree::star(1); 3];
    let gap = |lambda: f64| {
        let m = mixed_moment(&idx, &Support::by_probability(lambda, 1, 1e-18).unwrap()).unwrap();
        (m.value - m.limit_value).abs()
    };
    let (a, b) = (gap(1e4), gap(4e4));
    let ratio = a / b;
    outcome(
        (1.5..=2.5).contains(&ratio),
        format!("|finite − limit| {a:.4e} at λ=1e4, {b:.4e} at λ=4e4, ratio {ratio:.4}"),
    )
}

fn z_moments() -> Outcome {
    let small: Vec<CanonicalTree> = (0..3).map(CanonicalTree::star).collect();
    let event = EventSpec::Product { depth: 1, left: TypeSet::AllBut(small.clone()), right: TypeSet::AllBut(small) };
    let zm = estimate_z_moments(&event, 2.0, 0.8, 100_000, RngStream::new(SEED, 9)).unwrap();
    let null_z = zm.null_mean.z_score(0.0);
    let planted_z = (zm.planted_mean.estimate - zm.planted_target()).abs() / zm.planted_gap_stderr();
    let mu = 2.5;
    let m4 = estimate_poisson_moment4(mu, 1_000_000, &mut RngStream::new(SEED, 9).substream(1).rng());
    let exact = poisson_central_moment4(mu);
    let m4_z = m4.z_score(exact);
    outcome(
        null_z <= 3.0 && planted_z <= 3.0 && m4_z <= 3.0,
        format!(
            "E0[Z] {:.4} (z {null_z:.2}); E1[Z] {:.4} vs {:.4} (z {planted_z:.2}); Poisson m4 {:.3} vs {exact} (z {m4_z:.2})",
            zm.null_mean.estimate,
            zm.planted_mean.estimate,
            zm.planted_target(),
            m4.estimate
        ),
    )
}

fn matching_rate_slopes() -> Outcome {
    let stream = RngStream::new(SEED, 10);
    let runs = [
        ("null λ=2.2", RateModel::Null, ModelParams::new(2.2, 0.0, 0), 4, 10),
        ("null λ=1.2", RateModel::Null, ModelParams::new(1.2, 0.0, 0), 6, 14),
        ("correlated λ=2 s=0.9", RateModel::Correlated, ModelParams::new(2.0, 0.9, 0), 4, 10),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, model, params, lo, hi)) in runs.into_iter().enumerate() {
        let r = estimate_matching_rate(model, &params, lo, hi, 200, stream.substream(i as u64)).unwrap();
        let min_survived = r.per_depth.iter().map(|s| s.n_survived).min().unwrap();
        let ok = match i {
            0 => (0.55..=0.75).contains(&r.slope),
            1 => (0.05..=0.20).contains(&r.slope),
            _ => r.slope >= (2.0f64 * 0.9).ln() - 0.1,
        };
        pass &= ok && min_survived >= 50;
        parts.push(format!("{name}: {:.3} ± {:.3} (min survivors {min_survived})", r.slope, r.stderr));
    }
    outcome(pass, parts.join("; "))
}

fn detection_phase_contrast() -> Outcome {
    let depths = [2, 3, 4, 5];
    let stream = RngStream::new(SEED, 11);
    let above = kl_curve(4.0, 0.8, &depths, 20_000, stream.substream(0)).unwrap();
    let below = kl_curve(4.0, 0.5, &depths, 20_000, stream.substream(1)).unwrap();
    let (first, last) = (&above[0], &above[3]);
    let rise = last.kl_estimate - first.kl_estimate;
    let rise_se = (last.stderr.powi(2) + first.stderr.powi(2)).sqrt();
    let vals: Vec<f64> = below.iter().map(|p| p.kl_estimate).collect();
    let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
    let se = below.iter().map(|p| p.stderr).fold(0.0, f64::max);
    let fmt = |c: &[treealign::likelihood::KlPoint]| {
        c.iter().map(|p| format!("{:.4}±{:.4}", p.kl_estimate, p.stderr)).collect::<Vec<_>>().join(" ")
    };
    outcome(
        rise >= 5.0 * rise_se && spread <= 3.0 * se,
        format!(
            "s=0.8 [{}] rise {rise:.4} = {:.1} se; s=0.5 [{}] spread {spread:.4} = {:.2} se",
            fmt(&above),
            rise / rise_se,
            fmt(&below),
            spread / se
        ),
    )
}

fn lr_test() -> Outcome {
    let p = LikelihoodParams::new(4.0, 0.8, 4);
    let c = calibrate_lr_test(&p, BetaRule::C2Pow1_16, 500, RngStream::new(SEED, 12)).unwrap();
    outcome(
        c.type1 <= 0.05 && c.power >= 0.2,
        format!(
            "log β {:.2}, type-I {:.3}, power {:.3}, largest log L {:.2} (null) / {:.2} (planted)",
            c.log_beta, c.type1, c.power, c.max_log_lr_null, c.max_log_lr_planted
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn ntma_end_to_end() -> Outcome {
    let t = Instant::now();
    let (n, lambda, s, gamma) = (1000, 2.1, 0.95, 1.5);
    let mut one = (Vec::new(), Vec::new());
    let mut two = (Vec::new(), Vec::new());
    for rep in 0..5u64 {
        let mut rng = RngStream::new(SEED, 13).substream(rep).rng();
        let gr = sample_correlated_er(n, lambda, s, &mut rng).unwrap();
        let a = ntma(&gr.g, &gr.h, &AlignParams::new(lambda, 4, gamma)).unwrap();
        let b = ntma2(&gr.g, &gr.h, &AlignParams::new(lambda, 5, gamma)).unwrap();
        one.0.push(a.overlap.unwrap());
        one.1.push(a.error.unwrap());
        two.0.push(b.overlap.unwrap());
        two.1.push(b.error.unwrap());
    }
    let elapsed = t.elapsed().as_secs_f64();
    let (o1, e1) = (median(one.0.clone()), median(one.1.clone()));
    let (o2, e2) = (median(two.0.clone()), median(two.1.clone()));
    outcome(
        o1 >= 0.03 && e1 <= 0.01 && o2 >= o1 - 0.02 && e2 <= 0.01 && elapsed <= 900.0,
        format!(
            "NTMA d=4 median overlap {o1:.3} error {e1:.3} (overlaps {:?}); NTMA-2 d=5 median overlap {o2:.3} error {e2:.3} (overlaps {:?}); {elapsed:.0}s",
            one.0, two.0
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 13] = [
    ("a_series", a_series),
    ("otter_constant", otter),
    ("charlier_orthogonality", charlier_orthogonality),
    ("eigendecomposition", eigendecomposition),
    ("cyclic_lambda_independence", cyclic_lambda_independence),
    ("cyclic_mc", cyclic_mc),
    ("gaussian_kl", gaussian_kl),
    ("mixed_moment_scaling", mixed_moment_scaling),
    ("z_moments", z_moments),
    ("matching_rate_slopes", matching_rate_slopes),
    ("detection_phase_contrast", detection_phase_contrast),
    ("lr_test", lr_test),
    ("ntma_end_to_end", ntma_end_to_end),
];

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in CRITERIA {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} {name}: {} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {failed} failing");
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
