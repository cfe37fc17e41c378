//! Reproducible random streams and Poisson variates.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

/// A master seed plus a stream index. Distinct indices give independent
/// ChaCha streams; the same pair always replays the same draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// A derived stream for sub-task `i`, e.g. one Monte Carlo trial.
    pub fn substream(&self, i: u64) -> RngStream {
        let mixed = splitmix(splitmix(self.stream ^ 0x5851_f42d_4c95_7f2d).wrapping_add(i));
        RngStream { seed: self.seed, stream: mixed }
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inversion is used up to this mean; above it the PTRS sampler from `rand_distr`.
pub const POISSON_INVERSION_MAX: f64 = 30.0;

/// One Poisson(`mu`) variate.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    if mu <= POISSON_INVERSION_MAX {
        let u: f64 = rng.random();
        let mut p = (-mu).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= mu / k as f64;
            cdf += p;
            if p < f64::MIN_POSITIVE && k as f64 > mu {
                break;
            }
        }
        k
    } else {
        let d = rand_distr::Poisson::new(mu).expect("finite positive mean");
        d.sample(rng) as u64
    }
}

/// Poisson(`mu`) conditioned to be positive.
pub fn poisson_positive<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    assert!(mu > 0.0);
    if mu > 2.0 {
        loop {
            let k = poisson(rng, mu);
            if k > 0 {
                return k;
            }
        }
    }
    // Inversion on the zero-truncated law avoids long rejection runs for small means.
    let u: f64 = rng.random();
    let norm = -(-mu).exp_m1();
    let mut p = (-mu).exp() * mu / norm;
    let mut cdf = p;
    let mut k = 1u64;
    while u > cdf {
        k += 1;
        p *= mu / k as f64;
        cdf += p;
        if p < f64::MIN_POSITIVE {
            break;
        }
    }
    k
}

/// P(Poi(mu) = k), computed in log space.
pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mu.ln() - mu - ln_factorial(k)).exp()
}

pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k < 64 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    // Stirling series for ln Γ(x); error below 1e-15 for x ≥ 64.
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}
