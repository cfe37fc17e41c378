//! Truncated multivariate power series on a box of exponents.

/// Coefficients of x^β for 0 ≤ β_i ≤ caps[i], stored densely in mixed radix.
///
/// Products drop every monomial that leaves the box, which is exact for the
/// coefficients that remain because all exponents are non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexSeries {
    caps: Vec<usize>,
    strides: Vec<usize>,
    coeffs: Vec<f64>,
}

impl MultiIndexSeries {
    pub fn zero(caps: &[usize]) -> Self {
        let mut strides = Vec::with_capacity(caps.len());
        let mut len = 1usize;
        for &c in caps {
            strides.push(len);
            len = len.checked_mul(c + 1).expect("series box too large");
        }
        MultiIndexSeries { caps: caps.to_vec(), strides, coeffs: vec![0.0; len] }
    }

    pub fn one(caps: &[usize]) -> Self {
        let mut s = Self::zero(caps);
        s.coeffs[0] = 1.0;
        s
    }

    pub fn vars(&self) -> usize {
        self.caps.len()
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn index(&self, exps: &[usize]) -> Option<usize> {
        if exps.len() != self.caps.len() {
            return None;
        }
        let mut idx = 0;
        for ((&e, &c), &s) in exps.iter().zip(&self.caps).zip(&self.strides) {
            if e > c {
                return None;
            }
            idx += e * s;
        }
        Some(idx)
    }

    /// [x^β]; zero outside the box.
    pub fn coeff(&self, exps: &[usize]) -> f64 {
        self.index(exps).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn set(&mut self, exps: &[usize], v: f64) {
        let i = self.index(exps).expect("exponent outside the box");
        self.coeffs[i] = v;
    }

    // exponent of variable j at flat index i
    fn exp_of(&self, i: usize, j: usize) -> usize {
        (i / self.strides[j]) % (self.caps[j] + 1)
    }

    /// Multiplies in place by c_0 + Σ_j a_j x_j.
    pub fn mul_linear(&mut self, c0: f64, a: &[f64]) {
        assert_eq!(a.len(), self.vars());
        // Descending order reads each source coefficient before overwriting it.
        for i in (0..self.coeffs.len()).rev() {
            let mut v = c0 * self.coeffs[i];
            for (j, &aj) in a.iter().enumerate() {
                if aj != 0.0 && self.exp_of(i, j) > 0 {
                    v += aj * self.coeffs[i - self.strides[j]];
                }
            }
            self.coeffs[i] = v;
        }
    }

    /// Multiplies by (1 + Σ_j a_j x_j)^n.
    pub fn mul_linear_pow(&mut self, a: &[f64], n: u64) {
        let nonzero = a.iter().filter(|x| **x != 0.0).count();
        if nonzero == 0 {
            return;
        }
        if nonzero == 1 {
            let j = a.iter().position(|x| *x != 0.0).expect("one non-zero");
            let cap = self.caps[j];
            let mut poly = vec![0.0; cap + 1];
            let mut term = 1.0;
            poly[0] = 1.0;
            for k in 1..=cap.min(n as usize) {
                term *= (n - k as u64 + 1) as f64 / k as f64 * a[j];
                poly[k] = term;
            }
            self.mul_univariate(j, &poly);
            return;
        }
        for _ in 0..n {
            self.mul_linear(1.0, a);
        }
    }

    /// Multiplies by Σ_k poly[k] x_j^k.
    pub fn mul_univariate(&mut self, j: usize, poly: &[f64]) {
        let s = self.strides[j];
        for i in (0..self.coeffs.len()).rev() {
            let e = self.exp_of(i, j);
            let mut v = 0.0;
            for (k, &p) in poly.iter().enumerate().take(e + 1) {
                v += p * self.coeffs[i - k * s];
            }
            self.coeffs[i] = v;
        }
    }

    /// Multiplies by exp(c·x_j).
    pub fn mul_exp(&mut self, j: usize, c: f64) {
        let cap = self.caps[j];
        let mut poly = vec![1.0; cap + 1];
        for k in 1..=cap {
            poly[k] = poly[k - 1] * c / k as f64;
        }
        self.mul_univariate(j, &poly);
    }

    /// Truncated product with a series on the same box.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.caps, other.caps);
        let mut out = Self::zero(&self.caps);
        let n = self.coeffs.len();
        for i in 0..n {
            if self.coeffs[i] == 0.0 {
                continue;
            }
            for k in 0..n {
                if other.coeffs[k] == 0.0 {
                    continue;
                }
                let mut idx = 0;
                let mut ok = true;
                for j in 0..self.vars() {
                    let e = self.exp_of(i, j) + self.exp_of(k, j);
                    if e > self.caps[j] {
                        ok = false;
                        break;
                    }
                    idx += e * self.strides[j];
                }
                if ok {
                    out.coeffs[idx] += self.coeffs[i] * other.coeffs[k];
                }
            }
        }
        out
    }
}
