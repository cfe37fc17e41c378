//! Truncated one-variable power series.

use std::ops::{Add, Mul};

use num_traits::Zero;

/// Coefficients `c_0..=c_N` of a series truncated at order `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
}

impl<T> PowerSeries<T>
where
    T: Clone + Zero,
    for<'a> &'a T: Add<&'a T, Output = T> + Mul<&'a T, Output = T>,
{
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        PowerSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![T::zero(); order + 1] }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Sum, truncated to the smaller order.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect() }
    }

    /// Product, truncated to the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![T::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        PowerSeries { coeffs: out }
    }

    /// S(x^j), same truncation order.
    pub fn substitute_power(&self, j: usize) -> Self {
        assert!(j >= 1);
        let mut out = vec![T::zero(); self.coeffs.len()];
        for (k, c) in self.coeffs.iter().enumerate() {
            if k * j < out.len() {
                out[k * j] = c.clone();
            } else {
                break;
            }
        }
        PowerSeries { coeffs: out }
    }
}

impl PowerSeries<f64> {
    /// exp(S) by the recurrence n e_n = Σ_k k s_k e_{n−k}.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut e = vec![0.0; n + 1];
        e[0] = self.coeffs[0].exp();
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += k as f64 * self.coeffs[k] * e[m - k];
            }
            e[m] = acc / m as f64;
        }
        PowerSeries { coeffs: e }
    }

    pub fn scale(&self, a: f64) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}
