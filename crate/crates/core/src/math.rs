//! Scalar kernels and the functionals built from them.
//!
//! For a weight vector `t` the series `X = Σ t_i ε_i` (fair independent signs)
//! has cumulant generating function
//!
//! ```text
//! cgf(t, s)        = Σ ln cosh(s t_i)
//! cgf_prime(t, s)  = Σ t_i tanh(s t_i)
//! cgf_second(t, s) = Σ t_i² sech²(s t_i)
//! ```
//!
//! and the conjugate of `t ↦ ln E e^{X_t}` is the entropy functional
//!
//! ```text
//! psi1_star(b) = ½ Σ f(b_i),   f(x) = (1+x) ln(1+x) + (1-x) ln(1-x)
//! ```
//!
//! on the box `[-1, 1]^n`, with `f(±1) = 2 ln 2`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Above this magnitude `ln cosh` switches to `|x| - ln 2 + ln(1 + e^{-2|x|})`.
pub const LN_COSH_SWITCH: f64 = 20.0;

/// Below this magnitude `entropy_f` is evaluated from its power series.
const ENTROPY_SERIES_CUTOFF: f64 = 0.1;

/// A finite weight sequence with cached norms.
///
/// Zero weights are kept (they fix the index layout of dual vectors) but
/// contribute nothing to any sum.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    l1: f64,
    l2: f64,
    nonzero: usize,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        let l1 = weights.iter().map(|w| w.abs()).sum();
        let l2 = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let nonzero = weights.iter().filter(|&&w| w != 0.0).count();
        Ok(Self {
            weights,
            l1,
            l2,
            nonzero,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2
    }

    /// Number of nonzero weights.
    pub fn nonzero_count(&self) -> usize {
        self.nonzero
    }

    /// True when every weight is zero, so `X_t ≡ 0`.
    pub fn is_degenerate(&self) -> bool {
        self.nonzero == 0
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    pub(crate) fn nonzero_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().copied().filter(|&w| w != 0.0)
    }
}

/// A point of the box `[-1, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(value));
            }
            if value.abs() > 1.0 {
                return Err(Error::OutOfBox { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `⟨t, b⟩`.
    pub fn dot(&self, t: &WeightVector) -> f64 {
        dot(t.as_slice(), &self.0)
    }

    /// Caller guarantees every value lies in `[-1, 1]`.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.abs() <= 1.0));
        Self(values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(x))
    }
}

pub(crate) fn ln_cosh_unchecked(x: f64) -> f64 {
    let a = x.abs();
    if a < LN_COSH_SWITCH {
        // cosh x - 1 = 2 sinh²(x/2) keeps full relative accuracy near zero
        let h = (0.5 * a).sinh();
        (2.0 * h * h).ln_1p()
    } else {
        a - LN_2 + (-2.0 * a).exp().ln_1p()
    }
}

/// `ln cosh x`, overflow-free for every finite `x`.
pub fn ln_cosh(x: f64) -> Result<f64> {
    check_finite(x).map(ln_cosh_unchecked)
}

/// `sech² x` without forming `cosh² x`.
pub(crate) fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// `f(x) = (1+x) ln(1+x) + (1-x) ln(1-x)` on `[-1, 1]` with `0 ln 0 = 0`.
///
/// Returns `+∞` outside the closed interval.
pub fn entropy_f(x: f64) -> f64 {
    let a = x.abs();
    if a.is_nan() {
        return f64::NAN;
    }
    if a > 1.0 {
        return f64::INFINITY;
    }
    if a == 1.0 {
        return 2.0 * LN_2;
    }
    if a < ENTROPY_SERIES_CUTOFF {
        // f(x) = Σ_{k≥1} x^{2k} / (k (2k - 1))
        let x2 = a * a;
        let mut term = x2;
        let mut sum = 0.0;
        let mut k = 1.0;
        while term > sum * 1e-18 || sum == 0.0 {
            sum += term / (k * (2.0 * k - 1.0));
            term *= x2;
            k += 1.0;
            if term == 0.0 {
                break;
            }
        }
        return sum;
    }
    (1.0 + a) * a.ln_1p() + (1.0 - a) * (-a).ln_1p()
}

/// `ψ_t(s) = Σ ln cosh(s t_i)`.
pub fn cgf(t: &WeightVector, s: f64) -> Result<f64> {
    check_finite(s).map(|s| cgf_unchecked(t, s))
}

pub(crate) fn cgf_unchecked(t: &WeightVector, s: f64) -> f64 {
    t.nonzero_iter().map(|w| ln_cosh_unchecked(s * w)).sum()
}

/// `ψ_t'(s) = Σ t_i tanh(s t_i)`.
pub fn cgf_prime(t: &WeightVector, s: f64) -> Result<f64> {
    check_finite(s).map(|s| cgf_prime_unchecked(t, s))
}

pub(crate) fn cgf_prime_unchecked(t: &WeightVector, s: f64) -> f64 {
    t.nonzero_iter().map(|w| w * (s * w).tanh()).sum()
}

/// `ψ_t''(s) = Σ t_i² sech²(s t_i)`.
pub fn cgf_second(t: &WeightVector, s: f64) -> Result<f64> {
    check_finite(s).map(|s| cgf_second_unchecked(t, s))
}

pub(crate) fn cgf_second_unchecked(t: &WeightVector, s: f64) -> f64 {
    t.nonzero_iter().map(|w| w * w * sech2(s * w)).sum()
}

/// `ψ₁*(b) = ½ Σ f(b_i)`.
pub fn psi1_star(b: &DualVector) -> f64 {
    0.5 * compensated_sum(b.as_slice().iter().map(|&x| entropy_f(x)))
}

/// Neumaier summation.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0;
    for v in values {
        let next = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - next) + v
        } else {
            (v - next) + sum
        };
        sum = next;
    }
    sum + carry
}

/// Gradient of [`psi1_star`]: `(arctanh b_i)_i`. Defined only strictly inside
/// the box.
pub fn psi1_star_grad(b: &DualVector) -> Result<Vec<f64>> {
    b.as_slice()
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value.abs() >= 1.0 {
                Err(Error::Boundary { index, value })
            } else {
                Ok(value.atanh())
            }
        })
        .collect()
}
