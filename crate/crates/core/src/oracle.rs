//! Exact ground truth at desk scale: the distribution of `X_t` by sign
//! enumeration, tail probabilities, i.i.d. convolutions, and a grid-search
//! conjugate that shares no code with the Newton tilt solve.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::legendre::boundary_value;
use crate::math::{cgf_prime_unchecked, cgf_unchecked, WeightVector};

/// Largest weight count accepted by [`exact_distribution`].
pub const MAX_ENUMERATION: usize = 24;

/// Values closer than this are merged during enumeration.
pub const ENUMERATION_MERGE_TOL: f64 = 1e-12;

/// Values closer than this are merged during convolution.
pub const CONVOLUTION_MERGE_TOL: f64 = 1e-9;

/// Relative slack on the threshold of [`tail_probability`], so that a support
/// point equal to `alpha` up to rounding counts as `≥ alpha`.
const TAIL_SLACK: f64 = 1e-12;

const GRID_POINTS: usize = 256;
const GOLDEN_TOL: f64 = 1e-10;

/// A finitely supported distribution on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDist {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl ExactDist {
    /// Builds a distribution from atoms, merging values closer than `tol`.
    /// Atoms with zero probability are dropped.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>, tol: f64) -> Result<Self> {
        if let Some(&(v, p)) = atoms.iter().find(|(v, p)| !v.is_finite() || !p.is_finite()) {
            return Err(Error::NonFinite(if v.is_finite() { p } else { v }));
        }
        atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            if p <= 0.0 {
                continue;
            }
            match support.last() {
                Some(&last) if v - last <= tol => *probs.last_mut().unwrap() += p,
                _ => {
                    support.push(v);
                    probs.push(p);
                }
            }
        }
        Ok(Self { support, probs })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * (x - m) * (x - m))
            .sum()
    }

    /// `ln E e^{sX}`, evaluated stably by factoring out the largest exponent.
    pub fn log_mgf(&self, s: f64) -> f64 {
        let exps: Vec<f64> = self
            .support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| s * x + p.ln())
            .collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln()
    }

    /// Probability of the atom at `x` (within `tol`), zero if absent.
    pub fn mass_at(&self, x: f64, tol: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| (*v - x).abs() <= tol)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Distribution of `X_t = Σ t_i ε_i` over all `2^n` sign patterns.
pub fn exact_distribution(t: &WeightVector) -> Result<ExactDist> {
    if t.len() > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            what: "weight count for exact enumeration",
            size: t.len(),
            limit: MAX_ENUMERATION,
        });
    }
    // Folding in one weight at a time visits the same 2^n patterns as a flat
    // enumeration but merges coincident sums as it goes.
    let mut dist = ExactDist {
        support: vec![0.0],
        probs: vec![1.0],
    };
    for w in t.nonzero_iter() {
        let atoms = dist
            .support
            .iter()
            .zip(&dist.probs)
            .flat_map(|(&x, &p)| [(x - w, 0.5 * p), (x + w, 0.5 * p)])
            .collect();
        dist = ExactDist::from_atoms(atoms, ENUMERATION_MERGE_TOL)?;
    }
    Ok(dist)
}

/// `P(X ≥ alpha)`.
pub fn tail_probability(d: &ExactDist, alpha: f64) -> f64 {
    let threshold = alpha - TAIL_SLACK * alpha.abs().max(1.0);
    let start = d.support.partition_point(|&x| x < threshold);
    // smallest terms first
    d.probs[start..].iter().rev().sum()
}

/// Distribution of the sum of independent draws from `a` and `b`.
pub fn convolve(a: &ExactDist, b: &ExactDist, max_support: usize) -> Result<ExactDist> {
    let pairs = a.len().saturating_mul(b.len());
    let lower_bound = (a.len() + b.len()).saturating_sub(1);
    if lower_bound > max_support {
        return Err(Error::TooLarge {
            what: "convolution support",
            size: lower_bound,
            limit: max_support,
        });
    }
    let mut atoms = Vec::with_capacity(pairs);
    for (&x, &p) in a.support.iter().zip(&a.probs) {
        for (&y, &q) in b.support.iter().zip(&b.probs) {
            atoms.push((x + y, p * q));
        }
    }
    let out = ExactDist::from_atoms(atoms, CONVOLUTION_MERGE_TOL)?;
    if out.len() > max_support {
        return Err(Error::TooLarge {
            what: "convolution support",
            size: out.len(),
            limit: max_support,
        });
    }
    Ok(out)
}

/// Distribution of `S_N`, the sum of `n` independent copies of `d`.
///
/// Atoms whose probability underflows to zero are dropped, so for large `n`
/// the extreme support points may be missing.
pub fn convolve_iid(d: &ExactDist, n: usize, max_support: usize) -> Result<ExactDist> {
    if n == 0 {
        return Err(Error::Config("convolution count must be at least 1".into()));
    }
    let projected = n.saturating_mul(d.len().saturating_sub(1)) + 1;
    if projected > max_support {
        return Err(Error::TooLarge {
            what: "convolution support",
            size: projected,
            limit: max_support,
        });
    }
    let mut acc = d.clone();
    for _ in 1..n {
        acc = convolve(&acc, d, max_support)?;
    }
    Ok(acc)
}

/// `sup_s {α s - ψ_t(s)}` by a coarse scan followed by golden-section
/// refinement. Returns `+∞` outside `[-‖t‖₁, ‖t‖₁]`.
pub fn conjugate_by_grid(t: &WeightVector, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite(alpha));
    }
    let l1 = t.l1_norm();
    if t.is_degenerate() {
        return Ok(if alpha == 0.0 { 0.0 } else { f64::INFINITY });
    }
    match alpha.abs().partial_cmp(&l1) {
        Some(Ordering::Greater) => return Ok(f64::INFINITY),
        Some(Ordering::Equal) => return Ok(boundary_value(t)),
        _ => {}
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    // The objective is concave and even in (α, s) jointly; work with α > 0.
    let a = alpha.abs();
    let objective = |s: f64| a * s - cgf_unchecked(t, s);

    let mut span = 1.0;
    while cgf_prime_unchecked(t, span) < a {
        span *= 2.0;
        if !span.is_finite() {
            return Err(Error::NoConvergence {
                iterations: 1024,
                residual: a - cgf_prime_unchecked(t, f64::MAX),
            });
        }
    }

    let h = span / GRID_POINTS as f64;
    let (best, _) = (0..=GRID_POINTS)
        .map(|k| (k, objective(k as f64 * h)))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
        );
    let mut lo = best.saturating_sub(1) as f64 * h;
    let mut hi = (best + 1).min(GRID_POINTS) as f64 * h;

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective(x1);
        }
    }
    Ok(objective(0.5 * (lo + hi)).max(f1).max(f2).max(0.0))
}
