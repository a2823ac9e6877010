//! Rate function as a constrained entropy minimum:
//!
//! ```text
//! ψ_t*(α) = min { psi1_star(b) : b ∈ [-1, 1]^n, ⟨t, b⟩ = α }
//! ```
//!
//! solved by projected gradient descent with backtracking. A step is accepted
//! on Armijo decrease. Near the optimum, where decreases fall below rounding
//! noise and the value test goes blind, a step whose value is unchanged up to
//! that noise is also accepted if the gradient at the trial point certifies
//! descent through convexity, or if it lowers the KKT residual. The solver
//! only ever evaluates `psi1_star` and its gradient `arctanh(b)`; it never uses
//! the tilt root of the Legendre route, so agreement between the two is a real
//! check.
//!
//! Iterates are projected in the metric `diag(1 - b_i²)`, the inverse Hessian
//! of the objective. The projection onto box ∩ hyperplane in any diagonal
//! metric `D` reduces to a monotone scalar equation: `b(λ) = clip(v + λ D t)`
//! with `⟨t, b(λ)⟩ = α`.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::legendre::{boundary_value, classify, Status};
use crate::math::{dot, psi1_star, DualVector, WeightVector};

/// Distance kept between solver iterates and the faces of the box.
pub const BOX_MARGIN: f64 = 1e-12;

/// Sufficient-decrease constant of the Armijo test.
const ARMIJO: f64 = 1e-4;

/// Slack in the decrease test, relative to `max(1, value)`; absorbs rounding
/// in `psi1_star`.
const DESCENT_SLACK: f64 = 1e-15;

const MAX_BACKTRACKS: usize = 80;

/// Units in the last place of `b_i` forgiven by the KKT residual: one for
/// rounding `b_i` itself, the rest for the update and projection arithmetic
/// that produced it.
const ULP_ALLOWANCE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    pub b_star: DualVector,
    /// `psi1_star(b_star)`.
    pub value: f64,
    /// Lagrange multiplier recovered from `arctanh(b_i) ≈ s t_i`. Infinite at
    /// the corners `α = ±‖t‖₁`.
    pub s_hat: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn validate(v_len: usize, t: &WeightVector, alpha: f64) -> Result<()> {
    if v_len != t.len() {
        return Err(Error::LengthMismatch {
            weights: t.len(),
            dual: v_len,
        });
    }
    if !alpha.is_finite() {
        return Err(Error::NonFinite(alpha));
    }
    if alpha.abs() > t.l1_norm() || (t.is_degenerate() && alpha != 0.0) {
        return Err(Error::Infeasible {
            alpha,
            l1: t.l1_norm(),
        });
    }
    Ok(())
}

/// The corner of the box where `⟨t, b⟩ = ±‖t‖₁`; zero weights map to 0.
fn corner(t: &WeightVector, sign: f64) -> Vec<f64> {
    t.as_slice()
        .iter()
        .map(|&w| if w == 0.0 { 0.0 } else { sign * w.signum() })
        .collect()
}

/// Projection of `base + shift` onto `{b : |b_i| ≤ cap, ⟨t, b⟩ = α}` in the
/// metric with diagonal `scale` (Euclidean when `None`): `b(λ) = clip(base +
/// (shift + λ D t))`. Keeping the small increment apart from `base` rounds
/// each coordinate once. Zero-weight coordinates are clipped only. Requires
/// `|α| ≤ cap ‖t‖₁`.
fn project(
    base: &[f64],
    shift: Option<&[f64]>,
    t: &WeightVector,
    alpha: f64,
    cap: f64,
    scale: Option<&[f64]>,
) -> Vec<f64> {
    let w = t.as_slice();
    let d = |i: usize| scale.map_or(1.0, |s| s[i]);
    let sh = |i: usize| shift.map_or(0.0, |s| s[i]);
    let raw = |i: usize, lambda: f64| base[i] + (sh(i) + lambda * d(i) * w[i]);
    let at = |lambda: f64| -> Vec<f64> {
        (0..base.len())
            .map(|i| raw(i, lambda).clamp(-cap, cap))
            .collect()
    };
    let excess = |b: &[f64]| dot(w, b) - alpha;

    if t.is_degenerate() {
        return at(0.0);
    }
    if alpha.abs() >= cap * t.l1_norm() {
        return corner(t, alpha.signum())
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if c == 0.0 {
                    raw(i, 0.0).clamp(-cap, cap)
                } else {
                    c * cap
                }
            })
            .collect();
    }

    // λ outside [lo, hi] saturates every weighted coordinate.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 || d(i) == 0.0 {
            continue;
        }
        let slope = d(i) * wi;
        let v = raw(i, 0.0);
        let a = (-cap - v) / slope;
        let b = (cap - v) / slope;
        lo = lo.min(a.min(b));
        hi = hi.max(a.max(b));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return at(0.0);
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
        if excess(&at(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // The constraint is linear on the active set at the bracket midpoint;
    // solve it exactly there and keep the result if it is better.
    let mid = 0.5 * (lo + hi);
    let mut best = at(mid);
    let best_err = excess(&best).abs();
    let mut fixed = 0.0;
    let mut free_slope = 0.0;
    let mut free_base = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        let r = raw(i, mid);
        if r.abs() < cap {
            free_base += wi * raw(i, 0.0);
            free_slope += d(i) * wi * wi;
        } else {
            fixed += wi * r.clamp(-cap, cap);
        }
    }
    if free_slope > 0.0 {
        let lambda = (alpha - fixed - free_base) / free_slope;
        let cand = at(lambda);
        if excess(&cand).abs() < best_err {
            best = cand;
        }
    }
    best
}

/// Euclidean projection of `v` onto `[-1, 1]^n ∩ {⟨t, b⟩ = alpha}`.
pub fn project_box_hyperplane(v: &[f64], t: &WeightVector, alpha: f64) -> Result<DualVector> {
    validate(v.len(), t, alpha)?;
    if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    Ok(DualVector::from_vec_unchecked(project(
        v, None, t, alpha, 1.0, None,
    )))
}

/// Certifies stationarity of `b` for the constrained entropy problem.
///
/// Fits `arctanh(b_i) ≈ s t_i` over nonzero weights by least squares, each
/// coordinate weighted by `(1 - b_i²)²` (the inverse variance of `arctanh`
/// under a perturbation of `b_i`), and returns `(s_hat, residual)` with
/// `residual = max_i |arctanh(b_i) - s_hat t_i|`.
///
/// Each coordinate's deviation is reduced by the change in `arctanh` caused by
/// four ulps of `b_i`, so an optimum that is exact up to representation
/// scores zero. Near `±1` this allowance dominates: at `1 - |b| = 1e-7` one
/// ulp of `b` already moves `arctanh(b)` by about `5e-10`. Coordinates within [`BOX_MARGIN`] of a face
/// sit on the solver's inner box; for those only the one-sided condition of
/// an active bound is checked. Zero-weight coordinates must satisfy
/// `arctanh(b_i) = 0`.
pub fn kkt_certificate(t: &WeightVector, b: &DualVector, alpha: f64) -> Result<(f64, f64)> {
    if b.len() != t.len() {
        return Err(Error::LengthMismatch {
            weights: t.len(),
            dual: b.len(),
        });
    }
    let w = t.as_slice();
    let bs = b.as_slice();
    let at_corner = !t.is_degenerate()
        && alpha.abs() == t.l1_norm()
        && bs == corner(t, alpha.signum()).as_slice();
    if at_corner {
        return Ok((f64::INFINITY.copysign(alpha), 0.0));
    }

    let pinned = |x: f64| x.abs() >= 1.0 - 2.0 * BOX_MARGIN;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&wi, &bi) in w.iter().zip(bs) {
        if wi == 0.0 || pinned(bi) {
            continue;
        }
        let weight = (1.0 - bi * bi).powi(2);
        num += weight * wi * bi.atanh();
        den += weight * wi * wi;
    }
    let s_hat = if den > 0.0 { num / den } else { 0.0 };

    let mut residual: f64 = 0.0;
    for (&wi, &bi) in w.iter().zip(bs) {
        if bi.abs() >= 1.0 {
            residual = f64::INFINITY;
            continue;
        }
        let a = bi.atanh();
        let gap = a - s_hat * wi;
        let dev = if wi != 0.0 && pinned(bi) {
            // active bound: only the outward part violates stationarity
            (gap * bi.signum()).max(0.0)
        } else {
            gap.abs()
        };
        let ulp = bi.abs().next_up() - bi.abs();
        let floor = ULP_ALLOWANCE * ulp / (1.0 - bi * bi) + f64::EPSILON * a.abs();
        residual = residual.max((dev - floor).max(0.0));
    }
    Ok((s_hat, residual))
}

/// Solves the constrained entropy minimum; see [`minimize_entropy_observed`].
pub fn minimize_entropy(
    t: &WeightVector,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<VariationalSolution> {
    minimize_entropy_observed(t, alpha, cfg, |_, _| {})
}

/// Like [`minimize_entropy`], calling `observe(b, value)` on the start point
/// and on every accepted iterate.
///
/// Corners `|α| = ‖t‖₁`, and the boundary band fixed by
/// `cfg.boundary_guard`, are answered without iteration by the feasible
/// point nearest the corner.
pub fn minimize_entropy_observed<F>(
    t: &WeightVector,
    alpha: f64,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<VariationalSolution>
where
    F: FnMut(&[f64], f64),
{
    cfg.validate()?;
    validate(t.len(), t, alpha)?;
    let n = t.len();
    let w = t.as_slice();

    match classify(t, alpha, cfg) {
        Status::Degenerate => {
            let b = vec![0.0; n];
            observe(&b, 0.0);
            return Ok(VariationalSolution {
                b_star: DualVector::from_vec_unchecked(b),
                value: 0.0,
                s_hat: 0.0,
                kkt_residual: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        Status::Boundary => {
            let b = project(&corner(t, alpha.signum()), None, t, alpha, 1.0, None);
            let b_star = DualVector::from_vec_unchecked(b);
            let value = if alpha.abs() == t.l1_norm() {
                boundary_value(t)
            } else {
                psi1_star(&b_star)
            };
            observe(b_star.as_slice(), value);
            return Ok(VariationalSolution {
                b_star,
                value,
                s_hat: f64::INFINITY.copysign(alpha),
                kkt_residual: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        Status::Exterior => unreachable!("rejected by validate"),
        Status::Interior => {}
    }

    let cap = 1.0 - BOX_MARGIN;
    let objective = |b: &[f64]| psi1_star(&DualVector::from_vec_unchecked(b.to_vec()));
    let certify = |b: &[f64]| {
        kkt_certificate(t, &DualVector::from_vec_unchecked(b.to_vec()), alpha)
            .expect("lengths checked")
    };

    let mut b = project(&vec![0.0; n], None, t, alpha, cap, None);
    let mut value = objective(&b);
    observe(&b, value);
    let (mut s_hat, mut residual) = certify(&b);
    let mut iterations = 0;

    while residual > cfg.pg_tol && iterations < cfg.pg_max_iters {
        let grad: Vec<f64> = b
            .iter()
            .zip(w)
            .map(|(&bi, &wi)| if wi == 0.0 { 0.0 } else { bi.atanh() })
            .collect();
        let metric: Vec<f64> = b.iter().map(|&bi| 1.0 - bi * bi).collect();

        let mut step = cfg.pg_step0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let shift: Vec<f64> = grad
                .iter()
                .zip(&metric)
                .map(|(&gi, &di)| -step * di * gi)
                .collect();
            let cand = project(&b, Some(&shift), t, alpha, cap, Some(&metric));
            let decrease: f64 = grad
                .iter()
                .zip(&cand)
                .zip(&b)
                .map(|((g, c), x)| g * (c - x))
                .sum();
            let cand_value = objective(&cand);
            // Convexity: ∇f(b⁺)·(b⁺ - b) ≤ 0 implies f(b⁺) ≤ f(b). This stays
            // decisive once value differences drop below rounding noise.
            let cand_slope: f64 = cand
                .iter()
                .zip(&b)
                .zip(w)
                .map(|((&c, &x), &wi)| if wi == 0.0 { 0.0 } else { c.atanh() * (c - x) })
                .sum();
            let slack = DESCENT_SLACK * value.max(1.0);
            let armijo = cand_value <= value + ARMIJO * decrease + slack;
            let within_noise = cand_value <= value + slack;
            if armijo || (within_noise && cand_slope <= 0.0) {
                accepted = Some((cand, cand_value, None));
                break;
            }
            if within_noise {
                let cert = certify(&cand);
                if cert.1 < residual {
                    accepted = Some((cand, cand_value, Some(cert)));
                    break;
                }
            }
            step *= cfg.pg_shrink;
        }
        let Some((next, next_value, cert)) = accepted else {
            break;
        };
        iterations += 1;
        if next == b {
            break;
        }
        b = next;
        value = next_value;
        observe(&b, value);
        (s_hat, residual) = cert.unwrap_or_else(|| certify(&b));
    }

    Ok(VariationalSolution {
        b_star: DualVector::from_vec_unchecked(b),
        value,
        s_hat,
        kkt_residual: residual,
        iterations,
        converged: residual <= cfg.pg_tol,
    })
}
