//! Rate function by inverting the derivative of the CGF.
//!
//! For `|α| < ‖t‖₁` the map `s ↦ ψ_t'(s)` is a strictly increasing bijection
//! onto `(-‖t‖₁, ‖t‖₁)`, so `ψ_t*(α) = α s_α - ψ_t(s_α)` where `ψ_t'(s_α) = α`.
//! The root is found by bracket expansion followed by Newton steps safeguarded
//! by bisection.

use std::f64::consts::LN_2;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::math::{
    cgf_prime_unchecked, cgf_second_unchecked, cgf_unchecked, DualVector, WeightVector,
};

/// Which part of the real line an `α` falls in, relative to `(-‖t‖₁, ‖t‖₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Interior,
    /// Within the boundary guard of `±‖t‖₁`; value is the endpoint value `m ln 2`.
    Boundary,
    Exterior,
    /// All weights zero.
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Interior => "interior",
            Status::Boundary => "boundary",
            Status::Exterior => "exterior",
            Status::Degenerate => "degenerate",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated point of the rate function.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub alpha: f64,
    /// `ψ_t*(α)`, `+∞` outside the domain.
    pub value: f64,
    /// The tilt `s` with `ψ_t'(s) = α`; present only for interior points.
    pub tilt: Option<f64>,
    /// Minimizer of the entropy formulation, when the caller has one.
    pub minimizer: Option<DualVector>,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDomain {
    pub lo: f64,
    pub hi: f64,
    /// Number of nonzero weights.
    pub nonzero: usize,
}

/// Effective domain `(-‖t‖₁, ‖t‖₁)` of the rate function.
pub fn rate_domain(t: &WeightVector) -> RateDomain {
    RateDomain {
        lo: -t.l1_norm(),
        hi: t.l1_norm(),
        nonzero: t.nonzero_count(),
    }
}

/// Classifies `alpha` against the domain of `ψ_t*`.
pub fn classify(t: &WeightVector, alpha: f64, cfg: &SolverConfig) -> Status {
    let l1 = t.l1_norm();
    if t.is_degenerate() {
        Status::Degenerate
    } else if alpha.abs() > l1 {
        Status::Exterior
    } else if alpha.abs() >= l1 * (1.0 - cfg.boundary_guard) {
        Status::Boundary
    } else {
        Status::Interior
    }
}

/// Endpoint value `m ln 2` of the finite-dimensional conjugate.
pub fn boundary_value(t: &WeightVector) -> f64 {
    t.nonzero_count() as f64 * LN_2
}

/// Solves `ψ_t'(s) = alpha` for interior `alpha`.
pub fn solve_tilt(t: &WeightVector, alpha: f64, cfg: &SolverConfig) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite(alpha));
    }
    match classify(t, alpha, cfg) {
        Status::Interior => {}
        Status::Degenerate => return Err(Error::Degenerate),
        Status::Boundary => {
            return Err(Error::BoundaryAlpha {
                alpha,
                l1: t.l1_norm(),
            })
        }
        Status::Exterior => {
            return Err(Error::Infeasible {
                alpha,
                l1: t.l1_norm(),
            })
        }
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    // ψ_t' is odd: solve for |α| and restore the sign.
    let target = alpha.abs();
    let residual = |s: f64| cgf_prime_unchecked(t, s) - target;

    let mut lo = 0.0;
    let mut hi = target / (t.l1_norm() * t.max_abs());
    let mut expansions = 0;
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= cfg.bracket_growth;
        expansions += 1;
        if !hi.is_finite() || expansions > 4096 {
            return Err(Error::NoConvergence {
                iterations: expansions,
                residual: residual(lo),
            });
        }
    }

    // On s > 0 the residual is concave, so Newton from the left stays left of
    // the root; the bracket check still guards every step.
    let mut s = lo;
    let mut r = residual(s);
    for _ in 0..cfg.max_newton_iters {
        if r.abs() <= cfg.root_tol {
            return Ok(s.copysign(alpha));
        }
        if r < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let slope = cgf_second_unchecked(t, s);
        let newton = s - r / slope;
        let mut next = None;
        if slope > 0.0 && newton > lo && newton < hi {
            let rn = residual(newton);
            if rn.abs() < r.abs() {
                next = Some((newton, rn));
            }
        }
        let (ns, nr) = next.unwrap_or_else(|| {
            let mid = 0.5 * (lo + hi);
            (mid, residual(mid))
        });
        if ns == s {
            break;
        }
        s = ns;
        r = nr;
    }
    if r.abs() <= cfg.root_tol {
        return Ok(s.copysign(alpha));
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_newton_iters,
        residual: r.abs(),
    })
}

/// Evaluates `ψ_t*(alpha)` for any real `alpha`; the status reports the regime.
pub fn cramer_transform(t: &WeightVector, alpha: f64, cfg: &SolverConfig) -> Result<RatePoint> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite(alpha));
    }
    let status = classify(t, alpha, cfg);
    let point = |value, tilt| RatePoint {
        alpha,
        value,
        tilt,
        minimizer: None,
        status,
    };
    Ok(match status {
        Status::Degenerate => {
            let value = if alpha == 0.0 { 0.0 } else { f64::INFINITY };
            point(value, None)
        }
        Status::Exterior => point(f64::INFINITY, None),
        Status::Boundary => point(boundary_value(t), None),
        Status::Interior => {
            let s = solve_tilt(t, alpha, cfg)?;
            let value = (alpha * s - cgf_unchecked(t, s)).max(0.0);
            point(value, Some(s))
        }
    })
}
