//! Cramér transform (large-deviations rate function) of finite Rademacher
//! series `X_t = Σ t_i ε_i`, computed two independent ways:
//!
//! * [`legendre`]: invert `ψ_t'(s) = α` and evaluate `α s - ψ_t(s)`;
//! * [`variational`]: minimize the entropy functional `½ Σ f(b_i)` over the
//!   box `[-1, 1]^n` intersected with the hyperplane `⟨t, b⟩ = α`.
//!
//! [`oracle`] provides exact distributions and a grid-search conjugate for
//! checking both, and [`ldp`] runs Chernoff and large-deviation experiments.

pub mod config;
pub mod error;
pub mod ldp;
pub mod legendre;
pub mod math;
pub mod oracle;
pub mod variational;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use ldp::{
    chernoff_check, rate_convergence, run_experiment, sample_series, tilted_sampler,
    ExperimentOptions, ExperimentReport, SamplingPlan,
};
pub use legendre::{cramer_transform, rate_domain, solve_tilt, RateDomain, RatePoint, Status};
pub use math::{
    cgf, cgf_prime, cgf_second, entropy_f, ln_cosh, psi1_star, psi1_star_grad, DualVector,
    WeightVector,
};
pub use oracle::{
    conjugate_by_grid, convolve, convolve_iid, exact_distribution, tail_probability, ExactDist,
};
pub use variational::{
    kkt_certificate, minimize_entropy, minimize_entropy_observed, project_box_hyperplane,
    VariationalSolution,
};
