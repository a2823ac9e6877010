//! Large-deviation experiments: plain and exponentially tilted sampling of
//! `X_t`, Chernoff-bound checks against exact tails, and convergence of
//! `-(1/N) ln P(S_N / N ≥ α)` to the rate function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::legendre::{cramer_transform, solve_tilt, Status};
use crate::math::{cgf_unchecked, WeightVector};
use crate::oracle::{
    convolve, convolve_iid, exact_distribution, tail_probability, ExactDist, MAX_ENUMERATION,
};

/// Normal quantile for the 95% intervals reported with Monte Carlo estimates.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Above this fraction of `‖t‖₁` a report carries a near-boundary warning.
pub const NEAR_BOUNDARY_FRACTION: f64 = 0.99;

/// One draw of `Σ t_i ε_i` with fair independent signs.
pub fn sample_series<R: Rng + ?Sized>(t: &WeightVector, rng: &mut R) -> f64 {
    t.as_slice()
        .iter()
        .map(|&w| if rng.random::<bool>() { w } else { -w })
        .sum()
}

/// One draw under the tilted product measure `P(ε_i = 1) = e^{s t_i} / (2 cosh(s t_i))`,
/// with the log likelihood ratio `ln dP/dQ = -s x + ψ_t(s)` back to the fair measure.
pub fn tilted_sampler<R: Rng + ?Sized>(t: &WeightVector, s: f64, rng: &mut R) -> (f64, f64) {
    if s == 0.0 {
        return (sample_series(t, rng), 0.0);
    }
    let draw: f64 = t
        .as_slice()
        .iter()
        .map(|&w| {
            let p_up = 0.5 * (1.0 + (s * w).tanh());
            if rng.random::<f64>() < p_up {
                w
            } else {
                -w
            }
        })
        .sum();
    (draw, -s * draw + cgf_unchecked(t, s))
}

/// Wilson score interval for `successes` out of `trials`; returns `(lo, hi)`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// A Monte Carlo tail estimate with its 95% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Standard error of the estimate.
    pub std_error: f64,
    pub samples: u64,
    /// Tilt used by the sampler (0 for plain sampling).
    pub tilt: f64,
}

impl McEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

/// How Monte Carlo work is split and seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    pub seed: u64,
    pub samples: u64,
    /// Worker `k` draws from ChaCha stream `k` of the master seed.
    pub workers: usize,
}

impl SamplingPlan {
    fn worker_rng(&self, worker: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(worker as u64);
        rng
    }

    fn share(&self, worker: usize) -> u64 {
        let workers = self.workers.max(1) as u64;
        self.samples / workers + u64::from((worker as u64) < self.samples % workers)
    }

    /// Runs `draw` `samples` times across the workers, returning per-worker
    /// `(count, Σ v, Σ v²)` folded in worker order.
    fn accumulate<F>(&self, draw: F) -> (u64, f64, f64)
    where
        F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
    {
        let parts: Vec<(u64, f64, f64)> = (0..self.workers.max(1))
            .into_par_iter()
            .map(|k| {
                let mut rng = self.worker_rng(k);
                let mut sum = 0.0;
                let mut sq = 0.0;
                let n = self.share(k);
                for _ in 0..n {
                    let v = draw(&mut rng);
                    sum += v;
                    sq += v * v;
                }
                (n, sum, sq)
            })
            .collect();
        parts
            .into_iter()
            .fold((0, 0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2))
    }
}

/// Estimates `P(S_N ≥ N alpha)` for `S_N` a sum of `copies` independent draws
/// of `X_t`, sampling under tilt `s` and reweighting. With `s = 0` this is
/// plain sampling and the interval is Wilson's; otherwise it is the normal
/// interval of the weighted mean.
pub fn mc_tail(
    t: &WeightVector,
    alpha: f64,
    copies: usize,
    s: f64,
    plan: &SamplingPlan,
) -> McEstimate {
    let copies = copies.max(1);
    let threshold = copies as f64 * alpha;
    let log_mgf = copies as f64 * cgf_unchecked(t, s);
    let (n, sum, sq) = plan.accumulate(|rng| {
        let total: f64 = (0..copies).map(|_| tilted_sampler(t, s, rng).0).sum();
        if total >= threshold - 1e-12 * threshold.abs().max(1.0) {
            (-s * total + log_mgf).exp()
        } else {
            0.0
        }
    });
    let nf = n.max(1) as f64;
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    let std_error = (var / nf).sqrt();
    let (ci_lo, ci_hi) = if s == 0.0 {
        wilson_interval(sum.round() as u64, n, Z95)
    } else {
        ((mean - Z95 * std_error).max(0.0), mean + Z95 * std_error)
    };
    McEstimate {
        estimate: mean,
        ci_lo,
        ci_hi,
        std_error,
        samples: n,
        tilt: s,
    }
}

/// One α of a Chernoff check.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernoffRow {
    pub alpha: f64,
    pub rate_value: f64,
    pub status: Status,
    pub tilt: Option<f64>,
    pub exact_tail: Option<f64>,
    pub mc: Option<McEstimate>,
    /// `exp(-ψ*(α))`.
    pub bound: f64,
    /// Exact tail ≤ bound, or, for Monte Carlo, the interval's lower end ≤ bound.
    pub chernoff_ok: bool,
}

/// Compares `P(X ≥ α)` with `exp(-ψ_t*(α))` on each `α`.
///
/// Uses the exact distribution when `n ≤ 24`; otherwise `plan` must be given
/// and tails are estimated by tilted sampling.
pub fn chernoff_check(
    t: &WeightVector,
    alphas: &[f64],
    cfg: &SolverConfig,
    plan: Option<&SamplingPlan>,
) -> Result<Vec<ChernoffRow>> {
    let exact = match exact_distribution(t) {
        Ok(d) => Some(d),
        Err(e @ Error::TooLarge { .. }) => {
            if plan.is_none() {
                return Err(e);
            }
            None
        }
        Err(e) => return Err(e),
    };
    alphas
        .iter()
        .map(|&alpha| {
            let point = cramer_transform(t, alpha, cfg)?;
            let bound = (-point.value).exp();
            let mut row = ChernoffRow {
                alpha,
                rate_value: point.value,
                status: point.status,
                tilt: point.tilt,
                exact_tail: None,
                mc: None,
                bound,
                chernoff_ok: true,
            };
            if let Some(d) = &exact {
                let tail = tail_probability(d, alpha);
                row.exact_tail = Some(tail);
                row.chernoff_ok = tail <= bound;
            } else if let Some(plan) = plan {
                let s = point.tilt.unwrap_or(0.0).max(0.0);
                let est = mc_tail(t, alpha, 1, s, plan);
                row.chernoff_ok = est.ci_lo <= bound;
                row.mc = Some(est);
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailMethod {
    Exact,
    MonteCarlo {
        ci_lo: f64,
        ci_hi: f64,
        samples: u64,
    },
}

/// One `N` of a rate-convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `P(S_N / N ≥ α)`.
    pub prob: f64,
    /// `-(1/N) ln prob`.
    pub g_n: f64,
    /// `g_n - ψ*(α)`.
    pub gap: f64,
    pub method: TailMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub alpha: f64,
    pub rate_value: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Every exact row satisfies `g_N ≥ ψ*(α)`.
    pub fn chernoff_holds(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.method == TailMethod::Exact)
            .all(|r| r.g_n >= self.rate_value)
    }

    /// Gaps strictly decrease along the schedule.
    pub fn gaps_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].gap < w[0].gap)
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.rows.last().map(|r| r.gap)
    }
}

/// Options for [`rate_convergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// Largest support allowed in an exact convolution.
    pub max_support: usize,
    /// Monte Carlo fallback when exact convolution is too large; `None`
    /// turns the size error into a hard error.
    pub fallback: Option<SamplingPlan>,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            max_support: 1 << 20,
            fallback: None,
        }
    }
}

/// For each `N` in `schedule`, computes `P(S_N / N ≥ α)` and the gap of
/// `-(1/N) ln P` above `ψ_t*(α)`.
///
/// Exact convolutions are extended incrementally along the sorted schedule.
/// Once the support outgrows `opts.max_support` the remaining rows fall back
/// to tilted Monte Carlo, if a plan was given.
pub fn rate_convergence(
    t: &WeightVector,
    alpha: f64,
    schedule: &[usize],
    cfg: &SolverConfig,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    let point = cramer_transform(t, alpha, cfg)?;
    let mut ns: Vec<usize> = schedule.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.first() == Some(&0) {
        return Err(Error::Config("schedule entries must be at least 1".into()));
    }

    let base = exact_distribution(t);
    let mut exact: Option<(usize, ExactDist)> = None;
    let mut exact_failed = base.is_err();
    if let Err(e) = &base {
        if opts.fallback.is_none() {
            return Err(e.clone());
        }
    }

    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let mut row = None;
        if !exact_failed {
            let d = base.as_ref().expect("checked above");
            let next = match exact.take() {
                None => convolve_iid(d, n, opts.max_support),
                Some((m, acc)) => convolve_iid(d, n - m, opts.max_support)
                    .and_then(|step| convolve(&acc, &step, opts.max_support)),
            };
            match next {
                Ok(dist) => {
                    let prob = tail_probability(&dist, n as f64 * alpha);
                    row = Some((prob, TailMethod::Exact));
                    exact = Some((n, dist));
                }
                Err(e @ Error::TooLarge { .. }) => {
                    if opts.fallback.is_none() {
                        return Err(e);
                    }
                    exact_failed = true;
                }
                Err(e) => return Err(e),
            }
        }
        let (prob, method) = match row {
            Some(r) => r,
            None => {
                let plan = opts.fallback.as_ref().expect("fallback checked");
                let s = if point.status == Status::Interior && alpha > 0.0 {
                    solve_tilt(t, alpha, cfg)?
                } else {
                    0.0
                };
                let est = mc_tail(t, alpha, n, s, plan);
                (
                    est.estimate,
                    TailMethod::MonteCarlo {
                        ci_lo: est.ci_lo,
                        ci_hi: est.ci_hi,
                        samples: est.samples,
                    },
                )
            }
        };
        let g_n = -prob.ln() / n as f64;
        rows.push(ConvergenceRow {
            n,
            prob,
            g_n,
            gap: g_n - point.value,
            method,
        });
    }
    Ok(ConvergenceTable {
        alpha,
        rate_value: point.value,
        rows,
    })
}

/// Everything one `ldp` run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub t: WeightVector,
    pub alphas: Vec<f64>,
    pub chernoff: Vec<ChernoffRow>,
    pub convergence: Vec<ConvergenceTable>,
    pub seed: u64,
    pub workers: usize,
    pub warnings: Vec<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl ExperimentReport {
    pub fn chernoff_ok(&self) -> bool {
        self.chernoff.iter().all(|r| r.chernoff_ok)
            && self.convergence.iter().all(|c| c.chernoff_holds())
    }

    pub fn gaps_decreasing(&self) -> bool {
        self.convergence.iter().all(|c| c.gaps_decreasing())
    }
}

/// Options for [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub schedule: Vec<usize>,
    pub max_support: usize,
    /// Allow Monte Carlo where exact computation is too large.
    pub monte_carlo: bool,
    pub plan: SamplingPlan,
}

/// Runs the Chernoff check on `alphas` and, for each `α ≥ 0` among them, the
/// rate-convergence table over `opts.schedule`.
pub fn run_experiment(
    t: &WeightVector,
    alphas: &[f64],
    cfg: &SolverConfig,
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    let plan = opts.monte_carlo.then_some(&opts.plan);
    if t.len() > MAX_ENUMERATION && plan.is_none() {
        return Err(Error::TooLarge {
            what: "weight count for exact mode (enable Monte Carlo)",
            size: t.len(),
            limit: MAX_ENUMERATION,
        });
    }
    let mut warnings = Vec::new();
    for &alpha in alphas {
        let frac = if t.l1_norm() > 0.0 {
            alpha.abs() / t.l1_norm()
        } else {
            f64::INFINITY
        };
        match cramer_transform(t, alpha, cfg)?.status {
            Status::Boundary => warnings.push(format!(
                "alpha = {alpha}: boundary regime, reporting endpoint value m ln 2"
            )),
            Status::Exterior => warnings.push(format!("alpha = {alpha}: outside the domain, rate is +inf")),
            Status::Degenerate if alpha != 0.0 => {
                warnings.push(format!("alpha = {alpha}: all weights zero, rate is +inf"))
            }
            Status::Interior if frac >= NEAR_BOUNDARY_FRACTION => warnings.push(format!(
                "alpha = {alpha}: near-boundary regime, |alpha| / l1 = {frac:.6} is within {:.0}% of the domain edge; tilt is large and tails are extremely small",
                (1.0 - NEAR_BOUNDARY_FRACTION) * 100.0
            )),
            _ => {}
        }
    }

    let chernoff = chernoff_check(t, alphas, cfg, plan)?;
    let conv_opts = ConvergenceOptions {
        max_support: opts.max_support,
        fallback: plan.copied(),
    };
    let mut convergence = Vec::new();
    if !opts.schedule.is_empty() {
        for &alpha in alphas {
            let status = cramer_transform(t, alpha, cfg)?.status;
            if alpha >= 0.0
                && matches!(status, Status::Interior | Status::Degenerate)
                && (alpha == 0.0 || !t.is_degenerate())
            {
                convergence.push(rate_convergence(t, alpha, &opts.schedule, cfg, &conv_opts)?);
            }
        }
    }
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(ExperimentReport {
        t: t.clone(),
        alphas: alphas.to_vec(),
        chernoff,
        convergence,
        seed: opts.plan.seed,
        workers: opts.plan.workers,
        warnings,
        timestamp,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn wv(w: &[f64]) -> WeightVector {
        WeightVector::new(w.to_vec()).unwrap()
    }

    fn plan(seed: u64, samples: u64) -> SamplingPlan {
        SamplingPlan {
            seed,
            samples,
            workers: 4,
        }
    }

    const F_06: f64 = 0.385_489_514_043_514_86;

    #[test]
    fn zero_weights_sample_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = wv(&[0.0, 0.0, 0.0]);
        assert!((0..100).all(|_| sample_series(&t, &mut rng) == 0.0));
    }

    #[test]
    fn single_weight_draws_are_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = wv(&[1.0]);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = sample_series(&t, &mut rng);
            assert!(x == 1.0 || x == -1.0);
            sum += x;
        }
        assert!((sum / n as f64).abs() < 3e-3);
    }

    #[test]
    fn draws_bounded_with_matching_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = wv(&[0.4, -1.3, 2.0, 0.05]);
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_series(&t, &mut rng);
            assert!(x.abs() <= t.l1_norm() + 1e-12);
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let target = t.l2_norm().powi(2);
        assert!((var - target).abs() / target < 0.02);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let t = wv(&[0.4, -1.3, 2.0]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_series(&t, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn tilted_sampler_at_zero_is_plain() {
        let t = wv(&[0.4, -1.3]);
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (x, lw) = tilted_sampler(&t, 0.0, &mut a);
            assert_eq!((x, lw), (sample_series(&t, &mut b), 0.0));
        }
    }

    #[test]
    fn tilted_sampler_mean() {
        let t = wv(&[1.0]);
        let s = 0.5f64.atanh();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 400_000;
        let mut ups = 0;
        for _ in 0..n {
            let (x, lw) = tilted_sampler(&t, s, &mut rng);
            if x > 0.0 {
                ups += 1;
            }
            let expect = -s * x + crate::math::ln_cosh(s).unwrap();
            assert!((lw - expect).abs() < 1e-15);
        }
        let p = ups as f64 / n as f64;
        assert!((p - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / n as f64).sqrt() * 1.5);
    }

    #[test]
    fn importance_weighted_tail_is_unbiased() {
        let t = wv(&[0.5, 0.5]);
        let cfg = SolverConfig::default();
        let s = solve_tilt(&t, 0.5, &cfg).unwrap();
        let est = mc_tail(&t, 0.5, 1, s, &plan(11, 100_000));
        assert!(
            (est.estimate - 0.25).abs() <= 3.0 * est.half_width(),
            "{est:?}"
        );
        let plain = mc_tail(&t, 0.5, 1, 0.0, &plan(12, 100_000));
        assert!(plain.ci_lo <= 0.25 && 0.25 <= plain.ci_hi, "{plain:?}");
    }

    #[test]
    fn mc_is_deterministic_given_plan() {
        let t = wv(&[0.3, 1.1, -0.8]);
        let a = mc_tail(&t, 0.9, 3, 0.4, &plan(77, 10_000));
        let b = mc_tail(&t, 0.9, 3, 0.4, &plan(77, 10_000));
        assert_eq!(a, b);
        assert_eq!(a.samples, 10_000);
    }

    #[test]
    fn wilson_interval_basics() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chernoff_examples() {
        let cfg = SolverConfig::default();
        let rows = chernoff_check(&wv(&[1.0]), &[0.0, 0.5], &cfg, None).unwrap();
        assert_eq!(rows[0].exact_tail, Some(0.5));
        assert!(rows[0].chernoff_ok && rows[0].bound == 1.0);
        assert_eq!(rows[1].exact_tail, Some(0.5));
        assert!((rows[1].bound - 0.877_382_675_301_661_64).abs() < 1e-12);
        assert!(rows[1].chernoff_ok);

        let rows = chernoff_check(&wv(&[0.5, 0.5]), &[0.5], &cfg, None).unwrap();
        assert_eq!(rows[0].exact_tail, Some(0.25));
        assert!((rows[0].bound - 0.769_800_358_919_501_02).abs() < 1e-12);
        assert!(rows[0].chernoff_ok);
    }

    #[test]
    fn chernoff_needs_plan_for_large_n() {
        let cfg = SolverConfig::default();
        let t = wv(&vec![0.1; 30]);
        assert!(matches!(
            chernoff_check(&t, &[0.5], &cfg, None),
            Err(Error::TooLarge { .. })
        ));
        let rows = chernoff_check(&t, &[0.5], &cfg, Some(&plan(1, 20_000))).unwrap();
        assert!(rows[0].mc.is_some() && rows[0].chernoff_ok);
    }

    #[test]
    fn convergence_example() {
        let cfg = SolverConfig::default();
        let table = rate_convergence(
            &wv(&[0.5, 0.5]),
            0.6,
            &[10, 100, 1000],
            &cfg,
            &ConvergenceOptions::default(),
        )
        .unwrap();
        assert!((table.rate_value - F_06).abs() < 1e-12);
        assert!(table.chernoff_holds());
        assert!(table.gaps_decreasing());
        assert!(table.final_gap().unwrap() < 0.05);
        assert!(table.rows.iter().all(|r| r.gap > 0.0));
    }

    #[test]
    fn convergence_first_row_is_plain_tail() {
        let cfg = SolverConfig::default();
        let t = wv(&[0.5, 0.5]);
        let table = rate_convergence(&t, 0.6, &[1], &cfg, &ConvergenceOptions::default()).unwrap();
        let d = exact_distribution(&t).unwrap();
        assert_eq!(table.rows[0].g_n, -tail_probability(&d, 0.6).ln());
    }

    #[test]
    fn convergence_at_zero() {
        let cfg = SolverConfig::default();
        let table = rate_convergence(
            &wv(&[1.0]),
            0.0,
            &[10, 100],
            &cfg,
            &ConvergenceOptions::default(),
        )
        .unwrap();
        assert_eq!(table.rate_value, 0.0);
        for r in &table.rows {
            assert!(r.prob >= 0.5 && r.g_n >= 0.0 && r.g_n < 0.1);
        }
    }

    #[test]
    fn convergence_falls_back_to_monte_carlo() {
        let cfg = SolverConfig::default();
        let t = wv(&[1.0, std::f64::consts::PI]);
        let opts = ConvergenceOptions {
            max_support: 50,
            fallback: Some(plan(3, 20_000)),
        };
        let table = rate_convergence(&t, 1.0, &[2, 20], &cfg, &opts).unwrap();
        assert_eq!(table.rows[0].method, TailMethod::Exact);
        assert!(matches!(
            table.rows[1].method,
            TailMethod::MonteCarlo { .. }
        ));
        let strict = ConvergenceOptions {
            max_support: 50,
            fallback: None,
        };
        assert!(matches!(
            rate_convergence(&t, 1.0, &[2, 20], &cfg, &strict),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn experiment_warns_near_boundary() {
        let cfg = SolverConfig::default();
        let opts = ExperimentOptions {
            schedule: vec![10, 100],
            max_support: 1 << 16,
            monte_carlo: false,
            plan: plan(42, 1000),
        };
        let report = run_experiment(&wv(&[1.0]), &[0.999], &cfg, &opts).unwrap();
        assert!(report
            .warnings
            .iter()
            .any(|w| w.contains("near-boundary regime")));
        assert!(report.chernoff_ok());
        let report = run_experiment(&wv(&[1.0]), &[0.0, 0.5], &cfg, &opts).unwrap();
        assert!(report.warnings.is_empty());
        assert_eq!(report.convergence.len(), 2);
    }
}
