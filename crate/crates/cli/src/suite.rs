//! Property suite behind `cramer verify`.

use std::f64::consts::LN_2;

use cramer_core::oracle::{ENUMERATION_MERGE_TOL, MAX_ENUMERATION};
use cramer_core::{
    cgf, conjugate_by_grid, cramer_transform, exact_distribution, minimize_entropy, psi1_star,
    psi1_star_grad, solve_tilt, tail_probability, DualVector, Error, SolverConfig, Status,
    WeightVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const VALUE_TOL: f64 = 1e-7;
pub const TILT_TOL: f64 = 1e-6;
pub const KKT_TOL: f64 = 1e-8;
pub const GRID_TOL: f64 = 1e-6;
pub const MGF_TOL: f64 = 1e-10;
pub const GRAD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
const MGF_MAX_N: usize = 16;

pub const CHECKS: [&str; 10] = [
    "equivalence",
    "kkt",
    "oracle_grid",
    "oracle_mgf",
    "chernoff",
    "gradient",
    "convexity",
    "symmetry",
    "boundary",
    "degenerate",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub check: &'static str,
    pub instance: usize,
    pub weights: Vec<f64>,
    pub alpha: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    /// `(passed, failed)` per entry of [`CHECKS`].
    pub counts: [(u64, u64); CHECKS.len()],
    pub failures: Vec<Failure>,
    pub instances: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn total(&self) -> (u64, u64) {
        self.counts
            .iter()
            .fold((0, 0), |a, c| (a.0 + c.0, a.1 + c.1))
    }

    fn merge(&mut self, other: SuiteReport) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self.failures.extend(other.failures);
        self.instances += other.instances;
    }
}

/// Draws `count` instances: n uniform in 1..=10, |t_i| uniform in [0.1, 2], random signs.
pub fn random_instances(seed: u64, count: usize) -> Vec<WeightVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=10);
            let w = (0..n)
                .map(|_| {
                    let m: f64 = rng.random_range(0.1..=2.0);
                    if rng.random::<bool>() {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            WeightVector::new(w).expect("finite by construction")
        })
        .collect()
}

struct Recorder<'a> {
    report: SuiteReport,
    instance: usize,
    t: &'a WeightVector,
}

impl Recorder<'_> {
    fn record(
        &mut self,
        check: &'static str,
        alpha: Option<f64>,
        ok: bool,
        detail: impl FnOnce() -> String,
    ) {
        let idx = CHECKS
            .iter()
            .position(|c| *c == check)
            .expect("known check");
        if ok {
            self.report.counts[idx].0 += 1;
        } else {
            self.report.counts[idx].1 += 1;
            self.report.failures.push(Failure {
                check,
                instance: self.instance,
                weights: self.t.as_slice().to_vec(),
                alpha,
                detail: detail(),
            });
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

/// Runs every check on one weight vector over `alphas`.
pub fn check_instance(
    t: &WeightVector,
    alphas: &[f64],
    cfg: &SolverConfig,
    instance: usize,
    seed: u64,
) -> SuiteReport {
    let mut r = Recorder {
        report: SuiteReport {
            instances: 1,
            ..Default::default()
        },
        instance,
        t,
    };
    let exact = (t.len() <= MAX_ENUMERATION)
        .then(|| exact_distribution(t).ok())
        .flatten();

    let mut values = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let legendre = match cramer_transform(t, alpha, cfg) {
            Ok(p) => p,
            Err(e) => {
                r.record("equivalence", Some(alpha), false, || {
                    format!("legendre solver failed: {e}")
                });
                continue;
            }
        };
        values.push((alpha, legendre.value));
        let variational = match minimize_entropy(t, alpha, cfg) {
            Ok(sol) => Some(sol),
            Err(Error::Infeasible { .. }) => None,
            Err(e) => {
                r.record("equivalence", Some(alpha), false, || {
                    format!("variational solver failed: {e}")
                });
                continue;
            }
        };
        let var_value = variational.as_ref().map_or(f64::INFINITY, |s| s.value);
        r.record(
            "equivalence",
            Some(alpha),
            close(legendre.value, var_value, VALUE_TOL),
            || format!("legendre {} vs variational {var_value}", legendre.value),
        );

        if let (Status::Interior, Some(sol)) = (legendre.status, &variational) {
            let s = solve_tilt(t, alpha, cfg).unwrap_or(f64::NAN);
            let ok =
                sol.converged && sol.kkt_residual <= KKT_TOL && (sol.s_hat - s).abs() <= TILT_TOL;
            r.record("kkt", Some(alpha), ok, || {
                format!(
                    "kkt residual {:e} (tol {KKT_TOL:e}), s_hat {} vs tilt {s}, converged {}",
                    sol.kkt_residual, sol.s_hat, sol.converged
                )
            });
        }

        match conjugate_by_grid(t, alpha) {
            Ok(g) => r.record(
                "oracle_grid",
                Some(alpha),
                close(g, legendre.value, GRID_TOL),
                || format!("grid conjugate {g} vs legendre {}", legendre.value),
            ),
            Err(e) => r.record("oracle_grid", Some(alpha), false, || {
                format!("grid conjugate failed: {e}")
            }),
        }

        if let Some(d) = &exact {
            if alpha > 0.0 && legendre.status == Status::Interior {
                let tail = tail_probability(d, alpha);
                let bound = (-legendre.value).exp();
                r.record("chernoff", Some(alpha), tail <= bound, || {
                    format!("tail {tail} exceeds exp(-rate) = {bound}")
                });
            }
        }

        if let Ok(mirror) = cramer_transform(t, -alpha, cfg) {
            let ok = close(
                legendre.value,
                mirror.value,
                1e-12 * legendre.value.abs().max(1.0),
            );
            r.record("symmetry", Some(alpha), ok, || {
                format!(
                    "rate({alpha}) = {} but rate({}) = {}",
                    legendre.value, -alpha, mirror.value
                )
            });
        }
    }

    // Midpoint convexity on neighbouring finite values.
    let finite: Vec<(f64, f64)> = values
        .iter()
        .copied()
        .filter(|(_, v)| v.is_finite())
        .collect();
    for w in finite.windows(2) {
        let ((a, fa), (b, fb)) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if let Ok(p) = cramer_transform(t, mid, cfg) {
            let chord = 0.5 * (fa + fb);
            r.record(
                "convexity",
                Some(mid),
                p.value <= chord + 1e-9 * chord.max(1.0),
                || format!("rate at midpoint {} exceeds chord {chord}", p.value),
            );
        }
    }

    if t.len() <= MGF_MAX_N {
        if let Some(d) = &exact {
            for k in 0..11 {
                let s = -2.0 + 0.4 * k as f64;
                let c = cgf(t, s).unwrap_or(f64::NAN);
                let m = d.log_mgf(s);
                r.record("oracle_mgf", None, (m - c).abs() <= MGF_TOL, || {
                    format!("s = {s}: exact log-MGF {m} vs cgf {c}")
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance as u64);
    let b: Vec<f64> = (0..t.len())
        .map(|_| rng.random_range(-0.99..0.99))
        .collect();
    let grad = psi1_star_grad(&DualVector::new(b.clone()).expect("inside box")).expect("interior");
    for i in 0..b.len() {
        let mut up = b.clone();
        let mut dn = b.clone();
        up[i] += FD_STEP;
        dn[i] -= FD_STEP;
        let fd = (psi1_star(&DualVector::new(up).expect("inside box"))
            - psi1_star(&DualVector::new(dn).expect("inside box")))
            / (2.0 * FD_STEP);
        let rel = (fd - grad[i]).abs() / grad[i].abs().max(1.0);
        r.record("gradient", None, rel <= GRAD_TOL, || {
            format!(
                "coordinate {i} of {b:?}: gradient {} vs difference {fd}",
                grad[i]
            )
        });
    }

    if t.is_degenerate() {
        for alpha in [0.0, 0.5, -1e-3] {
            let expect = if alpha == 0.0 { 0.0 } else { f64::INFINITY };
            let l = cramer_transform(t, alpha, cfg).map(|p| p.value);
            let v = match minimize_entropy(t, alpha, cfg) {
                Ok(s) => Ok(s.value),
                Err(Error::Infeasible { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            };
            let g = conjugate_by_grid(t, alpha);
            let ok = l == Ok(expect) && v == Ok(expect) && g == Ok(expect);
            r.record("degenerate", Some(alpha), ok, || {
                format!("expected {expect}: legendre {l:?}, variational {v:?}, grid {g:?}")
            });
        }
    } else {
        let l1 = t.l1_norm();
        let expect = t.nonzero_count() as f64 * LN_2;
        for edge in [l1, -l1] {
            let value = cramer_transform(t, edge, cfg)
                .map(|p| p.value)
                .unwrap_or(f64::NAN);
            let mut ok = (value - expect).abs() <= 1e-12;
            let mut mass_note = String::new();
            if let Some(d) = &exact {
                let mass = d.mass_at(edge, ENUMERATION_MERGE_TOL * l1.max(1.0));
                ok &= (value + mass.ln()).abs() <= 1e-12;
                mass_note = format!(", -ln P(X = {edge}) = {}", -mass.ln());
            }
            r.record("boundary", Some(edge), ok, || {
                format!("rate {value} vs m ln 2 = {expect}{mass_note}")
            });
        }
    }
    r.report
}

/// Runs [`check_instance`] over all instances in parallel; results are merged in order.
pub fn run_suite(
    instances: &[WeightVector],
    alphas_for: impl Fn(&WeightVector) -> Vec<f64> + Sync,
    cfg: &SolverConfig,
    seed: u64,
) -> SuiteReport {
    let parts: Vec<SuiteReport> = instances
        .par_iter()
        .enumerate()
        .map(|(i, t)| check_instance(t, &alphas_for(t), cfg, i, seed))
        .collect();
    let mut total = SuiteReport::default();
    for p in parts {
        total.merge(p);
    }
    total
}
