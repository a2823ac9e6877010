//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Run with `cargo test -p cramer-core --test acceptance`.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::Instant;

use cramer_core::oracle::ENUMERATION_MERGE_TOL;
use cramer_core::{
    cgf, conjugate_by_grid, cramer_transform, entropy_f, exact_distribution, minimize_entropy,
    psi1_star, psi1_star_grad, rate_convergence, solve_tilt, tail_probability, DualVector, Error,
    SolverConfig, Status, WeightVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_261_019;
const INSTANCES: usize = 100;
const GRID_POINTS: usize = 21;
const COVERAGE: f64 = 0.95;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    let w = (0..n)
        .map(|_| {
            let m = rng.random_range(0.1..=2.0);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    WeightVector::new(w).unwrap()
}

fn instances() -> Vec<WeightVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..INSTANCES)
        .map(|_| {
            let n = rng.random_range(1..=10);
            random_weights(&mut rng, n)
        })
        .collect()
}

fn grid(t: &WeightVector) -> Vec<f64> {
    let half = COVERAGE * t.l1_norm();
    let step = 2.0 * half / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS)
        .map(|k| {
            if 2 * k == GRID_POINTS - 1 {
                0.0
            } else {
                -half + k as f64 * step
            }
        })
        .collect()
}

/// Criteria 1 and 3 share one pass over the instances.
fn equivalence_and_kkt(ts: &[WeightVector]) -> (Outcome, Outcome) {
    let cfg = SolverConfig::default();
    let mut max_diff: f64 = 0.0;
    let mut max_tilt: f64 = 0.0;
    let mut max_kkt: f64 = 0.0;
    let mut failures = 0;
    let mut points = 0;
    let start = Instant::now();
    for t in ts {
        for alpha in grid(t) {
            points += 1;
            let legendre = cramer_transform(t, alpha, &cfg);
            let sol = minimize_entropy(t, alpha, &cfg);
            let (Ok(legendre), Ok(sol)) = (legendre, sol) else {
                failures += 1;
                continue;
            };
            if !sol.converged {
                failures += 1;
            }
            max_diff = max_diff.max((legendre.value - sol.value).abs());
            if legendre.status == Status::Interior {
                let s = solve_tilt(t, alpha, &cfg).unwrap();
                max_tilt = max_tilt.max((sol.s_hat - s).abs());
                max_kkt = max_kkt.max(sol.kkt_residual);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let c1 = outcome(
        failures == 0 && max_diff <= 1e-7 && secs < 10.0,
        format!(
            "{points} points over {} instances: max |legendre - variational| = {max_diff:.3e} (tol 1e-7), \
             {failures} solver failures, {secs:.2} s (limit 10 s)",
            ts.len()
        ),
    );
    let c3 = outcome(
        failures == 0 && max_tilt <= 1e-6 && max_kkt <= 1e-8,
        format!("max |s_hat - s| = {max_tilt:.3e} (tol 1e-6), max KKT residual = {max_kkt:.3e} (tol 1e-8)"),
    );
    (c1, c3)
}

fn closed_forms() -> Outcome {
    let cfg = SolverConfig::default();
    let cases: [(&[f64], f64, f64); 3] = [
        (&[1.0], 0.5, 0.130812),
        (&[1.0, 1.0], 1.0, 0.261624),
        (&[0.5, 0.5], 0.6, 0.385490),
    ];
    let mut worst: f64 = 0.0;
    for (w, alpha, expect) in cases {
        let t = WeightVector::new(w.to_vec()).unwrap();
        let a = cramer_transform(&t, alpha, &cfg).unwrap().value;
        let b = minimize_entropy(&t, alpha, &cfg).unwrap().value;
        worst = worst.max((a - expect).abs()).max((b - expect).abs());
    }
    outcome(
        worst <= 1e-6,
        format!("3 closed-form values, max error {worst:.3e} (tol 1e-6)"),
    )
}

fn oracle_equivalence(ts: &[WeightVector]) -> Outcome {
    let cfg = SolverConfig::default();
    let mut grid_diff: f64 = 0.0;
    let mut mgf_diff: f64 = 0.0;
    let mut checked = 0;
    for t in ts {
        for alpha in grid(t) {
            let a = cramer_transform(t, alpha, &cfg).unwrap().value;
            grid_diff = grid_diff.max((conjugate_by_grid(t, alpha).unwrap() - a).abs());
        }
        if t.len() <= 16 {
            checked += 1;
            let d = exact_distribution(t).unwrap();
            for k in 0..11 {
                let s = -2.0 + 0.4 * k as f64;
                mgf_diff = mgf_diff.max((d.log_mgf(s) - cgf(t, s).unwrap()).abs());
            }
        }
    }
    outcome(
        grid_diff <= 1e-6 && mgf_diff <= 1e-10,
        format!(
            "max |grid - legendre| = {grid_diff:.3e} (tol 1e-6); exact log-MGF vs cgf on {checked} instances x 11 s: \
             {mgf_diff:.3e} (tol 1e-10)"
        ),
    )
}

fn chernoff(ts: &[WeightVector]) -> Outcome {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    let mut violations = 0;
    for t in ts.iter().filter(|t| t.len() <= 16) {
        let d = exact_distribution(t).unwrap();
        for alpha in grid(t).into_iter().filter(|&a| a > 0.0) {
            checked += 1;
            let rate = cramer_transform(t, alpha, &cfg).unwrap().value;
            if tail_probability(&d, alpha) > (-rate).exp() {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{checked} (instance, alpha) pairs, {violations} violations"),
    )
}

fn convergence() -> Outcome {
    let cfg = SolverConfig::default();
    let t = WeightVector::new(vec![0.5, 0.5]).unwrap();
    let table = rate_convergence(&t, 0.6, &[10, 100, 1000], &cfg, &Default::default()).unwrap();
    let gaps: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("N={}: {:.4e}", r.n, r.gap))
        .collect();
    let final_gap = table.final_gap().unwrap();
    outcome(
        table.chernoff_holds() && table.gaps_decreasing() && final_gap < 0.05,
        format!(
            "gaps {} (decreasing, final < 0.05, g_N >= rate)",
            gaps.join(", ")
        ),
    )
}

fn inequalities() -> Outcome {
    let points = 10_000;
    let worst_f = (0..points)
        .map(|k| {
            let x = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
            entropy_f(x) - x * x
        })
        .fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut cgf_violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let t = random_weights(&mut rng, n);
        let s = rng.random_range(-50.0..50.0);
        if cgf(&t, s).unwrap().abs() > s.abs() * t.l1_norm() {
            cgf_violations += 1;
        }
    }
    let ends = entropy_f(1.0) == 2.0 * LN_2 && entropy_f(-1.0) == 2.0 * LN_2;
    outcome(
        worst_f >= -1e-15 && cgf_violations == 0 && ends,
        format!(
            "min f(x) - x^2 on 10^4 grid = {worst_f:.3e} (bound -1e-15); |cgf| <= |s| l1 violations: \
             {cgf_violations}/1000; f(+-1) = 2 ln 2 exactly: {ends}"
        ),
    )
}

fn gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-0.99..0.99)).collect();
        let grad = psi1_star_grad(&DualVector::new(b.clone()).unwrap()).unwrap();
        for i in 0..n {
            let mut up = b.clone();
            let mut dn = b.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (psi1_star(&DualVector::new(up).unwrap())
                - psi1_star(&DualVector::new(dn).unwrap()))
                / (2.0 * h);
            worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
        }
    }
    outcome(
        worst <= 1e-6,
        format!(
            "100 random interior points, max relative error {worst:.3e} (tol 1e-6, unit floor)"
        ),
    )
}

fn boundary_and_degenerate(ts: &[WeightVector]) -> Outcome {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for t in ts {
        let d = exact_distribution(t).unwrap();
        if d.len() != 1 << t.len() {
            continue;
        }
        checked += 1;
        let l1 = t.l1_norm();
        for edge in [l1, -l1] {
            let rate = cramer_transform(t, edge, &cfg).unwrap();
            let mass = d.mass_at(edge, ENUMERATION_MERGE_TOL * l1.max(1.0));
            let expect = t.len() as f64 * LN_2;
            worst = worst
                .max((rate.value - expect).abs())
                .max((rate.value + mass.ln()).abs());
        }
    }

    let zero = WeightVector::new(vec![0.0, 0.0]).unwrap();
    let at_zero = cramer_transform(&zero, 0.0, &cfg).unwrap().value == 0.0
        && minimize_entropy(&zero, 0.0, &cfg).unwrap().value == 0.0
        && conjugate_by_grid(&zero, 0.0).unwrap() == 0.0;
    let off_zero = [0.5, -1e-3].into_iter().all(|a| {
        cramer_transform(&zero, a, &cfg).unwrap().value == f64::INFINITY
            && matches!(
                minimize_entropy(&zero, a, &cfg),
                Err(Error::Infeasible { .. })
            )
            && conjugate_by_grid(&zero, a).unwrap() == f64::INFINITY
    });
    outcome(
        checked > 0 && worst <= 1e-12 && at_zero && off_zero,
        format!(
            "{checked} distinct-sum instances, max |rate(+-l1) - m ln 2|, |rate + ln P(X = +-l1)| = {worst:.3e}; \
             zero weights give indicator of {{0}}: {}",
            at_zero && off_zero
        ),
    )
}

fn brute_force_pairs() -> Outcome {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut worst: f64 = 0.0;
    let mut undershoot = false;
    for _ in 0..20 {
        let t = random_weights(&mut rng, 2);
        let alpha = rng.random_range(-COVERAGE..COVERAGE) * t.l1_norm();
        let solver = minimize_entropy(&t, alpha, &cfg).unwrap().value;
        let [t1, t2] = [t.as_slice()[0], t.as_slice()[1]];
        let mut best = f64::INFINITY;
        for k in 0..=2000 {
            let b1 = -1.0 + k as f64 * 1e-3;
            let b2 = (alpha - t1 * b1) / t2;
            if b2.abs() <= 1.0 {
                best = best.min(0.5 * (entropy_f(b1) + entropy_f(b2)));
            }
        }
        undershoot |= best < solver - 1e-12;
        worst = worst.max(best - solver);
    }
    outcome(
        !undershoot && worst <= 1e-3,
        format!("20 random (t, alpha), sweep minimum - solver value <= {worst:.3e} (tol 1e-3), never below solver"),
    )
}

fn main() -> ExitCode {
    let ts = instances();
    println!("acceptance suite, instance seed {SEED}");
    let (c1, c3) = equivalence_and_kkt(&ts);
    let results = [
        ("solver equivalence", c1),
        ("closed-form values", closed_forms()),
        ("tilt and KKT agreement", c3),
        ("oracle equivalence", oracle_equivalence(&ts)),
        ("Chernoff domination", chernoff(&ts)),
        ("rate convergence", convergence()),
        ("inequalities", inequalities()),
        ("gradient check", gradient()),
        ("boundary and degenerate", boundary_and_degenerate(&ts)),
        ("two-weight brute force", brute_force_pairs()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
