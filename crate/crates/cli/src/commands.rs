use std::io::Write;

use anyhow::{bail, Context, Result};
use cramer_core::ldp::{ChernoffRow, ConvergenceTable, TailMethod};
use cramer_core::{
    conjugate_by_grid, cramer_transform, exact_distribution, minimize_entropy, run_experiment,
    tail_probability, Error, ExperimentOptions, ExperimentReport, SamplingPlan, SolverConfig,
    Status, WeightVector,
};
use rayon::prelude::*;

use crate::input::{self, GridSpec};
use crate::render::{to_json, Cell, Table};
use crate::suite::{self, SuiteReport, CHECKS, GRID_TOL};
use crate::{Common, Format, LdpArgs, OracleArgs, VerifyArgs};

/// Largest `|legendre - variational|` accepted by `rate`.
const RATE_DIFF_TOL: f64 = 1e-6;
const VERIFY_GRID: GridSpec = GridSpec {
    count: 21,
    coverage: 0.95,
};
const SHOWN_FAILURES: usize = 20;

fn solver_config(common: &Common) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    for item in &common.tols {
        let (name, value) = item
            .split_once('=')
            .with_context(|| format!("--tol expects NAME=VALUE, got `{item}`"))?;
        cfg.set(name.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn weights(common: &Common) -> Result<WeightVector> {
    match &common.weights {
        Some(spec) => input::read_weights(spec),
        None => bail!("--weights is required"),
    }
}

fn config_cell(cfg: &SolverConfig) -> Cell {
    Cell::map([
        ("root_tol", Cell::Num(cfg.root_tol)),
        ("max_newton_iters", Cell::Int(cfg.max_newton_iters as u64)),
        ("bracket_growth", Cell::Num(cfg.bracket_growth)),
        ("boundary_guard", Cell::Num(cfg.boundary_guard)),
        ("pg_step0", Cell::Num(cfg.pg_step0)),
        ("pg_shrink", Cell::Num(cfg.pg_shrink)),
        ("pg_tol", Cell::Num(cfg.pg_tol)),
        ("pg_max_iters", Cell::Int(cfg.pg_max_iters as u64)),
    ])
}

fn num_list(xs: &[f64]) -> Cell {
    Cell::List(xs.iter().map(|&x| Cell::Num(x)).collect())
}

/// The shared top-level report layout, followed by command-specific fields.
fn document(
    command: &str,
    t: Option<&WeightVector>,
    cfg: &SolverConfig,
    rows: Cell,
    suite_results: Cell,
    seed: u64,
    extra: Vec<(&str, Cell)>,
) -> Cell {
    let mut entries = vec![
        ("command", Cell::text(command)),
        ("weights", t.map_or(Cell::Empty, |t| num_list(t.as_slice()))),
        ("l1_norm", t.map_or(Cell::Empty, |t| Cell::Num(t.l1_norm()))),
        ("config", config_cell(cfg)),
        ("rows", rows),
        ("suite_results", suite_results),
        ("seed", Cell::Int(seed)),
        ("version", Cell::text(env!("CARGO_PKG_VERSION"))),
    ];
    entries.extend(extra);
    Cell::map(entries)
}

/// Writes `body` to `--out` or stdout.
fn write_output(common: &Common, body: &str) -> Result<()> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("cannot write `{}`", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn render(format: Format, csv: impl FnOnce() -> String, json: impl FnOnce() -> Cell) -> String {
    match format {
        Format::Csv => csv(),
        Format::Json => to_json(&json()),
    }
}

struct RateRow {
    alpha: f64,
    legendre: f64,
    variational: f64,
    tilt: Option<f64>,
    kkt_residual: Option<f64>,
    status: String,
    converged: bool,
}

impl RateRow {
    fn diff(&self) -> f64 {
        if self.legendre == self.variational {
            0.0
        } else {
            (self.legendre - self.variational).abs()
        }
    }

    fn ok(&self) -> bool {
        self.converged && self.diff() <= RATE_DIFF_TOL
    }
}

fn rate_row(t: &WeightVector, alpha: f64, cfg: &SolverConfig) -> RateRow {
    let mut row = RateRow {
        alpha,
        legendre: f64::NAN,
        variational: f64::NAN,
        tilt: None,
        kkt_residual: None,
        status: String::new(),
        converged: true,
    };
    match cramer_transform(t, alpha, cfg) {
        Ok(p) => {
            row.legendre = p.value;
            row.tilt = p.tilt;
            row.status = p.status.to_string();
        }
        Err(_) => {
            row.converged = false;
        }
    }
    match minimize_entropy(t, alpha, cfg) {
        Ok(sol) => {
            row.variational = sol.value;
            row.kkt_residual = Some(sol.kkt_residual);
            row.converged &= sol.converged;
        }
        Err(Error::Infeasible { .. }) => row.variational = f64::INFINITY,
        Err(_) => row.converged = false,
    }
    if !row.converged {
        row.status = "unconverged".into();
    }
    row
}

pub fn rate(common: &Common) -> Result<bool> {
    let t = weights(common)?;
    let cfg = solver_config(common)?;
    let alphas = input::alphas(&t, common.alpha_grid, &common.alphas, GridSpec::DEFAULT)?;
    let rows: Vec<RateRow> = alphas.par_iter().map(|&a| rate_row(&t, a, &cfg)).collect();

    let mut table = Table::new(&[
        "alpha",
        "legendre",
        "variational",
        "diff",
        "tilt",
        "kkt_residual",
        "status",
    ]);
    for r in &rows {
        table.push(vec![
            Cell::Num(r.alpha),
            Cell::Num(r.legendre),
            Cell::Num(r.variational),
            Cell::Num(r.diff()),
            Cell::opt(r.tilt),
            Cell::opt(r.kkt_residual),
            Cell::text(r.status.clone()),
        ]);
    }
    let ok = rows.iter().all(RateRow::ok);
    let max_diff = rows.iter().map(RateRow::diff).fold(0.0, f64::max);
    let body = render(
        common.format.unwrap_or(Format::Csv),
        || table.to_csv(),
        || {
            let summary = Cell::map([
                ("points", Cell::Int(rows.len() as u64)),
                ("max_diff", Cell::Num(max_diff)),
                (
                    "all_converged",
                    Cell::Bool(rows.iter().all(|r| r.converged)),
                ),
                ("passed", Cell::Bool(ok)),
            ]);
            document(
                "rate",
                Some(&t),
                &cfg,
                table.to_cell(),
                summary,
                common.seed,
                vec![],
            )
        },
    );
    write_output(common, &body)?;
    if !ok {
        let bad = rows.iter().filter(|r| !r.ok()).count();
        eprintln!(
            "{bad} of {} rows failed (diff above {RATE_DIFF_TOL:e} or no convergence)",
            rows.len()
        );
    }
    Ok(ok)
}

fn format_weights(w: &[f64]) -> String {
    w.iter()
        .map(|x| crate::render::format_num(*x))
        .collect::<Vec<_>>()
        .join(" ")
}

fn suite_summary(report: &SuiteReport, seed: u64) -> String {
    let mut s = format!("instances: {}, seed: {seed}\n", report.instances);
    for (name, (p, f)) in CHECKS.iter().zip(report.counts) {
        s.push_str(&format!("{name:<12} passed {p:>6}  failed {f:>6}\n"));
    }
    for f in report.failures.iter().take(SHOWN_FAILURES) {
        let alpha = f.alpha.map_or(String::new(), |a| {
            format!(" alpha={}", crate::render::format_num(a))
        });
        s.push_str(&format!(
            "FAIL {} instance={}{alpha}: {}\n",
            f.check, f.instance, f.detail
        ));
        let replay_alpha = f.alpha.map_or(String::new(), |a| {
            format!(" --alpha={}", crate::render::format_num(a))
        });
        s.push_str(&format!(
            "  replay: cramer verify --weights \"{}\"{replay_alpha} --seed {seed}\n",
            format_weights(&f.weights)
        ));
    }
    if report.failures.len() > SHOWN_FAILURES {
        s.push_str(&format!(
            "... {} more failures\n",
            report.failures.len() - SHOWN_FAILURES
        ));
    }
    let (p, f) = report.total();
    if report.passed() {
        s.push_str(&format!("all checks passed ({p} checks)\n"));
    } else {
        s.push_str(&format!("{f} of {} checks failed\n", p + f));
    }
    s
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    let common = &args.common;
    let cfg = solver_config(common)?;
    let (instances, single) = match &common.weights {
        Some(spec) => (vec![input::read_weights(spec)?], true),
        None => (suite::random_instances(common.seed, args.instances), false),
    };
    let grid = if single && !common.alphas.is_empty() {
        common.alpha_grid
    } else {
        Some(common.alpha_grid.unwrap_or(VERIFY_GRID))
    };
    // Validate explicit alphas once up front.
    input::alphas(&instances[0], grid, &common.alphas, VERIFY_GRID)?;
    let report = suite::run_suite(
        &instances,
        |t| input::alphas(t, grid, &common.alphas, VERIFY_GRID).expect("validated"),
        &cfg,
        common.seed,
    );

    let summary = suite_summary(&report, common.seed);
    let format = common.format.or(common.out.as_ref().map(|_| Format::Json));
    match format {
        None => print!("{summary}"),
        Some(format) => {
            let mut table = Table::new(&["check", "instance", "alpha", "weights", "detail"]);
            for f in &report.failures {
                table.push(vec![
                    Cell::text(f.check),
                    Cell::Int(f.instance as u64),
                    Cell::opt(f.alpha),
                    Cell::text(format_weights(&f.weights)),
                    Cell::text(f.detail.clone()),
                ]);
            }
            let body = render(
                format,
                || table.to_csv(),
                || {
                    let (p, f) = report.total();
                    let mut entries: Vec<(String, Cell)> = CHECKS
                        .iter()
                        .zip(report.counts)
                        .map(|(name, (p, f))| {
                            (
                                name.to_string(),
                                Cell::map([("passed", Cell::Int(p)), ("failed", Cell::Int(f))]),
                            )
                        })
                        .collect();
                    entries.push(("instances".into(), Cell::Int(report.instances as u64)));
                    entries.push(("total_passed".into(), Cell::Int(p)));
                    entries.push(("total_failed".into(), Cell::Int(f)));
                    entries.push(("passed".into(), Cell::Bool(report.passed())));
                    document(
                        "verify",
                        single.then(|| &instances[0]),
                        &cfg,
                        table.to_cell(),
                        Cell::Map(entries),
                        common.seed,
                        vec![],
                    )
                },
            );
            write_output(common, &body)?;
            if common.out.is_some() {
                print!("{summary}");
            } else {
                eprint!("{summary}");
            }
        }
    }
    Ok(report.passed())
}

fn chernoff_table(rows: &[ChernoffRow]) -> Table {
    let mut table = Table::new(&[
        "alpha",
        "rate_value",
        "status",
        "tilt",
        "exact_tail",
        "mc_estimate",
        "ci_lo",
        "ci_hi",
        "ci_half_width",
        "bound",
        "chernoff_ok",
    ]);
    for r in rows {
        let mc = r.mc.as_ref();
        table.push(vec![
            Cell::Num(r.alpha),
            Cell::Num(r.rate_value),
            Cell::text(r.status.as_str()),
            Cell::opt(r.tilt),
            Cell::opt(r.exact_tail),
            Cell::opt(mc.map(|m| m.estimate)),
            Cell::opt(mc.map(|m| m.ci_lo)),
            Cell::opt(mc.map(|m| m.ci_hi)),
            Cell::opt(mc.map(|m| m.half_width())),
            Cell::Num(r.bound),
            Cell::Bool(r.chernoff_ok),
        ]);
    }
    table
}

fn convergence_table(tables: &[ConvergenceTable]) -> Table {
    let mut table = Table::new(&[
        "alpha",
        "n",
        "prob",
        "g_n",
        "gap",
        "rate_value",
        "method",
        "ci_lo",
        "ci_hi",
    ]);
    for c in tables {
        for r in &c.rows {
            let (method, lo, hi) = match r.method {
                TailMethod::Exact => ("exact", None, None),
                TailMethod::MonteCarlo { ci_lo, ci_hi, .. } => {
                    ("monte_carlo", Some(ci_lo), Some(ci_hi))
                }
            };
            table.push(vec![
                Cell::Num(c.alpha),
                Cell::Int(r.n as u64),
                Cell::Num(r.prob),
                Cell::Num(r.g_n),
                Cell::Num(r.gap),
                Cell::Num(c.rate_value),
                Cell::text(method),
                Cell::opt(lo),
                Cell::opt(hi),
            ]);
        }
    }
    table
}

fn ldp_document(report: &ExperimentReport, args: &LdpArgs, cfg: &SolverConfig, ok: bool) -> Cell {
    let summary = Cell::map([
        ("chernoff_ok", Cell::Bool(report.chernoff_ok())),
        ("gaps_decreasing", Cell::Bool(report.gaps_decreasing())),
        ("passed", Cell::Bool(ok)),
    ]);
    document(
        "ldp",
        Some(&report.t),
        cfg,
        chernoff_table(&report.chernoff).to_cell(),
        summary,
        report.seed,
        vec![
            (
                "convergence",
                convergence_table(&report.convergence).to_cell(),
            ),
            (
                "schedule",
                Cell::List(args.ns.iter().map(|&n| Cell::Int(n as u64)).collect()),
            ),
            ("monte_carlo", Cell::Bool(args.mc)),
            ("samples", Cell::Int(args.samples)),
            ("workers", Cell::Int(report.workers as u64)),
            ("max_support", Cell::Int(args.max_support as u64)),
            (
                "warnings",
                Cell::List(
                    report
                        .warnings
                        .iter()
                        .map(|w| Cell::text(w.clone()))
                        .collect(),
                ),
            ),
            ("timestamp", Cell::Int(report.timestamp)),
        ],
    )
}

pub fn ldp(args: &LdpArgs) -> Result<bool> {
    let common = &args.common;
    let t = weights(common)?;
    let cfg = solver_config(common)?;
    if args.workers == 0 || args.samples == 0 {
        bail!("--workers and --samples must be positive");
    }
    let alphas = input::alphas(&t, common.alpha_grid, &common.alphas, GridSpec::DEFAULT)?;
    let opts = ExperimentOptions {
        schedule: args.ns.clone(),
        max_support: args.max_support,
        monte_carlo: args.mc,
        plan: SamplingPlan {
            seed: common.seed,
            samples: args.samples,
            workers: args.workers,
        },
    };
    let report = run_experiment(&t, &alphas, &cfg, &opts)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let ok = report.chernoff_ok() && report.gaps_decreasing();
    let body = render(
        common.format.unwrap_or(Format::Json),
        || {
            let mut s = chernoff_table(&report.chernoff).to_csv();
            s.push('\n');
            s.push_str(&convergence_table(&report.convergence).to_csv());
            s
        },
        || ldp_document(&report, args, &cfg, ok),
    );
    write_output(common, &body)?;
    if !ok {
        eprintln!(
            "ldp checks failed: chernoff_ok = {}, gaps_decreasing = {}",
            report.chernoff_ok(),
            report.gaps_decreasing()
        );
    }
    Ok(ok)
}

pub fn oracle(args: &OracleArgs) -> Result<bool> {
    let common = &args.common;
    let t = weights(common)?;
    let cfg = solver_config(common)?;
    let dist = exact_distribution(&t)?;

    if args.distribution {
        let mut table = Table::new(&["x", "probability"]);
        for (x, p) in dist.support().iter().zip(dist.probs()) {
            table.push(vec![Cell::Num(*x), Cell::Num(*p)]);
        }
        let body = render(
            common.format.unwrap_or(Format::Csv),
            || table.to_csv(),
            || {
                let summary = Cell::map([
                    ("support_size", Cell::Int(dist.len() as u64)),
                    ("total_mass", Cell::Num(dist.total_mass())),
                    ("mean", Cell::Num(dist.mean())),
                    ("variance", Cell::Num(dist.variance())),
                ]);
                document(
                    "oracle",
                    Some(&t),
                    &cfg,
                    table.to_cell(),
                    summary,
                    common.seed,
                    vec![],
                )
            },
        );
        write_output(common, &body)?;
        return Ok(true);
    }

    let alphas = input::alphas(&t, common.alpha_grid, &common.alphas, GridSpec::DEFAULT)?;
    let mut table = Table::new(&[
        "alpha",
        "exact_tail",
        "bound",
        "legendre",
        "grid_conjugate",
        "diff",
    ]);
    let mut max_diff: f64 = 0.0;
    let mut chernoff_ok = true;
    for &alpha in &alphas {
        let p = cramer_transform(&t, alpha, &cfg)?;
        let grid = conjugate_by_grid(&t, alpha)?;
        let diff = if grid == p.value {
            0.0
        } else {
            (grid - p.value).abs()
        };
        let tail = tail_probability(&dist, alpha);
        let bound = (-p.value).exp();
        if alpha > 0.0 && p.status == Status::Interior {
            chernoff_ok &= tail <= bound;
        }
        max_diff = max_diff.max(diff);
        table.push(vec![
            Cell::Num(alpha),
            Cell::Num(tail),
            Cell::Num(bound),
            Cell::Num(p.value),
            Cell::Num(grid),
            Cell::Num(diff),
        ]);
    }
    let ok = chernoff_ok && max_diff <= GRID_TOL;
    let body = render(
        common.format.unwrap_or(Format::Csv),
        || table.to_csv(),
        || {
            let summary = Cell::map([
                ("support_size", Cell::Int(dist.len() as u64)),
                ("max_diff", Cell::Num(max_diff)),
                ("chernoff_ok", Cell::Bool(chernoff_ok)),
                ("passed", Cell::Bool(ok)),
            ]);
            document(
                "oracle",
                Some(&t),
                &cfg,
                table.to_cell(),
                summary,
                common.seed,
                vec![],
            )
        },
    );
    write_output(common, &body)?;
    if !ok {
        eprintln!("oracle checks failed: max diff {max_diff:e}, chernoff_ok = {chernoff_ok}");
    }
    Ok(ok)
}
