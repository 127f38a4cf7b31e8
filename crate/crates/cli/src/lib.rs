//! `relkin`: runs the numerical experiments and writes CSV and JSON reports.
//!
//! Exit codes: 0 pass, 1 failed check or failed solve, 2 bad config, I/O
//! error or `c <= c0`, 3 inconclusive (fit residual too large or
//! resolution-limited).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use relkin_core::csv::fmt_f64;
use relkin_core::distributions::{juttner_init, maxwellian_init, summary_row, write_snapshot, SUMMARY_HEADER};
use relkin_core::dynamics::Dynamics;
use relkin_core::harness::{
    conservation_check, detailed_balance_study, equilibrium_stationarity, kernel_check, newtonian_limit_experiment,
    verify_involution_measure, verify_lemma1, BalanceStudy, Equation, InvolutionStudy, LimitStatus, RateFit,
    SchemeCheck, SweepConfig,
};
use relkin_core::kinematics::LightSpeed;
use relkin_core::solver::Solver;
use relkin_core::Error;
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "relkin", version, about = "Relativistic and hard-sphere Boltzmann experiments")]
struct Cli {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; outputs are identical for any fixed count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Conservation of momentum and energy over random collisions.
    KinematicsCheck,
    /// Symmetries and invariance of the collision kernels.
    KernelCheck,
    /// Rates of the post-collision and kernel gaps in c, and uniformity of the loss rate.
    Lemma1,
    /// Measure preservation of the collision map under quadrature refinement.
    Involution,
    /// Collision operator at equilibrium against the interpolation tolerance.
    DetailedBalance,
    /// Solves from exact equilibria and measures the drift.
    Stationarity,
    /// One Kaniel-Shinbrot solve.
    Solve {
        /// Light speed, overriding `[solve] c`.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_enum)]
        equation: Option<EquationArg>,
    },
    /// Distance between relativistic and hard-sphere solutions along the c-sweep.
    LimitSweep,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EquationArg {
    Relativistic,
    Classical,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KinematicsCheck => "kinematics-check",
            Command::KernelCheck => "kernel-check",
            Command::Lemma1 => "lemma1",
            Command::Involution => "involution",
            Command::DetailedBalance => "detailed-balance",
            Command::Stationarity => "stationarity",
            Command::Solve { .. } => "solve",
            Command::LimitSweep => "limit-sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn from_checks(inconclusive: bool, pass: bool) -> Self {
        if inconclusive {
            Verdict::Inconclusive
        } else if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

struct Outcome {
    verdict: Verdict,
    summary: String,
}

#[derive(Debug)]
enum CliError {
    /// Config, I/O and threshold problems: exit 2.
    Setup(String),
    /// Failed solves and other numerical errors: exit 1.
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::BelowThreshold { .. } | Error::InvalidParameter(_) => {
                CliError::Setup(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Setup(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Setup(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Setup(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let name = cli.command.name();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::Setup(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(o) => {
            println!("{} {name}: {}", o.verdict.label(), o.summary);
            o.verdict.code()
        }
        Err(CliError::Setup(msg)) => {
            eprintln!("relkin {name}: error: {msg}");
            2
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("relkin {name}: error: {msg}");
            println!("FAIL {name}: {msg}");
            1
        }
    }
}

fn execute(cli: &Cli) -> CliResult<Outcome> {
    let config = match &cli.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    fs::create_dir_all(&out)?;
    let ctx = Ctx { config, out, command: cli.command.name() };
    let result = match &cli.command {
        Command::KinematicsCheck => kinematics(&ctx),
        Command::KernelCheck => kernels(&ctx),
        Command::Lemma1 => lemma1(&ctx),
        Command::Involution => involution(&ctx),
        Command::DetailedBalance => balance(&ctx),
        Command::Stationarity => stationarity(&ctx),
        Command::Solve { c, equation } => solve(&ctx, *c, *equation),
        Command::LimitSweep => limit(&ctx),
    };
    if let Err(CliError::Numerical(msg)) = &result {
        ctx.report("error", &json!({ "error": msg }))?;
    }
    result
}

struct Ctx {
    config: SweepConfig,
    out: PathBuf,
    command: &'static str,
}

impl Ctx {
    fn csv(&self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
        write_csv(&self.out.join(name), header, rows)
    }

    fn report(&self, status: &str, result: &impl Serialize) -> CliResult<()> {
        let doc = json!({
            "command": self.command,
            "status": status,
            "config": self.config,
            "result": result,
        });
        fs::write(self.out.join("report.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }

    fn finish(&self, verdict: Verdict, result: &impl Serialize, summary: String) -> CliResult<Outcome> {
        let status = match verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        };
        self.report(status, result)?;
        Ok(Outcome { verdict, summary })
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn kinematics(ctx: &Ctx) -> CliResult<Outcome> {
    let s = &ctx.config.sweep;
    let r = conservation_check(s.seed, s.conservation_samples, s.sample_radius, s.conservation_c)?;
    let n = r.samples.to_string();
    ctx.csv(
        "kinematics.csv",
        &["quantity", "max_error", "tolerance", "samples", "units"],
        vec![
            vec!["momentum".into(), f(r.momentum_error), f(1e-13), n.clone(), "absolute per component".into()],
            vec!["energy".into(), f(r.energy_error), f(1e-12), n.clone(), "relative".into()],
            vec!["kinetic_energy".into(), f(r.kinetic_error), f(1e-12), n, "relative".into()],
        ],
    )?;
    let summary = format!(
        "{} samples, momentum {:.2e}, energy {:.2e}, kinetic {:.2e}",
        r.samples, r.momentum_error, r.energy_error, r.kinetic_error
    );
    ctx.finish(Verdict::from_checks(false, r.passes()), &r, summary)
}

fn kernels(ctx: &Ctx) -> CliResult<Outcome> {
    let r = kernel_check(&ctx.config)?;
    let row = |q: &str, v: f64, tol: f64, units: &str| vec![q.into(), f(v), f(tol), units.into()];
    ctx.csv(
        "kernel.csv",
        &["quantity", "value", "tolerance", "units"],
        vec![
            row("min_kernel", r.min_kernel, 0.0, "momentum (lower bound)"),
            row("exchange_defect", r.exchange_defect, 1e-12, "relative"),
            row("invariant_defect", r.invariant_defect, 1e-10, "relative"),
            row("classical_involution_defect", r.classical_involution_defect, 1e-12, "relative"),
            row("reflection_defect", r.reflection_defect, 1e-12, "relative"),
        ],
    )?;
    let summary = format!(
        "{} samples, min kernel {:.2e}, exchange {:.2e}, invariant {:.2e}",
        r.samples, r.min_kernel, r.exchange_defect, r.invariant_defect
    );
    ctx.finish(Verdict::from_checks(false, r.passes()), &r, summary)
}

fn fit_row(estimate: &str, fit: &RateFit, bound_const: f64, units: &str) -> Vec<String> {
    vec![
        estimate.into(),
        f(fit.slope),
        f(fit.intercept),
        f(fit.residual),
        fit.points.len().to_string(),
        f(bound_const),
        units.into(),
    ]
}

fn lemma1(ctx: &Ctx) -> CliResult<Outcome> {
    let r = verify_lemma1(&ctx.config)?;
    let rows = r
        .points
        .iter()
        .map(|p| vec![p.estimate.name().into(), f(p.c), f(p.max_gap), f(p.bound_const), p.estimate.units().into()])
        .collect();
    ctx.csv("lemma1.csv", &["estimate", "c", "max_gap", "bound_const", "units"], rows)?;
    let bound = |name: &str| r.points.iter().find(|p| p.estimate.name() == name).map_or(f64::NAN, |p| p.bound_const);
    ctx.csv(
        "lemma1_fits.csv",
        &["estimate", "slope", "intercept", "residual", "points", "bound_const", "units"],
        vec![
            fit_row("post_collision_gap", &r.post_collision_fit, bound("post_collision_gap"), "log-log slope in c"),
            fit_row("kernel_gap", &r.kernel_fit, bound("kernel_gap"), "log-log slope in c"),
            fit_row("loss_rate", &r.loss_fit, r.loss_constant, "log-log slope in c"),
        ],
    )?;
    let summary = format!(
        "slopes {:.3} (residual {:.3}) and {:.3} (residual {:.3}), loss constant {:.4} varies {:.1}%{}",
        r.post_collision_fit.slope,
        r.post_collision_fit.residual,
        r.kernel_fit.slope,
        r.kernel_fit.residual,
        r.loss_constant,
        100.0 * r.loss_variation,
        if r.fits_conclusive() { "" } else { ", fit residual above threshold" }
    );
    ctx.finish(Verdict::from_checks(!r.fits_conclusive(), r.passes()), &r, summary)
}

fn involution(ctx: &Ctx) -> CliResult<Outcome> {
    let r = verify_involution_measure(&ctx.config)?;
    let mut rows = Vec::new();
    for s in [&r.relativistic, &r.classical] {
        involution_rows(s, &mut rows);
    }
    ctx.csv(
        "involution.csv",
        &["equation", "c", "test_function", "n_p", "n_theta", "n_phi", "h", "direct", "swapped", "discrepancy", "units"],
        rows,
    )?;
    let summary = format!(
        "refinement ratio {:.1} (relativistic), {:.1} (classical); invariant discrepancy {:.1e}",
        r.relativistic.ratio,
        r.classical.ratio,
        r.relativistic.invariant_discrepancy.max(r.classical.invariant_discrepancy)
    );
    ctx.finish(Verdict::from_checks(false, r.passes()), &r, summary)
}

fn involution_rows(s: &InvolutionStudy, rows: &mut Vec<Vec<String>>) {
    for l in &s.levels {
        rows.push(vec![
            s.equation.into(),
            opt(s.c),
            "bumps".into(),
            l.n_p.to_string(),
            l.n_theta.to_string(),
            l.n_phi.to_string(),
            f(l.h),
            f(l.direct),
            f(l.swapped),
            f(l.discrepancy),
            "integral over (p, q, omega)".into(),
        ]);
    }
    if let Some(l) = s.levels.first() {
        rows.push(vec![
            s.equation.into(),
            opt(s.c),
            "invariant".into(),
            l.n_p.to_string(),
            l.n_theta.to_string(),
            l.n_phi.to_string(),
            f(l.h),
            String::new(),
            String::new(),
            f(s.invariant_discrepancy),
            "integral over (p, q, omega)".into(),
        ]);
    }
}

fn balance(ctx: &Ctx) -> CliResult<Outcome> {
    let r = detailed_balance_study(&ctx.config)?;
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    for s in [&r.relativistic, &r.classical] {
        balance_rows(s, &mut rows, &mut orders);
    }
    ctx.csv("balance.csv", &["equation", "c", "n_p", "h", "defect", "tolerance", "worst_ratio", "units"], rows)?;
    ctx.csv("balance_orders.csv", &["equation", "quantity", "order", "residual", "units"], orders)?;
    let summary = format!(
        "defect order {:.2}/{:.2}, tolerance order {:.2}/{:.2} (relativistic/classical)",
        r.relativistic.defect_order.slope,
        r.classical.defect_order.slope,
        r.relativistic.tolerance_order.slope,
        r.classical.tolerance_order.slope
    );
    ctx.finish(Verdict::from_checks(false, r.passes()), &r, summary)
}

fn balance_rows(s: &BalanceStudy, rows: &mut Vec<Vec<String>>, orders: &mut Vec<Vec<String>>) {
    for l in &s.levels {
        rows.push(vec![
            s.equation.into(),
            opt(s.c),
            l.n_p.to_string(),
            f(l.h),
            f(l.defect),
            f(l.tolerance),
            f(l.worst_ratio),
            "norm_01".into(),
        ]);
    }
    for (q, fit) in [("defect", &s.defect_order), ("tolerance", &s.tolerance_order)] {
        orders.push(vec![s.equation.into(), q.into(), f(fit.slope), f(fit.residual), "log-log slope in h_p".into()]);
    }
}

fn stationarity(ctx: &Ctx) -> CliResult<Outcome> {
    let r = equilibrium_stationarity(&ctx.config)?;
    let rows = [&r.relativistic, &r.classical]
        .iter()
        .map(|s| {
            vec![
                s.equation.into(),
                opt(s.c),
                f(s.t_end),
                s.iterations.to_string(),
                f(s.deviation),
                f(s.tolerance),
                "norm_01".into(),
            ]
        })
        .collect();
    ctx.csv("stationarity.csv", &["equation", "c", "t_end", "iterations", "deviation", "tolerance", "units"], rows)?;
    let summary = format!(
        "deviation {:.2e} / {:.2e} against tolerance {:.2e} / {:.2e} (relativistic/classical)",
        r.relativistic.deviation, r.classical.deviation, r.relativistic.tolerance, r.classical.tolerance
    );
    ctx.finish(Verdict::from_checks(false, r.passes()), &r, summary)
}

fn solve(ctx: &Ctx, c: Option<f64>, equation: Option<EquationArg>) -> CliResult<Outcome> {
    let config = &ctx.config;
    let equation = match equation {
        Some(EquationArg::Relativistic) => Equation::Relativistic,
        Some(EquationArg::Classical) => Equation::Classical,
        None => config.solve.equation,
    };
    let grid = config.phase_grid()?;
    let quad = config.quadrature(grid.clone())?;
    let schedule = config.schedule_for(std::slice::from_ref(&quad), &config.sweep_dynamics()?)?;
    let s = &config.schedule;
    let (dynamics, f_in) = match equation {
        Equation::Relativistic => {
            let c = c.unwrap_or(config.solve.c);
            if !(c.is_finite() && c > schedule.c0()) {
                return Err(Error::BelowThreshold { c, c0: schedule.c0() }.into());
            }
            let c = LightSpeed::new(c)?;
            (Dynamics::Relativistic(c), juttner_init(grid.clone(), s.beta0, c, s.amplitude)?)
        }
        Equation::Classical => (Dynamics::Classical, maxwellian_init(grid.clone(), s.beta0 / 2.0, s.amplitude)?),
    };
    let solver = Solver::new(dynamics, &quad, schedule, config.solver_config(), f_in.is_axially_symmetric(1e-14))?;
    let report = solver.solve(&f_in)?;
    let check = SchemeCheck::of(&report);

    let mut rows = Vec::new();
    for snap in &report.solution {
        let mut row: Vec<String> = summary_row(snap).split(',').map(String::from).collect();
        row.push("norm_01 and values of f".into());
        rows.push(row);
    }
    let mut header: Vec<&str> = SUMMARY_HEADER.split(',').collect();
    header.push("units");
    ctx.csv("solve.csv", &header, rows)?;
    let g0 = report.gap_history.first().copied().unwrap_or(f64::NAN);
    let gaps = report
        .gap_history
        .iter()
        .enumerate()
        .map(|(n, g)| vec![n.to_string(), f(*g), f(g / g0), "norm_01 of u_n - l_n".into()])
        .collect();
    ctx.csv("solve_gaps.csv", &["iteration", "gap", "relative_gap", "units"], gaps)?;
    if let Some(last) = report.solution.last() {
        write_snapshot(std::io::BufWriter::new(fs::File::create(ctx.out.join("solution.rkg"))?), last)?;
    }

    let summary = format!(
        "{}{} to T = {:.4e}: {} iterations, contraction {:.3}, sandwich {:.1e}, mass drift {:.1e}",
        report.equation,
        report.c.map(|c| format!(" at c = {c}")).unwrap_or_default(),
        report.t_end,
        report.iterations,
        check.worst_contraction,
        check.sandwich_worst,
        report.conservation_drift
    );
    let verdict = Verdict::from_checks(false, check.passes());
    ctx.finish(verdict, &json!({ "solve": report, "scheme": check }), summary)
}

fn limit(ctx: &Ctx) -> CliResult<Outcome> {
    let r = newtonian_limit_experiment(&ctx.config)?;
    let rows = r
        .rows
        .iter()
        .map(|row| {
            vec![f(row.c), f(row.t), f(row.norm_gap), f(row.init_gap), f(row.resolution_est), "norm_01".into()]
        })
        .collect();
    ctx.csv("limit.csv", &["c", "t", "norm_gap", "init_gap", "resolution_est", "units"], rows)?;

    let checks: Vec<SchemeCheck> = r.relativistic.iter().chain([&r.classical]).map(SchemeCheck::of).collect();
    let solves = r
        .relativistic
        .iter()
        .chain([&r.classical])
        .zip(&checks)
        .map(|(rep, chk)| {
            vec![
                rep.equation.into(),
                opt(rep.c),
                rep.iterations.to_string(),
                f(chk.worst_contraction),
                chk.iterations_to_target.map(|n| n.to_string()).unwrap_or_default(),
                f(chk.sandwich_worst),
                opt(rep.beginning_margin),
                f(rep.conservation_drift),
                f(rep.envelope_margin),
                f(rep.out_of_grid_fraction),
                "ratios relative to max u0 or mass".into(),
            ]
        })
        .collect();
    ctx.csv(
        "limit_solves.csv",
        &[
            "equation",
            "c",
            "iterations",
            "worst_contraction",
            "iterations_to_1e-8",
            "sandwich_worst",
            "beginning_margin",
            "mass_drift",
            "envelope_margin",
            "out_of_grid_fraction",
            "units",
        ],
        solves,
    )?;

    let schemes_ok = checks.iter().all(SchemeCheck::passes);
    let init_rate_ok = r.init_gap_fit.as_ref().is_some_and(|f| f.slope <= -0.9);
    let trend_ok = r.status == LimitStatus::Pass && r.largest_c_gap_over_init <= 3.0;
    let verdict = match r.status {
        _ if !schemes_ok => Verdict::Fail,
        LimitStatus::ResolutionLimited => Verdict::Inconclusive,
        _ => Verdict::from_checks(false, trend_ok && init_rate_ok),
    };
    let summary = format!(
        "{}final/first {:.3e}, strictly decreasing {}, slope {}, resolution estimate {:.2e} vs threshold {:.2e}, c0 = {:.4}",
        if r.status == LimitStatus::ResolutionLimited { "resolution-limited: " } else { "" },
        r.final_over_first,
        r.strictly_decreasing,
        r.gap_fit.as_ref().map_or("n/a".into(), |f| format!("{:.3}", f.slope)),
        r.resolution.estimate,
        r.resolution.threshold,
        r.c0
    );
    ctx.finish(verdict, &json!({ "limit": r, "schemes": checks }), summary)
}
