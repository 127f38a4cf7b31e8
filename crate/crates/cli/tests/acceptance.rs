//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs the experiments in-process at the default configuration and the
//! `relkin` binary for exit codes and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use relkin_core::harness::{
    conservation_check, detailed_balance_study, equilibrium_stationarity, newtonian_limit_experiment,
    verify_involution_measure, verify_lemma1, LimitReport, LimitStatus, RateFit, SweepConfig,
};
use relkin_core::solver::SolveReport;

const CONSERVATION_SAMPLES: usize = 1_000_000;
const MOMENTUM_TOL: f64 = 1e-13;
const ENERGY_TOL: f64 = 1e-12;
const KINETIC_TOL: f64 = 1e-12;
const SLOPE: f64 = -2.0;
const SLOPE_TOL: f64 = 0.1;
const FIT_RESIDUAL: f64 = 0.05;
const LOSS_VARIATION: f64 = 0.2;
const REFINEMENT_GAIN: f64 = 3.0;
const ROUNDING: f64 = 1e-12;
const SECOND_ORDER: f64 = 1.8;
const SANDWICH_SLACK: f64 = 1e-12;
const CONTRACTION: f64 = 0.9;
const CONTRACTION_FROM: usize = 2;
const RELATIVE_TARGET: f64 = 1e-8;
const MAX_ITERATIONS: usize = 25;
const FINAL_OVER_FIRST: f64 = 0.2;
const LARGEST_C_OVER_INIT: f64 = 3.0;

struct Suite {
    failures: usize,
}

impl Suite {
    fn record(&mut self, id: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: String) {
        let ok = ok && elapsed <= limit;
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} [{:.1} s, limit {} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn slope_ok(fit: &RateFit) -> bool {
    (fit.slope - SLOPE).abs() <= SLOPE_TOL && fit.residual < FIT_RESIDUAL
}

/// Sandwich, contraction after warm-up and relative target, read off the
/// gap history directly.
fn scheme_ok(r: &SolveReport) -> (bool, f64, Option<usize>) {
    let h = &r.gap_history;
    let worst = h.windows(2).skip(CONTRACTION_FROM).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let reached = h.iter().position(|g| *g <= RELATIVE_TARGET * h[0]);
    let ok = r.converged
        && r.sandwich_worst <= SANDWICH_SLACK
        && worst <= CONTRACTION
        && reached.is_some_and(|n| n <= MAX_ITERATIONS);
    (ok, worst, reached)
}

fn all_solves(r: &LimitReport) -> Vec<&SolveReport> {
    r.relativistic.iter().chain([&r.classical]).collect()
}

fn scheme_summary(r: &LimitReport) -> (bool, String) {
    let checks: Vec<_> = all_solves(r).into_iter().map(scheme_ok).collect();
    let ok = checks.iter().all(|c| c.0);
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let slowest = checks.iter().filter_map(|c| c.2).max().unwrap_or(usize::MAX);
    let sandwich = all_solves(r).iter().map(|s| s.sandwich_worst).fold(0.0, f64::max);
    (ok, format!("{} solves, sandwich {sandwich:.1e}, contraction {worst:.3}, 1e-8 after {slowest} iterations", checks.len()))
}

fn relkin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_relkin")).args(args).output().expect("relkin binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map(|it| it.filter_map(|e| e.ok()).map(|e| e.path()).collect())
        .unwrap_or_else(|_| Vec::new());
    files.retain(|p: &PathBuf| p.extension().is_some_and(|e| e == "csv"));
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap_or_default()))
        .collect()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn main() {
    let scratch = std::env::temp_dir().join(format!("relkin-acceptance-{}", std::process::id()));
    fs::create_dir_all(&scratch).expect("scratch directory");
    let default_path = configs_dir().join("default.toml");
    let tiny_path = configs_dir().join("tiny.toml");
    let config = SweepConfig::load(&default_path).expect("default config loads");
    let tiny = SweepConfig::load(&tiny_path).expect("tiny config loads");
    let mut suite = Suite { failures: 0 };
    let s = &config.sweep;

    let (r, t) = timed(|| conservation_check(s.seed, CONSERVATION_SAMPLES, 10.0, [10.0, 1e4]).expect("conservation runs"));
    suite.record(
        1,
        "collision kinematics conserve momentum and energy",
        r.samples == CONSERVATION_SAMPLES
            && r.momentum_error <= MOMENTUM_TOL
            && r.energy_error <= ENERGY_TOL
            && r.kinetic_error <= KINETIC_TOL,
        t,
        Duration::from_secs(10),
        format!(
            "{} samples, momentum {:.1e}, energy {:.1e}, kinetic {:.1e}",
            r.samples, r.momentum_error, r.energy_error, r.kinetic_error
        ),
    );

    let (lemma, t) = timed(|| verify_lemma1(&config).expect("rate verifier runs"));
    let a = &lemma.post_collision_fit;
    suite.record(
        2,
        "post-collision gap decays like c^-2",
        slope_ok(a),
        t,
        Duration::from_secs(30),
        format!("slope {:.4}, residual {:.4}", a.slope, a.residual),
    );
    let b = &lemma.kernel_fit;
    suite.record(
        3,
        "kernel gap decays like c^-2",
        slope_ok(b),
        t,
        Duration::from_secs(30),
        format!("slope {:.4}, residual {:.4}", b.slope, b.residual),
    );
    let loss: Vec<f64> = lemma.points.iter().filter(|p| p.estimate.name() == "loss_rate").map(|p| p.max_gap).collect();
    let (lo, hi) = (loss.iter().copied().fold(f64::INFINITY, f64::min), loss.iter().copied().fold(0.0, f64::max));
    suite.record(
        4,
        "loss rate over (1+|p|) is uniform in c",
        loss.len() == config.c_values().len() && (hi - lo) / hi < LOSS_VARIATION,
        t,
        Duration::from_secs(120),
        format!("constants in [{lo:.4}, {hi:.4}], variation {:.2}%", 100.0 * (hi - lo) / hi),
    );

    let (inv, t) = timed(|| verify_involution_measure(&config).expect("involution study runs"));
    let gain = |levels: &[relkin_core::harness::InvolutionLevel]| levels[0].discrepancy.abs() / levels[1].discrepancy.abs();
    let (g_rel, g_cl) = (gain(&inv.relativistic.levels), gain(&inv.classical.levels));
    let invariant = inv.relativistic.invariant_discrepancy.max(inv.classical.invariant_discrepancy);
    suite.record(
        5,
        "collision map preserves K dq dp under refinement",
        g_rel >= REFINEMENT_GAIN && g_cl >= REFINEMENT_GAIN && invariant <= ROUNDING,
        t,
        Duration::from_secs(300),
        format!(
            "discrepancy shrinks {g_rel:.1}x (relativistic) and {g_cl:.1}x (classical), invariant function {invariant:.1e}"
        ),
    );

    let (bal, t) = timed(|| detailed_balance_study(&config).expect("balance study runs"));
    let mut ok = true;
    let mut detail = Vec::new();
    for st in [&bal.relativistic, &bal.classical] {
        let h: Vec<f64> = st.levels.iter().map(|l| l.h).collect();
        let tol: Vec<f64> = st.levels.iter().map(|l| l.tolerance).collect();
        let order = RateFit::fit(&h, &tol).expect("order fit").slope;
        ok &= st.levels.iter().all(|l| l.defect <= l.tolerance) && order >= SECOND_ORDER;
        let worst = st.levels.iter().map(|l| l.defect / l.tolerance).fold(0.0, f64::max);
        detail.push(format!("{}: defect/tolerance <= {worst:.3}, tolerance order {order:.2}", st.equation));
    }
    suite.record(6, "equilibria balance to quadrature tolerance", ok, t, Duration::from_secs(300), detail.join("; "));

    let (lim, t_default) = timed(|| newtonian_limit_experiment(&config).expect("default sweep runs"));
    let (lim_tiny, t_tiny) = timed(|| newtonian_limit_experiment(&tiny).expect("tiny sweep runs"));
    let (ok_d, d_default) = scheme_summary(&lim);
    let (ok_t, d_tiny) = scheme_summary(&lim_tiny);
    suite.record(
        7,
        "monotone sandwich and contraction on every shipped config",
        ok_d && ok_t && t_tiny <= Duration::from_secs(600),
        t_default,
        Duration::from_secs(600),
        format!("default: {d_default}; tiny: {d_tiny}"),
    );

    let above = lim.c_values.iter().all(|c| *c > lim.c0);
    let refuse = relkin(&[
        "solve",
        "--config",
        default_path.to_str().unwrap(),
        "--c",
        &format!("{}", 0.9 * lim.c0),
        "--out",
        scratch.join("below").to_str().unwrap(),
    ]);
    suite.record(
        8,
        "one existence time serves every c above c0",
        above && ok_d && lim.relativistic.iter().all(|r| r.t_end == lim.schedule.t) && refuse.0 == 2,
        t_default,
        Duration::from_secs(600),
        format!(
            "T = {:.4e} for c in [{:.1}, {:.0}], c0 = {:.4}; c = 0.9 c0 exits {}",
            lim.schedule.t,
            lim.c_values[0],
            lim.c_values[lim.c_values.len() - 1],
            lim.c0,
            refuse.0
        ),
    );

    let (st, t) = timed(|| equilibrium_stationarity(&config).expect("stationarity runs"));
    suite.record(
        9,
        "equilibria stay stationary",
        st.relativistic.deviation <= st.relativistic.tolerance && st.classical.deviation <= st.classical.tolerance,
        t,
        Duration::from_secs(600),
        format!(
            "deviation {:.2e} / {:.2e} against {:.2e} / {:.2e} (relativistic/classical)",
            st.relativistic.deviation, st.classical.deviation, st.relativistic.tolerance, st.classical.tolerance
        ),
    );

    // K/c measured at the first c bounds every initial gap of the sweep
    let k = lim.init_gaps[0] * lim.c_values[0];
    let init_ok = lim.init_gaps.iter().zip(&lim.c_values).all(|(g, c)| *g <= k / c * (1.0 + 1e-12));
    let decreasing = lim.final_gaps.windows(2).all(|w| w[1] < w[0]);
    let n = lim.final_gaps.len();
    let ratio = lim.final_gaps[n - 1] / lim.final_gaps[0];
    let over_init = lim.final_gaps[n - 1] / lim.init_gaps[n - 1];
    suite.record(
        10,
        "relativistic solutions approach the hard-sphere solution",
        init_ok
            && n == 6
            && decreasing
            && ratio < FINAL_OVER_FIRST
            && over_init <= LARGEST_C_OVER_INIT
            && !lim.resolution.limited
            && lim.status == LimitStatus::Pass,
        t_default,
        Duration::from_secs(1800),
        format!(
            "final/first {ratio:.3e}, strictly decreasing {decreasing}, largest-c gap {over_init:.3}x initial, \
             resolution estimate {:.2e} < {:.2e}, slope {:.3}",
            lim.resolution.estimate,
            lim.resolution.threshold,
            lim.gap_fit.as_ref().map_or(f64::NAN, |f| f.slope)
        ),
    );

    let runs: [(&str, &Path); 5] = [
        ("kinematics-check", &default_path),
        ("kernel-check", &default_path),
        ("lemma1", &default_path),
        ("solve", &tiny_path),
        ("limit-sweep", &tiny_path),
    ];
    let (mut same, mut files) = (true, 0);
    let (_, t) = timed(|| {
        for (cmd, cfg) in runs {
            let mut outputs = Vec::new();
            for rep in 0..2 {
                let dir = scratch.join(format!("{cmd}-{rep}"));
                relkin(&[cmd, "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", "2"]);
                outputs.push(csv_files(&dir));
            }
            files += outputs[0].len();
            same &= !outputs[0].is_empty() && outputs[0] == outputs[1];
        }
    });
    suite.record(
        11,
        "repeated runs give byte-identical CSVs",
        same,
        t,
        Duration::from_secs(600),
        format!("{files} CSV files across {} commands", runs.len()),
    );

    let missing = relkin(&["lemma1", "--config", scratch.join("absent.toml").to_str().unwrap()]);
    let lemma1_cli = relkin(&["lemma1", "--config", default_path.to_str().unwrap(), "--out", scratch.join("lemma1-cli").to_str().unwrap()]);
    let fit_rows = fs::read_to_string(scratch.join("lemma1-cli/lemma1_fits.csv")).map_or(0, |s| s.lines().count() - 1);
    let limited = relkin(&["limit-sweep", "--config", tiny_path.to_str().unwrap(), "--out", scratch.join("limited").to_str().unwrap()]);
    let cli_ok = missing.0 == 2
        && !missing.2.is_empty()
        && lemma1_cli.0 == 0
        && fit_rows == 3
        && limited.0 == 3
        && limited.1.contains("resolution-limited");
    println!(
        "{} CLI exit codes: missing config {}, lemma1 {} with {fit_rows} fit rows, tiny limit-sweep {}",
        if cli_ok { "PASS" } else { "FAIL" },
        missing.0,
        lemma1_cli.0,
        limited.0
    );
    if !cli_ok {
        suite.failures += 1;
    }

    let _ = fs::remove_dir_all(&scratch);
    if suite.failures > 0 {
        println!("{} check(s) failed", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria pass");
}
