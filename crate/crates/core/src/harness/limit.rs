use rayon::prelude::*;
use serde::Serialize;

use super::config::SweepConfig;
use super::fit::RateFit;
use crate::distributions::{juttner_init, maxwellian_init};
use crate::error::{Error, Result};
use crate::kinematics::LightSpeed;
use crate::solver::{solve_classical, solve_relativistic, Schedule, SolveReport};

/// `‖f_c(t) - f_∞(t)‖_{0,1}` at one light speed and time node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitRow {
    pub c: f64,
    pub t: f64,
    pub norm_gap: f64,
    /// `‖f_c(0) - f_∞(0)‖_{0,1}`.
    pub init_gap: f64,
    pub resolution_est: f64,
}

/// Discretization error of the final gap at the largest `c`, from a run on
/// a grid with roughly half the resolution in momentum, sphere and time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolutionCheck {
    pub coarse_n_p: usize,
    pub coarse_sphere: [usize; 2],
    pub coarse_n_t: usize,
    pub fine_gap: f64,
    pub coarse_gap: f64,
    /// `h_coarse / h_fine`.
    pub h_ratio: f64,
    /// `|fine - coarse| / (h_ratio^2 - 1)`, the second-order Richardson estimate.
    pub estimate: f64,
    /// 30% of the smallest final gap of the sweep.
    pub threshold: f64,
    pub limited: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitStatus {
    Pass,
    Fail,
    ResolutionLimited,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub schedule: Schedule,
    pub c0: f64,
    pub c_values: Vec<f64>,
    pub rows: Vec<LimitRow>,
    /// Gap at the final time, per `c`.
    pub final_gaps: Vec<f64>,
    pub init_gaps: Vec<f64>,
    pub strictly_decreasing: bool,
    pub final_over_first: f64,
    /// Gap at the largest `c` over its initial gap.
    pub largest_c_gap_over_init: f64,
    /// Reported only; the limit comes without a rate.
    pub gap_fit: Option<RateFit>,
    pub init_gap_fit: Option<RateFit>,
    pub resolution: ResolutionCheck,
    pub status: LimitStatus,
    pub classical: SolveReport,
    pub relativistic: Vec<SolveReport>,
}

fn gaps(rel: &SolveReport, cl: &SolveReport) -> Result<Vec<f64>> {
    rel.solution.iter().zip(&cl.solution).map(|(a, b)| a.distance_01(b)).collect()
}

/// Solves both equations from paired data on one grid and returns the gap at
/// every time node and at `t = 0`.
fn paired_run(
    config: &SweepConfig,
    grid: std::sync::Arc<crate::distributions::PhaseGrid>,
    quad: &crate::collision::CollisionQuadrature,
    schedule: &Schedule,
    n_t: usize,
    c_values: &[f64],
) -> Result<(SolveReport, Vec<SolveReport>)> {
    let s = &config.schedule;
    let solver_config = crate::solver::SolverConfig { n_t, ..config.solver_config() };
    let f_cl = maxwellian_init(grid.clone(), s.beta0 / 2.0, s.amplitude)?;
    let classical = solve_classical(&f_cl, schedule, quad, &solver_config)?;
    let relativistic = c_values
        .par_iter()
        .map(|&c| {
            let c = schedule.light_speed(c)?;
            let f_c = juttner_init(grid.clone(), s.beta0, c, s.amplitude)?;
            solve_relativistic(&f_c, schedule, c, quad, &solver_config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((classical, relativistic))
}

/// Newtonian-limit experiment: for every `c` of the sweep, the distance at
/// the common time nodes between the relativistic solution from Jüttner data
/// and the hard-sphere solution from Maxwellian data with the same rate and
/// modulation.
pub fn newtonian_limit_experiment(config: &SweepConfig) -> Result<LimitReport> {
    let c_values = config.c_values();
    let grid = config.phase_grid()?;
    let quad = config.quadrature(grid.clone())?;
    let q = &config.quadrature;
    let coarse_n_p = config.grid.n_p.div_ceil(2).max(3);
    let coarse_sphere = [(q.n_theta / 2).max(1), (q.n_phi / 2).max(1)];
    let coarse_n_t = (config.solve.n_t / 2).max(1);
    let coarse_grid = config.phase_grid_with(config.grid.n_x, coarse_n_p)?;
    let coarse_quad = config.quadrature_with(coarse_grid.clone(), coarse_sphere[0], coarse_sphere[1])?;
    let schedule = config.schedule_for(&[quad.clone(), coarse_quad.clone()], &config.sweep_dynamics()?)?;
    for &c in &c_values {
        if c <= schedule.c0() {
            return Err(Error::BelowThreshold { c, c0: schedule.c0() });
        }
    }

    let (classical, relativistic) = paired_run(config, grid.clone(), &quad, &schedule, config.solve.n_t, &c_values)?;
    let c_max = *c_values.last().expect("validated sweep has values");
    let (coarse_cl, coarse_rel) =
        paired_run(config, coarse_grid.clone(), &coarse_quad, &schedule, coarse_n_t, &[c_max])?;

    let s = &config.schedule;
    let f_cl = maxwellian_init(grid.clone(), s.beta0 / 2.0, s.amplitude)?;
    let mut init_gaps = Vec::new();
    let mut all_gaps = Vec::new();
    for (rep, &c) in relativistic.iter().zip(&c_values) {
        let f_c = juttner_init(grid.clone(), s.beta0, LightSpeed::new(c)?, s.amplitude)?;
        init_gaps.push(f_c.distance_01(&f_cl)?);
        all_gaps.push(gaps(rep, &classical)?);
    }
    let final_gaps: Vec<f64> = all_gaps.iter().map(|g| *g.last().expect("at least one time node")).collect();

    let fine_gap = *final_gaps.last().expect("non-empty sweep");
    let coarse_gap = *gaps(&coarse_rel[0], &coarse_cl)?.last().expect("at least one time node");
    let h_ratio = coarse_grid.momentum.spacing() / grid.momentum.spacing();
    let estimate = (fine_gap - coarse_gap).abs() / (h_ratio * h_ratio - 1.0);
    let min_gap = final_gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = 0.3 * min_gap;
    let resolution = ResolutionCheck {
        coarse_n_p,
        coarse_sphere,
        coarse_n_t,
        fine_gap,
        coarse_gap,
        h_ratio,
        estimate,
        threshold,
        limited: !(estimate <= threshold),
    };

    let times = &classical.times;
    let mut rows = Vec::new();
    for (i, &c) in c_values.iter().enumerate() {
        for (k, &t) in times.iter().enumerate() {
            rows.push(LimitRow { c, t, norm_gap: all_gaps[i][k], init_gap: init_gaps[i], resolution_est: estimate });
        }
    }
    let strictly_decreasing = final_gaps.windows(2).all(|w| w[1] < w[0]);
    let final_over_first = final_gaps[final_gaps.len() - 1] / final_gaps[0];
    let largest_c_gap_over_init = fine_gap / init_gaps[init_gaps.len() - 1];
    let status = if resolution.limited {
        LimitStatus::ResolutionLimited
    } else if strictly_decreasing && final_over_first < 0.2 {
        LimitStatus::Pass
    } else {
        LimitStatus::Fail
    };
    Ok(LimitReport {
        c0: schedule.c0(),
        schedule,
        gap_fit: RateFit::fit(&c_values, &final_gaps).ok(),
        init_gap_fit: RateFit::fit(&c_values, &init_gaps).ok(),
        c_values,
        rows,
        final_gaps,
        init_gaps,
        strictly_decreasing,
        final_over_first,
        largest_c_gap_over_init,
        resolution,
        status,
        classical,
        relativistic,
    })
}
