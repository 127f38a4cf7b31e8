use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::SweepConfig;
use super::fit::RateFit;
use crate::collision::{CollisionOperator, CollisionQuadrature, SphereRule, Symmetry};
use crate::distributions::{juttner_init, maxwellian_init, DistributionGrid, MomentumGrid, PhaseGrid, SpatialGrid};
use crate::dynamics::Dynamics;
use crate::error::Result;
use crate::kinematics::{LightSpeed, Momentum, UnitVector};
use crate::solver::Solver;

/// `exp(-rate e(p))` on a homogeneous grid: the Jüttner distribution
/// relativistically, the Maxwellian `exp(-rate |p|^2 / 2)` classically.
pub fn equilibrium(grid: Arc<PhaseGrid>, dynamics: Dynamics, rate: f64) -> Result<DistributionGrid> {
    match dynamics {
        Dynamics::Relativistic(c) => juttner_init(grid, rate, c, 0.0),
        Dynamics::Classical => maxwellian_init(grid, rate / 2.0, 0.0),
    }
}

/// A priori bound on the interpolation defect of the gain at the equilibrium
/// `M = exp(-rate e)`, for the plain trilinear operator with the ball cutoff.
///
/// At every output node it sums `K w [ε(p') I M(q') + M(p') ε(q')]` over the
/// operator's triples, where `ε(x) = (h^2/8) Σ_i sup_cell |∂_ii M|` bounds the
/// trilinear error in the cell of `x`, using `|∂_ii M| <= M (rate^2 p_i^2 + rate)`.
/// Since `M(p')M(q') = M(p)M(q)` exactly, `|Q_h(M, M)| <= τ_h` pointwise.
pub fn interpolation_defect_bound(
    dynamics: Dynamics,
    grid: &Arc<PhaseGrid>,
    sphere: &SphereRule,
    rate: f64,
    m: &[f64],
) -> Result<Vec<f64>> {
    let mg = &grid.momentum;
    let nx = grid.n_x();
    let h = mg.spacing();
    let coords = mg.coords();
    let nodes: Vec<(UnitVector, f64)> =
        sphere.folded().into_iter().map(|(w, wt)| Ok((UnitVector::from_unit(w)?, wt))).collect::<Result<_>>()?;
    let r = mg.r_max();
    let cut = dynamics.kinetic_energy(&Momentum::new(r, 0.0, 0.0));
    let energy: Vec<f64> = (0..mg.len()).map(|i| dynamics.kinetic_energy(&mg.momentum(i))).collect();
    let exact = |x: &Momentum| (-rate * dynamics.kinetic_energy(x)).exp();
    // trilinear error bound in the cell containing x
    let eps = |x: &Momentum| -> f64 {
        let Some(cell) = mg.locate(&x.0) else {
            return 0.0;
        };
        let ijk = mg.axis_indices(cell.base);
        let mut nearest = [0.0; 3];
        let mut far = [0.0; 3];
        for a in 0..3 {
            let (lo, hi) = (coords[ijk[a]], coords[ijk[a]] + h);
            nearest[a] = if lo > 0.0 { lo } else if hi < 0.0 { hi } else { 0.0 };
            far[a] = lo.abs().max(hi.abs());
        }
        let peak = exact(&Momentum(nearest));
        let curv: f64 = far.iter().map(|p| rate * rate * p * p + rate).sum();
        h * h / 8.0 * peak * curv
    };
    let out: Vec<f64> = (0..mg.len())
        .into_par_iter()
        .map(|i| {
            let p = mg.momentum(i);
            let mut tau = 0.0;
            for &j in mg.active_nodes() {
                if energy[i] + energy[j] > cut {
                    continue;
                }
                let q = mg.momentum(j);
                for (w, wt) in &nodes {
                    let k = dynamics.kernel(&p, &q, w) * wt * mg.weight(j);
                    let (pp, qq) = dynamics.post_collision(&p, &q, w);
                    let iq = grid.interpolate(m, 0, &qq.0);
                    tau += k * (eps(&pp) * iq + exact(&pp) * eps(&qq));
                }
            }
            tau
        })
        .collect();
    // homogeneous: copy to every spatial node
    Ok(out.iter().flat_map(|v| std::iter::repeat_n(*v, nx)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BalanceLevel {
    pub n_p: usize,
    pub h: f64,
    /// `‖Q_h(M, M)‖_{0,1}`.
    pub defect: f64,
    /// `‖τ_h‖_{0,1}` of [`interpolation_defect_bound`].
    pub tolerance: f64,
    /// `max_p |Q_h(M, M)(p)| / τ_h(p)`; at most 1 when the bound holds.
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceStudy {
    pub equation: &'static str,
    pub c: Option<f64>,
    pub rate: f64,
    pub levels: Vec<BalanceLevel>,
    /// Order of the tolerance in `h`.
    pub tolerance_order: RateFit,
    /// Observed order of the defect in `h`.
    pub defect_order: RateFit,
    /// `‖Q_h(M, M)‖_{0,1}` of the envelope-weighted operator on the finest grid.
    pub weighted_defect: f64,
}

impl BalanceStudy {
    pub fn passes(&self) -> bool {
        self.levels.iter().all(|l| l.defect <= l.tolerance && l.worst_ratio <= 1.0 + 1e-9)
            && self.tolerance_order.slope >= 1.8
            && self.defect_order.slope >= 1.8
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceReport {
    pub relativistic: BalanceStudy,
    pub classical: BalanceStudy,
}

impl BalanceReport {
    pub fn passes(&self) -> bool {
        self.relativistic.passes() && self.classical.passes()
    }
}

fn balance_grid(config: &SweepConfig, n_p: usize) -> Result<Arc<PhaseGrid>> {
    Ok(Arc::new(PhaseGrid::new(SpatialGrid::new([1, 1, 1])?, MomentumGrid::new(config.r_max(), n_p)?)))
}

/// `|Q_h(M, M)|` and its bound on one grid.
pub fn balance_level(dynamics: Dynamics, grid: Arc<PhaseGrid>, sphere: &SphereRule, rate: f64) -> Result<BalanceLevel> {
    let m = equilibrium(grid.clone(), dynamics, rate)?;
    let quad = CollisionQuadrature::new(grid.clone(), sphere.clone()).with_ball_cutoff(true);
    let op = CollisionOperator::new(dynamics, quad, Symmetry::Axial)?;
    let q = op.collide(&m, &m)?;
    let tau = interpolation_defect_bound(dynamics, &grid, sphere, rate, m.values())?;
    let abs_q: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    let scale = abs_q.iter().copied().fold(0.0, f64::max);
    let worst_ratio = abs_q
        .iter()
        .zip(&tau)
        .map(|(a, t)| if *a <= 1e-14 * scale { 0.0 } else { a / t })
        .fold(0.0, f64::max);
    Ok(BalanceLevel {
        n_p: grid.momentum.n_p(),
        h: grid.momentum.spacing(),
        defect: grid.norm_01(&abs_q),
        tolerance: grid.norm_01(&tau),
        worst_ratio,
    })
}

/// Detailed balance at the equilibrium of rate `β0` under momentum-grid
/// refinement, relativistically at the configured `c` and classically.
pub fn detailed_balance_study(config: &SweepConfig) -> Result<BalanceReport> {
    let b = &config.balance;
    let sphere = SphereRule::new(b.n_theta, b.n_phi)?;
    let rate = config.schedule.beta0;
    let study = |dynamics: Dynamics| -> Result<BalanceStudy> {
        let mut levels = Vec::new();
        for &n in &b.n_p {
            levels.push(balance_level(dynamics, balance_grid(config, n)?, &sphere, rate)?);
        }
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let tol: Vec<f64> = levels.iter().map(|l| l.tolerance).collect();
        let def: Vec<f64> = levels.iter().map(|l| l.defect).collect();
        let finest = balance_grid(config, *b.n_p.iter().max().unwrap_or(&3))?;
        let m = equilibrium(finest.clone(), dynamics, rate)?;
        let quad = CollisionQuadrature::new(finest.clone(), sphere.clone())
            .with_ball_cutoff(true)
            .with_envelope_weighting(Some(rate));
        let q = CollisionOperator::new(dynamics, quad, Symmetry::Axial)?.collide(&m, &m)?;
        let (equation, c) = match dynamics {
            Dynamics::Relativistic(c) => ("relativistic", Some(c.c())),
            Dynamics::Classical => ("classical", None),
        };
        Ok(BalanceStudy {
            equation,
            c,
            rate,
            tolerance_order: RateFit::fit(&h, &tol)?,
            defect_order: RateFit::fit(&h, &def)?,
            weighted_defect: finest.norm_01(&q.iter().map(|v| v.abs()).collect::<Vec<_>>()),
            levels,
        })
    };
    Ok(BalanceReport {
        relativistic: study(Dynamics::Relativistic(LightSpeed::new(b.c)?))?,
        classical: study(Dynamics::Classical)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityRun {
    pub equation: &'static str,
    pub c: Option<f64>,
    pub t_end: f64,
    pub iterations: usize,
    /// `max_k ‖f(t_k) - f_in‖_{0,1}`.
    pub deviation: f64,
    /// `t_end ‖τ_h‖_{0,1}` plus the iteration tolerance.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityReport {
    pub relativistic: StationarityRun,
    pub classical: StationarityRun,
}

impl StationarityReport {
    pub fn passes(&self) -> bool {
        self.relativistic.deviation <= self.relativistic.tolerance && self.classical.deviation <= self.classical.tolerance
    }
}

/// Solves from the exact equilibrium of rate `β0` on the configured grid and
/// quadrature, homogeneous in space, and measures the drift from it.
pub fn equilibrium_stationarity(config: &SweepConfig) -> Result<StationarityReport> {
    let grid = config.phase_grid_with(1, config.grid.n_p)?;
    let quad = config.quadrature(grid.clone())?;
    let c = LightSpeed::new(config.balance.c)?;
    let schedule = config.schedule_for(std::slice::from_ref(&quad), &[Dynamics::Classical, Dynamics::Relativistic(c)])?;
    let sphere = quad.sphere().clone();
    let rate = config.schedule.beta0;
    let run = |dynamics: Dynamics| -> Result<StationarityRun> {
        let f_in = equilibrium(grid.clone(), dynamics, rate)?;
        let solver = Solver::new(dynamics, &quad, schedule, config.solver_config(), true)?;
        let report = solver.solve(&f_in)?;
        let deviation = report.solution.iter().map(|s| s.distance_01(&f_in)).collect::<Result<Vec<_>>>()?;
        let tau = interpolation_defect_bound(dynamics, &grid, &sphere, rate, f_in.values())?;
        let u0_norm = report.gap_history.first().copied().unwrap_or(0.0);
        let (equation, c) = match dynamics {
            Dynamics::Relativistic(c) => ("relativistic", Some(c.c())),
            Dynamics::Classical => ("classical", None),
        };
        Ok(StationarityRun {
            equation,
            c,
            t_end: report.t_end,
            iterations: report.iterations,
            deviation: deviation.into_iter().fold(0.0, f64::max),
            tolerance: report.t_end * grid.norm_01(&tau) + report.tolerance * u0_norm,
        })
    };
    Ok(StationarityReport { relativistic: run(Dynamics::Relativistic(c))?, classical: run(Dynamics::Classical)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defect_bound_holds_on_a_coarse_grid() {
        let grid = Arc::new(PhaseGrid::new(SpatialGrid::new([1, 1, 1]).unwrap(), MomentumGrid::new(3.0, 7).unwrap()));
        let sphere = SphereRule::new(2, 4).unwrap();
        for dynamics in [Dynamics::Classical, Dynamics::Relativistic(LightSpeed::new(5.0).unwrap())] {
            let level = balance_level(dynamics, grid.clone(), &sphere, 2.0).unwrap();
            assert!(level.defect > 0.0);
            assert!(level.defect <= level.tolerance, "{level:?}");
            assert!(level.worst_ratio <= 1.0, "{level:?}");
        }
    }

    #[test]
    fn weighted_operator_annihilates_the_equilibrium() {
        let grid = Arc::new(PhaseGrid::new(SpatialGrid::new([1, 1, 1]).unwrap(), MomentumGrid::new(3.0, 7).unwrap()));
        let sphere = SphereRule::new(2, 4).unwrap();
        let dynamics = Dynamics::Relativistic(LightSpeed::new(5.0).unwrap());
        let m = equilibrium(grid.clone(), dynamics, 2.0).unwrap();
        let quad = CollisionQuadrature::new(grid, sphere).with_ball_cutoff(true).with_envelope_weighting(Some(2.0));
        let op = CollisionOperator::new(dynamics, quad, Symmetry::None).unwrap();
        let q = op.collide(&m, &m).unwrap();
        let nu = op.loss_rate(&m).unwrap();
        let scale = nu.iter().zip(m.values()).map(|(a, b)| a * b).fold(0.0, f64::max);
        assert!(q.iter().all(|v| v.abs() <= 1e-13 * scale));
    }
}
