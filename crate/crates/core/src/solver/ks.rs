use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use super::transport::{Interpolation, ShiftStencil};
use crate::collision::{CollisionOperator, CollisionQuadrature, Symmetry};
use crate::distributions::{DistributionGrid, PhaseGrid};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::kinematics::LightSpeed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Monotone lower/upper iteration from `l0 = 0`, `u0` of the schedule.
    KanielShinbrot,
    /// Plain successive substitution from the free-streamed datum.
    Picard,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Uniform time steps on `[0, t_end]`.
    pub n_t: usize,
    /// Defaults to the schedule's `T`; must not exceed it.
    pub t_end: Option<f64>,
    /// Stop when the iteration gap falls below `tolerance * max_k ‖u0(t_k)‖_{0,1}`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Allowed violation of the sandwich ordering, relative to `max u0`.
    pub sandwich_slack: f64,
    pub mode: Mode,
    /// Use the axial symmetry of the data when available.
    pub use_symmetry: bool,
    /// Precompute the collision table when it fits in this many bytes; 0 never does.
    pub table_bytes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_t: 4,
            t_end: None,
            tolerance: 1e-8,
            max_iterations: 25,
            sandwich_slack: 1e-12,
            mode: Mode::KanielShinbrot,
            use_symmetry: true,
            table_bytes: 0,
        }
    }
}

/// Discrete mild-form map
/// `Φ(G, ν)(t_k) = e^{-Λ_{k0}} f_in(x - v t_k) + ∫_0^{t_k} e^{-Λ(s)} G(s, x - v(t_k - s)) ds`
/// where `Λ_{kj}` is the trapezoid integral of `ν` along the characteristic
/// from `t_j` to `t_k`. The time integral is done exactly for `Λ` and `G`
/// linear between time nodes, which makes equilibria exact fixed points.
/// The weights are positive and decrease with `ν`, and linear interpolation
/// at the feet keeps `Φ` increasing in `G` and decreasing in `ν`.
pub struct Evolution {
    grid: Arc<PhaseGrid>,
    n_t: usize,
    dt: f64,
    stencils: Vec<Vec<ShiftStencil>>,
}

impl Evolution {
    pub fn new(grid: Arc<PhaseGrid>, dynamics: Dynamics, t_end: f64, n_t: usize) -> Result<Self> {
        if n_t == 0 || !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("need n_t >= 1 and t_end > 0, got {n_t} and {t_end}")));
        }
        let dt = t_end / n_t as f64;
        let mg = &grid.momentum;
        let stencils = (0..mg.len())
            .map(|p| {
                let v = dynamics.velocity(&mg.momentum(p)).0;
                (0..=n_t)
                    .map(|lag| {
                        let s = lag as f64 * dt;
                        ShiftStencil::new(&grid.spatial, v.map(|c| c * s), Interpolation::Linear)
                    })
                    .collect()
            })
            .collect();
        Ok(Evolution { grid, n_t, dt, stencils })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_t).map(|k| k as f64 * self.dt).collect()
    }

    /// Applies `Φ` to time series stored as `n_t + 1` consecutive fields of
    /// batches `[p][field][x]`. `gain` / `nu` of `None` stand for zero.
    #[allow(clippy::too_many_arguments)]
    pub fn apply(
        &self,
        f_in: &[f64],
        gain: Option<(&[f64], usize, usize)>,
        nu: Option<(&[f64], usize, usize)>,
        out: &mut [f64],
        out_m: usize,
        out_off: usize,
    ) {
        let nx = self.grid.n_x();
        let n = self.n_t;
        let half = 0.5 * self.dt;
        let mut shifted_nu = vec![vec![0.0; nx]; n + 1];
        let mut lam = vec![0.0f64; nx];
        let mut acc = vec![0.0; nx];
        let mut tmp = vec![0.0; nx];
        let mut g_next = vec![0.0; nx];
        let mut step = vec![0.0; nx];
        for p in 0..self.grid.momentum.len() {
            let st = &self.stencils[p];
            let field = |data: &(&[f64], usize, usize), j: usize| -> std::ops::Range<usize> {
                let (_, m, off) = *data;
                let start = (p * m + off + j) * nx;
                start..start + nx
            };
            for k in 0..=n {
                if let Some(nu) = &nu {
                    for j in 0..=k {
                        st[k - j].apply(&nu.0[field(nu, j)], &mut shifted_nu[j]);
                    }
                }
                lam.fill(0.0);
                acc.fill(0.0);
                if let (Some(g), true) = (&gain, k > 0) {
                    st[0].apply(&g.0[field(g, k)], &mut g_next);
                }
                // interval [t_j, t_{j+1}]; lam holds Λ_{k,j+1} on entry
                for j in (0..k).rev() {
                    for x in 0..nx {
                        step[x] = if nu.is_some() { half * (shifted_nu[j][x] + shifted_nu[j + 1][x]) } else { 0.0 };
                    }
                    if let Some(g) = &gain {
                        st[k - j].apply(&g.0[field(g, j)], &mut tmp);
                        for x in 0..nx {
                            let (a, b) = exp_trapezoid(step[x]);
                            acc[x] += self.dt * (-lam[x]).exp() * (a * tmp[x] + b * g_next[x]);
                        }
                        std::mem::swap(&mut tmp, &mut g_next);
                    }
                    for x in 0..nx {
                        lam[x] += step[x];
                    }
                }
                st[k].apply(&f_in[p * nx..(p + 1) * nx], &mut tmp);
                let dst = &mut out[(p * out_m + out_off + k) * nx..][..nx];
                for x in 0..nx {
                    dst[x] = (-lam[x]).exp() * tmp[x] + acc[x];
                }
            }
        }
    }
}

/// `(∫_0^1 u e^{-ud} du, ∫_0^1 (1-u) e^{-ud} du)`: weights of the near and
/// far end of a step over which the exponent grows by `d >= 0`.
#[inline]
fn exp_trapezoid(d: f64) -> (f64, f64) {
    if d < 0.5 {
        // Σ (-d)^n / (n! (n+2)) and Σ (-d)^n / (n+1)!
        let (mut a, mut total, mut term) = (0.0, 0.0, 1.0);
        for n in 0..18 {
            a += term / (n + 2) as f64;
            total += term / (n + 1) as f64;
            term *= -d / (n + 1) as f64;
        }
        (a, total - a)
    } else {
        let total = -(-d).exp_m1() / d;
        let a = (total - (-d).exp()) / d;
        (a, total - a)
    }
}

/// Worst ordering violation between consecutive iterates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SandwichCheck {
    pub magnitude: f64,
    pub relation: &'static str,
    pub time_index: usize,
    pub node: usize,
}

/// Outcome of checking `0 <= l0 <= l1 <= u1 <= u0` on the grid and time nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BeginningReport {
    pub holds: bool,
    /// `min (u0 - u1) / max u0`; negative when the condition fails.
    pub margin: f64,
    pub worst_time_index: usize,
    pub worst_node: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub equation: &'static str,
    pub mode: Mode,
    pub c: Option<f64>,
    pub c0: f64,
    pub threshold_ok: bool,
    pub schedule: Schedule,
    pub t_end: f64,
    pub n_t: usize,
    pub n_p: usize,
    pub r_max: f64,
    pub spatial_dims: [usize; 3],
    pub sphere: [usize; 2],
    pub symmetry: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    pub gap_history: Vec<f64>,
    pub beginning_margin: Option<f64>,
    pub sandwich_worst: f64,
    /// `max_k |mass(t_k) - mass(0)| / mass(0)`.
    pub conservation_drift: f64,
    /// `max f(t_k) / u0(t_k)`; at most 1 when the schedule dominates.
    pub envelope_margin: f64,
    /// `sup f(t) exp(β0 e(p))`, the constant in `f ≲ exp(-β0 e(p))`.
    pub envelope_constant: f64,
    pub out_of_grid_fraction: f64,
    pub tabulated: bool,
    pub wall_time_seconds: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub solution: Vec<DistributionGrid>,
    #[serde(skip)]
    pub lower: Vec<DistributionGrid>,
    #[serde(skip)]
    pub upper: Vec<DistributionGrid>,
}

/// One configured solve: operator, discrete mild map and schedule.
pub struct Solver {
    op: CollisionOperator,
    evo: Evolution,
    schedule: Schedule,
    config: SolverConfig,
    t_end: f64,
}

impl Solver {
    pub fn new(
        dynamics: Dynamics,
        quad: &CollisionQuadrature,
        schedule: Schedule,
        config: SolverConfig,
        symmetric_data: bool,
    ) -> Result<Self> {
        if let Dynamics::Relativistic(c) = dynamics {
            if c.c() <= schedule.c0() {
                return Err(Error::BelowThreshold { c: c.c(), c0: schedule.c0() });
            }
        }
        let t_end = config.t_end.unwrap_or(schedule.t);
        if t_end > schedule.t * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("t_end = {t_end} exceeds the existence time T = {}", schedule.t)));
        }
        let symmetry = if config.use_symmetry
            && symmetric_data
            && quad.sphere().supports_axial_symmetry()
            && quad.grid().spatial.dims()[1..] == [1, 1]
        {
            Symmetry::Axial
        } else {
            Symmetry::None
        };
        let mut op = CollisionOperator::new(dynamics, quad.clone(), symmetry)?;
        if config.table_bytes > 0 && op.table_bytes() <= config.table_bytes {
            op.tabulate(config.table_bytes)?;
        }
        let evo = Evolution::new(quad.grid().clone(), dynamics, t_end, config.n_t)?;
        Ok(Solver { op, evo, schedule, config, t_end })
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.op
    }

    pub fn evolution(&self) -> &Evolution {
        &self.evo
    }

    fn grid(&self) -> &Arc<PhaseGrid> {
        self.op.grid()
    }

    /// `u0(t_k)` for all time nodes, as a batch of `n_t + 1` fields.
    pub fn upper_seed(&self) -> Vec<f64> {
        let grid = self.grid();
        let (nx, n1) = (grid.n_x(), self.evo.n_t() + 1);
        let times = self.evo.times();
        let mut out = vec![0.0; grid.len() * n1];
        for p in 0..grid.momentum.len() {
            let mom = grid.momentum.momentum(p);
            for (k, t) in times.iter().enumerate() {
                let v = self.schedule.upper(*t, &mom, self.op.dynamics());
                out[(p * n1 + k) * nx..][..nx].fill(v);
            }
        }
        out
    }

    fn check_input(&self, f_in: &DistributionGrid) -> Result<()> {
        if !f_in.grid().same_as(self.grid()) {
            return Err(Error::GridMismatch("initial datum and solver use different grids".into()));
        }
        Ok(())
    }

    /// Verifies the beginning condition on the grid: `f_in <= u0(0)`,
    /// `l1 >= 0` and `u1 <= u0` at every time node.
    pub fn beginning_condition_check(&self, f_in: &DistributionGrid) -> Result<BeginningReport> {
        self.check_input(f_in)?;
        let grid = self.grid();
        let (nx, n1) = (grid.n_x(), self.evo.n_t() + 1);
        let u0 = self.upper_seed();
        let width = n1 * nx;
        let gain = self.op.gain_batch(&u0, &u0, width)?;
        let nu = self.op.loss_rate_batch(&u0, width)?;
        let mut u1 = vec![0.0; u0.len()];
        let mut l1 = vec![0.0; u0.len()];
        self.evo.apply(f_in.values(), Some((&gain, n1, 0)), None, &mut u1, n1, 0);
        self.evo.apply(f_in.values(), None, Some((&nu, n1, 0)), &mut l1, n1, 0);
        let scale = u0.iter().copied().fold(0.0, f64::max);
        let mut worst = (f64::INFINITY, 0, 0);
        for (i, ((a, b), l)) in u0.iter().zip(&u1).zip(&l1).enumerate() {
            let m = (a - b).min(*l).min(b - l) / scale;
            if m < worst.0 {
                worst = (m, (i / nx) % n1, i / width);
            }
        }
        // f_in <= u0(0)
        for p in 0..grid.momentum.len() {
            for x in 0..nx {
                let m = (u0[p * width + x] - f_in.value(x, p)) / scale;
                if m < worst.0 {
                    worst = (m, 0, p);
                }
            }
        }
        Ok(BeginningReport {
            holds: worst.0 >= -self.config.sandwich_slack,
            margin: worst.0,
            worst_time_index: worst.1,
            worst_node: worst.2,
        })
    }

    pub fn solve(&self, f_in: &DistributionGrid) -> Result<SolveReport> {
        self.check_input(f_in)?;
        let start = Instant::now();
        let grid = self.grid().clone();
        let (nx, n1) = (grid.n_x(), self.evo.n_t() + 1);
        let width1 = n1 * nx;
        let u0 = self.upper_seed();
        let scale_sup = u0.iter().copied().fold(0.0, f64::max);
        let scale_norm = (0..n1).map(|k| norm_01_field(&grid, &u0, n1, k)).fold(0.0, f64::max);
        let target = self.config.tolerance * scale_norm;
        let slack = self.config.sandwich_slack * scale_sup;

        let mut history = Vec::new();
        let mut sandwich_worst = 0.0f64;
        let mut beginning_margin = None;
        let (lower, upper, iterations, converged) = match self.config.mode {
            Mode::KanielShinbrot => {
                // fields 0..n1 hold l, n1..2n1 hold u
                let m = 2 * n1;
                let mut lu = vec![0.0; grid.len() * m];
                for p in 0..grid.momentum.len() {
                    lu[(p * m + n1) * nx..][..width1].copy_from_slice(&u0[p * width1..][..width1]);
                }
                history.push(max_gap(&grid, &lu, m, n1));
                let mut converged = false;
                let mut n = 0;
                while n < self.config.max_iterations {
                    let gain = self.op.gain_batch(&lu, &lu, m * nx)?;
                    let nu = self.op.loss_rate_batch(&lu, m * nx)?;
                    let mut next = vec![0.0; lu.len()];
                    self.evo.apply(f_in.values(), Some((&gain, m, 0)), Some((&nu, m, n1)), &mut next, m, 0);
                    self.evo.apply(f_in.values(), Some((&gain, m, n1)), Some((&nu, m, 0)), &mut next, m, n1);
                    n += 1;
                    let check = sandwich(&lu, &next, m, n1, nx);
                    sandwich_worst = sandwich_worst.max(check.magnitude);
                    if n == 1 {
                        let margin = check_beginning(&lu, &next, m, n1, nx) / scale_sup;
                        beginning_margin = Some(margin);
                        if margin < -self.config.sandwich_slack {
                            return Err(Error::BeginningCondition(format!(
                                "u1 exceeds u0 by {:e} (relative); omega0 too small or c too close to c0",
                                -margin
                            )));
                        }
                    }
                    if check.magnitude > slack {
                        return Err(Error::Monotonicity {
                            iteration: n,
                            time_index: check.time_index,
                            node: check.node,
                            relation: check.relation,
                            magnitude: check.magnitude,
                        });
                    }
                    lu = next;
                    let gap = max_gap(&grid, &lu, m, n1);
                    history.push(gap);
                    if gap <= target {
                        converged = true;
                        break;
                    }
                }
                let lower = (0..n1).map(|k| extract(&lu, m, k, nx)).collect::<Vec<_>>();
                let upper = (0..n1).map(|k| extract(&lu, m, n1 + k, nx)).collect::<Vec<_>>();
                (lower, upper, n, converged)
            }
            Mode::Picard => {
                let mut f = vec![0.0; grid.len() * n1];
                self.evo.apply(f_in.values(), None, None, &mut f, n1, 0);
                let mut converged = false;
                let mut n = 0;
                while n < self.config.max_iterations {
                    let gain = self.op.gain_batch(&f, &f, width1)?;
                    let nu = self.op.loss_rate_batch(&f, width1)?;
                    let mut next = vec![0.0; f.len()];
                    self.evo.apply(f_in.values(), Some((&gain, n1, 0)), Some((&nu, n1, 0)), &mut next, n1, 0);
                    n += 1;
                    let change = (0..n1)
                        .map(|k| grid.norm_01_diff(&extract(&f, n1, k, nx), &extract(&next, n1, k, nx)))
                        .fold(0.0, f64::max);
                    history.push(change);
                    f = next;
                    if change <= target {
                        converged = true;
                        break;
                    }
                }
                let sol = (0..n1).map(|k| extract(&f, n1, k, nx)).collect::<Vec<_>>();
                (sol.clone(), sol, n, converged)
            }
        };
        if !converged {
            return Err(Error::NoConvergence {
                iterations,
                last_gap: history.last().copied().unwrap_or(f64::NAN),
                gap_history: history,
            });
        }

        let times = self.evo.times();
        let dynamics = self.op.dynamics();
        let wrap = |vals: Vec<f64>, t: f64| {
            DistributionGrid::new(grid.clone(), vals, t, Some(self.schedule.envelope(t, dynamics)))
        };
        let mut solution = Vec::with_capacity(n1);
        let mut lo = Vec::with_capacity(n1);
        let mut up = Vec::with_capacity(n1);
        for k in 0..n1 {
            let mid: Vec<f64> = lower[k].iter().zip(&upper[k]).map(|(a, b)| 0.5 * (a + b)).collect();
            solution.push(wrap(mid, times[k])?);
            lo.push(wrap(lower[k].clone(), times[k])?);
            up.push(wrap(upper[k].clone(), times[k])?);
        }
        let mass0 = f_in.mass();
        let conservation_drift =
            solution.iter().map(|s| (s.mass() - mass0).abs()).fold(0.0, f64::max) / mass0.max(f64::MIN_POSITIVE);
        let mut envelope_margin = 0.0f64;
        let mut envelope_constant = 0.0f64;
        for (k, s) in solution.iter().enumerate() {
            for p in 0..grid.momentum.len() {
                let mom = grid.momentum.momentum(p);
                let bound = self.schedule.upper(times[k], &mom, dynamics);
                let e = dynamics.kinetic_energy(&mom);
                for x in 0..nx {
                    let v = s.value(x, p);
                    if bound > 0.0 {
                        envelope_margin = envelope_margin.max(v / bound);
                    }
                    envelope_constant = envelope_constant.max(v * (self.schedule.beta0 * e).exp());
                }
            }
        }
        let out_of_grid_fraction = self.op.out_of_grid(f_in, f_in)?.fraction();
        let (equation, c) = match dynamics {
            Dynamics::Relativistic(c) => ("relativistic", Some(c.c())),
            Dynamics::Classical => ("classical", None),
        };
        Ok(SolveReport {
            equation,
            mode: self.config.mode,
            c,
            c0: self.schedule.c0(),
            threshold_ok: c.is_none_or(|c| c > self.schedule.c0()),
            schedule: self.schedule,
            t_end: self.t_end,
            n_t: self.evo.n_t(),
            n_p: grid.momentum.n_p(),
            r_max: grid.momentum.r_max(),
            spatial_dims: grid.spatial.dims(),
            sphere: [self.op.quadrature().sphere().n_theta(), self.op.quadrature().sphere().n_phi()],
            symmetry: match self.op.symmetry() {
                Symmetry::None => "none",
                Symmetry::Axial => "axial",
            },
            iterations,
            converged,
            tolerance: self.config.tolerance,
            gap_history: history,
            beginning_margin,
            sandwich_worst: sandwich_worst / scale_sup,
            conservation_drift,
            envelope_margin,
            envelope_constant,
            out_of_grid_fraction,
            tabulated: self.op.is_tabulated(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            times,
            solution,
            lower: lo,
            upper: up,
        })
    }
}

fn extract(batch: &[f64], m: usize, k: usize, nx: usize) -> Vec<f64> {
    crate::collision::unpack(batch, m, k, nx)
}

fn norm_01_field(grid: &PhaseGrid, batch: &[f64], m: usize, k: usize) -> f64 {
    grid.norm_01(&extract(batch, m, k, grid.n_x()))
}

/// `max_k ‖u(t_k) - l(t_k)‖_{0,1}` for a KS batch.
fn max_gap(grid: &PhaseGrid, lu: &[f64], m: usize, n1: usize) -> f64 {
    let nx = grid.n_x();
    (0..n1)
        .map(|k| grid.norm_01_diff(&extract(lu, m, n1 + k, nx), &extract(lu, m, k, nx)))
        .fold(0.0, f64::max)
}

fn sandwich(old: &[f64], new: &[f64], m: usize, n1: usize, nx: usize) -> SandwichCheck {
    let mut worst = SandwichCheck::default();
    let n_p = old.len() / (m * nx);
    for p in 0..n_p {
        for k in 0..n1 {
            for x in 0..nx {
                let at = |f: usize| (p * m + f) * nx + x;
                let (l0, u0) = (old[at(k)], old[at(n1 + k)]);
                let (l1, u1) = (new[at(k)], new[at(n1 + k)]);
                for (v, relation) in [
                    (-l1, "0 <= l_{n+1}"),
                    (l0 - l1, "l_n <= l_{n+1}"),
                    (l1 - u1, "l_{n+1} <= u_{n+1}"),
                    (u1 - u0, "u_{n+1} <= u_n"),
                ] {
                    if v > worst.magnitude {
                        worst = SandwichCheck { magnitude: v, relation, time_index: k, node: p };
                    }
                }
            }
        }
    }
    worst
}

/// `min (u0 - u1)` over the batch.
fn check_beginning(old: &[f64], new: &[f64], m: usize, n1: usize, nx: usize) -> f64 {
    let n_p = old.len() / (m * nx);
    let mut worst = f64::INFINITY;
    for p in 0..n_p {
        for k in 0..n1 {
            let r = (p * m + n1 + k) * nx..(p * m + n1 + k + 1) * nx;
            for (a, b) in old[r.clone()].iter().zip(&new[r]) {
                worst = worst.min(a - b);
            }
        }
    }
    worst
}

/// Relativistic solve on `[0, t_end]`; refuses `c <= c0`.
pub fn solve_relativistic(
    f_in: &DistributionGrid,
    schedule: &Schedule,
    c: LightSpeed,
    quad: &CollisionQuadrature,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let symmetric = f_in.is_axially_symmetric(1e-14);
    Solver::new(Dynamics::Relativistic(c), quad, *schedule, config.clone(), symmetric)?.solve(f_in)
}

/// Hard-sphere solve with the Gaussian schedule `ω(t) exp(-β(t)|p|²/2)`,
/// i.e. `α0 = β0 / 2`.
pub fn solve_classical(
    f_in: &DistributionGrid,
    schedule: &Schedule,
    quad: &CollisionQuadrature,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let symmetric = f_in.is_axially_symmetric(1e-14);
    Solver::new(Dynamics::Classical, quad, *schedule, config.clone(), symmetric)?.solve(f_in)
}
