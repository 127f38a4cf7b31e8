use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::collision::{CollisionOperator, CollisionQuadrature, SphereRule, Symmetry};
use crate::distributions::{DecayEnvelope, MomentumGrid, PhaseGrid, SpatialGrid};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::kinematics::LightSpeed;
use crate::solver::{estimate_d, Mode, Schedule, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Spatial points along `x1`; the shipped data do not vary along `x2`, `x3`.
    pub n_x: usize,
    pub n_p: usize,
    /// Half-width of the momentum cube; when absent, the radius where the
    /// classical envelope of rate `β(T)/2` drops to `r_level`.
    pub r_max: Option<f64>,
    pub r_level: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_x: 8, n_p: 15, r_max: None, r_level: 1e-14 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Drop pairs with `e(p) + e(q) > e(R_max)`.
    pub energy_cutoff: bool,
    /// Interpolate relative to `exp(-β* e(p))` at off-grid momenta.
    pub envelope_weighting: bool,
    /// `β*`; defaults to `β(T)`, where the upper seed is tightest.
    pub envelope_rate: Option<f64>,
    /// Memory budget for precomputed collision tables; 0 disables them.
    pub table_bytes: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            n_theta: 4,
            n_phi: 8,
            energy_cutoff: true,
            envelope_weighting: true,
            envelope_rate: None,
            table_bytes: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub omega0: f64,
    pub beta0: f64,
    /// Amplitude of the `x1` modulation of the initial data.
    pub amplitude: f64,
    /// `D` is this factor times the measured loss-rate constant.
    pub d_safety: f64,
    /// Fixes `D` instead of measuring it.
    pub d: Option<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { omega0: 2.0, beta0: 4.0, amplitude: 0.5, d_safety: 1.1, d: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Relativistic,
    Classical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub equation: Equation,
    pub c: f64,
    pub n_t: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub sandwich_slack: f64,
    pub mode: Mode,
    pub use_symmetry: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            equation: Equation::Relativistic,
            c: 1000.0,
            n_t: 4,
            tolerance: 1e-13,
            max_iterations: 25,
            sandwich_slack: 1e-12,
            mode: Mode::KanielShinbrot,
            use_symmetry: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit light speeds; otherwise `c_points` geometric values in `[c_min, c_max]`.
    pub c_values: Option<Vec<f64>>,
    pub c_min: f64,
    pub c_max: f64,
    pub c_points: usize,
    pub seed: u64,
    /// Random triples per light speed in the rate verifiers.
    pub samples: usize,
    /// `|p|, |q|` bound for the pointwise samples.
    pub sample_radius: f64,
    /// Random `(p, q, ω, c)` in the conservation check.
    pub conservation_samples: usize,
    /// Light-speed range of the conservation check.
    pub conservation_c: [f64; 2],
    pub max_fit_residual: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            c_values: None,
            c_min: 10f64.powf(1.5),
            c_max: 1e4,
            c_points: 6,
            seed: 20_240_611,
            samples: 20_000,
            sample_radius: 10.0,
            conservation_samples: 1_000_000,
            conservation_c: [10.0, 1e4],
            max_fit_residual: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvolutionSection {
    pub c: f64,
    /// Coarse momentum points per axis; the fine level doubles it.
    pub n_p: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub r_max: f64,
    /// Centres and radius of the bump test function `φ(p, q)`.
    pub centre_p: [f64; 3],
    pub centre_q: [f64; 3],
    pub radius: f64,
}

impl Default for InvolutionSection {
    fn default() -> Self {
        InvolutionSection {
            c: 10.0,
            n_p: 12,
            n_theta: 4,
            n_phi: 8,
            r_max: 2.3,
            centre_p: [0.55, -0.3, 0.2],
            centre_q: [-0.35, 0.45, -0.15],
            radius: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceSection {
    pub c: f64,
    pub n_p: Vec<usize>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for BalanceSection {
    fn default() -> Self {
        BalanceSection { c: 10f64.powf(1.5), n_p: vec![13, 17, 21, 25], n_theta: 2, n_phi: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

/// Everything an experiment needs; read from TOML, every section optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid: GridSection,
    pub quadrature: QuadratureSection,
    pub schedule: ScheduleSection,
    pub solve: SolveSection,
    pub sweep: SweepSection,
    pub involution: InvolutionSection,
    pub balance: BalanceSection,
    pub output: OutputSection,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.n_x == 0 || g.n_p < 3 {
            return Err(Error::Config(format!("need n_x >= 1 and n_p >= 3, got {} and {}", g.n_x, g.n_p)));
        }
        if let Some(r) = g.r_max {
            positive("grid.r_max", r)?;
        }
        if !(g.r_level > 0.0 && g.r_level < 1.0) {
            return Err(Error::Config(format!("grid.r_level must lie in (0, 1), got {}", g.r_level)));
        }
        SphereRule::new(self.quadrature.n_theta, self.quadrature.n_phi).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(r) = self.quadrature.envelope_rate {
            positive("quadrature.envelope_rate", r)?;
        }
        let s = &self.schedule;
        positive("schedule.omega0", s.omega0)?;
        positive("schedule.beta0", s.beta0)?;
        positive("schedule.d_safety", s.d_safety)?;
        if let Some(d) = s.d {
            positive("schedule.d", d)?;
        }
        if !(0.0..1.0).contains(&s.amplitude) {
            return Err(Error::Config(format!("schedule.amplitude must lie in [0, 1), got {}", s.amplitude)));
        }
        // the initial data peak at 1 + amplitude and must sit below u0(0) = omega0
        if 1.0 + s.amplitude > s.omega0 {
            return Err(Error::Config(format!(
                "initial data peak 1 + amplitude = {} exceeds omega0 = {}",
                1.0 + s.amplitude,
                s.omega0
            )));
        }
        let v = &self.solve;
        positive("solve.c", v.c)?;
        positive("solve.tolerance", v.tolerance)?;
        if v.n_t == 0 || v.max_iterations == 0 {
            return Err(Error::Config("solve.n_t and solve.max_iterations must be positive".into()));
        }
        let w = &self.sweep;
        for c in self.c_values() {
            positive("sweep c value", c)?;
        }
        if self.c_values().len() < 2 {
            return Err(Error::Config("the c-sweep needs at least two values".into()));
        }
        if w.samples == 0 {
            return Err(Error::Config("sweep.samples must be positive".into()));
        }
        positive("sweep.sample_radius", w.sample_radius)?;
        positive("sweep.conservation_c", w.conservation_c[0])?;
        if w.conservation_c[1] < w.conservation_c[0] {
            return Err(Error::Config("sweep.conservation_c must be increasing".into()));
        }
        let i = &self.involution;
        positive("involution.c", i.c)?;
        positive("involution.r_max", i.r_max)?;
        positive("involution.radius", i.radius)?;
        SphereRule::new(i.n_theta, i.n_phi).map_err(|e| Error::Config(e.to_string()))?;
        if i.n_p < 3 {
            return Err(Error::Config("involution.n_p must be at least 3".into()));
        }
        let b = &self.balance;
        positive("balance.c", b.c)?;
        if b.n_p.len() < 2 || b.n_p.iter().any(|&n| n < 3) {
            return Err(Error::Config("balance.n_p needs at least two sizes, each >= 3".into()));
        }
        SphereRule::new(b.n_theta, b.n_phi).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// The light speeds of the sweep, increasing.
    pub fn c_values(&self) -> Vec<f64> {
        let w = &self.sweep;
        if let Some(v) = &w.c_values {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            return v;
        }
        if w.c_points < 2 {
            return vec![w.c_min];
        }
        let (a, b) = (w.c_min.ln(), w.c_max.ln());
        (0..w.c_points).map(|k| (a + (b - a) * k as f64 / (w.c_points - 1) as f64).exp()).collect()
    }

    /// `R_max` from the config or the envelope sizing.
    pub fn r_max(&self) -> f64 {
        self.grid.r_max.unwrap_or_else(|| {
            let rate = Schedule::min_rate(self.schedule.beta0);
            DecayEnvelope::classical(rate / 2.0, 1.0).radius_for_level(self.grid.r_level)
        })
    }

    pub fn phase_grid_with(&self, n_x: usize, n_p: usize) -> Result<Arc<PhaseGrid>> {
        Ok(Arc::new(PhaseGrid::new(SpatialGrid::new([n_x, 1, 1])?, MomentumGrid::new(self.r_max(), n_p)?)))
    }

    pub fn phase_grid(&self) -> Result<Arc<PhaseGrid>> {
        self.phase_grid_with(self.grid.n_x, self.grid.n_p)
    }

    /// Quadrature without the cutoff or weighting options, as used to size `D`.
    pub fn bare_quadrature(&self, grid: Arc<PhaseGrid>, n_theta: usize, n_phi: usize) -> Result<CollisionQuadrature> {
        Ok(CollisionQuadrature::new(grid, SphereRule::new(n_theta, n_phi)?))
    }

    /// Quadrature with the configured cutoff and weighting.
    pub fn quadrature_with(&self, grid: Arc<PhaseGrid>, n_theta: usize, n_phi: usize) -> Result<CollisionQuadrature> {
        let q = &self.quadrature;
        let weighting = q.envelope_weighting.then(|| self.envelope_rate());
        Ok(self
            .bare_quadrature(grid, n_theta, n_phi)?
            .with_ball_cutoff(q.energy_cutoff)
            .with_envelope_weighting(weighting))
    }

    pub fn envelope_rate(&self) -> f64 {
        self.quadrature.envelope_rate.unwrap_or_else(|| Schedule::min_rate(self.schedule.beta0))
    }

    pub fn quadrature(&self, grid: Arc<PhaseGrid>) -> Result<CollisionQuadrature> {
        self.quadrature_with(grid, self.quadrature.n_theta, self.quadrature.n_phi)
    }

    /// Schedule whose `D` dominates the loss rates of every listed
    /// equation on every listed quadrature.
    pub fn schedule_for(&self, quads: &[CollisionQuadrature], dynamics: &[Dynamics]) -> Result<Schedule> {
        let s = &self.schedule;
        let d = match s.d {
            Some(d) => d,
            None => {
                let mut ops = Vec::new();
                for q in quads {
                    for d in dynamics {
                        ops.push(CollisionOperator::new(*d, q.clone(), Symmetry::None)?);
                    }
                }
                estimate_d(ops.iter(), s.beta0, s.d_safety)?
            }
        };
        Schedule::new(s.omega0, s.beta0, d)
    }

    /// Classical dynamics plus the relativistic one at every sweep value.
    pub fn sweep_dynamics(&self) -> Result<Vec<Dynamics>> {
        let mut v = vec![Dynamics::Classical];
        for c in self.c_values() {
            v.push(Dynamics::Relativistic(LightSpeed::new(c)?));
        }
        Ok(v)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let v = &self.solve;
        SolverConfig {
            n_t: v.n_t,
            t_end: None,
            tolerance: v.tolerance,
            max_iterations: v.max_iterations,
            sandwich_slack: v.sandwich_slack,
            mode: v.mode,
            use_symmetry: v.use_symmetry,
            table_bytes: self.quadrature.table_bytes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = SweepConfig::from_toml("").unwrap();
        assert_eq!(c, SweepConfig::default());
        assert_eq!(c.c_values().len(), 6);
        assert!((c.c_values()[0] - 10f64.powf(1.5)).abs() < 1e-12);
        assert!((c.c_values()[5] - 1e4).abs() < 1e-9);
    }

    #[test]
    fn sections_override_defaults() {
        let c = SweepConfig::from_toml("[grid]\nn_p = 9\n[sweep]\nc_values = [100.0, 20.0]\nseed = 7\n").unwrap();
        assert_eq!(c.grid.n_p, 9);
        assert_eq!(c.grid.n_x, 8);
        assert_eq!(c.c_values(), vec![20.0, 100.0]);
        assert_eq!(c.sweep.seed, 7);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SweepConfig::from_toml("[grid]\nnp = 9\n").is_err());
        assert!(SweepConfig::from_toml("[schedule]\nbeta0 = -1.0\n").is_err());
        assert!(SweepConfig::from_toml("[quadrature]\nn_theta = 0\n").is_err());
        assert!(SweepConfig::from_toml("[schedule]\nomega0 = 1.2\namplitude = 0.5\n").is_err());
        assert!(SweepConfig::from_toml("[grid\n").is_err());
    }

    #[test]
    fn envelope_sized_radius() {
        let c = SweepConfig::default();
        let rate = Schedule::min_rate(4.0) / 2.0;
        assert!(((-rate * c.r_max().powi(2)).exp() - 1e-14).abs() < 1e-16);
    }
}
