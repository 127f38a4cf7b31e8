//! Distribution functions on the torus times a truncated momentum cube:
//! storage, the `‖·‖_{0,1}` norm, the momentum-continuity functional `F_η`,
//! decay envelopes and initial data.

mod envelope;
mod grid;
mod init;
mod probe;
pub mod snapshot;

use std::sync::Arc;

pub use envelope::{DecayEnvelope, EnvelopeKind, EnvelopeReport};
pub use grid::{Cell, MomentumGrid, PhaseGrid, SpatialGrid};
pub use init::{juttner_init, maxwellian_init, perturbed_equilibrium};
pub use probe::{f_eta, ContinuityProbe};
pub use snapshot::{read_snapshot, summary_row, write_snapshot, SUMMARY_HEADER};

use crate::error::{Error, Result};
use crate::kinematics::Momentum;

/// Non-negative samples of `f(t, x, p)` on a [`PhaseGrid`].
#[derive(Clone, Debug)]
pub struct DistributionGrid {
    grid: Arc<PhaseGrid>,
    values: Vec<f64>,
    t: f64,
    envelope: Option<DecayEnvelope>,
}

impl DistributionGrid {
    pub fn new(grid: Arc<PhaseGrid>, values: Vec<f64>, t: f64, envelope: Option<DecayEnvelope>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "distribution value {} at node {i} is negative or not finite",
                values[i]
            )));
        }
        Ok(DistributionGrid { grid, values, t, envelope })
    }

    pub fn zeros(grid: Arc<PhaseGrid>) -> Self {
        let n = grid.len();
        DistributionGrid { grid, values: vec![0.0; n], t: 0.0, envelope: None }
    }

    /// Samples `f(x, p)` at every node.
    pub fn from_fn(
        grid: Arc<PhaseGrid>,
        t: f64,
        envelope: Option<DecayEnvelope>,
        f: impl Fn([f64; 3], &Momentum) -> f64,
    ) -> Result<Self> {
        let nx = grid.n_x();
        let positions: Vec<[f64; 3]> = (0..nx).map(|x| grid.spatial.position(x)).collect();
        let mut values = Vec::with_capacity(grid.len());
        for pi in 0..grid.momentum.len() {
            let p = grid.momentum.momentum(pi);
            values.extend(positions.iter().map(|&x| f(x, &p)));
        }
        Self::new(grid, values, t, envelope)
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn envelope(&self) -> Option<&DecayEnvelope> {
        self.envelope.as_ref()
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_envelope(mut self, envelope: Option<DecayEnvelope>) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn value(&self, x: usize, p: usize) -> f64 {
        self.values[p * self.grid.n_x() + x]
    }

    pub fn norm_01(&self) -> f64 {
        self.grid.norm_01(&self.values)
    }

    /// `‖self - other‖_{0,1}`.
    pub fn distance_01(&self, other: &DistributionGrid) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("distance between distributions on different grids".into()));
        }
        Ok(self.grid.norm_01_diff(&self.values, &other.values))
    }

    pub fn mass(&self) -> f64 {
        self.grid.mass(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks the attached envelope; `None` when no envelope is attached.
    pub fn envelope_check(&self) -> Option<EnvelopeReport> {
        self.envelope.map(|env| self.check_against(&env))
    }

    pub fn check_against(&self, env: &DecayEnvelope) -> EnvelopeReport {
        let nx = self.grid.n_x();
        let mut worst = (f64::NEG_INFINITY, (0, 0));
        for pi in 0..self.grid.momentum.len() {
            let bound = env.bound(&self.grid.momentum.momentum(pi));
            for x in 0..nx {
                let v = self.values[pi * nx + x];
                let ratio = if bound > 0.0 {
                    v / bound
                } else if v > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                if ratio > worst.0 {
                    worst = (ratio, (x, pi));
                }
            }
        }
        EnvelopeReport { holds: worst.0 <= 1.0 + 1e-12, worst_ratio: worst.0, worst_node: worst.1 }
    }

    /// True when the data are invariant under reflections and exchange of
    /// `p2`, `p3` and constant along `x2`, `x3`, to relative tolerance `tol`.
    pub fn is_axially_symmetric(&self, tol: f64) -> bool {
        let dims = self.grid.spatial.dims();
        if dims[1] != 1 || dims[2] != 1 {
            return false;
        }
        let nx = self.grid.n_x();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mg = &self.grid.momentum;
        (0..mg.len()).all(|pi| {
            let ci = mg.canonical_node(pi);
            (0..nx).all(|x| (self.values[pi * nx + x] - self.values[ci * nx + x]).abs() <= tol * scale)
        })
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn phase(n_x: [usize; 3], r: f64, n_p: usize) -> Arc<PhaseGrid> {
        Arc::new(PhaseGrid::new(SpatialGrid::new(n_x).unwrap(), MomentumGrid::new(r, n_p).unwrap()))
    }

    #[test]
    fn norm_of_zero_is_zero() {
        let f = DistributionGrid::zeros(phase([2, 1, 1], 2.0, 5));
        assert_eq!(f.norm_01(), 0.0);
    }

    #[test]
    fn norm_of_gaussian() {
        let g = phase([1, 1, 1], 6.0, 64);
        let f = DistributionGrid::from_fn(g, 0.0, None, |_, p| (-p.norm_sq()).exp()).unwrap();
        assert!((f.norm_01() - PI.powf(1.5)).abs() < 1e-6, "{}", f.norm_01());
    }

    #[test]
    fn norm_takes_sup_over_space() {
        let g = phase([4, 1, 1], 6.0, 64);
        let f = DistributionGrid::from_fn(g, 0.0, None, |x, p| (1.0 + 0.5 * (2.0 * PI * x[0]).sin()) * (-p.norm_sq()).exp())
            .unwrap();
        assert!((f.norm_01() - 1.5 * PI.powf(1.5)).abs() < 1e-6);
    }

    #[test]
    fn rejects_negative_and_mismatched_values() {
        let g = phase([1, 1, 1], 1.0, 3);
        assert!(DistributionGrid::new(g.clone(), vec![0.0; 26], 0.0, None).is_err());
        let mut v = vec![0.0; 27];
        v[3] = -1.0;
        assert!(DistributionGrid::new(g, v, 0.0, None).is_err());
    }

    #[test]
    fn maxwellian_examples() {
        let g = phase([4, 1, 1], 6.0, 48);
        let homogeneous = maxwellian_init(g.clone(), 1.0, 0.0).unwrap();
        assert!(homogeneous.is_axially_symmetric(1e-15));
        let f = maxwellian_init(g.clone(), 1.0, 0.3).unwrap();
        assert!(f.envelope_check().unwrap().holds);
        assert!(f.is_axially_symmetric(1e-15));
        for alpha in [0.7, 1.0, 2.0] {
            let f = maxwellian_init(g.clone(), alpha, 0.3).unwrap();
            let exact = 1.3 * (PI / alpha).powf(1.5);
            assert!((f.norm_01() - exact).abs() < 1e-6 * exact, "alpha {alpha}");
        }
        assert!(maxwellian_init(g, 1.0, 1.0).is_err());
    }

    #[test]
    fn envelope_violation_is_located() {
        let g = phase([2, 1, 1], 4.0, 9);
        let f = maxwellian_init(g.clone(), 1.0, 0.0).unwrap();
        let env = *f.envelope().unwrap();
        let mut values = f.clone().into_values();
        let node = (1, 40);
        values[node.1 * 2 + node.0] *= 2.0;
        let bad = DistributionGrid::new(g, values, 0.0, Some(env)).unwrap();
        let report = bad.envelope_check().unwrap();
        assert!(!report.holds);
        assert_eq!(report.worst_node, node);
        assert!((report.worst_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn juttner_examples() {
        let g = phase([4, 1, 1], 6.0, 25);
        let c = crate::kinematics::LightSpeed::new(1e4).unwrap();
        let beta0 = 1.5;
        let f = juttner_init(g.clone(), beta0, c, 0.4).unwrap();
        assert!(f.envelope_check().unwrap().holds);
        let mg = &g.momentum;
        let centre = mg.index(12, 12, 12);
        for x in 0..4 {
            let pos = g.spatial.position(x);
            assert!((f.value(x, centre) - (1.0 + 0.4 * (2.0 * PI * pos[0]).sin())).abs() < 1e-15);
        }
        // Newtonian limit of the exponent
        for pi in 0..mg.len() {
            let p = mg.momentum(pi);
            if p.norm() > 5.0 {
                continue;
            }
            for x in 0..4 {
                let pos = g.spatial.position(x);
                let lim = (1.0 + 0.4 * (2.0 * PI * pos[0]).sin()) * (-0.5 * beta0 * p.norm_sq()).exp();
                // exponent error is beta0 |p|^4 / (8 c^2) to leading order
                let tol = beta0 * p.norm_sq().powi(2) / (4.0 * 1e8) * lim + 1e-15;
                assert!((f.value(x, pi) - lim).abs() <= tol);
            }
        }
    }

    #[test]
    fn juttner_envelope_is_dominated_uniformly_in_c() {
        // sqrt(c^4 + c^2 q^2) - c^2 >= (sqrt(1 + q^2) - 1) / 2 for c >= 1
        let mg = MomentumGrid::new(8.0, 33).unwrap();
        for c in [1.0, 3.0, 100.0, 1e4] {
            let ls = crate::kinematics::LightSpeed::new(c).unwrap();
            for pi in 0..mg.len() {
                let p = mg.momentum(pi);
                let lhs = crate::kinematics::kinetic_energy(&p, ls);
                let rhs = 0.5 * ((1.0 + p.norm_sq()).sqrt() - 1.0);
                assert!(lhs >= rhs * (1.0 - 1e-14), "c {c} p {p:?}");
            }
        }
    }
}
