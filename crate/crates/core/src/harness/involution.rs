use rayon::prelude::*;
use serde::Serialize;

use super::config::SweepConfig;
use crate::collision::SphereRule;
use crate::distributions::MomentumGrid;
use crate::dynamics::Dynamics;
use crate::error::Result;
use crate::kinematics::{LightSpeed, Momentum, UnitVector};

/// `exp(1 - 1 / (1 - s^2))` for `s < 1`, zero beyond; smooth, peak 1 at `s = 0`.
fn bump(s_sq: f64) -> f64 {
    if s_sq >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s_sq)).exp()
    }
}

fn dist_sq(a: &Momentum, b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a.0[i] - b[i]).powi(2)).sum()
}

/// Test function for the involution study.
#[derive(Clone, Copy, Debug)]
pub enum TestFunction {
    /// `b(|p - a| / r) b(|q - b| / r)` with `b` the smooth bump.
    Bumps { a: [f64; 3], b: [f64; 3], r: f64 },
    /// `b(|p + q - (a + b)| / 2r) exp(-(e(p) + e(q)))`, a function of collision
    /// invariants only.
    Invariant { a: [f64; 3], b: [f64; 3], r: f64 },
}

impl TestFunction {
    fn eval(&self, p: &Momentum, q: &Momentum, dynamics: Dynamics) -> f64 {
        match *self {
            TestFunction::Bumps { a, b, r } => {
                let r2 = r * r;
                let u = bump(dist_sq(p, &a) / r2);
                if u == 0.0 {
                    return 0.0;
                }
                u * bump(dist_sq(q, &b) / r2)
            }
            TestFunction::Invariant { a, b, r } => {
                let centre = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                let s = bump(dist_sq(&(*p + *q), &centre) / (4.0 * r * r));
                if s == 0.0 {
                    return 0.0;
                }
                s * (-(dynamics.kinetic_energy(p) + dynamics.kinetic_energy(q))).exp()
            }
        }
    }

    /// Upper bound of `e(p) + e(q)` on the support; collisions keep it fixed.
    fn energy_bound(&self, dynamics: Dynamics) -> f64 {
        let e = |c: &[f64; 3], r: f64| {
            let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() + r;
            dynamics.kinetic_energy(&Momentum::new(n, 0.0, 0.0))
        };
        match *self {
            TestFunction::Bumps { a, b, r } => e(&a, r) + e(&b, r),
            TestFunction::Invariant { .. } => f64::INFINITY,
        }
    }

    fn total_centre(&self) -> ([f64; 3], f64) {
        match *self {
            TestFunction::Bumps { a, b, r } | TestFunction::Invariant { a, b, r } => {
                ([a[0] + b[0], a[1] + b[1], a[2] + b[2]], 2.0 * r)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvolutionLevel {
    pub n_p: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub h: f64,
    /// `∫∫∫ K_c(p,q,ω) φ(p,q)`.
    pub direct: f64,
    /// `∫∫∫ K_c(p,q,ω) φ(p',q')`.
    pub swapped: f64,
    /// `|swapped - direct| / |direct|`.
    pub discrepancy: f64,
}

/// Both integrals of the measure identity `K_c dq dp = K_c' dq' dp'` tested
/// against `φ`, on the cube `[-R, R]^3` with `n_p` points per axis.
pub fn involution_discrepancy(
    dynamics: Dynamics,
    phi: TestFunction,
    r_max: f64,
    n_p: usize,
    sphere: &SphereRule,
) -> Result<InvolutionLevel> {
    let grid = MomentumGrid::new(r_max, n_p)?;
    let nodes: Vec<(UnitVector, f64)> = sphere
        .folded()
        .into_iter()
        .map(|(w, wt)| Ok((UnitVector::from_unit(w)?, wt)))
        .collect::<Result<_>>()?;
    let e_max = phi.energy_bound(dynamics);
    let (centre, radius) = phi.total_centre();
    let radius_sq = radius * radius;
    let momenta: Vec<Momentum> = (0..grid.len()).map(|i| grid.momentum(i)).collect();
    let energies: Vec<f64> = momenta.iter().map(|p| dynamics.kinetic_energy(p)).collect();
    let per_p: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = momenta[i];
            let (mut direct, mut swapped) = (0.0, 0.0);
            for j in 0..grid.len() {
                let q = momenta[j];
                // both integrands vanish unless p + q lies near the centre
                if dist_sq(&(p + q), &centre) >= radius_sq || energies[i] + energies[j] > e_max {
                    continue;
                }
                let w_pq = grid.weight(i) * grid.weight(j);
                let f_pq = phi.eval(&p, &q, dynamics);
                for (omega, wt) in &nodes {
                    let k = dynamics.kernel(&p, &q, omega) * wt * w_pq;
                    let (pp, qq) = dynamics.post_collision(&p, &q, omega);
                    direct += k * f_pq;
                    swapped += k * phi.eval(&pp, &qq, dynamics);
                }
            }
            (direct, swapped)
        })
        .collect();
    let direct: f64 = per_p.iter().map(|v| v.0).sum();
    let swapped: f64 = per_p.iter().map(|v| v.1).sum();
    Ok(InvolutionLevel {
        n_p,
        n_theta: sphere.n_theta(),
        n_phi: sphere.n_phi(),
        h: grid.spacing(),
        direct,
        swapped,
        discrepancy: (swapped - direct).abs() / direct.abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvolutionStudy {
    pub equation: &'static str,
    pub c: Option<f64>,
    /// Coarse then doubled resolution, bump test function.
    pub levels: Vec<InvolutionLevel>,
    /// Coarse over fine discrepancy.
    pub ratio: f64,
    /// Discrepancy for a function of collision invariants, coarse level.
    pub invariant_discrepancy: f64,
}

impl InvolutionStudy {
    pub fn passes(&self) -> bool {
        self.ratio >= 3.0 && self.invariant_discrepancy <= 1e-12
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvolutionReport {
    pub relativistic: InvolutionStudy,
    pub classical: InvolutionStudy,
}

impl InvolutionReport {
    pub fn passes(&self) -> bool {
        self.relativistic.passes() && self.classical.passes()
    }
}

/// Refinement study of the measure identity: momentum spacing and both
/// sphere resolutions are doubled, for the relativistic and the hard-sphere
/// kernel.
pub fn verify_involution_measure(config: &SweepConfig) -> Result<InvolutionReport> {
    let s = &config.involution;
    let coarse = SphereRule::new(s.n_theta, s.n_phi)?;
    let fine = SphereRule::new(2 * s.n_theta, 2 * s.n_phi)?;
    // doubling the points per interval
    let n_fine = 2 * (s.n_p - 1) + 1;
    let bumps = TestFunction::Bumps { a: s.centre_p, b: s.centre_q, r: s.radius };
    let invariant = TestFunction::Invariant { a: s.centre_p, b: s.centre_q, r: s.radius };
    let study = |dynamics: Dynamics| -> Result<InvolutionStudy> {
        let a = involution_discrepancy(dynamics, bumps, s.r_max, s.n_p, &coarse)?;
        let b = involution_discrepancy(dynamics, bumps, s.r_max, n_fine, &fine)?;
        let inv = involution_discrepancy(dynamics, invariant, s.r_max, s.n_p, &coarse)?;
        let (equation, c) = match dynamics {
            Dynamics::Relativistic(c) => ("relativistic", Some(c.c())),
            Dynamics::Classical => ("classical", None),
        };
        Ok(InvolutionStudy {
            equation,
            c,
            ratio: a.discrepancy / b.discrepancy,
            levels: vec![a, b],
            invariant_discrepancy: inv.discrepancy,
        })
    };
    Ok(InvolutionReport {
        relativistic: study(Dynamics::Relativistic(LightSpeed::new(s.c)?))?,
        classical: study(Dynamics::Classical)?,
    })
}
