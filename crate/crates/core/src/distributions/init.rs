use std::f64::consts::PI;
use std::sync::Arc;

use super::{DecayEnvelope, DistributionGrid, PhaseGrid};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::kinematics::{kinetic_energy, LightSpeed};

fn check_amplitude(amplitude: f64) -> Result<()> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!("perturbation amplitude must lie in [0, 1), got {amplitude}")));
    }
    Ok(())
}

fn modulation(amplitude: f64, x: [f64; 3]) -> f64 {
    1.0 + amplitude * (2.0 * PI * x[0]).sin()
}

/// `f(x, p) = (1 + a sin 2πx1) exp(-α0 |p|^2)`.
pub fn maxwellian_init(grid: Arc<PhaseGrid>, alpha0: f64, amplitude: f64) -> Result<DistributionGrid> {
    if !(alpha0 > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha0 must be positive, got {alpha0}")));
    }
    check_amplitude(amplitude)?;
    let env = DecayEnvelope::classical(alpha0, 1.0 + amplitude);
    DistributionGrid::from_fn(grid, 0.0, Some(env), |x, p| modulation(amplitude, x) * (-alpha0 * p.norm_sq()).exp())
}

/// `f(x, p) = (1 + a sin 2πx1) exp(-β0 (E_c(p) - c^2))`.
pub fn juttner_init(grid: Arc<PhaseGrid>, beta0: f64, c: LightSpeed, amplitude: f64) -> Result<DistributionGrid> {
    if !(beta0 > 0.0) {
        return Err(Error::InvalidParameter(format!("beta0 must be positive, got {beta0}")));
    }
    check_amplitude(amplitude)?;
    let env = DecayEnvelope::relativistic(beta0, c, 1.0 + amplitude);
    DistributionGrid::from_fn(grid, 0.0, Some(env), |x, p| modulation(amplitude, x) * (-beta0 * kinetic_energy(p, c)).exp())
}

/// Paired initial data for the Newtonian-limit comparison: the Maxwellian
/// uses `α0 = β0 / 2`, the `c -> ∞` limit of the Jüttner exponent.
pub fn perturbed_equilibrium(
    grid: Arc<PhaseGrid>,
    dynamics: Dynamics,
    beta0: f64,
    amplitude: f64,
) -> Result<DistributionGrid> {
    match dynamics {
        Dynamics::Relativistic(c) => juttner_init(grid, beta0, c, amplitude),
        Dynamics::Classical => maxwellian_init(grid, 0.5 * beta0, amplitude),
    }
}
