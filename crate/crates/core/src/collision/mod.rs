//! Deterministic quadrature of the collision operators `Q(f, g)` and their
//! gain/loss split.

mod operator;
mod sphere;

pub use operator::{pack, unpack, CollisionOperator, CollisionQuadrature, OutOfGridReport, Symmetry};
pub use sphere::{gauss_legendre, monomial_integral, SphereRule};

use crate::distributions::DistributionGrid;
use crate::dynamics::Dynamics;
use crate::error::Result;
use crate::kinematics::LightSpeed;

/// Relativistic `Q_rel(f, g)` on the grid, one value per node.
pub fn q_rel(f: &DistributionGrid, g: &DistributionGrid, c: LightSpeed, quad: &CollisionQuadrature) -> Result<Vec<f64>> {
    CollisionOperator::new(Dynamics::Relativistic(c), quad.clone(), Symmetry::None)?.collide(f, g)
}

/// Hard-sphere `Q_cl(f, g)`.
pub fn q_cl(f: &DistributionGrid, g: &DistributionGrid, quad: &CollisionQuadrature) -> Result<Vec<f64>> {
    CollisionOperator::new(Dynamics::Classical, quad.clone(), Symmetry::None)?.collide(f, g)
}

pub fn q_rel_gain(f: &DistributionGrid, g: &DistributionGrid, c: LightSpeed, quad: &CollisionQuadrature) -> Result<Vec<f64>> {
    CollisionOperator::new(Dynamics::Relativistic(c), quad.clone(), Symmetry::None)?.gain(f, g)
}

pub fn q_rel_loss_rate(g: &DistributionGrid, c: LightSpeed, quad: &CollisionQuadrature) -> Result<Vec<f64>> {
    CollisionOperator::new(Dynamics::Relativistic(c), quad.clone(), Symmetry::None)?.loss_rate(g)
}
