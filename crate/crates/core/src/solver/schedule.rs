use serde::Serialize;

use crate::collision::CollisionOperator;
use crate::distributions::DecayEnvelope;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::kinematics::{LightSpeed, Momentum};

/// Upper-solution schedule `u0(t, p) = ω(t) exp(-β(t) e(p))` with
/// `ω(t) = ω0 / (1 - 3Dω0 t)`, `β(t) = β0 + (2/3) ln(1 - 3Dω0 t)`
/// on `[0, T]`, `T = (1 - e^{-3β0/2}) / (6Dω0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub omega0: f64,
    pub beta0: f64,
    pub d: f64,
    pub t: f64,
}

impl Schedule {
    pub fn new(omega0: f64, beta0: f64, d: f64) -> Result<Self> {
        for (name, v) in [("omega0", omega0), ("beta0", beta0), ("D", d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let t = -(-1.5 * beta0).exp_m1() / (6.0 * d * omega0);
        Ok(Schedule { omega0, beta0, d, t })
    }

    /// `β(T)`, the smallest rate on `[0, T]`; depends on `β0` only.
    pub fn min_rate(beta0: f64) -> f64 {
        beta0 + (2.0 / 3.0) * (0.5 * (1.0 + (-1.5 * beta0).exp())).ln()
    }

    fn decay(&self, t: f64) -> f64 {
        1.0 - 3.0 * self.d * self.omega0 * t
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.omega0 / self.decay(t)
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta0 + (2.0 / 3.0) * self.decay(t).ln()
    }

    pub fn omega_dot(&self, t: f64) -> f64 {
        3.0 * self.d * self.omega(t).powi(2)
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        -2.0 * self.d * self.omega(t)
    }

    /// `c0 = √48 D T / β0`; the relativistic scheme is run only for `c > c0`.
    pub fn c0(&self) -> f64 {
        48f64.sqrt() * self.d * self.t / self.beta0
    }

    /// Checks `c > c0` and returns the light speed tagged with the threshold.
    pub fn light_speed(&self, c: f64) -> Result<LightSpeed> {
        LightSpeed::above(c, self.c0())
    }

    pub fn upper(&self, t: f64, p: &Momentum, dynamics: Dynamics) -> f64 {
        self.omega(t) * (-self.beta(t) * dynamics.kinetic_energy(p)).exp()
    }

    /// `u0(t)` as a decay envelope.
    pub fn envelope(&self, t: f64, dynamics: Dynamics) -> DecayEnvelope {
        match dynamics {
            Dynamics::Relativistic(c) => DecayEnvelope::relativistic(self.beta(t), c, self.omega(t)),
            Dynamics::Classical => DecayEnvelope::classical(self.beta(t) / 2.0, self.omega(t)),
        }
    }

    /// Left side of the pointwise sufficient condition
    /// `D(1+|p|)ω² - ω̇ + ωβ̇ e(p) <= 0`.
    pub fn differential_margin(&self, t: f64, p: &Momentum, dynamics: Dynamics) -> f64 {
        let w = self.omega(t);
        self.d * (1.0 + p.norm()) * w * w - self.omega_dot(t) + w * self.beta_dot(t) * dynamics.kinetic_energy(p)
    }
}

/// `sup_p ν(exp(-rate e))(p) / (1 + |p|)` on the operator's grid, with `ν` the loss rate.
pub fn loss_bound_constant(op: &CollisionOperator, rate: f64) -> Result<f64> {
    let grid = op.grid();
    let mg = &grid.momentum;
    let nx = grid.n_x();
    let dynamics = op.dynamics();
    let mut g = vec![0.0; grid.len()];
    for p in 0..mg.len() {
        let v = (-rate * dynamics.kinetic_energy(&mg.momentum(p))).exp();
        g[p * nx..(p + 1) * nx].fill(v);
    }
    let nu = op.loss_rate_batch(&g, nx)?;
    Ok((0..mg.len()).map(|p| nu[p * nx] / (1.0 + mg.momentum(p).norm())).fold(0.0, f64::max))
}

/// `D = safety * max` of [`loss_bound_constant`] over operators at rate `β(T)`.
pub fn estimate_d<'a>(ops: impl IntoIterator<Item = &'a CollisionOperator>, beta0: f64, safety: f64) -> Result<f64> {
    let rate = Schedule::min_rate(beta0);
    let mut sup = 0.0f64;
    for op in ops {
        sup = sup.max(loss_bound_constant(op, rate)?);
    }
    if !(sup > 0.0) {
        return Err(Error::InvalidParameter("loss-rate bound vanished; grid too small".into()));
    }
    Ok(safety * sup)
}
