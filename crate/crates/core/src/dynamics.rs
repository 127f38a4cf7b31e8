//! Selects between the relativistic equation at a given `c` and the
//! hard-sphere equation. Everything downstream of the kernels (collision
//! operators, free transport, decay envelopes) is written against this.

use crate::kernels::{kernel_cl, kernel_rel, kernel_rel_with};
use crate::kinematics::{
    a_with, cl_post_collision, energy_over_c, kinetic_energy_with, rel_post_collision, velocity,
    LightSpeed, Momentum, UnitVector,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dynamics {
    Relativistic(LightSpeed),
    Classical,
}

/// Per-node quantities reused by every collision that involves the node.
#[derive(Clone, Copy, Debug)]
pub(crate) struct NodeKinematics {
    pub p: [f64; 3],
    /// `p0` for the relativistic equation, unused classically.
    pub p0: f64,
}

impl Dynamics {
    pub fn light_speed(&self) -> Option<LightSpeed> {
        match self {
            Dynamics::Relativistic(c) => Some(*c),
            Dynamics::Classical => None,
        }
    }

    /// Free-streaming velocity: `p̂` or `p`.
    pub fn velocity(&self, p: &Momentum) -> Momentum {
        match self {
            Dynamics::Relativistic(c) => velocity(p, *c),
            Dynamics::Classical => *p,
        }
    }

    /// `E_c(p) - c^2`, or `|p|^2 / 2` classically; the exponent of the decay envelopes.
    pub fn kinetic_energy(&self, p: &Momentum) -> f64 {
        match self {
            Dynamics::Relativistic(c) => {
                kinetic_energy_with(p.norm_sq(), energy_over_c(p, c.c()), c.c())
            }
            Dynamics::Classical => 0.5 * p.norm_sq(),
        }
    }

    pub fn post_collision(&self, p: &Momentum, q: &Momentum, w: &UnitVector) -> (Momentum, Momentum) {
        match self {
            Dynamics::Relativistic(c) => rel_post_collision(p, q, w, *c),
            Dynamics::Classical => cl_post_collision(p, q, w),
        }
    }

    pub fn kernel(&self, p: &Momentum, q: &Momentum, w: &UnitVector) -> f64 {
        match self {
            Dynamics::Relativistic(c) => kernel_rel(p, q, w, *c),
            Dynamics::Classical => kernel_cl(p, q, w),
        }
    }

    pub(crate) fn node(&self, p: &Momentum) -> NodeKinematics {
        let p0 = match self {
            Dynamics::Relativistic(c) => energy_over_c(p, c.c()),
            Dynamics::Classical => 0.0,
        };
        NodeKinematics { p: p.0, p0 }
    }

    /// Kernel value and collision parameter `a` for one triple, so that
    /// `p' = p - aω`, `q' = q + aω`. Same arithmetic as the public functions.
    #[inline]
    pub(crate) fn collide(&self, p: &NodeKinematics, q: &NodeKinematics, pq: f64, w: &[f64; 3]) -> (f64, f64) {
        let a_w = p.p[0] * w[0] + p.p[1] * w[1] + p.p[2] * w[2];
        let b_w = q.p[0] * w[0] + q.p[1] * w[1] + q.p[2] * w[2];
        match self {
            Dynamics::Relativistic(c) => {
                let k = kernel_rel_with(a_w, b_w, p.p0, q.p0, pq, c.c());
                (k, a_with(a_w, b_w, p.p0, q.p0))
            }
            Dynamics::Classical => {
                let d = a_w - b_w;
                (d.abs(), d)
            }
        }
    }
}
