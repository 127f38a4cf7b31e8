//! Two-body elastic collision kinematics, relativistic and Newtonian.
//!
//! Rest mass is one throughout, so momenta and velocities share units. The
//! relativistic map uses the closed-form collision parameter `a(p, q, ω)` with
//! `p' = p - aω`, `q' = q + aω`; the hard-sphere map uses `a = ω·(p - q)`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A momentum 3-vector (rest mass 1).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Momentum(pub [f64; 3]);

impl Momentum {
    pub const ZERO: Momentum = Momentum([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Momentum([x, y, z])
    }

    pub fn dot(&self, other: &Momentum) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        let s = self.norm_sq();
        if s.is_finite() {
            s.sqrt()
        } else {
            self.0[0].hypot(self.0[1]).hypot(self.0[2])
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot_unit(&self, w: &UnitVector) -> f64 {
        self.0[0] * w.0[0] + self.0[1] * w.0[1] + self.0[2] * w.0[2]
    }
}

impl Add for Momentum {
    type Output = Momentum;
    fn add(self, rhs: Momentum) -> Momentum {
        Momentum([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Momentum {
    type Output = Momentum;
    fn sub(self, rhs: Momentum) -> Momentum {
        Momentum([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Mul<f64> for Momentum {
    type Output = Momentum;
    fn mul(self, s: f64) -> Momentum {
        Momentum([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for Momentum {
    type Output = Momentum;
    fn neg(self) -> Momentum {
        Momentum([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// A direction on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector([f64; 3]);

impl UnitVector {
    /// Normalizes `(x, y, z)`; fails on a zero or non-finite vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize direction ({x}, {y}, {z})"
            )));
        }
        Ok(UnitVector([x / n, y / n, z / n]))
    }

    /// Accepts an already normalized vector, checking `|w| = 1` to 1e-14.
    pub fn from_unit(v: [f64; 3]) -> Result<Self> {
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if (n2.sqrt() - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter(format!(
                "direction {v:?} has norm {} != 1",
                n2.sqrt()
            )));
        }
        Ok(UnitVector(v))
    }

    /// Spherical angles measured from the `e1` axis: `ω = (cos θ, sin θ cos φ, sin θ sin φ)`.
    pub fn from_angles_about_e1(cos_theta: f64, phi: f64) -> Self {
        let s = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        UnitVector([cos_theta, s * phi.cos(), s * phi.sin()])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn as_momentum(&self) -> Momentum {
        Momentum(self.0)
    }
}

/// The speed of light `c` together with a validity threshold `c0`.
///
/// `c0 = 0` means no threshold has been imposed; the kinematics accept any
/// `c > 0` and leave the `c0` policy to the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightSpeed {
    c: f64,
    c0: f64,
}

impl LightSpeed {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("light speed must be positive, got {c}")));
        }
        Ok(LightSpeed { c, c0: 0.0 })
    }

    /// A light speed that must exceed the positive threshold `c0`.
    pub fn above(c: f64, c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("threshold c0 must be positive, got {c0}")));
        }
        let ls = LightSpeed::new(c)?;
        if c <= c0 {
            return Err(Error::BelowThreshold { c, c0 });
        }
        Ok(LightSpeed { c0, ..ls })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn threshold(&self) -> f64 {
        self.c0
    }
}

/// `p0 = E_c(p) / c = sqrt(c^2 + |p|^2)`, evaluated without squaring `c`.
#[inline]
pub fn energy_over_c(p: &Momentum, c: f64) -> f64 {
    c.hypot(p.norm())
}

/// Relativistic energy `E_c(p) = c p0`.
pub fn energy(p: &Momentum, c: LightSpeed) -> f64 {
    c.c * energy_over_c(p, c.c)
}

/// Kinetic part `E_c(p) - c^2 = c |p|^2 / (p0 + c)`, free of cancellation.
#[inline]
pub fn kinetic_energy(p: &Momentum, c: LightSpeed) -> f64 {
    kinetic_energy_with(p.norm_sq(), energy_over_c(p, c.c), c.c)
}

#[inline]
pub(crate) fn kinetic_energy_with(p_sq: f64, p0: f64, c: f64) -> f64 {
    c * p_sq / (p0 + c)
}

/// Relativistic velocity `c p / p0`.
pub fn velocity(p: &Momentum, c: LightSpeed) -> Momentum {
    *p * (c.c / energy_over_c(p, c.c))
}

/// Numerator `(ω·p) q0 - (ω·q) p0`, shared by `a` and the kernel; equals
/// `c^-1 ω·(p̂ - q̂) p0 q0`.
#[inline]
pub(crate) fn velocity_projection_numerator(a_w: f64, b_w: f64, p0: f64, q0: f64) -> f64 {
    a_w * q0 - b_w * p0
}

/// `(p0 + q0)^2 - [ω·(p + q)]^2`, bounded below by `2c^2`.
#[inline]
pub(crate) fn collision_denominator(a_w: f64, b_w: f64, p0: f64, q0: f64) -> f64 {
    let s = p0 + q0;
    let w = a_w + b_w;
    s * s - w * w
}

/// Collision parameter `a(p, q, ω) = 2 (p0 + q0) [c^-1 ω·(p̂ - q̂)] p0 q0 / Den`.
pub fn a_coefficient(p: &Momentum, q: &Momentum, w: &UnitVector, c: LightSpeed) -> f64 {
    let p0 = energy_over_c(p, c.c);
    let q0 = energy_over_c(q, c.c);
    a_with(p.dot_unit(w), q.dot_unit(w), p0, q0)
}

#[inline]
pub(crate) fn a_with(a_w: f64, b_w: f64, p0: f64, q0: f64) -> f64 {
    let num = velocity_projection_numerator(a_w, b_w, p0, q0);
    2.0 * (p0 + q0) * num / collision_denominator(a_w, b_w, p0, q0)
}

/// Relativistic post-collision momenta `(p', q') = (p - aω, q + aω)`.
pub fn rel_post_collision(
    p: &Momentum,
    q: &Momentum,
    w: &UnitVector,
    c: LightSpeed,
) -> (Momentum, Momentum) {
    let a = a_coefficient(p, q, w, c);
    let aw = w.as_momentum() * a;
    (*p - aw, *q + aw)
}

/// Hard-sphere post-collision momenta `p̄ = p - ω·(p - q) ω`, `q̄ = q + ω·(p - q) ω`.
pub fn cl_post_collision(p: &Momentum, q: &Momentum, w: &UnitVector) -> (Momentum, Momentum) {
    let a = p.dot_unit(w) - q.dot_unit(w);
    let aw = w.as_momentum() * a;
    (*p - aw, *q + aw)
}

/// `|q' - q̄| + |p' - p̄|`, evaluated from the factored difference
/// `ω·(p - q) - a = Num / Den` so that no digits are lost at large `c`.
///
/// `Num = ω·(p + q) (|p|^2 - |q|^2 - (ω·p)^2 + (ω·q)^2)`.
pub fn post_collision_gap(p: &Momentum, q: &Momentum, w: &UnitVector, c: LightSpeed) -> f64 {
    let (a_w, b_w) = (p.dot_unit(w), q.dot_unit(w));
    let (p0, q0) = (energy_over_c(p, c.c), energy_over_c(q, c.c));
    let num = (a_w + b_w) * (p.norm_sq() - q.norm_sq() - a_w * a_w + b_w * b_w);
    let den = collision_denominator(a_w, b_w, p0, q0);
    2.0 * (num / den).abs()
}
