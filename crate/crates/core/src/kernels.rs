//! Collision kernels under the normalization `4σ = d = 1`.

use crate::error::{Error, Result};
use crate::kinematics::{
    collision_denominator, energy_over_c, kinetic_energy_with, velocity_projection_numerator,
    LightSpeed, Momentum, UnitVector,
};

/// Cross-section constants: hard-sphere `d = 1` and the matching relativistic
/// `σ = d / 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossSectionConvention {
    d: f64,
    sigma: f64,
}

impl CrossSectionConvention {
    pub const HARD_SPHERE_UNITS: CrossSectionConvention = CrossSectionConvention { d: 1.0, sigma: 0.25 };

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for CrossSectionConvention {
    fn default() -> Self {
        Self::HARD_SPHERE_UNITS
    }
}

/// The Lorentz invariant `𝔤 = (p0 q0 - p·q - c^2)^{1/2} / √2`.
///
/// The radicand is rewritten as `ε(p) + ε(q) + ε(p)ε(q)/c^2 - p·q` with
/// `ε = E_c - c^2`, which keeps full relative accuracy at large `c`.
pub fn lorentz_g(p: &Momentum, q: &Momentum, c: LightSpeed) -> Result<f64> {
    let cv = c.c();
    let (p_sq, q_sq) = (p.norm_sq(), q.norm_sq());
    let ep = kinetic_energy_with(p_sq, energy_over_c(p, cv), cv);
    let eq = kinetic_energy_with(q_sq, energy_over_c(q, cv), cv);
    let radicand = ep + eq + ep * eq / (cv * cv) - p.dot(q);
    if radicand < 0.0 {
        if radicand < -1e-12 * cv * cv {
            return Err(Error::NegativeRadicand { radicand, c: cv });
        }
        return Ok(0.0);
    }
    Ok((0.5 * radicand).sqrt())
}

/// Relativistic kernel
/// `K_c = 2 (p0 q0 - p·q + c^2) (p0 + q0)^2 |ω·(p̂ - q̂)| / [(p0 + q0)^2 - (ω·(p + q))^2]^2`.
pub fn kernel_rel(p: &Momentum, q: &Momentum, w: &UnitVector, c: LightSpeed) -> f64 {
    let cv = c.c();
    let (p0, q0) = (energy_over_c(p, cv), energy_over_c(q, cv));
    kernel_rel_with(p.dot_unit(w), q.dot_unit(w), p0, q0, p.dot(q), cv)
}

#[inline]
pub(crate) fn kernel_rel_with(a_w: f64, b_w: f64, p0: f64, q0: f64, pq: f64, c: f64) -> f64 {
    let num = velocity_projection_numerator(a_w, b_w, p0, q0);
    let den = collision_denominator(a_w, b_w, p0, q0);
    let s = p0 + q0;
    // c |ω·(p/p0 - q/q0)| = c |num| / (p0 q0)
    2.0 * (p0 * q0 - pq + c * c) * s * s * (c * num.abs() / (p0 * q0)) / (den * den)
}

/// Hard-sphere kernel `|ω·(p - q)|` (with `d = 1`).
pub fn kernel_cl(p: &Momentum, q: &Momentum, w: &UnitVector) -> f64 {
    (p.dot_unit(w) - q.dot_unit(w)).abs()
}

/// `|K_c(p, q, ω) - |ω·(p - q)||`, free of cancellation at large `c`.
///
/// Writes `K_c = M |X|` with `X = ω·(p̂ - q̂)` and evaluates
/// `K_c - |Y| = |X| (M - 1) + (|X| - |Y|)`, `Y = ω·(p - q)`, where both
/// `M - 1` and `X - Y` are expanded in the small quantities
/// `δ = p0/c - 1`, `p·q / c^2`, `(ω·(p + q))^2 / c^2`.
pub fn kernel_gap(p: &Momentum, q: &Momentum, w: &UnitVector, c: LightSpeed) -> f64 {
    let cv = c.c();
    let (p_sq, q_sq) = (p.norm_sq(), q.norm_sq());
    let (p0, q0) = (energy_over_c(p, cv), energy_over_c(q, cv));
    let (a_w, b_w) = (p.dot_unit(w), q.dot_unit(w));

    let dp = p_sq / (cv * (p0 + cv));
    let dq = q_sq / (cv * (q0 + cv));
    let s = dp + dq;
    let prod = dp * dq;
    let e1 = p.dot(q) / (cv * cv);
    let e2 = (a_w + b_w) * (a_w + b_w) / (cv * cv);
    let u = 2.0 + s;
    let den = u * u - e2;
    let m_minus_one = (-u * u * u * s + 2.0 * u * u * (prod - e1 + e2) - e2 * e2) / (den * den);

    let x_minus_y = -a_w * p_sq / (p0 * (p0 + cv)) + b_w * q_sq / (q0 * (q0 + cv));
    let y = a_w - b_w;
    let x = y + x_minus_y;
    let abs_diff = if x * y >= 0.0 {
        if x >= 0.0 && y >= 0.0 {
            x_minus_y
        } else {
            -x_minus_y
        }
    } else {
        x.abs() - y.abs()
    };
    (x.abs() * m_minus_one + abs_diff).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(c: f64) -> LightSpeed {
        LightSpeed::new(c).unwrap()
    }

    #[test]
    fn convention_is_frozen() {
        let conv = CrossSectionConvention::default();
        assert_eq!(4.0 * conv.sigma(), conv.d());
        assert_eq!(conv.d(), 1.0);
    }

    #[test]
    fn g_vanishes_for_equal_momenta() {
        let p = Momentum::new(0.5, -2.0, 1.0);
        assert_eq!(lorentz_g(&p, &p, ls(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn g_tends_to_half_relative_momentum() {
        let p = Momentum::new(1.0, 0.0, 0.0);
        let q = Momentum::new(-1.0, 0.0, 0.0);
        let g = lorentz_g(&p, &q, ls(1e6)).unwrap();
        assert!((g - 1.0).abs() < 1e-6, "g = {g}");
    }

    #[test]
    fn invariant_form_matches_explicit_form() {
        // 16σ(c^2 + g^2) = 2(p0 q0 - p·q + c^2)
        let sigma = CrossSectionConvention::default().sigma();
        let p = Momentum::new(0.3, 1.7, -0.2);
        let q = Momentum::new(-1.1, 0.4, 2.5);
        for c in [1.0, 4.0, 50.0] {
            let g = lorentz_g(&p, &q, ls(c)).unwrap();
            let (p0, q0) = (energy_over_c(&p, c), energy_over_c(&q, c));
            let lhs = 16.0 * sigma * (c * c + g * g);
            let rhs = 2.0 * (p0 * q0 - p.dot(&q) + c * c);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn kernels_vanish_on_degenerate_inputs() {
        let p = Momentum::new(1.0, 2.0, 3.0);
        let w = UnitVector::new(0.2, -0.3, 0.9).unwrap();
        assert_eq!(kernel_rel(&p, &p, &w, ls(10.0)), 0.0);
        assert_eq!(kernel_cl(&p, &p, &w), 0.0);
        assert_eq!(kernel_gap(&p, &p, &w, ls(10.0)), 0.0);

        let p = Momentum::new(1.0, 0.0, 0.0);
        let q = Momentum::new(3.0, 0.0, 0.0);
        let w = UnitVector::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(kernel_rel(&p, &q, &w, ls(2.0)), 0.0);
    }

    #[test]
    fn classical_kernel_example() {
        let p = Momentum::new(2.0, 0.0, 0.0);
        let w = UnitVector::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(kernel_cl(&p, &Momentum::ZERO, &w), 2.0);
    }

    #[test]
    fn relativistic_kernel_approaches_hard_sphere() {
        let p = Momentum::new(1.0, 0.0, 0.0);
        let q = Momentum::new(0.0, 1.0, 0.0);
        let w = UnitVector::new(1.0, 0.0, 0.0).unwrap();
        for c in [1e2, 1e4] {
            let k = kernel_rel(&p, &q, &w, ls(c));
            let bound = 3f64.powi(9) / (c * c);
            assert!((k - 1.0).abs() <= bound, "c = {c}: K = {k}");
        }
    }

    #[test]
    fn factored_kernel_gap_matches_naive_difference() {
        let cases = [
            (Momentum::new(0.7, -0.4, 1.1), Momentum::new(-0.2, 0.9, 0.3), [0.3, 0.5, -0.8]),
            (Momentum::new(2.0, 0.1, 0.0), Momentum::new(1.9, 0.0, 0.2), [1.0, 0.05, 0.0]),
            (Momentum::new(0.0, 3.0, 0.0), Momentum::new(0.1, -1.0, 0.5), [0.0, 0.2, 1.0]),
        ];
        for (p, q, w) in cases {
            let w = UnitVector::new(w[0], w[1], w[2]).unwrap();
            for c in [0.5, 2.0, 10.0] {
                let naive = (kernel_rel(&p, &q, &w, ls(c)) - kernel_cl(&p, &q, &w)).abs();
                let gap = kernel_gap(&p, &q, &w, ls(c));
                assert!(
                    (naive - gap).abs() <= 1e-11 * naive.max(1e-12),
                    "c = {c}: naive {naive} factored {gap}"
                );
            }
        }
    }
}
