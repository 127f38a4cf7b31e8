use crate::kinematics::{kinetic_energy, LightSpeed, Momentum};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnvelopeKind {
    /// `exp(-α0 |p|^2)`
    Classical,
    /// `exp(-β0 (E_c(p) - c^2))`
    Relativistic(LightSpeed),
}

/// Pointwise decay bound `amplitude * exp(-rate * exponent(p))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEnvelope {
    pub kind: EnvelopeKind,
    pub rate: f64,
    pub amplitude: f64,
}

impl DecayEnvelope {
    pub fn classical(alpha0: f64, amplitude: f64) -> Self {
        DecayEnvelope { kind: EnvelopeKind::Classical, rate: alpha0, amplitude }
    }

    pub fn relativistic(beta0: f64, c: LightSpeed, amplitude: f64) -> Self {
        DecayEnvelope { kind: EnvelopeKind::Relativistic(c), rate: beta0, amplitude }
    }

    pub fn exponent(&self, p: &Momentum) -> f64 {
        match self.kind {
            EnvelopeKind::Classical => p.norm_sq(),
            EnvelopeKind::Relativistic(c) => kinetic_energy(p, c),
        }
    }

    pub fn bound(&self, p: &Momentum) -> f64 {
        self.amplitude * (-self.rate * self.exponent(p)).exp()
    }

    /// Smallest radius where the envelope is at most `level` times its peak.
    pub fn radius_for_level(&self, level: f64) -> f64 {
        super::MomentumGrid::radius_for_level(self.rate, level, |r| self.exponent(&Momentum::new(r, 0.0, 0.0)))
    }
}

/// Outcome of checking `f(x, p) <= bound(p) (1 + 1e-12)` at every node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeReport {
    pub holds: bool,
    /// Largest `f / bound` over the grid.
    pub worst_ratio: f64,
    /// `(spatial index, momentum index)` of the largest ratio.
    pub worst_node: (usize, usize),
}
