use super::DistributionGrid;
use crate::error::{Error, Result};

const HALTON_POINTS: usize = 26;

/// Finite set of momentum shifts `h` with `|h| <= η` standing in for the
/// supremum over the ball in `F_η`.
///
/// The set is the six axis extremes `±η e_i` plus 26 points of the
/// (2, 3, 5) Halton sequence rejected into the open ball, all fixed.
#[derive(Clone, Debug)]
pub struct ContinuityProbe {
    eta: f64,
    offsets: Vec<[f64; 3]>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    let mut f = inv;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    inv = x;
    inv
}

impl ContinuityProbe {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be non-negative, got {eta}")));
        }
        let mut offsets = Vec::with_capacity(6 + HALTON_POINTS);
        for a in 0..3 {
            for s in [1.0, -1.0] {
                let mut h = [0.0; 3];
                h[a] = s * eta;
                offsets.push(h);
            }
        }
        let mut i = 1u64;
        while offsets.len() < 6 + HALTON_POINTS {
            let u = [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)].map(|v| 2.0 * v - 1.0);
            i += 1;
            let r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            if r2 < 1.0 {
                offsets.push(u.map(|v| v * eta));
            }
        }
        Ok(ContinuityProbe { eta, offsets })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn offsets(&self) -> &[[f64; 3]] {
        &self.offsets
    }
}

/// Discrete `F_η[f] = ∫ sup_{|h|<η} sup_x |f(x, p + h) - f(x, p)| dp`, with
/// `f(p + h)` from trilinear interpolation. A lower bound on the exact
/// functional of the interpolant since the shifts are finitely many.
pub fn f_eta(f: &DistributionGrid, probe: &ContinuityProbe) -> Result<f64> {
    let grid = f.grid();
    let mg = &grid.momentum;
    if probe.eta() > mg.r_max() / 10.0 {
        return Err(Error::InvalidParameter(format!(
            "eta = {} exceeds R_max / 10 = {}",
            probe.eta(),
            mg.r_max() / 10.0
        )));
    }
    if probe.eta() == 0.0 {
        return Ok(0.0);
    }
    let nx = grid.n_x();
    let values = f.values();
    let mut total = 0.0;
    for pi in 0..mg.len() {
        let p = mg.momentum(pi).0;
        let mut sup = 0.0f64;
        for h in probe.offsets() {
            let ph = [p[0] + h[0], p[1] + h[1], p[2] + h[2]];
            for x in 0..nx {
                let d = (grid.interpolate(values, x, &ph) - values[pi * nx + x]).abs();
                sup = sup.max(d);
            }
        }
        total += sup * mg.weight(pi);
    }
    Ok(total)
}
