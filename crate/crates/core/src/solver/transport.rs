use crate::distributions::{DistributionGrid, SpatialGrid};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};

/// Periodic interpolation used at characteristic feet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// Two-point, non-negative weights; keeps the iteration monotone.
    Linear,
    /// Four-point Lagrange, clamped at zero.
    Cubic,
}

/// Evaluation of periodic grid data at `x - d` for every node `x`, as fixed
/// weighted sums of node values.
#[derive(Clone, Debug)]
pub struct ShiftStencil {
    n_x: usize,
    per_node: usize,
    sources: Vec<usize>,
    weights: Vec<f64>,
    clamp: bool,
}

fn axis_weights(shift: f64, interp: Interpolation) -> Vec<(isize, f64)> {
    // value at fractional index i + shift
    let i0 = shift.floor();
    let fr = shift - i0;
    let i0 = i0 as isize;
    if fr == 0.0 {
        return vec![(i0, 1.0)];
    }
    match interp {
        Interpolation::Linear => vec![(i0, 1.0 - fr), (i0 + 1, fr)],
        Interpolation::Cubic => vec![
            (i0 - 1, -fr * (fr - 1.0) * (fr - 2.0) / 6.0),
            (i0, (fr + 1.0) * (fr - 1.0) * (fr - 2.0) / 2.0),
            (i0 + 1, -(fr + 1.0) * fr * (fr - 2.0) / 2.0),
            (i0 + 2, (fr + 1.0) * fr * (fr - 1.0) / 6.0),
        ],
    }
}

impl ShiftStencil {
    /// Stencil for the displacement `d` (torus units).
    pub fn new(grid: &SpatialGrid, d: [f64; 3], interp: Interpolation) -> Self {
        let dims = grid.dims();
        let per_axis: Vec<Vec<(isize, f64)>> = (0..3)
            .map(|a| if dims[a] == 1 { vec![(0, 1.0)] } else { axis_weights(-d[a] * dims[a] as f64, interp) })
            .collect();
        let per_node = per_axis.iter().map(Vec::len).product();
        let n_x = grid.len();
        let mut sources = Vec::with_capacity(n_x * per_node);
        let mut weights = Vec::with_capacity(n_x * per_node);
        for x in 0..n_x {
            let ijk = grid.axis_indices(x);
            for (o0, w0) in &per_axis[0] {
                for (o1, w1) in &per_axis[1] {
                    for (o2, w2) in &per_axis[2] {
                        let i = grid.wrap(0, ijk[0] as isize + o0);
                        let j = grid.wrap(1, ijk[1] as isize + o1);
                        let k = grid.wrap(2, ijk[2] as isize + o2);
                        sources.push(grid.index(i, j, k));
                        weights.push(w0 * w1 * w2);
                    }
                }
            }
        }
        ShiftStencil { n_x, per_node, sources, weights, clamp: interp == Interpolation::Cubic }
    }

    /// `dst[x] = src(x - d)`.
    #[inline]
    pub fn apply(&self, src: &[f64], dst: &mut [f64]) {
        for x in 0..self.n_x {
            let r = x * self.per_node..(x + 1) * self.per_node;
            let v: f64 = self.sources[r.clone()].iter().zip(&self.weights[r]).map(|(&s, w)| w * src[s]).sum();
            dst[x] = if self.clamp { v.max(0.0) } else { v };
        }
    }
}

/// Free streaming `f(x, p) -> f(x - v(p) dt, p)` with `v = p̂` or `v = p`.
pub fn advect(f: &DistributionGrid, dt: f64, dynamics: Dynamics, interp: Interpolation) -> Result<DistributionGrid> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be non-negative, got {dt}")));
    }
    let grid = f.grid();
    let nx = grid.n_x();
    let mut out = vec![0.0; grid.len()];
    for p in 0..grid.momentum.len() {
        let v = dynamics.velocity(&grid.momentum.momentum(p)).0;
        let stencil = ShiftStencil::new(&grid.spatial, v.map(|c| c * dt), interp);
        stencil.apply(&f.values()[p * nx..(p + 1) * nx], &mut out[p * nx..(p + 1) * nx]);
    }
    DistributionGrid::new(grid.clone(), out, f.t() + dt, f.envelope().copied())
}
