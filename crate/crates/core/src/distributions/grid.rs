use crate::error::{Error, Result};
use crate::kinematics::Momentum;

/// Uniform Cartesian momentum grid on `[-R_max, R_max]^3`.
///
/// Node coordinates are `(i - (N_p - 1)/2) h`, so mirrored nodes carry exactly
/// negated coordinates. The collision sums run over the *active* nodes, those
/// inside the inscribed ball `|p| <= R_max`; the envelope is negligible
/// outside it by the choice of `R_max`.
#[derive(Clone, Debug)]
pub struct MomentumGrid {
    r_max: f64,
    n: usize,
    h: f64,
    coords: Vec<f64>,
    active: Vec<usize>,
}

/// Location of an off-grid momentum inside the cell `base`, with fractional
/// offsets in `[0, 1]` along each axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub base: usize,
    pub frac: [f64; 3],
}

impl Cell {
    /// Trilinear weights of the 8 cell corners, ordered as [`MomentumGrid::corner_offsets`].
    #[inline]
    pub fn weights(&self) -> [f64; 8] {
        let [fx, fy, fz] = self.frac;
        let (gx, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
        [
            gx * gy * gz,
            gx * gy * fz,
            gx * fy * gz,
            gx * fy * fz,
            fx * gy * gz,
            fx * gy * fz,
            fx * fy * gz,
            fx * fy * fz,
        ]
    }
}

impl MomentumGrid {
    pub fn new(r_max: f64, n_p: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParameter(format!("R_max must be positive, got {r_max}")));
        }
        if n_p < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 momentum points per axis, got {n_p}")));
        }
        let h = 2.0 * r_max / (n_p - 1) as f64;
        let mid = 0.5 * (n_p - 1) as f64;
        let coords: Vec<f64> = (0..n_p).map(|i| (i as f64 - mid) * h).collect();
        let mut grid = MomentumGrid { r_max, n: n_p, h, coords, active: Vec::new() };
        let limit = r_max * r_max * (1.0 + 1e-12);
        grid.active = (0..grid.len()).filter(|&i| grid.momentum(i).norm_sq() <= limit).collect();
        Ok(grid)
    }

    /// Radius at which `exp(-rate * energy(R))` falls to `level` of its peak,
    /// given the energy as a function of `|p|`; bisection on a monotone profile.
    pub fn radius_for_level(rate: f64, level: f64, energy: impl Fn(f64) -> f64) -> f64 {
        let target = -level.ln() / rate;
        let mut hi = 1.0;
        while energy(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if energy(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    pub fn n_p(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        [i, j, k]
    }

    #[inline]
    pub fn momentum(&self, idx: usize) -> Momentum {
        let [i, j, k] = self.axis_indices(idx);
        Momentum([self.coords[i], self.coords[j], self.coords[k]])
    }

    /// Nodes with `|p| <= R_max`, in increasing index order.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    /// Trapezoid weight `h^3 Π_axes (1/2 on boundary faces)`.
    pub fn weight(&self, idx: usize) -> f64 {
        let last = self.n - 1;
        self.axis_indices(idx).iter().fold(self.h * self.h * self.h, |w, &i| {
            if i == 0 || i == last {
                0.5 * w
            } else {
                w
            }
        })
    }

    /// Index offsets of the 8 corners of a cell relative to its base node.
    pub fn corner_offsets(&self) -> [usize; 8] {
        let (sx, sy) = (self.n * self.n, self.n);
        [0, 1, sy, sy + 1, sx, sx + 1, sx + sy, sx + sy + 1]
    }

    /// Cell containing `p`, or `None` outside the cube.
    #[inline]
    pub fn locate(&self, p: &[f64; 3]) -> Option<Cell> {
        let half = 0.5 * (self.n - 1) as f64;
        let top = (self.n - 1) as f64;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = p[a] / self.h + half;
            if !(u >= -1e-9 && u <= top + 1e-9) {
                return None;
            }
            let i0 = (u.floor().max(0.0) as usize).min(self.n - 2);
            base[a] = i0;
            frac[a] = (u - i0 as f64).clamp(0.0, 1.0);
        }
        Some(Cell { base: self.index(base[0], base[1], base[2]), frac })
    }

    /// Mirror image of `idx` into the wedge `p2 >= 0, p3 >= 0, p3 <= p2`,
    /// the fundamental domain of the reflections and exchange of `p2`, `p3`.
    pub fn canonical_node(&self, idx: usize) -> usize {
        let [i, j, k] = self.axis_indices(idx);
        let last = self.n - 1;
        let (a, b) = (j.max(last - j), k.max(last - k));
        self.index(i, a.max(b), a.min(b))
    }

    /// Image of `idx` under the reflection/exchange of `p2`, `p3` that takes
    /// `reference` to [`MomentumGrid::canonical_node`]`(reference)`.
    pub fn map_like_canonical(&self, reference: usize, idx: usize) -> usize {
        let last = self.n - 1;
        let [_, rj, rk] = self.axis_indices(reference);
        let [i, mut j, mut k] = self.axis_indices(idx);
        if rj < last - rj {
            j = last - j;
        }
        if rk < last - rk {
            k = last - k;
        }
        if rj.max(last - rj) < rk.max(last - rk) {
            std::mem::swap(&mut j, &mut k);
        }
        self.index(i, j, k)
    }

    pub fn same_as(&self, other: &MomentumGrid) -> bool {
        self.n == other.n && self.r_max == other.r_max
    }
}

/// Periodic grid on the unit torus with `dims[a]` points along axis `a`.
///
/// An axis with a single point carries data that is constant along it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpatialGrid {
    dims: [usize; 3],
}

impl SpatialGrid {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("spatial dims must be positive, got {dims:?}")));
        }
        Ok(SpatialGrid { dims })
    }

    /// `N_x` points along every axis.
    pub fn cubic(n_x: usize) -> Result<Self> {
        Self::new([n_x; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        let i = idx / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    /// Wrapped index along `axis`.
    #[inline]
    pub fn wrap(&self, axis: usize, i: isize) -> usize {
        i.rem_euclid(self.dims[axis] as isize) as usize
    }

    /// Node position in `[0, 1)^3`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ijk = self.axis_indices(idx);
        [0, 1, 2].map(|a| ijk[a] as f64 / self.dims[a] as f64)
    }
}

/// Phase-space layout shared by all distribution data: values are stored
/// momentum-major, `values[p * n_x + x]`, so the spatial samples of one
/// momentum node are contiguous.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub spatial: SpatialGrid,
    pub momentum: MomentumGrid,
}

impl PhaseGrid {
    pub fn new(spatial: SpatialGrid, momentum: MomentumGrid) -> Self {
        PhaseGrid { spatial, momentum }
    }

    pub fn n_x(&self) -> usize {
        self.spatial.len()
    }

    pub fn len(&self) -> usize {
        self.spatial.len() * self.momentum.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn same_as(&self, other: &PhaseGrid) -> bool {
        self.spatial == other.spatial && self.momentum.same_as(&other.momentum)
    }

    /// `‖g‖_{0,1} = ∫ sup_x |g(x, p)| dp`: max over spatial nodes, trapezoid in `p`.
    pub fn norm_01(&self, values: &[f64]) -> f64 {
        let nx = self.n_x();
        debug_assert_eq!(values.len(), self.len());
        (0..self.momentum.len())
            .map(|p| {
                let sup = values[p * nx..(p + 1) * nx].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                sup * self.momentum.weight(p)
            })
            .sum()
    }

    /// `‖f - g‖_{0,1}` without allocating the difference.
    pub fn norm_01_diff(&self, f: &[f64], g: &[f64]) -> f64 {
        let nx = self.n_x();
        (0..self.momentum.len())
            .map(|p| {
                let r = p * nx..(p + 1) * nx;
                let sup = f[r.clone()].iter().zip(&g[r]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                sup * self.momentum.weight(p)
            })
            .sum()
    }

    /// `∫∫ g dx dp` with the spatial mean standing in for `∫ dx` over the unit torus.
    pub fn mass(&self, values: &[f64]) -> f64 {
        let nx = self.n_x();
        (0..self.momentum.len())
            .map(|p| values[p * nx..(p + 1) * nx].iter().sum::<f64>() / nx as f64 * self.momentum.weight(p))
            .sum()
    }

    /// Trilinear interpolation in momentum at spatial node `x`, zero outside
    /// the cube and clamped at zero from below.
    pub fn interpolate(&self, values: &[f64], x: usize, p: &[f64; 3]) -> f64 {
        let nx = self.n_x();
        match self.momentum.locate(p) {
            None => 0.0,
            Some(cell) => {
                let offs = self.momentum.corner_offsets();
                let w = cell.weights();
                let v: f64 = (0..8).map(|c| w[c] * values[(cell.base + offs[c]) * nx + x]).sum();
                v.max(0.0)
            }
        }
    }
}
