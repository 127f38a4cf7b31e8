use std::sync::Arc;

use rayon::prelude::*;

use super::SphereRule;
use crate::distributions::{DistributionGrid, PhaseGrid};
use crate::dynamics::{Dynamics, NodeKinematics};
use crate::error::{Error, Result};

/// Momentum-grid quadrature for `∫_{R^3} ∫_{S^2} ... dω dq`: the sphere rule
/// and the active (in-ball) trapezoid nodes of the phase grid.
///
/// With an energy cutoff `E`, pairs with `e(p) + e(q) > E` are left out of
/// both gain and loss. The dropped region is invariant under collisions, so
/// the truncated operator keeps the conservation and detailed-balance
/// structure of the full one.
///
/// With envelope weighting at rate `β*`, values at off-grid momenta are
/// `E(p) I[f / E](p)` with `E = exp(-β* e(p))` and `I` trilinear. This is
/// still linear with non-negative weights, and exact for `f = E`, so the
/// equilibrium of that rate is annihilated to rounding.
#[derive(Clone, Debug)]
pub struct CollisionQuadrature {
    sphere: SphereRule,
    grid: Arc<PhaseGrid>,
    energy_cutoff: Option<f64>,
    ball_cutoff: bool,
    envelope_rate: Option<f64>,
}

impl CollisionQuadrature {
    pub fn new(grid: Arc<PhaseGrid>, sphere: SphereRule) -> Self {
        CollisionQuadrature { sphere, grid, energy_cutoff: None, ball_cutoff: false, envelope_rate: None }
    }

    pub fn with_envelope_weighting(mut self, rate: Option<f64>) -> Self {
        self.envelope_rate = rate;
        self
    }

    pub fn envelope_rate(&self) -> Option<f64> {
        self.envelope_rate
    }

    pub fn with_energy_cutoff(mut self, cutoff: Option<f64>) -> Self {
        self.energy_cutoff = cutoff;
        self
    }

    /// Cutoff where `exp(-rate (e(p) + e(q)))` drops to `level`.
    pub fn with_pair_level(self, rate: f64, level: f64) -> Self {
        self.with_energy_cutoff(Some(-level.ln() / rate))
    }

    pub fn sphere(&self) -> &SphereRule {
        &self.sphere
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    /// Cutoff at `e(R_max)` of whichever equation the operator is built for,
    /// so that no collision of kept pairs leaves the ball.
    pub fn with_ball_cutoff(mut self, on: bool) -> Self {
        self.ball_cutoff = on;
        self
    }

    pub fn has_ball_cutoff(&self) -> bool {
        self.ball_cutoff
    }

    pub fn energy_cutoff(&self) -> Option<f64> {
        self.energy_cutoff
    }

    /// The cutoff in force for `dynamics`: the smaller of the explicit one
    /// and the ball cutoff.
    pub fn cutoff_for(&self, dynamics: Dynamics) -> Option<f64> {
        let ball = self
            .ball_cutoff
            .then(|| dynamics.kinetic_energy(&crate::kinematics::Momentum::new(self.grid.momentum.r_max(), 0.0, 0.0)));
        match (self.energy_cutoff, ball) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Which output nodes are computed directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// Every node.
    None,
    /// Only the wedge of [`crate::distributions::MomentumGrid::canonical_node`];
    /// the rest are copied. Valid for data invariant under reflections and
    /// exchange of `p2`, `p3` and constant in `x2`, `x3`.
    Axial,
}

/// Collisions whose post-collision momenta leave the cube. Their gain is
/// taken as zero; the rates are `max_x ∫∫∫ K f(x,p) g(x,q)` over the flagged
/// and over all triples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OutOfGridReport {
    pub triples: u64,
    pub total_triples: u64,
    pub flagged_rate: f64,
    pub total_rate: f64,
}

impl OutOfGridReport {
    pub fn fraction(&self) -> f64 {
        if self.total_rate > 0.0 {
            self.flagged_rate / self.total_rate
        } else {
            0.0
        }
    }
}

/// Interpolation weights of the 8 corners of a cell.
#[derive(Clone, Copy, Debug)]
struct Stencil {
    base: usize,
    w: [f64; 8],
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    kw: f64,
    p: Stencil,
    q: Stencil,
}

/// Discrete gain and loss operators for one dynamics on one quadrature.
///
/// Batched entry points act on `m` fields at once laid out `[p][j]` with
/// `j < width = m n_x`, which amortizes the collision kinematics over all
/// fields sharing a grid.
pub struct CollisionOperator {
    dynamics: Dynamics,
    quad: CollisionQuadrature,
    symmetry: Symmetry,
    sphere: Vec<([f64; 3], f64)>,
    outputs: Vec<usize>,
    out_kin: Vec<NodeKinematics>,
    n_pairs: Vec<usize>,
    q_nodes: Vec<usize>,
    q_kin: Vec<NodeKinematics>,
    q_weight: Vec<f64>,
    loss_offsets: Vec<usize>,
    loss_table: Vec<f64>,
    representative: Vec<usize>,
    inv_envelope: Option<Vec<f64>>,
    table: Option<Vec<Vec<Entry>>>,
}

/// `row += kw (I f)(p') (I g)(q')` for every column of the batch.
#[inline]
fn add_product(row: &mut [f64], f: &[f64], g: &[f64], pc: &Stencil, qc: &Stencil, offs: &[usize; 8], kw: f64) {
    let width = row.len();
    let wf = &pc.w;
    let wg = &qc.w;
    let fr: [&[f64]; 8] = std::array::from_fn(|c| &f[(pc.base + offs[c]) * width..][..width]);
    let gr: [&[f64]; 8] = std::array::from_fn(|c| &g[(qc.base + offs[c]) * width..][..width]);
    for j in 0..width {
        let a = wf[0] * fr[0][j]
            + wf[1] * fr[1][j]
            + wf[2] * fr[2][j]
            + wf[3] * fr[3][j]
            + wf[4] * fr[4][j]
            + wf[5] * fr[5][j]
            + wf[6] * fr[6][j]
            + wf[7] * fr[7][j];
        let b = wg[0] * gr[0][j]
            + wg[1] * gr[1][j]
            + wg[2] * gr[2][j]
            + wg[3] * gr[3][j]
            + wg[4] * gr[4][j]
            + wg[5] * gr[5][j]
            + wg[6] * gr[6][j]
            + wg[7] * gr[7][j];
        row[j] += kw * a * b;
    }
}

impl CollisionOperator {
    pub fn new(dynamics: Dynamics, quad: CollisionQuadrature, symmetry: Symmetry) -> Result<Self> {
        let grid = quad.grid().clone();
        let mg = &grid.momentum;
        if symmetry == Symmetry::Axial {
            let dims = grid.spatial.dims();
            if dims[1] != 1 || dims[2] != 1 {
                return Err(Error::InvalidParameter(format!(
                    "axial symmetry needs data constant in x2, x3; spatial grid is {dims:?}"
                )));
            }
            if !quad.sphere().supports_axial_symmetry() {
                return Err(Error::InvalidParameter(format!(
                    "axial symmetry needs N_phi divisible by 4, got {}",
                    quad.sphere().n_phi()
                )));
            }
        }
        let outputs: Vec<usize> = match symmetry {
            Symmetry::None => (0..mg.len()).collect(),
            Symmetry::Axial => (0..mg.len()).filter(|&i| mg.canonical_node(i) == i).collect(),
        };
        let mut slot = vec![usize::MAX; mg.len()];
        for (o, &i) in outputs.iter().enumerate() {
            slot[i] = o;
        }
        let representative = (0..mg.len())
            .map(|i| match symmetry {
                Symmetry::None => i,
                Symmetry::Axial => slot[mg.canonical_node(i)],
            })
            .collect();

        let energy = |i: usize| dynamics.kinetic_energy(&mg.momentum(i));
        let mut q_nodes: Vec<usize> = mg.active_nodes().to_vec();
        let q_energy: Vec<f64> = q_nodes.iter().map(|&i| energy(i)).collect();
        let mut order: Vec<usize> = (0..q_nodes.len()).collect();
        order.sort_by(|&a, &b| q_energy[a].total_cmp(&q_energy[b]).then(a.cmp(&b)));
        q_nodes = order.iter().map(|&k| q_nodes[k]).collect();
        let q_sorted_energy: Vec<f64> = order.iter().map(|&k| q_energy[k]).collect();

        let n_pairs: Vec<usize> = outputs
            .iter()
            .map(|&i| match quad.cutoff_for(dynamics) {
                None => q_nodes.len(),
                Some(cut) => {
                    let room = cut - energy(i);
                    q_sorted_energy.partition_point(|&e| e <= room)
                }
            })
            .collect();

        let inv_envelope = match quad.envelope_rate() {
            None => None,
            Some(rate) => {
                let inv: Vec<f64> = (0..mg.len()).map(|i| (rate * energy(i)).exp()).collect();
                if inv.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "envelope weighting at rate {rate} overflows on this grid"
                    )));
                }
                Some(inv)
            }
        };
        let mut op = CollisionOperator {
            dynamics,
            sphere: quad.sphere().folded(),
            out_kin: outputs.iter().map(|&i| dynamics.node(&mg.momentum(i))).collect(),
            q_kin: q_nodes.iter().map(|&i| dynamics.node(&mg.momentum(i))).collect(),
            q_weight: q_nodes.iter().map(|&i| mg.weight(i)).collect(),
            loss_offsets: Vec::new(),
            loss_table: Vec::new(),
            quad,
            symmetry,
            outputs,
            n_pairs,
            q_nodes,
            representative,
            inv_envelope,
            table: None,
        };
        op.build_loss_table();
        Ok(op)
    }

    fn build_loss_table(&mut self) {
        let mut offsets = Vec::with_capacity(self.outputs.len() + 1);
        offsets.push(0);
        for n in &self.n_pairs {
            offsets.push(offsets.last().unwrap() + n);
        }
        let rows: Vec<Vec<f64>> = (0..self.outputs.len())
            .into_par_iter()
            .map(|o| {
                let p = &self.out_kin[o];
                (0..self.n_pairs[o])
                    .map(|qi| {
                        let q = &self.q_kin[qi];
                        let pq = p.p[0] * q.p[0] + p.p[1] * q.p[1] + p.p[2] * q.p[2];
                        let s: f64 = self.sphere.iter().map(|(w, wt)| wt * self.dynamics.collide(p, q, pq, w).0).sum();
                        s * self.q_weight[qi]
                    })
                    .collect()
            })
            .collect();
        self.loss_table = rows.concat();
        self.loss_offsets = offsets;
    }

    pub fn dynamics(&self) -> Dynamics {
        self.dynamics
    }

    pub fn quadrature(&self) -> &CollisionQuadrature {
        &self.quad
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        self.quad.grid()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Number of `(p, q, ω)` triples visited by one gain evaluation.
    pub fn triples(&self) -> usize {
        self.n_pairs.iter().sum::<usize>() * self.sphere.len()
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    /// Upper bound on the memory [`CollisionOperator::tabulate`] needs.
    pub fn table_bytes(&self) -> usize {
        self.triples() * std::mem::size_of::<Entry>()
    }

    /// Precomputes post-collision cells and kernel weights for every triple.
    /// Fails if the table would exceed `max_bytes`.
    pub fn tabulate(&mut self, max_bytes: usize) -> Result<()> {
        let bytes = self.table_bytes();
        if bytes > max_bytes {
            return Err(Error::InvalidParameter(format!(
                "collision table needs {bytes} bytes, limit is {max_bytes}"
            )));
        }
        let table = (0..self.outputs.len())
            .into_par_iter()
            .map(|o| {
                let mut entries = Vec::new();
                self.visit(o, |kw, pp, qq| {
                    if let (Some(p), Some(q)) = (self.stencil(&pp), self.stencil(&qq)) {
                        entries.push(Entry { kw, p, q });
                    }
                });
                entries
            })
            .collect();
        self.table = Some(table);
        Ok(())
    }

    pub fn drop_table(&mut self) {
        self.table = None;
    }

    #[inline]
    fn stencil(&self, p: &[f64; 3]) -> Option<Stencil> {
        let mg = &self.quad.grid().momentum;
        let cell = mg.locate(p)?;
        let mut w = cell.weights();
        if let (Some(inv), Some(rate)) = (&self.inv_envelope, self.quad.envelope_rate()) {
            let offs = mg.corner_offsets();
            let e = (-rate * self.dynamics.kinetic_energy(&crate::kinematics::Momentum(*p))).exp();
            for c in 0..8 {
                w[c] *= e * inv[cell.base + offs[c]];
            }
        }
        Some(Stencil { base: cell.base, w })
    }

    /// Calls `visit(K w_q w_ω, p', q')` for every triple with positive kernel at output `o`.
    #[inline]
    fn visit(&self, o: usize, mut visit: impl FnMut(f64, [f64; 3], [f64; 3])) {
        let p = &self.out_kin[o];
        for qi in 0..self.n_pairs[o] {
            let q = &self.q_kin[qi];
            let wq = self.q_weight[qi];
            let pq = p.p[0] * q.p[0] + p.p[1] * q.p[1] + p.p[2] * q.p[2];
            for (w, wt) in &self.sphere {
                let (k, a) = self.dynamics.collide(p, q, pq, w);
                if k == 0.0 {
                    continue;
                }
                let pp = [p.p[0] - a * w[0], p.p[1] - a * w[1], p.p[2] - a * w[2]];
                let qq = [q.p[0] + a * w[0], q.p[1] + a * w[1], q.p[2] + a * w[2]];
                visit(k * wt * wq, pp, qq);
            }
        }
    }

    fn check_batch(&self, data: &[f64], width: usize) -> Result<()> {
        let n = self.quad.grid().momentum.len();
        if width == 0 || !width.is_multiple_of(self.quad.grid().n_x()) || data.len() != n * width {
            return Err(Error::GridMismatch(format!(
                "batch of length {} with width {width} does not fit {n} momentum nodes x {} spatial nodes",
                data.len(),
                self.quad.grid().n_x()
            )));
        }
        Ok(())
    }

    fn scatter(&self, rows: Vec<Vec<f64>>, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.representative.len() * width];
        for (node, &o) in self.representative.iter().enumerate() {
            out[node * width..(node + 1) * width].copy_from_slice(&rows[o]);
        }
        out
    }

    /// Gain `Σ_{q,ω} w K f(p') g(q')` for a batch, layout `[p][width]`.
    /// Uses the precomputed table when present.
    pub fn gain_batch(&self, f: &[f64], g: &[f64], width: usize) -> Result<Vec<f64>> {
        self.check_batch(f, width)?;
        self.check_batch(g, width)?;
        let offs = self.quad.grid().momentum.corner_offsets();
        let rows = (0..self.outputs.len())
            .into_par_iter()
            .map(|o| {
                let mut row = vec![0.0; width];
                match &self.table {
                    Some(table) => {
                        for e in &table[o] {
                            add_product(&mut row, f, g, &e.p, &e.q, &offs, e.kw);
                        }
                    }
                    None => {
                        self.visit(o, |kw, pp, qq| {
                            if let (Some(pc), Some(qc)) = (self.stencil(&pp), self.stencil(&qq)) {
                                add_product(&mut row, f, g, &pc, &qc, &offs, kw);
                            }
                        });
                    }
                }
                row
            })
            .collect();
        Ok(self.scatter(rows, width))
    }

    /// Gain evaluated on the fly even when a table is present.
    pub fn gain_batch_direct(&self, f: &[f64], g: &[f64], width: usize) -> Result<Vec<f64>> {
        if self.table.is_none() {
            return self.gain_batch(f, g, width);
        }
        let tmp = CollisionOperator {
            dynamics: self.dynamics,
            quad: self.quad.clone(),
            symmetry: self.symmetry,
            sphere: self.sphere.clone(),
            outputs: self.outputs.clone(),
            out_kin: self.out_kin.clone(),
            n_pairs: self.n_pairs.clone(),
            q_nodes: self.q_nodes.clone(),
            q_kin: self.q_kin.clone(),
            q_weight: self.q_weight.clone(),
            loss_offsets: Vec::new(),
            loss_table: Vec::new(),
            representative: self.representative.clone(),
            inv_envelope: self.inv_envelope.clone(),
            table: None,
        };
        tmp.gain_batch(f, g, width)
    }

    /// Loss rate `ν_g(p) = Σ_{q,ω} w K g(q)`, so that `Q = gain - f ν_g`.
    pub fn loss_rate_batch(&self, g: &[f64], width: usize) -> Result<Vec<f64>> {
        self.check_batch(g, width)?;
        let rows = (0..self.outputs.len())
            .into_par_iter()
            .map(|o| {
                let mut row = vec![0.0; width];
                let kbar = &self.loss_table[self.loss_offsets[o]..self.loss_offsets[o + 1]];
                for (qi, k) in kbar.iter().enumerate() {
                    let src = &g[self.q_nodes[qi] * width..][..width];
                    for (r, s) in row.iter_mut().zip(src) {
                        *r += k * s;
                    }
                }
                row
            })
            .collect();
        Ok(self.scatter(rows, width))
    }

    /// `Σ_ω w_ω K(p, q, ω)` summed against `w_q`, for node indices `p` and `q`
    /// (zero when the pair is cut off or `q` is outside the ball).
    pub fn pair_weight(&self, p: usize, q: usize) -> f64 {
        let o = self.representative[p];
        if self.outputs[o] != p {
            return self.pair_weight(self.outputs[o], self.quad.grid().momentum.map_like_canonical(p, q));
        }
        match self.q_nodes[..self.n_pairs[o]].iter().position(|&n| n == q) {
            Some(qi) => self.loss_table[self.loss_offsets[o] + qi],
            None => 0.0,
        }
    }

    fn check(&self, f: &DistributionGrid) -> Result<()> {
        if !f.grid().same_as(self.quad.grid()) {
            return Err(Error::GridMismatch("distribution and collision quadrature use different grids".into()));
        }
        Ok(())
    }

    pub fn gain(&self, f: &DistributionGrid, g: &DistributionGrid) -> Result<Vec<f64>> {
        self.check(f)?;
        self.check(g)?;
        self.gain_batch(f.values(), g.values(), self.grid().n_x())
    }

    pub fn loss_rate(&self, g: &DistributionGrid) -> Result<Vec<f64>> {
        self.check(g)?;
        self.loss_rate_batch(g.values(), self.grid().n_x())
    }

    /// `Q(f, g) = gain(f, g) - f loss_rate(g)`.
    pub fn collide(&self, f: &DistributionGrid, g: &DistributionGrid) -> Result<Vec<f64>> {
        let gain = self.gain(f, g)?;
        let nu = self.loss_rate(g)?;
        Ok(gain.iter().zip(&nu).zip(f.values()).map(|((g, n), f)| g - f * n).collect())
    }

    /// Counts collisions that leave the cube, over every node regardless of symmetry.
    pub fn out_of_grid(&self, f: &DistributionGrid, g: &DistributionGrid) -> Result<OutOfGridReport> {
        self.check(f)?;
        self.check(g)?;
        let grid = self.grid();
        let mg = &grid.momentum;
        let nx = grid.n_x();
        let parts: Vec<(u64, u64, Vec<f64>, Vec<f64>)> = (0..mg.len())
            .into_par_iter()
            .map(|node| {
                let o = self.representative[node];
                let mut flagged = 0u64;
                let mut total = 0u64;
                let mut fr = vec![0.0; nx];
                let mut tr = vec![0.0; nx];
                let p = self.dynamics.node(&mg.momentum(node));
                let wp = mg.weight(node);
                for qi in 0..self.n_pairs[o] {
                    let q = &self.q_kin[qi];
                    let qn = self.q_nodes[qi];
                    let pq = p.p[0] * q.p[0] + p.p[1] * q.p[1] + p.p[2] * q.p[2];
                    for (w, wt) in &self.sphere {
                        let (k, a) = self.dynamics.collide(&p, q, pq, w);
                        if k == 0.0 {
                            continue;
                        }
                        total += 1;
                        let pp = [p.p[0] - a * w[0], p.p[1] - a * w[1], p.p[2] - a * w[2]];
                        let qq = [q.p[0] + a * w[0], q.p[1] + a * w[1], q.p[2] + a * w[2]];
                        let out = mg.locate(&pp).is_none() || mg.locate(&qq).is_none();
                        let kw = wp * k * wt * self.q_weight[qi];
                        for x in 0..nx {
                            let r = kw * f.value(x, node) * g.value(x, qn);
                            tr[x] += r;
                            if out {
                                fr[x] += r;
                            }
                        }
                        if out {
                            flagged += 1;
                        }
                    }
                }
                (flagged, total, fr, tr)
            })
            .collect();
        let mut report = OutOfGridReport::default();
        let mut fr = vec![0.0; nx];
        let mut tr = vec![0.0; nx];
        for (a, b, f_part, t_part) in parts {
            report.triples += a;
            report.total_triples += b;
            for x in 0..nx {
                fr[x] += f_part[x];
                tr[x] += t_part[x];
            }
        }
        report.flagged_rate = fr.iter().copied().fold(0.0, f64::max);
        report.total_rate = tr.iter().copied().fold(0.0, f64::max);
        Ok(report)
    }
}

/// Packs fields sharing one phase grid into the batch layout `[p][k][x]`.
pub fn pack(fields: &[&[f64]], n_x: usize) -> Vec<f64> {
    let m = fields.len();
    let n_p = fields.first().map_or(0, |f| f.len() / n_x);
    let mut out = vec![0.0; n_p * m * n_x];
    for p in 0..n_p {
        for (k, f) in fields.iter().enumerate() {
            out[(p * m + k) * n_x..][..n_x].copy_from_slice(&f[p * n_x..][..n_x]);
        }
    }
    out
}

/// Inverse of [`pack`]: field `k` of a batch of `m`.
pub fn unpack(batch: &[f64], m: usize, k: usize, n_x: usize) -> Vec<f64> {
    let n_p = batch.len() / (m * n_x);
    let mut out = Vec::with_capacity(n_p * n_x);
    for p in 0..n_p {
        out.extend_from_slice(&batch[(p * m + k) * n_x..][..n_x]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::SphereRule;
    use crate::distributions::{juttner_init, maxwellian_init, MomentumGrid, SpatialGrid};
    use crate::kinematics::LightSpeed;

    fn setup(n_x: usize, n_p: usize, r: f64) -> (Arc<PhaseGrid>, CollisionQuadrature) {
        let grid = Arc::new(PhaseGrid::new(SpatialGrid::new([n_x, 1, 1]).unwrap(), MomentumGrid::new(r, n_p).unwrap()));
        let quad = CollisionQuadrature::new(grid.clone(), SphereRule::new(4, 8).unwrap());
        (grid, quad)
    }

    fn rel(c: f64) -> Dynamics {
        Dynamics::Relativistic(LightSpeed::new(c).unwrap())
    }

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn zero_inputs_give_zero() {
        let (grid, quad) = setup(2, 7, 3.0);
        let z = DistributionGrid::zeros(grid);
        for dynamics in [rel(10.0), Dynamics::Classical] {
            let op = CollisionOperator::new(dynamics, quad.clone(), Symmetry::None).unwrap();
            assert!(op.collide(&z, &z).unwrap().iter().all(|v| *v == 0.0));
            assert!(op.loss_rate(&z).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn gain_and_loss_are_non_negative_and_split_exactly() {
        let (grid, quad) = setup(4, 9, 3.5);
        let f = maxwellian_init(grid.clone(), 0.7, 0.4).unwrap();
        let g = maxwellian_init(grid, 1.3, 0.2).unwrap();
        for dynamics in [rel(5.0), Dynamics::Classical] {
            let op = CollisionOperator::new(dynamics, quad.clone(), Symmetry::None).unwrap();
            let gain = op.gain(&f, &g).unwrap();
            let nu = op.loss_rate(&g).unwrap();
            assert!(gain.iter().all(|v| *v >= 0.0) && nu.iter().all(|v| *v >= 0.0));
            let q = op.collide(&f, &g).unwrap();
            for i in 0..q.len() {
                assert!((q[i] - (gain[i] - f.values()[i] * nu[i])).abs() <= 1e-12 * gain[i].max(1.0));
            }
        }
    }

    #[test]
    fn bilinear_in_first_argument() {
        let (grid, quad) = setup(2, 9, 3.5);
        let f = maxwellian_init(grid.clone(), 1.0, 0.3).unwrap();
        let scaled = DistributionGrid::new(grid, f.values().iter().map(|v| 2.5 * v).collect(), 0.0, None).unwrap();
        let op = CollisionOperator::new(rel(20.0), quad, Symmetry::None).unwrap();
        let a = op.collide(&scaled, &f).unwrap();
        let b = op.collide(&f, &f).unwrap();
        let scale = sup(&op.gain(&f, &f).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 2.5 * y).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn weighted_interpolation_annihilates_equilibrium() {
        let (grid, quad) = setup(1, 9, 4.0);
        // post-collision momenta of pairs with e(p) + e(q) <= e(R) stay in the ball
        let e_r = |d: Dynamics| d.kinetic_energy(&crate::kinematics::Momentum::new(4.0, 0.0, 0.0));
        let quad_rel = quad.clone().with_energy_cutoff(Some(e_r(rel(3.0))));
        let quad = quad.with_energy_cutoff(Some(e_r(Dynamics::Classical)));
        let c = LightSpeed::new(3.0).unwrap();
        let f = juttner_init(grid.clone(), 1.5, c, 0.0).unwrap();
        let op = CollisionOperator::new(Dynamics::Relativistic(c), quad_rel.with_envelope_weighting(Some(1.5)), Symmetry::None)
            .unwrap();
        assert_eq!(op.out_of_grid(&f, &f).unwrap().triples, 0);
        let q = op.collide(&f, &f).unwrap();
        let gain = op.gain(&f, &f).unwrap();
        assert!(sup(&q) <= 1e-12 * sup(&gain), "{}", sup(&q) / sup(&gain));

        let m = maxwellian_init(grid, 0.75, 0.0).unwrap();
        let op = CollisionOperator::new(Dynamics::Classical, quad.with_envelope_weighting(Some(1.5)), Symmetry::None).unwrap();
        let q = op.collide(&m, &m).unwrap();
        assert!(sup(&q) <= 1e-12 * sup(&op.gain(&m, &m).unwrap()));
    }

    #[test]
    fn axial_outputs_match_full_evaluation() {
        let (grid, quad) = setup(4, 9, 3.5);
        let f = maxwellian_init(grid, 1.0, 0.5).unwrap();
        for dynamics in [rel(7.0), Dynamics::Classical] {
            let full = CollisionOperator::new(dynamics, quad.clone(), Symmetry::None).unwrap();
            let sym = CollisionOperator::new(dynamics, quad.clone(), Symmetry::Axial).unwrap();
            let a = full.collide(&f, &f).unwrap();
            let b = sym.collide(&f, &f).unwrap();
            let scale = sup(&full.gain(&f, &f).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn axial_mode_validates_its_preconditions() {
        let grid = Arc::new(PhaseGrid::new(SpatialGrid::new([2, 2, 1]).unwrap(), MomentumGrid::new(2.0, 5).unwrap()));
        let quad = CollisionQuadrature::new(grid.clone(), SphereRule::new(2, 4).unwrap());
        assert!(CollisionOperator::new(Dynamics::Classical, quad, Symmetry::Axial).is_err());
        let (_, quad) = setup(1, 5, 2.0);
        let quad = CollisionQuadrature::new(quad.grid().clone(), SphereRule::new(2, 6).unwrap());
        assert!(CollisionOperator::new(Dynamics::Classical, quad, Symmetry::Axial).is_err());
    }

    #[test]
    fn tabulated_and_direct_paths_agree() {
        let (grid, quad) = setup(2, 9, 3.5);
        let f = maxwellian_init(grid.clone(), 1.0, 0.5).unwrap();
        let g = maxwellian_init(grid, 0.6, 0.1).unwrap();
        for weighting in [None, Some(2.0)] {
            let mut op = CollisionOperator::new(rel(4.0), quad.clone().with_envelope_weighting(weighting), Symmetry::Axial).unwrap();
            let direct = op.gain(&f, &g).unwrap();
            op.tabulate(1 << 30).unwrap();
            assert!(op.is_tabulated());
            let tab = op.gain(&f, &g).unwrap();
            let forced = op.gain_batch_direct(f.values(), g.values(), 2).unwrap();
            let scale = sup(&direct);
            for ((a, b), c) in direct.iter().zip(&tab).zip(&forced) {
                assert!((a - b).abs() <= 1e-14 * scale);
                assert_eq!(a, c);
            }
        }
        let mut op = CollisionOperator::new(Dynamics::Classical, quad, Symmetry::None).unwrap();
        assert!(op.tabulate(1024).is_err());
    }

    #[test]
    fn batched_fields_match_single_evaluations() {
        let (grid, quad) = setup(2, 7, 3.0);
        let f = maxwellian_init(grid.clone(), 1.0, 0.5).unwrap();
        let g = maxwellian_init(grid, 0.5, 0.2).unwrap();
        let op = CollisionOperator::new(Dynamics::Classical, quad, Symmetry::None).unwrap();
        let batch = pack(&[f.values(), g.values()], 2);
        let gain = op.gain_batch(&batch, &batch, 4).unwrap();
        let nu = op.loss_rate_batch(&batch, 4).unwrap();
        assert_eq!(unpack(&gain, 2, 0, 2), op.gain(&f, &f).unwrap());
        assert_eq!(unpack(&gain, 2, 1, 2), op.gain(&g, &g).unwrap());
        assert_eq!(unpack(&nu, 2, 1, 2), op.loss_rate(&g).unwrap());
        assert_eq!(unpack(&batch, 2, 1, 2), g.values());
    }

    #[test]
    fn loss_table_matches_pointwise_kernels() {
        let (grid, quad) = setup(1, 7, 3.0);
        let dynamics = rel(2.0);
        let op = CollisionOperator::new(dynamics, quad.clone(), Symmetry::Axial).unwrap();
        let mg = &grid.momentum;
        let sphere = quad.sphere();
        for (p, q) in [(mg.index(1, 2, 3), mg.index(3, 3, 3)), (mg.index(4, 5, 2), mg.index(2, 1, 4))] {
            let (pm, qm) = (mg.momentum(p), mg.momentum(q));
            let direct: f64 = sphere
                .nodes()
                .iter()
                .zip(sphere.weights())
                .map(|(n, w)| w * dynamics.kernel(&pm, &qm, &crate::kinematics::UnitVector::from_unit(*n).unwrap()))
                .sum::<f64>()
                * mg.weight(q);
            let tab = op.pair_weight(p, q);
            assert!((tab - direct).abs() <= 1e-13 * direct, "{tab} vs {direct}");
        }
    }

    #[test]
    fn energy_cutoff_drops_only_negligible_pairs() {
        let (grid, quad) = setup(1, 11, 4.0);
        let f = maxwellian_init(grid, 1.0, 0.0).unwrap();
        // e(p) + e(q) = (|p|^2 + |q|^2) / 2 against f(p) f(q) = exp(-(|p|^2 + |q|^2))
        let quad = quad.with_envelope_weighting(Some(2.0));
        let full = CollisionOperator::new(Dynamics::Classical, quad.clone(), Symmetry::None).unwrap();
        let cut = CollisionOperator::new(Dynamics::Classical, quad.with_pair_level(2.0, 1e-10), Symmetry::None).unwrap();
        assert!(cut.triples() < full.triples());
        let a = full.gain(&f, &f).unwrap();
        let b = cut.gain(&f, &f).unwrap();
        let scale = sup(&a);
        for (x, y) in a.iter().zip(&b) {
            assert!(y <= &(x + 1e-15 * scale) && x - y <= 1e-8 * scale);
        }
    }

    #[test]
    fn out_of_grid_collisions_are_counted() {
        let (grid, quad) = setup(1, 9, 4.0);
        let f = maxwellian_init(grid.clone(), 1.0, 0.0).unwrap();
        let op = CollisionOperator::new(Dynamics::Classical, quad.clone(), Symmetry::None).unwrap();
        let r = op.out_of_grid(&f, &f).unwrap();
        assert!(r.triples > 0 && r.triples < r.total_triples);
        assert!(r.fraction() < 1e-6, "{}", r.fraction());
        // a grid far too small for the datum loses a visible share
        let (grid, quad) = setup(1, 9, 1.0);
        let f = maxwellian_init(grid, 0.2, 0.0).unwrap();
        let op = CollisionOperator::new(Dynamics::Classical, quad, Symmetry::None).unwrap();
        assert!(op.out_of_grid(&f, &f).unwrap().fraction() > 1e-3);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let (_, quad) = setup(1, 7, 3.0);
        let (other, _) = setup(1, 9, 3.0);
        let op = CollisionOperator::new(Dynamics::Classical, quad, Symmetry::None).unwrap();
        let f = DistributionGrid::zeros(other);
        assert!(matches!(op.collide(&f, &f), Err(Error::GridMismatch(_))));
        assert!(op.gain_batch(&[0.0; 5], &[0.0; 5], 1).is_err());
    }
}
