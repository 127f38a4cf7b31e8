use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::SweepConfig;
use super::fit::RateFit;
use crate::collision::{CollisionOperator, Symmetry};
use crate::dynamics::Dynamics;
use crate::error::Result;
use crate::kernels::{kernel_cl, kernel_gap, kernel_rel, lorentz_g};
use crate::kinematics::{
    cl_post_collision, energy_over_c, post_collision_gap, rel_post_collision, LightSpeed, Momentum, UnitVector,
};
use crate::solver::loss_bound_constant;

/// Samples per independent random stream; streams are indexed so the draws
/// do not depend on the thread count.
const CHUNK: usize = 1 << 14;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform in the ball of radius `r`.
pub fn sample_ball(rng: &mut impl Rng, r: f64) -> Momentum {
    loop {
        let v = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()].map(|u| 2.0 * u - 1.0);
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
            return Momentum(v.map(|u| u * r));
        }
    }
}

/// Uniform on the unit sphere.
pub fn sample_direction(rng: &mut impl Rng) -> UnitVector {
    loop {
        let v = sample_ball(rng, 1.0);
        if v.norm_sq() > 1e-4 {
            if let Ok(w) = UnitVector::new(v.0[0], v.0[1], v.0[2]) {
                return w;
            }
        }
    }
}

/// Fixed triples `(p, q, ω)` drawn from `seed`, shared by every `c`.
pub fn sample_triples(seed: u64, n: usize, radius: f64) -> Vec<(Momentum, Momentum, UnitVector)> {
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = stream(seed, chunk as u64);
            let len = CHUNK.min(n - chunk * CHUNK);
            (0..len)
                .map(|_| (sample_ball(&mut rng, radius), sample_ball(&mut rng, radius), sample_direction(&mut rng)))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConservationReport {
    pub samples: usize,
    /// Largest per-component `|p' + q' - p - q|`, over both equations.
    pub momentum_error: f64,
    /// Largest `|E_c(p') + E_c(q') - E_c(p) - E_c(q)| / (E_c(p) + E_c(q))`.
    pub energy_error: f64,
    /// Same for `|p|^2 + |q|^2` under the hard-sphere map.
    pub kinetic_error: f64,
}

impl ConservationReport {
    fn merge(self, o: Self) -> Self {
        ConservationReport {
            samples: self.samples + o.samples,
            momentum_error: self.momentum_error.max(o.momentum_error),
            energy_error: self.energy_error.max(o.energy_error),
            kinetic_error: self.kinetic_error.max(o.kinetic_error),
        }
    }

    pub fn passes(&self) -> bool {
        self.momentum_error <= 1e-13 && self.energy_error <= 1e-12 && self.kinetic_error <= 1e-12
    }
}

/// Conservation of momentum and energy by both collision maps over random
/// `(p, q, ω, c)` with `|p|, |q| <= radius` and `c` log-uniform in `c_range`.
pub fn conservation_check(seed: u64, n: usize, radius: f64, c_range: [f64; 2]) -> Result<ConservationReport> {
    let (lo, hi) = (c_range[0].ln(), c_range[1].ln());
    let reports: Result<Vec<ConservationReport>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, chunk as u64);
            let mut r = ConservationReport::default();
            for _ in 0..CHUNK.min(n - chunk * CHUNK) {
                let p = sample_ball(&mut rng, radius);
                let q = sample_ball(&mut rng, radius);
                let w = sample_direction(&mut rng);
                let c = LightSpeed::new((lo + (hi - lo) * rng.gen::<f64>()).exp())?;
                let total = p + q;
                let (pr, qr) = rel_post_collision(&p, &q, &w, c);
                let (pc, qc) = cl_post_collision(&p, &q, &w);
                for (a, b) in [(pr, qr), (pc, qc)] {
                    let d = a + b - total;
                    r.momentum_error = r.momentum_error.max(d.0.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                }
                let e = |m: &Momentum| energy_over_c(m, c.c());
                let before = e(&p) + e(&q);
                r.energy_error = r.energy_error.max((e(&pr) + e(&qr) - before).abs() / before);
                let before = p.norm_sq() + q.norm_sq();
                if before > 0.0 {
                    r.kinetic_error = r.kinetic_error.max((pc.norm_sq() + qc.norm_sq() - before).abs() / before);
                }
                r.samples += 1;
            }
            Ok(r)
        })
        .collect();
    Ok(reports?.into_iter().fold(ConservationReport::default(), ConservationReport::merge))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KernelReport {
    pub samples: usize,
    pub min_kernel: f64,
    /// Largest `|K(p,q,ω) - K(q,p,ω)| / K(p,q,ω)`.
    pub exchange_defect: f64,
    /// Largest relative change of the invariant `𝔤` under the collision map.
    pub invariant_defect: f64,
    /// Largest `| |ω·(p̄-q̄)| - |ω·(p-q)| |` relative, for the hard-sphere map.
    pub classical_involution_defect: f64,
    /// Largest `|K(p,q,-ω) - K(p,q,ω)| / K(p,q,ω)`.
    pub reflection_defect: f64,
}

impl KernelReport {
    pub fn passes(&self) -> bool {
        self.min_kernel >= 0.0 && self.exchange_defect <= 1e-12 && self.invariant_defect <= 1e-10
            && self.classical_involution_defect <= 1e-12
            && self.reflection_defect <= 1e-12
    }
}

/// Positivity and the exchange and reflection symmetries of `K_c` at every
/// sweep value of `c`, invariance of `𝔤` under the relativistic collision
/// map and of the hard-sphere kernel under its own map. `K_c` itself is not
/// invariant pointwise; only `K_c dq dp` is, which the involution study checks.
pub fn kernel_check(config: &SweepConfig) -> Result<KernelReport> {
    let triples = sample_triples(config.sweep.seed, config.sweep.samples, config.sweep.sample_radius);
    let mut report = KernelReport { min_kernel: f64::INFINITY, ..Default::default() };
    for c in config.c_values() {
        let c = LightSpeed::new(c)?;
        for (p, q, w) in &triples {
            let k = kernel_rel(p, q, w, c);
            report.min_kernel = report.min_kernel.min(k);
            report.samples += 1;
            if k <= 1e-12 {
                continue;
            }
            let rel = |v: f64| (v - k).abs() / k;
            report.exchange_defect = report.exchange_defect.max(rel(kernel_rel(q, p, w, c)));
            let (pp, qq) = rel_post_collision(p, q, w, c);
            let g = lorentz_g(p, q, c)?;
            if g > 1e-6 {
                let d = (lorentz_g(&pp, &qq, c)? - g).abs() / g;
                report.invariant_defect = report.invariant_defect.max(d);
            }
            let kc = kernel_cl(p, q, w);
            if kc > 1e-12 {
                let (pb, qb) = cl_post_collision(p, q, w);
                let d = (kernel_cl(&pb, &qb, w) - kc).abs() / kc;
                report.classical_involution_defect = report.classical_involution_defect.max(d);
            }
            let minus = UnitVector::from_unit(w.components().map(|v| -v))?;
            report.reflection_defect = report.reflection_defect.max(rel(kernel_rel(p, q, &minus, c)));
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    PostCollisionGap,
    KernelGap,
    LossRate,
}

impl Estimate {
    pub fn name(&self) -> &'static str {
        match self {
            Estimate::PostCollisionGap => "post_collision_gap",
            Estimate::KernelGap => "kernel_gap",
            Estimate::LossRate => "loss_rate",
        }
    }

    pub fn units(&self) -> &'static str {
        match self {
            Estimate::PostCollisionGap => "momentum",
            Estimate::KernelGap => "velocity",
            Estimate::LossRate => "rate per (1+|p|)",
        }
    }
}

/// One `c` of a sweep: the largest sampled gap and the bound constant it implies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub estimate: Estimate,
    pub c: f64,
    pub max_gap: f64,
    pub bound_const: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub points: Vec<SweepPoint>,
    pub post_collision_fit: RateFit,
    pub kernel_fit: RateFit,
    /// Reported only; uniformity is judged by `loss_variation`.
    pub loss_fit: RateFit,
    /// `sup_c` of the loss-rate constants.
    pub loss_constant: f64,
    /// `(max - min) / max` of the loss-rate constants over the sweep.
    pub loss_variation: f64,
    pub max_fit_residual: f64,
}

impl Lemma1Report {
    pub fn fits_conclusive(&self) -> bool {
        self.post_collision_fit.residual <= self.max_fit_residual && self.kernel_fit.residual <= self.max_fit_residual
    }

    pub fn passes(&self) -> bool {
        let ok = |f: &RateFit| (f.slope + 2.0).abs() <= 0.1;
        ok(&self.post_collision_fit) && ok(&self.kernel_fit) && self.loss_variation < 0.2
    }
}

/// The gap functions of the sweep over the sampled triples: for each `c`
/// the maximum of `post_collision_gap` and `kernel_gap`, with the constants
/// `max gap c^2 / (|p|+|q|)^3` and `max gap c^2 / (1+|p|+|q|)^9`.
pub fn gap_sweep(config: &SweepConfig, samples: usize, radius: f64) -> Result<Vec<SweepPoint>> {
    let triples = sample_triples(config.sweep.seed, samples, radius);
    let mut out = Vec::new();
    for c in config.c_values() {
        let ls = LightSpeed::new(c)?;
        let (mut ga, mut ka, mut gb, mut kb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (p, q, w) in &triples {
            let (np, nq) = (p.norm(), q.norm());
            let a = post_collision_gap(p, q, w, ls);
            ga = ga.max(a);
            if np + nq > 0.0 {
                ka = ka.max(a * c * c / (np + nq).powi(3));
            }
            let b = kernel_gap(p, q, w, ls);
            gb = gb.max(b);
            kb = kb.max(b * c * c / (1.0 + np + nq).powi(9));
        }
        out.push(SweepPoint { estimate: Estimate::PostCollisionGap, c, max_gap: ga, bound_const: ka });
        out.push(SweepPoint { estimate: Estimate::KernelGap, c, max_gap: gb, bound_const: kb });
    }
    Ok(out)
}

/// `sup_p ν_c(exp(-β0 (E_c - c^2)))(p) / (1+|p|)` on the configured momentum
/// grid for every `c` of the sweep.
pub fn loss_sweep(config: &SweepConfig) -> Result<Vec<SweepPoint>> {
    let grid = config.phase_grid_with(1, config.grid.n_p)?;
    let quad = config.bare_quadrature(grid, config.quadrature.n_theta, config.quadrature.n_phi)?;
    let mut out = Vec::new();
    for c in config.c_values() {
        let op = CollisionOperator::new(Dynamics::Relativistic(LightSpeed::new(c)?), quad.clone(), Symmetry::None)?;
        let v = loss_bound_constant(&op, config.schedule.beta0)?;
        out.push(SweepPoint { estimate: Estimate::LossRate, c, max_gap: v, bound_const: v });
    }
    Ok(out)
}

/// Rates of the two gap estimates and uniformity of the loss-rate bound.
pub fn verify_lemma1(config: &SweepConfig) -> Result<Lemma1Report> {
    let mut points = gap_sweep(config, config.sweep.samples, config.sweep.sample_radius)?;
    let loss = loss_sweep(config)?;
    let fit = |e: Estimate| {
        let (c, v): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.estimate == e).map(|p| (p.c, p.max_gap)).unzip();
        RateFit::fit(&c, &v)
    };
    let post_collision_fit = fit(Estimate::PostCollisionGap)?;
    let kernel_fit = fit(Estimate::KernelGap)?;
    let (lc, lv): (Vec<f64>, Vec<f64>) = loss.iter().map(|p| (p.c, p.max_gap)).unzip();
    let loss_fit = RateFit::fit(&lc, &lv)?;
    let lmax = loss.iter().map(|p| p.max_gap).fold(0.0, f64::max);
    let lmin = loss.iter().map(|p| p.max_gap).fold(f64::INFINITY, f64::min);
    for e in [Estimate::PostCollisionGap, Estimate::KernelGap] {
        let sup = points.iter().filter(|p| p.estimate == e).map(|p| p.bound_const).fold(0.0, f64::max);
        for p in points.iter_mut().filter(|p| p.estimate == e) {
            p.bound_const = sup;
        }
    }
    points.extend(loss.into_iter().map(|p| SweepPoint { bound_const: lmax, ..p }));
    Ok(Lemma1Report {
        points,
        post_collision_fit,
        kernel_fit,
        loss_fit,
        loss_constant: lmax,
        loss_variation: (lmax - lmin) / lmax,
        max_fit_residual: config.sweep.max_fit_residual,
    })
}
