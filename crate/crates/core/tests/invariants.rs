use std::sync::Arc;

use proptest::prelude::*;
use relkin_core::collision::{CollisionOperator, CollisionQuadrature, SphereRule, Symmetry};
use relkin_core::distributions::{MomentumGrid, PhaseGrid, SpatialGrid};
use relkin_core::dynamics::Dynamics;
use relkin_core::kernels::{kernel_cl, kernel_rel, lorentz_g};
use relkin_core::kinematics::{cl_post_collision, energy, rel_post_collision, LightSpeed, Momentum, UnitVector};
use relkin_core::solver::Evolution;

fn momentum(r: f64) -> impl Strategy<Value = Momentum> {
    prop::array::uniform3(-r..r).prop_map(|v| Momentum::new(v[0], v[1], v[2]))
}

fn direction() -> impl Strategy<Value = UnitVector> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(m, phi)| UnitVector::from_angles_about_e1(m, phi))
}

fn light_speed() -> impl Strategy<Value = LightSpeed> {
    (0.0f64..4.0).prop_map(|e| LightSpeed::new(10f64.powf(e)).unwrap())
}

fn close(a: &Momentum, b: &Momentum, tol: f64) -> bool {
    (0..3).all(|i| (a.0[i] - b.0[i]).abs() <= tol)
}

fn small_grid(n_x: usize) -> Arc<PhaseGrid> {
    Arc::new(PhaseGrid::new(SpatialGrid::new([n_x, 1, 1]).unwrap(), MomentumGrid::new(2.0, 5).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn relativistic_collisions_conserve(p in momentum(10.0), q in momentum(10.0), w in direction(), c in light_speed()) {
        let (pp, qq) = rel_post_collision(&p, &q, &w, c);
        prop_assert!(close(&(pp + qq), &(p + q), 1e-13 * (1.0 + p.norm() + q.norm())));
        let (e0, e1) = (energy(&p, c) + energy(&q, c), energy(&pp, c) + energy(&qq, c));
        prop_assert!((e1 - e0).abs() <= 1e-12 * e0);
    }

    #[test]
    fn classical_collisions_conserve(p in momentum(10.0), q in momentum(10.0), w in direction()) {
        let (pp, qq) = cl_post_collision(&p, &q, &w);
        prop_assert!(close(&(pp + qq), &(p + q), 1e-13 * (1.0 + p.norm() + q.norm())));
        let (e0, e1) = (p.norm_sq() + q.norm_sq(), pp.norm_sq() + qq.norm_sq());
        prop_assert!((e1 - e0).abs() <= 1e-12 * e0.max(1e-300));
    }

    #[test]
    fn collision_maps_are_involutions(p in momentum(10.0), q in momentum(10.0), w in direction(), c in light_speed()) {
        let tol = 1e-11 * (1.0 + p.norm() + q.norm());
        let (pp, qq) = rel_post_collision(&p, &q, &w, c);
        let (p2, q2) = rel_post_collision(&pp, &qq, &w, c);
        prop_assert!(close(&p2, &p, tol) && close(&q2, &q, tol));
        let (pp, qq) = cl_post_collision(&p, &q, &w);
        let (p2, q2) = cl_post_collision(&pp, &qq, &w);
        prop_assert!(close(&p2, &p, tol) && close(&q2, &q, tol));
    }

    #[test]
    fn kernels_are_symmetric(p in momentum(10.0), q in momentum(10.0), w in direction(), c in light_speed()) {
        let k = kernel_rel(&p, &q, &w, c);
        prop_assert!(k >= 0.0);
        prop_assert!((kernel_rel(&q, &p, &w, c) - k).abs() <= 1e-12 * k.max(1e-300));
        let (pp, qq) = rel_post_collision(&p, &q, &w, c);
        let (g0, g1) = (lorentz_g(&p, &q, c).unwrap(), lorentz_g(&pp, &qq, c).unwrap());
        prop_assert!((g1 - g0).abs() <= 1e-9 * g0.max(1e-6));
        let (pp, qq) = cl_post_collision(&p, &q, &w);
        let kc = kernel_cl(&p, &q, &w);
        prop_assert!((kernel_cl(&pp, &qq, &w) - kc).abs() <= 1e-12 * (1.0 + kc));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gain_and_loss_are_monotone(
        f in prop::collection::vec(0.0f64..1.0, 125),
        bump in prop::collection::vec(0.0f64..1.0, 125),
        relativistic in any::<bool>(),
    ) {
        let grid = small_grid(1);
        let dynamics = if relativistic { Dynamics::Relativistic(LightSpeed::new(5.0).unwrap()) } else { Dynamics::Classical };
        let quad = CollisionQuadrature::new(grid, SphereRule::new(2, 4).unwrap());
        let op = CollisionOperator::new(dynamics, quad, Symmetry::None).unwrap();
        let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let (gain_f, gain_g) = (op.gain_batch(&f, &f, 1).unwrap(), op.gain_batch(&g, &g, 1).unwrap());
        let (nu_f, nu_g) = (op.loss_rate_batch(&f, 1).unwrap(), op.loss_rate_batch(&g, 1).unwrap());
        for i in 0..gain_f.len() {
            prop_assert!(0.0 <= gain_f[i] && gain_f[i] <= gain_g[i] * (1.0 + 1e-14));
            prop_assert!(0.0 <= nu_f[i] && nu_f[i] <= nu_g[i] * (1.0 + 1e-14));
        }
    }

    #[test]
    fn mild_map_is_monotone(
        f_in in prop::collection::vec(0.0f64..1.0, 375),
        g in prop::collection::vec(0.0f64..5.0, 1125),
        dg in prop::collection::vec(0.0f64..5.0, 1125),
        nu in prop::collection::vec(0.0f64..20.0, 1125),
        dnu in prop::collection::vec(0.0f64..20.0, 1125),
    ) {
        // 125 momenta, 3 fields (n_t = 2), 3 spatial nodes
        let grid = small_grid(3);
        let evo = Evolution::new(grid, Dynamics::Classical, 0.05, 2).unwrap();
        let g_hi: Vec<f64> = g.iter().zip(&dg).map(|(a, b)| a + b).collect();
        let nu_hi: Vec<f64> = nu.iter().zip(&dnu).map(|(a, b)| a + b).collect();
        let mut lo = vec![0.0; 1125];
        let mut hi = vec![0.0; 1125];
        evo.apply(&f_in, Some((&g, 3, 0)), Some((&nu_hi, 3, 0)), &mut lo, 3, 0);
        evo.apply(&f_in, Some((&g_hi, 3, 0)), Some((&nu, 3, 0)), &mut hi, 3, 0);
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(0.0 <= *a && *a <= *b * (1.0 + 1e-14));
        }
    }
}
