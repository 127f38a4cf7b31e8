use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Product rule on the unit sphere with polar axis `e1`: Gauss–Legendre in
/// `cos θ` times the uniform rule in `φ` at `φ_j = (j + 1/2) 2π / N_φ`.
/// Weights sum to `4π` (unnormalized surface measure).
#[derive(Clone, Debug)]
pub struct SphereRule {
    n_theta: usize,
    n_phi: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn double_factorial(n: i64) -> f64 {
    let mut r = 1.0;
    let mut k = n;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

/// `∫_{S²} x^a y^b z^c dω`.
pub fn monomial_integral(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    let (a, b, c) = (a as i64, b as i64, c as i64);
    4.0 * PI * double_factorial(a - 1) * double_factorial(b - 1) * double_factorial(c - 1)
        / double_factorial(a + b + c + 1)
}

impl SphereRule {
    /// Builds the rule and checks it against every monomial up to
    /// [`SphereRule::exact_degree`].
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 1 || n_phi < 1 {
            return Err(Error::InvalidParameter(format!("sphere rule needs at least one node per angle, got {n_theta}x{n_phi}")));
        }
        let (mu, wmu) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                nodes.push([*m, s * phi.cos(), s * phi.sin()]);
                weights.push(wm * dphi);
            }
        }
        let rule = SphereRule { n_theta, n_phi, nodes, weights };
        let err = rule.self_test(rule.exact_degree());
        if err > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "sphere rule {n_theta}x{n_phi} failed its self-test (error {err:e})"
            )));
        }
        Ok(rule)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total degree of polynomials integrated exactly.
    pub fn exact_degree(&self) -> u32 {
        (2 * self.n_theta - 1).min(self.n_phi - 1) as u32
    }

    /// Largest absolute error over all monomials `x^a y^b z^c` with `a + b + c <= degree`.
    pub fn self_test(&self, degree: u32) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..=degree {
            for b in 0..=degree - a {
                for c in 0..=degree - a - b {
                    let q: f64 = self
                        .nodes
                        .iter()
                        .zip(&self.weights)
                        .map(|(n, w)| w * n[0].powi(a as i32) * n[1].powi(b as i32) * n[2].powi(c as i32))
                        .sum();
                    worst = worst.max((q - monomial_integral(a, b, c)).abs());
                }
            }
        }
        worst
    }

    /// The node set is invariant under `ω2 -> -ω2`, `ω3 -> -ω3` and the exchange of `ω2`, `ω3`.
    pub fn supports_axial_symmetry(&self) -> bool {
        self.n_phi.is_multiple_of(4)
    }

    /// Nodes and weights for integrands even under `ω -> -ω`: one node of
    /// each antipodal pair with doubled weight. The full rule if it has no
    /// such pairing.
    pub fn folded(&self) -> Vec<([f64; 3], f64)> {
        if self.n_theta % 2 == 1 || self.n_phi % 2 == 1 {
            return self.nodes.iter().copied().zip(self.weights.iter().copied()).collect();
        }
        // GL nodes are mirrored in mu and phi_j + pi = phi_{j + N/2}
        let half = self.n_theta / 2;
        (half * self.n_phi..self.len()).map(|i| (self.nodes[i], 2.0 * self.weights[i])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_small_cases() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_surface_area() {
        for (a, b) in [(1, 1), (4, 8), (16, 32)] {
            let rule = SphereRule::new(a, b).unwrap();
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 4.0 * PI).abs() < 1e-13);
            assert!(rule.weights().iter().all(|w| *w > 0.0));
            for n in rule.nodes() {
                assert!((n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exactness_degree_is_sharp() {
        let rule = SphereRule::new(4, 8).unwrap();
        assert_eq!(rule.exact_degree(), 7);
        assert!(rule.self_test(7) < 1e-13);
        assert!(rule.self_test(8) > 1e-6);
    }

    #[test]
    fn monomial_integrals() {
        assert!((monomial_integral(0, 0, 0) - 4.0 * PI).abs() < 1e-15);
        assert!((monomial_integral(2, 0, 0) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((monomial_integral(2, 2, 0) - 4.0 * PI / 15.0).abs() < 1e-15);
        assert_eq!(monomial_integral(1, 2, 0), 0.0);
    }

    #[test]
    fn folding_pairs_antipodes() {
        let rule = SphereRule::new(4, 8).unwrap();
        let folded = rule.folded();
        assert_eq!(folded.len(), 16);
        let even = |n: &[f64; 3]| n[0] * n[0] * n[1] * n[1] + n[2].powi(4) + 1.0;
        let full: f64 = rule.nodes().iter().zip(rule.weights()).map(|(n, w)| w * even(n)).sum();
        let half: f64 = folded.iter().map(|(n, w)| w * even(n)).sum();
        assert!((full - half).abs() < 1e-13);
        for (n, _) in &folded {
            let m = [-n[0], -n[1], -n[2]];
            assert!(rule.nodes().iter().any(|o| (0..3).all(|a| (o[a] - m[a]).abs() < 1e-14)));
        }
        assert_eq!(SphereRule::new(3, 8).unwrap().folded().len(), 24);
    }

    #[test]
    fn axial_symmetry_of_node_set() {
        let rule = SphereRule::new(4, 8).unwrap();
        assert!(rule.supports_axial_symmetry());
        for n in rule.nodes() {
            for m in [[n[0], -n[1], n[2]], [n[0], n[1], -n[2]], [n[0], n[2], n[1]]] {
                assert!(rule.nodes().iter().any(|o| (0..3).all(|a| (o[a] - m[a]).abs() < 1e-14)));
            }
        }
        assert!(!SphereRule::new(4, 6).unwrap().supports_axial_symmetry());
    }
}
