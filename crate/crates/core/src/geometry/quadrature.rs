//! Quadrature over the affine chart.
//!
//! Each real axis is compactified with `x = tan(u)`, `u ∈ (−π/2, π/2)`; the
//! chart misses a measure-zero set, so no correction is applied. Weights
//! carry both the substitution Jacobian and the Riemannian volume density
//! `√det G`. Node data is stored per axis and decoded lazily: the tensor
//! grids at n = 2 run into the tens of millions of nodes.

use crate::error::{Error, Result};
use crate::geometry::ChartPoint;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Tensor product of Gauss-Legendre rules in the `u` variables.
    TensorGauss,
    /// Halton low-discrepancy sampling in the `u` cube.
    MonteCarlo,
}

/// A quadrature rule for `∫ f dV` over the chart.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    n: usize,
    scheme: Scheme,
    resolution: usize,
    /// Per-axis node coordinates (TensorGauss) after the tan substitution.
    axis_nodes: Vec<f64>,
    /// Per-axis weights including the substitution Jacobian.
    axis_weights: Vec<f64>,
    /// Explicit nodes (MonteCarlo only).
    mc_nodes: Vec<Vec<f64>>,
    mc_weight: f64,
}

impl QuadratureRule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn node_count(&self) -> usize {
        match self.scheme {
            Scheme::TensorGauss => self.axis_nodes.len().pow(2 * self.n as u32),
            Scheme::MonteCarlo => self.mc_nodes.len(),
        }
    }

    /// Decodes node `idx` into chart coordinates and its full weight
    /// (substitution Jacobian × volume density).
    pub fn node(&self, idx: usize) -> (ChartPoint, f64) {
        let dim = 2 * self.n;
        match self.scheme {
            Scheme::TensorGauss => {
                let m = self.axis_nodes.len();
                let mut coords = vec![0.0; dim];
                let mut w = 1.0;
                let mut rest = idx;
                for c in coords.iter_mut() {
                    let k = rest % m;
                    rest /= m;
                    *c = self.axis_nodes[k];
                    w *= self.axis_weights[k];
                }
                let p = ChartPoint::new(coords);
                let w = w * volume_density(self.n, p.coords());
                (p, w)
            }
            Scheme::MonteCarlo => {
                let coords = self.mc_nodes[idx].clone();
                let p = ChartPoint::new(coords);
                let mut w = self.mc_weight;
                for c in p.coords() {
                    w *= 1.0 + c * c;
                }
                let w = w * volume_density(self.n, p.coords());
                (p, w)
            }
        }
    }

    /// `∫ f dV` with a deterministic summation order: node values are
    /// produced in parallel but reduced sequentially in index order.
    pub fn integrate<F: Fn(&ChartPoint) -> f64 + Sync>(&self, f: F) -> f64 {
        let count = self.node_count();
        const CHUNK: usize = 16384;
        let chunks: Vec<f64> = (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|ci| {
                let lo = ci * CHUNK;
                let hi = (lo + CHUNK).min(count);
                let mut acc = 0.0;
                for idx in lo..hi {
                    let (p, w) = self.node(idx);
                    acc += w * f(&p);
                }
                acc
            })
            .collect();
        chunks.iter().sum()
    }

    /// Like [`integrate`](Self::integrate) but the integrand returns several
    /// values that are accumulated together (one pass over the nodes).
    pub fn integrate_many<F: Fn(&ChartPoint, &mut [f64]) + Sync>(
        &self,
        width: usize,
        f: F,
    ) -> Vec<f64> {
        let count = self.node_count();
        const CHUNK: usize = 4096;
        let chunks: Vec<Vec<f64>> = (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|ci| {
                let lo = ci * CHUNK;
                let hi = (lo + CHUNK).min(count);
                let mut acc = vec![0.0; width];
                let mut vals = vec![0.0; width];
                for idx in lo..hi {
                    let (p, w) = self.node(idx);
                    vals.iter_mut().for_each(|v| *v = 0.0);
                    f(&p, &mut vals);
                    for (a, v) in acc.iter_mut().zip(&vals) {
                        *a += w * v;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; width];
        for c in chunks {
            for (a, v) in out.iter_mut().zip(&c) {
                *a += v;
            }
        }
        out
    }
}

/// `√det G = 2^n / (1+|z|²)^{n+1}`; the closed form is pinned against the
/// determinant of the assembled metric by a test.
pub fn volume_density(n: usize, coords: &[f64]) -> f64 {
    let s = 1.0 + coords.iter().map(|c| c * c).sum::<f64>();
    2f64.powi(n as i32) / s.powi(n as i32 + 1)
}

/// Builds a rule covering the chart.
pub fn make_quadrature(n: usize, resolution: usize, scheme: Scheme) -> Result<QuadratureRule> {
    if resolution == 0 {
        return Err(Error::InvalidResolution);
    }
    if n == 0 {
        return Err(Error::UnsupportedDimension { required: 1, got: 0 });
    }
    match scheme {
        Scheme::TensorGauss => {
            let (t, w) = gauss_legendre(resolution);
            let half_pi = std::f64::consts::FRAC_PI_2;
            let mut axis_nodes = Vec::with_capacity(resolution);
            let mut axis_weights = Vec::with_capacity(resolution);
            for (ti, wi) in t.iter().zip(&w) {
                let u = ti * half_pi;
                let x = u.tan();
                axis_nodes.push(x);
                axis_weights.push(wi * half_pi * (1.0 + x * x));
            }
            Ok(QuadratureRule {
                n,
                scheme,
                resolution,
                axis_nodes,
                axis_weights,
                mc_nodes: Vec::new(),
                mc_weight: 0.0,
            })
        }
        Scheme::MonteCarlo => {
            let dim = 2 * n;
            let count = resolution.pow(dim as u32);
            let mut nodes = Vec::with_capacity(count);
            for i in 0..count {
                let mut coords = vec![0.0; dim];
                for (a, c) in coords.iter_mut().enumerate() {
                    let u = (halton(i as u64 + 1, PRIMES[a]) - 0.5) * std::f64::consts::PI;
                    *c = u.tan();
                }
                nodes.push(coords);
            }
            Ok(QuadratureRule {
                n,
                scheme,
                resolution,
                axis_nodes: Vec::new(),
                axis_weights: Vec::new(),
                mc_nodes: nodes,
                // uniform measure of the u-cube; per-node Jacobian applied in node()
                mc_weight: std::f64::consts::PI.powi(dim as i32) / count as f64,
            })
        }
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Gauss-Legendre nodes and weights on (−1, 1) by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for k in 0..m.div_ceil(2) {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        weights[k] = w;
        nodes[m - 1 - k] = x;
        weights[m - 1 - k] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_m` and derivative at `x`.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `Vol(CP^n) = (2π)^n / n!`.
pub fn reference_volume(n: usize) -> f64 {
    let mut v = 1.0;
    for k in 1..=n {
        v *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn volume_density_matches_metric_determinant() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 1..=3usize {
            for _ in 0..10 {
                let p = crate::sample::random_point(&mut rng, n, 1.5);
                let direct = crate::geometry::real_metric_generic(n, p.coords()).det().sqrt();
                let closed = volume_density(n, p.coords());
                assert_relative_eq!(direct, closed, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        // degree 11 polynomial: x^10
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(s, 2.0 / 11.0, epsilon = 1e-13);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn rejects_zero_resolution() {
        assert!(matches!(
            make_quadrature(1, 0, Scheme::TensorGauss),
            Err(Error::InvalidResolution)
        ));
    }

    #[test]
    fn volume_cp1_radial_oracle() {
        // radial oracle: ∫ 2r/(1+r²)² dr · 2π = 2π
        let q = make_quadrature(1, 128, Scheme::TensorGauss).unwrap();
        let v = q.integrate(|_| 1.0);
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-6, "vol {v}");
    }

    #[test]
    fn volume_cp2_beta_integral_oracle() {
        // Vol = (2π)²/2! = 2π² from the radial Beta integral
        let q = make_quadrature(2, 40, Scheme::TensorGauss).unwrap();
        let v = q.integrate(|_| 1.0);
        assert!((v - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-3, "vol {v}");
    }

    #[test]
    fn all_weights_positive() {
        let q = make_quadrature(1, 12, Scheme::TensorGauss).unwrap();
        for i in 0..q.node_count() {
            assert!(q.node(i).1 > 0.0);
        }
        let q = make_quadrature(1, 4, Scheme::MonteCarlo).unwrap();
        for i in 0..q.node_count() {
            assert!(q.node(i).1 > 0.0);
        }
    }

    #[test]
    fn bump_vs_refined_reference() {
        // Richardson-style refinement oracle on a rapidly decaying integrand
        let f = |p: &ChartPoint| {
            let r2: f64 = p.coords().iter().map(|c| c * c).sum();
            (-1.5 * r2).exp() * (1.0 + p.coords()[0])
        };
        let coarse = make_quadrature(1, 96, Scheme::TensorGauss)
            .unwrap()
            .integrate(f);
        let fine = make_quadrature(1, 192, Scheme::TensorGauss)
            .unwrap()
            .integrate(f);
        assert!((coarse - fine).abs() < 1e-6 * fine.abs().max(1.0));
    }

    #[test]
    fn monte_carlo_rough_volume() {
        let q = make_quadrature(1, 160, Scheme::MonteCarlo).unwrap();
        let v = q.integrate(|_| 1.0);
        assert_relative_eq!(v, 2.0 * std::f64::consts::PI, max_relative = 2e-2);
    }

    #[test]
    fn convergence_order_observed() {
        let truth = 2.0 * std::f64::consts::PI;
        let errs: Vec<f64> = [16usize, 32, 64]
            .iter()
            .map(|&r| {
                (make_quadrature(1, r, Scheme::TensorGauss)
                    .unwrap()
                    .integrate(|_| 1.0)
                    - truth)
                    .abs()
            })
            .collect();
        assert!(errs[1] < errs[0] / 4.0);
        assert!(errs[2] < errs[1] / 4.0);
    }
}
