//! Fubini-Study geometry on the affine chart.
//!
//! The chart identifies `{z_0 != 0}` with C^n via `z_j = w_j / w_0`; its
//! complement has measure zero, so all fields and integrals live here. Real
//! coordinates are ordered `(x_1..x_n, y_1..y_n)` with `z_j = x_j + i y_j`,
//! and the real metric extends the Hermitian one by `g(Z_i, Z̄_j) = h_{ij}`,
//! `g(Z_i, Z_j) = 0`. Under this normalization `Vol = (2π)^n / n!` and the
//! holomorphic sectional curvature is 2; both are pinned by tests.

pub mod quadrature;

use crate::linalg::{Cplx, SqMat};
use crate::scalar::{seed, Dual, Scalar};

/// A point of the affine chart, stored as real coordinates
/// `(x_1..x_n, y_1..y_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    coords: Vec<f64>,
}

impl ChartPoint {
    /// Builds a point from real coordinates `(x_1..x_n, y_1..y_n)`.
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(
            !coords.is_empty() && coords.len() % 2 == 0,
            "chart coordinates come in (x, y) pairs"
        );
        assert!(coords.iter().all(|c| c.is_finite()));
        ChartPoint { coords }
    }

    /// Builds a point from complex coordinates.
    pub fn from_complex(z: &[(f64, f64)]) -> Self {
        let n = z.len();
        let mut coords = vec![0.0; 2 * n];
        for (j, &(re, im)) in z.iter().enumerate() {
            coords[j] = re;
            coords[n + j] = im;
        }
        ChartPoint::new(coords)
    }

    /// The origin `z = 0`, i.e. the base point `[1:0:...:0]`.
    pub fn origin(n: usize) -> Self {
        ChartPoint::new(vec![0.0; 2 * n])
    }

    /// Complex dimension n.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Complex coordinate `z_j` as `(re, im)`, `j` zero-based.
    pub fn z(&self, j: usize) -> (f64, f64) {
        (self.coords[j], self.coords[self.n() + j])
    }
}

/// A real tangent vector in the coordinate basis
/// `(∂x_1..∂x_n, ∂y_1..∂y_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    pub components: Vec<f64>,
}

impl Tangent {
    pub fn new(components: Vec<f64>) -> Self {
        assert!(components.iter().all(|c| c.is_finite()));
        Tangent { components }
    }

    pub fn zero(n: usize) -> Self {
        Tangent {
            components: vec![0.0; 2 * n],
        }
    }

    /// Coordinate basis vector `∂/∂c_a`.
    pub fn basis(n: usize, a: usize) -> Self {
        let mut c = vec![0.0; 2 * n];
        c[a] = 1.0;
        Tangent { components: c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Tangent {
            components: self.components.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, o: &Tangent) -> Self {
        Tangent {
            components: self
                .components
                .iter()
                .zip(&o.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, o: &Tangent) -> Self {
        Tangent {
            components: self
                .components
                .iter()
                .zip(&o.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Euclidean norm of the coordinate components (not the metric norm).
    pub fn coord_norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Metric data assembled at a point.
#[derive(Clone, Debug)]
pub struct MetricAtPoint {
    /// Hermitian components `h_{ij} = g(Z_i, Z̄_j)`.
    pub hermitian: Vec<Vec<Cplx<f64>>>,
    /// Real 2n×2n metric in the coordinate basis.
    pub real_metric: SqMat<f64>,
    /// Inverse of `real_metric`.
    pub inverse: SqMat<f64>,
    /// Levi-Civita symbols `Γ^c_{ab}` of the real metric, indexed `[c][a][b]`.
    pub christoffel: Vec<SqMat<f64>>,
}

/// The `2n` frame vectors `e_1..e_2n` at the origin:
/// `e_α = ∂x_α/√2`, `e_{n+α} = ∂y_α/√2`.
#[derive(Clone, Debug)]
pub struct FrameZ0 {
    pub vectors: Vec<Tangent>,
}

impl FrameZ0 {
    pub fn new(n: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let vectors = (0..2 * n).map(|a| Tangent::basis(n, a).scale(s)).collect();
        FrameZ0 { vectors }
    }
}

/// Hermitian metric components over a generic scalar:
/// `h_{ij} = δ_ij/s − z̄_i z_j / s²` with `s = 1 + |z|²`.
pub fn hermitian_metric_generic<T: Scalar>(n: usize, coords: &[T]) -> Vec<Vec<Cplx<T>>> {
    let mut s = T::one();
    for c in coords {
        s += *c * *c;
    }
    let inv_s = T::one() / s;
    let inv_s2 = inv_s * inv_s;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let zi = Cplx::new(coords[i], coords[n + i]);
                    let zj = Cplx::new(coords[j], coords[n + j]);
                    let prod = zi.conj() * zj;
                    let mut re = -prod.re * inv_s2;
                    if i == j {
                        re += inv_s;
                    }
                    Cplx::new(re, -prod.im * inv_s2)
                })
                .collect()
        })
        .collect()
}

/// Real 2n×2n metric over a generic scalar.
///
/// Blocks: `G_xx = G_yy = 2 Re h`, `G_xy = 2 Im h`, `G_yx = −2 Im h`, with
/// `Re h_ij = δ_ij/s − (x_i x_j + y_i y_j)/s²` and
/// `Im h_ij = −(x_i y_j − y_i x_j)/s²`.
pub fn real_metric_generic<T: Scalar>(n: usize, coords: &[T]) -> SqMat<T> {
    let mut s = T::one();
    for c in coords {
        s += *c * *c;
    }
    let inv_s = T::one() / s;
    let inv_s2 = inv_s * inv_s;
    let two = T::from_f64(2.0);
    let mut g = SqMat::zeros(2 * n);
    for i in 0..n {
        let (xi, yi) = (coords[i], coords[n + i]);
        for j in 0..n {
            let (xj, yj) = (coords[j], coords[n + j]);
            let mut re = -(xi * xj + yi * yj) * inv_s2;
            if i == j {
                re += inv_s;
            }
            let im = -(xi * yj - yi * xj) * inv_s2;
            let re2 = two * re;
            let im2 = two * im;
            g[(i, j)] = re2;
            g[(n + i, n + j)] = re2;
            g[(i, n + j)] = im2;
            g[(n + i, j)] = -im2;
        }
    }
    g
}

/// Christoffel symbols `Γ^c_{ab}` over a generic scalar, computed from exact
/// first derivatives of the metric. Returned as `gam[c][(a, b)]`.
pub fn christoffel_generic<T: Scalar>(n: usize, coords: &[T]) -> Vec<SqMat<T>> {
    let dim = 2 * n;
    let g = real_metric_generic(n, coords);
    let ginv = g.inverse();
    // dg[a] = ∂_a G
    let dg: Vec<SqMat<T>> = (0..dim)
        .map(|a| {
            let seeded = seed(coords, a);
            let gd: SqMat<Dual<T>> = real_metric_generic(n, &seeded);
            SqMat::from_fn(dim, |i, j| gd.get(i, j).eps)
        })
        .collect();
    let half = T::from_f64(0.5);
    (0..dim)
        .map(|c| {
            SqMat::from_fn(dim, |a, b| {
                let mut s = T::zero();
                for d in 0..dim {
                    s += ginv.get(c, d) * (dg[a].get(b, d) + dg[b].get(a, d) - dg[d].get(a, b));
                }
                s * half
            })
        })
        .collect()
}

/// Riemann tensor components `R(∂_a, ∂_b)∂_c = rm[a][b][c][d] ∂_d` over a
/// generic scalar, with the sign convention
/// `R(X,Y)Z = D_X D_Y Z − D_Y D_X Z − D_{[X,Y]}Z`.
pub fn riemann_generic<T: Scalar>(n: usize, coords: &[T]) -> Vec<Vec<Vec<Vec<T>>>> {
    let dim = 2 * n;
    let gam = christoffel_generic(n, coords);
    // dgam[a][c] = ∂_a Γ^c
    let dgam: Vec<Vec<SqMat<T>>> = (0..dim)
        .map(|a| {
            let seeded = seed(coords, a);
            let gd: Vec<SqMat<Dual<T>>> = christoffel_generic(n, &seeded);
            gd.iter()
                .map(|m| SqMat::from_fn(dim, |i, j| m.get(i, j).eps))
                .collect()
        })
        .collect();
    let mut rm = vec![vec![vec![vec![T::zero(); dim]; dim]; dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    let mut v = dgam[a][d].get(b, c) - dgam[b][d].get(a, c);
                    for e in 0..dim {
                        v += gam[d].get(a, e) * gam[e].get(b, c)
                            - gam[d].get(b, e) * gam[e].get(a, c);
                    }
                    rm[a][b][c][d] = v;
                }
            }
        }
    }
    rm
}

/// Assembles the full metric package at a point.
pub fn fs_metric(p: &ChartPoint) -> MetricAtPoint {
    let n = p.n();
    let hermitian = hermitian_metric_generic(n, p.coords());
    let real_metric = real_metric_generic(n, p.coords());
    let inverse = real_metric.inverse();
    let christoffel = christoffel_generic(n, p.coords());
    MetricAtPoint {
        hermitian,
        real_metric,
        inverse,
        christoffel,
    }
}

/// Metric pairing of two tangent vectors at `p`.
pub fn metric_inner(p: &ChartPoint, x: &Tangent, y: &Tangent) -> f64 {
    let g = real_metric_generic(p.n(), p.coords());
    let gx = g.apply(&x.components);
    gx.iter().zip(&y.components).map(|(a, b)| a * b).sum()
}

/// The almost complex structure: `∂x_j ↦ ∂y_j`, `∂y_j ↦ −∂x_j`.
pub fn j_apply(p: &ChartPoint, x: &Tangent) -> Tangent {
    let n = p.n();
    let mut out = vec![0.0; 2 * n];
    for j in 0..n {
        out[n + j] = x.components[j];
        out[j] = -x.components[n + j];
    }
    Tangent::new(out)
}

/// Constant coordinate components of J as a (1,1) tensor: `J ∂_a = jm[b][a] ∂_b`.
pub fn j_matrix(n: usize) -> SqMat<f64> {
    SqMat::from_fn(2 * n, |b, a| {
        if a < n && b == a + n {
            1.0
        } else if a >= n && b == a - n {
            -1.0
        } else {
            0.0
        }
    })
}

/// `R(X, Y) Z` of the Levi-Civita connection at `p`.
pub fn riemann(p: &ChartPoint, x: &Tangent, y: &Tangent, z: &Tangent) -> Tangent {
    let n = p.n();
    let rm = riemann_generic(n, p.coords());
    riemann_apply(&rm, x, y, z)
}

/// Contracts precomputed Riemann components against three vectors.
pub fn riemann_apply(rm: &[Vec<Vec<Vec<f64>>>], x: &Tangent, y: &Tangent, z: &Tangent) -> Tangent {
    let dim = rm.len();
    let mut out = vec![0.0; dim];
    for a in 0..dim {
        let xa = x.components[a];
        if xa == 0.0 {
            continue;
        }
        for b in 0..dim {
            let yb = y.components[b];
            if yb == 0.0 {
                continue;
            }
            for c in 0..dim {
                let zc = z.components[c];
                if zc == 0.0 {
                    continue;
                }
                let w = xa * yb * zc;
                for d in 0..dim {
                    out[d] += w * rm[a][b][c][d];
                }
            }
        }
    }
    Tangent::new(out)
}

/// `Ric(X) = Σ_j R(X, e_j) e_j` over any g-orthonormal frame, computed
/// frame-free as `g^{ce} R(X, ∂_c) ∂_e`.
pub fn ricci(p: &ChartPoint, x: &Tangent) -> Tangent {
    let n = p.n();
    let dim = 2 * n;
    let rm = riemann_generic(n, p.coords());
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let mut out = vec![0.0; dim];
    for b in 0..dim {
        let xb = x.components[b];
        if xb == 0.0 {
            continue;
        }
        for c in 0..dim {
            for e in 0..dim {
                let w = xb * ginv.get(c, e);
                for d in 0..dim {
                    out[d] += w * rm[b][c][e][d];
                }
            }
        }
    }
    Tangent::new(out)
}

/// `Σ_j R(JX, e_j) J e_j`; equals `−(n+1) X` on the chart.
pub fn curvature_identity_iii(p: &ChartPoint, x: &Tangent) -> Tangent {
    let n = p.n();
    let dim = 2 * n;
    let jx = j_apply(p, x);
    let rm = riemann_generic(n, p.coords());
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let jm = j_matrix(n);
    // Σ_j R(JX, e_j) J e_j = g^{ce} R(JX, ∂_c) J ∂_e
    let mut out = vec![0.0; dim];
    for b in 0..dim {
        let xb = jx.components[b];
        if xb == 0.0 {
            continue;
        }
        for c in 0..dim {
            for e in 0..dim {
                let w = xb * ginv.get(c, e);
                if w == 0.0 {
                    continue;
                }
                for d in 0..dim {
                    let rd = rm[b][c][e][d];
                    if rd == 0.0 {
                        continue;
                    }
                    // J ∂_d = jm[k][d] ∂_k
                    for k in 0..dim {
                        out[k] += w * rd * jm.get(k, d);
                    }
                }
            }
        }
    }
    Tangent::new(out)
}

/// G-orthonormal, J-adapted frame at `p`: vectors `u_1..u_n, Ju_1..Ju_n`.
///
/// Built by Gram-Schmidt over the coordinate vectors; the Hermitian property
/// of the metric makes `Ju` automatically orthogonal to the J-invariant span
/// of the previously accepted vectors.
pub fn frame_at(p: &ChartPoint) -> Vec<Tangent> {
    let n = p.n();
    let g = real_metric_generic(n, p.coords());
    let inner = |x: &Tangent, y: &Tangent| -> f64 {
        g.apply(&x.components)
            .iter()
            .zip(&y.components)
            .map(|(a, b)| a * b)
            .sum()
    };
    let mut holo: Vec<Tangent> = Vec::with_capacity(n);
    let mut anti: Vec<Tangent> = Vec::with_capacity(n);
    let mut cand = 0usize;
    while holo.len() < n {
        assert!(cand < 2 * n, "failed to complete J-adapted frame");
        let mut v = Tangent::basis(n, cand);
        cand += 1;
        for u in holo.iter().chain(anti.iter()) {
            let c = inner(&v, u);
            v = v.sub(&u.scale(c));
        }
        let nrm2 = inner(&v, &v);
        if nrm2 < 1e-18 {
            continue;
        }
        let v = v.scale(1.0 / nrm2.sqrt());
        let jv = j_apply(p, &v);
        holo.push(v);
        anti.push(jv);
    }
    holo.extend(anti);
    holo
}
