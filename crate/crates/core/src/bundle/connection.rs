//! Analytic connection potentials on the chart and their curvature.

use super::{AlgField, AlgTensor, AlgValue};
use crate::linalg::SqMat;
use crate::scalar::{seed, Dual, Scalar};

/// Rotation generator in the (i, j) coordinate plane of the fiber:
/// `E_{ji} − E_{ij}`.
pub fn rotation_generator<T: Scalar>(r: usize, i: usize, j: usize) -> AlgValue<T> {
    let mut m = SqMat::zeros(r);
    m[(j, i)] = T::one();
    m[(i, j)] = -T::one();
    m
}

/// The rank-2 rotation generator σ₀ embedded top-left.
pub fn sigma0<T: Scalar>(r: usize) -> AlgValue<T> {
    rotation_generator(r, 0, 1)
}

/// An analytically defined connection potential `∇ = d + A` on the chart.
///
/// `KahlerAbelian` uses `A = k θ ⊗ σ₀` with
/// `θ = (i/2) Σ (z_j dz̄_j − z̄_j dz_j)/(1+|z|²)`, whose exterior derivative
/// is the Kähler form; its curvature is parallel, so the connection is
/// critical for every profile. `NonabelianTest` adds constant-coefficient
/// pieces `ε(T₁ dx_1 + T₂ dy_1)` on top of `k θ ⊗ T₃` with noncommuting
/// generators when r ≥ 3.
#[derive(Clone, Debug)]
pub enum ConnectionSpec {
    Flat {
        n: usize,
        r: usize,
    },
    KahlerAbelian {
        n: usize,
        r: usize,
        k: f64,
    },
    NonabelianTest {
        n: usize,
        r: usize,
        k: f64,
        eps: f64,
    },
    Perturbed {
        base: Box<ConnectionSpec>,
        bump: BumpForm,
    },
}

impl ConnectionSpec {
    pub fn n(&self) -> usize {
        match self {
            ConnectionSpec::Flat { n, .. }
            | ConnectionSpec::KahlerAbelian { n, .. }
            | ConnectionSpec::NonabelianTest { n, .. } => *n,
            ConnectionSpec::Perturbed { base, .. } => base.n(),
        }
    }

    pub fn r(&self) -> usize {
        match self {
            ConnectionSpec::Flat { r, .. }
            | ConnectionSpec::KahlerAbelian { r, .. }
            | ConnectionSpec::NonabelianTest { r, .. } => *r,
            ConnectionSpec::Perturbed { base, .. } => base.r(),
        }
    }

    /// Potential components `A_a` at generic coordinates (rank-1 tensor).
    pub fn potential<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        let n = self.n();
        let r = self.r();
        let dim = 2 * n;
        match self {
            ConnectionSpec::Flat { .. } => AlgTensor::zeros(n, 1, r),
            ConnectionSpec::KahlerAbelian { k, .. } => {
                let th = theta(n, coords);
                let sig = sigma0::<T>(r);
                let mut out = AlgTensor::zeros(n, 1, r);
                let kc = T::from_f64(*k);
                for a in 0..dim {
                    out.comps[a] = sig.scale(kc * th[a]);
                }
                out
            }
            ConnectionSpec::NonabelianTest { k, eps, .. } => {
                let (t1, t2, t3) = test_generators::<T>(r);
                let th = theta(n, coords);
                let mut out = AlgTensor::zeros(n, 1, r);
                let kc = T::from_f64(*k);
                let ec = T::from_f64(*eps);
                for a in 0..dim {
                    out.comps[a] = t3.scale(kc * th[a]);
                }
                // constant-coefficient pieces on the first complex axis
                out.comps[0] = out.comps[0].add(&t1.scale(ec));
                out.comps[n] = out.comps[n].add(&t2.scale(ec));
                out
            }
            ConnectionSpec::Perturbed { base, bump } => {
                let mut out = base.potential(coords);
                let b = bump.eval(coords);
                for (o, s) in out.comps.iter_mut().zip(&b.comps) {
                    *o = o.add(s);
                }
                out
            }
        }
    }
}

/// Components of `θ` in the real coordinate basis:
/// `θ(∂x_j) = −y_j/s`, `θ(∂y_j) = x_j/s` with `s = 1 + |z|²`.
pub fn theta<T: Scalar>(n: usize, coords: &[T]) -> Vec<T> {
    let mut s = T::one();
    for c in coords {
        s += *c * *c;
    }
    let inv = T::one() / s;
    let mut out = vec![T::zero(); 2 * n];
    for j in 0..n {
        out[j] = -coords[n + j] * inv;
        out[n + j] = coords[j] * inv;
    }
    out
}

/// Generators of the test connection: mutually noncommuting rotations when
/// the fiber admits them, all collapsing to σ₀ at r = 2.
fn test_generators<T: Scalar>(r: usize) -> (AlgValue<T>, AlgValue<T>, AlgValue<T>) {
    if r >= 3 {
        (
            rotation_generator(r, 1, 2),
            rotation_generator(r, 2, 0),
            rotation_generator(r, 0, 1),
        )
    } else {
        (sigma0(r), sigma0(r), sigma0(r))
    }
}

/// The potential as a field.
#[derive(Clone)]
pub struct PotentialField {
    pub conn: ConnectionSpec,
}

impl AlgField for PotentialField {
    fn n(&self) -> usize {
        self.conn.n()
    }
    fn rank(&self) -> usize {
        1
    }
    fn r(&self) -> usize {
        self.conn.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        self.conn.potential(coords)
    }
}

/// Curvature field `R_{ab} = ∂_a A_b − ∂_b A_a + [A_a, A_b]`, differentiated
/// exactly.
#[derive(Clone)]
pub struct CurvatureField {
    pub conn: ConnectionSpec,
}

impl AlgField for CurvatureField {
    fn n(&self) -> usize {
        self.conn.n()
    }
    fn rank(&self) -> usize {
        2
    }
    fn r(&self) -> usize {
        self.conn.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        let n = self.n();
        let r = self.r();
        let dim = 2 * n;
        let apot = self.conn.potential(coords);
        // dA[a][b] = ∂_a A_b
        let mut da: Vec<AlgTensor<T>> = Vec::with_capacity(dim);
        for a in 0..dim {
            let seeded = seed(coords, a);
            let ad: AlgTensor<Dual<T>> = self.conn.potential(&seeded);
            let mut slice = AlgTensor::zeros(n, 1, r);
            for (dst, src) in slice.comps.iter_mut().zip(&ad.comps) {
                for (d, s) in dst.data.iter_mut().zip(&src.data) {
                    *d = s.eps;
                }
            }
            da.push(slice);
        }
        let mut out = AlgTensor::zeros(n, 2, r);
        for a in 0..dim {
            for b in 0..dim {
                let v = da[a].comps[b]
                    .sub(&da[b].comps[a])
                    .add(&apot.comps[a].bracket(&apot.comps[b]));
                out.comps[a * dim + b] = v;
            }
        }
        out
    }
}

/// Smooth rapidly decaying test form: Gaussian envelope times an affine
/// matrix-valued coefficient, antisymmetrized over the slots.
///
/// Decay beats every polynomial weight, so these forms integrate by parts
/// cleanly over the chart.
#[derive(Clone, Debug)]
pub struct BumpForm {
    pub n: usize,
    pub r: usize,
    pub rank: usize,
    pub beta: f64,
    pub center: Vec<f64>,
    /// Constant coefficient per slot multi-index.
    pub const_coef: Vec<SqMat<f64>>,
    /// Linear modulation per slot multi-index and coordinate.
    pub lin_coef: Vec<Vec<SqMat<f64>>>,
}

impl BumpForm {
    /// Draws a random bump form with so(r)-valued coefficients.
    pub fn random<R: rand::Rng>(
        rng: &mut R,
        n: usize,
        r: usize,
        rank: usize,
        beta: f64,
    ) -> Self {
        let dim = 2 * n;
        let count = dim.pow(rank as u32);
        let so = |rng: &mut R| {
            let mut m = SqMat::zeros(r);
            for i in 0..r {
                for j in (i + 1)..r {
                    let v: f64 = crate::sample::normal(rng);
                    m[(i, j)] = v;
                    m[(j, i)] = -v;
                }
            }
            m
        };
        let const_coef = (0..count).map(|_| so(rng)).collect();
        let lin_coef = (0..count)
            .map(|_| (0..dim).map(|_| so(rng)).collect())
            .collect();
        let center = (0..dim)
            .map(|_| 0.4 * crate::sample::normal(rng))
            .collect();
        BumpForm {
            n,
            r,
            rank,
            beta,
            center,
            const_coef,
            lin_coef,
        }
    }
}

impl BumpForm {
    /// Same form with all coefficients multiplied by `c`.
    pub fn scaled(&self, c: f64) -> BumpForm {
        let mut out = self.clone();
        for m in out.const_coef.iter_mut() {
            *m = m.scale(c);
        }
        for v in out.lin_coef.iter_mut() {
            for m in v.iter_mut() {
                *m = m.scale(c);
            }
        }
        out
    }
}

impl AlgField for BumpForm {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn r(&self) -> usize {
        self.r
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        let dim = 2 * self.n;
        let mut d2 = T::zero();
        for (a, c) in coords.iter().enumerate() {
            let d = *c - T::from_f64(self.center[a]);
            d2 += d * d;
        }
        let env = (-T::from_f64(self.beta) * d2).exp();
        let raw: Vec<AlgValue<T>> = (0..self.const_coef.len())
            .map(|f| {
                let mut m = SqMat::from_fn(self.r, |i, j| {
                    T::from_f64(self.const_coef[f].get(i, j))
                });
                for (a, c) in coords.iter().enumerate() {
                    let lc = &self.lin_coef[f][a];
                    for i in 0..self.r {
                        for j in 0..self.r {
                            m[(i, j)] += T::from_f64(lc.get(i, j)) * *c;
                        }
                    }
                }
                m.scale(env)
            })
            .collect();
        let mut out = AlgTensor {
            n: self.n,
            rank: self.rank,
            r: self.r,
            comps: raw,
        };
        // antisymmetrize the slots
        if self.rank == 2 {
            let half = T::from_f64(0.5);
            for a in 0..dim {
                for b in 0..=a {
                    let v = out.comps[a * dim + b]
                        .sub(&out.comps[b * dim + a])
                        .scale(half);
                    out.comps[b * dim + a] = v.scale(-T::one());
                    out.comps[a * dim + b] = v;
                }
            }
        } else if self.rank == 3 {
            let sixth = T::from_f64(1.0 / 6.0);
            let src = out.comps.clone();
            let perms: [([usize; 3], f64); 6] = [
                ([0, 1, 2], 1.0),
                ([1, 2, 0], 1.0),
                ([2, 0, 1], 1.0),
                ([1, 0, 2], -1.0),
                ([0, 2, 1], -1.0),
                ([2, 1, 0], -1.0),
            ];
            for a in 0..dim {
                for b in 0..dim {
                    for c in 0..dim {
                        let idx = [a, b, c];
                        let mut m = SqMat::zeros(self.r);
                        for (perm, sign) in &perms {
                            let f = (idx[perm[0]] * dim + idx[perm[1]]) * dim + idx[perm[2]];
                            m = m.add(&src[f].scale(T::from_f64(*sign)));
                        }
                        out.comps[(a * dim + b) * dim + c] = m.scale(sixth);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{j_matrix, real_metric_generic, ChartPoint, FrameZ0};
    use crate::sample::random_point;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_curvature_vanishes() {
        let f = CurvatureField {
            conn: ConnectionSpec::Flat { n: 2, r: 2 },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = random_point(&mut rng, 2, 1.0);
        assert_eq!(f.eval(p.coords()).max_abs_value(), 0.0);
    }

    #[test]
    fn kahler_curvature_is_kform_times_sigma() {
        // R(X,Y) = k ω(X,Y) σ₀ with ω(X,Y) = g(JX, Y); exact dθ = ω check
        let n = 2;
        let k = 1.7;
        let f = CurvatureField {
            conn: ConnectionSpec::KahlerAbelian { n, r: 2, k },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..10 {
            let p = random_point(&mut rng, n, 1.2);
            let cur = f.eval(p.coords());
            let g = real_metric_generic(n, p.coords());
            let jm = j_matrix(n);
            let sig = sigma0::<f64>(2);
            let dim = 2 * n;
            for a in 0..dim {
                for b in 0..dim {
                    // ω(∂a, ∂b) = g(J∂a, ∂b)
                    let mut om = 0.0;
                    for c in 0..dim {
                        om += jm.get(c, a) * g.get(c, b);
                    }
                    let want = sig.scale(k * om);
                    let got = cur.get(&[a, b]);
                    for (x, y) in got.data.iter().zip(&want.data) {
                        assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn kahler_frame_value_at_origin() {
        // frame comps: R(e_1, e_{n+1}) = k σ₀ at z = 0
        let n = 2;
        let k = 2.0;
        let f = CurvatureField {
            conn: ConnectionSpec::KahlerAbelian { n, r: 2, k },
        };
        let p = ChartPoint::origin(n);
        let cur = f.eval(p.coords());
        let frame = FrameZ0::new(n);
        // contract both slots with frame vectors
        let e1 = &frame.vectors[0].components;
        let en1 = &frame.vectors[n].components;
        let c1 = cur.contract_first(e1);
        let val = c1.contract_first(en1);
        let want = sigma0::<f64>(2).scale(k);
        for (x, y) in val.comps[0].data.iter().zip(&want.data) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_pieces_contribute_pure_bracket() {
        // with k = 0 the potential is constant: R(∂x1, ∂y1) = ε² [T1, T2]
        let n = 2;
        let r = 3;
        let eps = 0.6;
        let f = CurvatureField {
            conn: ConnectionSpec::NonabelianTest { n, r, k: 0.0, eps },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let p = random_point(&mut rng, n, 1.0);
        let cur = f.eval(p.coords());
        let t1 = rotation_generator::<f64>(r, 1, 2);
        let t2 = rotation_generator::<f64>(r, 2, 0);
        let want = t1.bracket(&t2).scale(eps * eps);
        let got = cur.get(&[0, n]);
        for (x, y) in got.data.iter().zip(&want.data) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-13);
        }
    }

    #[test]
    fn bump_form_antisymmetric_and_decaying() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let b = BumpForm::random(&mut rng, 2, 3, 2, 1.0);
        let p = random_point(&mut rng, 2, 0.8);
        let t = b.eval(p.coords());
        let dim = 4;
        for a in 0..dim {
            for c in 0..dim {
                let x = t.get(&[a, c]);
                let y = t.get(&[c, a]);
                for (u, v) in x.data.iter().zip(&y.data) {
                    assert_abs_diff_eq!(*u, -*v, epsilon = 1e-14);
                }
            }
        }
        let far = ChartPoint::new(vec![8.0, -7.0, 6.0, 9.0]);
        assert!(b.eval(far.coords()).max_abs_value() < 1e-20);
    }
}
