//! su(n+1), the explicit Killing basis, and covariant derivatives of the
//! induced fields on the chart.
//!
//! A generator `A = (a_ij)` acts through the projective flow of `exp(tA)`;
//! on the chart the induced field has holomorphic components
//! `v_j = a_{j0} + a_{ji} z_i − a_{00} z_j − a_{0i} z_i z_j`. All evaluation
//! code is generic over the scalar so the same formulas feed the nested
//! derivative checks.

use crate::error::{Error, Result};
use crate::geometry::{
    christoffel_generic, frame_at, metric_inner, real_metric_generic, riemann_generic, ChartPoint,
    Tangent,
};
use crate::linalg::{Cplx, SqMat};
use crate::scalar::{seed, Dual, Scalar};

/// An element of su(n+1): anti-Hermitian, trace-free, indexed `0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuMatrix {
    pub size: usize,
    entries: Vec<Cplx<f64>>,
}

impl SuMatrix {
    pub fn zeros(size: usize) -> Self {
        SuMatrix {
            size,
            entries: vec![Cplx::zero(); size * size],
        }
    }

    pub fn from_entries(size: usize, entries: Vec<Cplx<f64>>) -> Result<Self> {
        assert_eq!(entries.len(), size * size);
        let m = SuMatrix { size, entries };
        let mut tr = Cplx::zero();
        for i in 0..size {
            tr = tr + m.get(i, i);
            for j in 0..size {
                let a = m.get(i, j);
                let b = m.get(j, i);
                // anti-Hermitian: a_ij = -conj(a_ji)
                if (a.re + b.re).abs() > 1e-12 || (a.im - b.im).abs() > 1e-12 {
                    return Err(Error::DimensionMismatch(i, j));
                }
            }
        }
        assert!(tr.re.abs() < 1e-12 && tr.im.abs() < 1e-12, "trace not zero");
        Ok(m)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<f64> {
        self.entries[i * self.size + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Cplx<f64>) {
        self.entries[i * self.size + j] = v;
    }

    /// `tr(Āᵀ B)`, real for anti-Hermitian arguments.
    pub fn trace_inner(&self, other: &SuMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.size {
            for j in 0..self.size {
                let a = self.get(i, j);
                let b = other.get(i, j);
                // conj(a) * b summed over entries; imaginary parts cancel
                s += a.re * b.re + a.im * b.im;
            }
        }
        s
    }

    pub fn scale(&self, c: f64) -> SuMatrix {
        SuMatrix {
            size: self.size,
            entries: self
                .entries
                .iter()
                .map(|e| Cplx::new(e.re * c, e.im * c))
                .collect(),
        }
    }

    pub fn add(&self, other: &SuMatrix) -> SuMatrix {
        SuMatrix {
            size: self.size,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    /// Applies `exp(tA)` to a homogeneous coordinate vector by power series.
    pub fn exp_apply(&self, t: f64, w: &[Cplx<f64>]) -> Vec<Cplx<f64>> {
        let mut out = w.to_vec();
        let mut term = w.to_vec();
        for m in 1..=30 {
            let mut next = vec![Cplx::zero(); self.size];
            for (i, nv) in next.iter_mut().enumerate() {
                for j in 0..self.size {
                    let a = self.get(i, j);
                    let a = Cplx::new(a.re * t / m as f64, a.im * t / m as f64);
                    *nv = *nv + a * term[j];
                }
            }
            for (o, nv) in out.iter_mut().zip(&next) {
                *o = *o + *nv;
            }
            term = next;
        }
        out
    }
}

/// Killing field induced by an su(n+1) generator.
#[derive(Clone, Debug, PartialEq)]
pub struct KillingField {
    pub generator: SuMatrix,
}

impl KillingField {
    pub fn new(generator: SuMatrix) -> Self {
        KillingField { generator }
    }

    /// Chart complex dimension.
    pub fn n(&self) -> usize {
        self.generator.size - 1
    }

    /// Holomorphic components `v_j` of the field at generic coordinates.
    pub fn holomorphic_components<T: Scalar>(&self, coords: &[T]) -> Vec<Cplx<T>> {
        let n = self.n();
        let a = |i: usize, j: usize| -> Cplx<T> {
            let e = self.generator.get(i, j);
            Cplx::from_f64(e.re, e.im)
        };
        let z = |i: usize| -> Cplx<T> {
            // matrix index i >= 1 corresponds to chart coordinate i-1
            Cplx::new(coords[i - 1], coords[n + i - 1])
        };
        (1..=n)
            .map(|j| {
                let mut v = a(j, 0);
                for i in 1..=n {
                    v = v + a(j, i) * z(i);
                }
                v = v - a(0, 0) * z(j);
                for i in 1..=n {
                    v = v - a(0, i) * z(i) * z(j);
                }
                v
            })
            .collect()
    }
}

/// Vector-valued tensor field `W^k_{b_1..b_q}` evaluable at any scalar depth.
pub trait VecField: Sync {
    /// Chart complex dimension.
    fn n(&self) -> usize;
    /// Number of covariant slots q.
    fn rank(&self) -> usize;
    /// Components with layout `comps[(slots..) * dim + k]`, slots outermost.
    fn eval<T: Scalar>(&self, coords: &[T]) -> Vec<T>;
}

/// The field `V_A` in real components.
pub struct KillingVec {
    pub field: KillingField,
}

/// The rotated field `J V_A`.
pub struct KillingJVec {
    pub field: KillingField,
}

impl VecField for KillingVec {
    fn n(&self) -> usize {
        self.field.n()
    }
    fn rank(&self) -> usize {
        0
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> Vec<T> {
        let n = self.n();
        let v = self.field.holomorphic_components(coords);
        let mut out = vec![T::zero(); 2 * n];
        for j in 0..n {
            out[j] = v[j].re;
            out[n + j] = v[j].im;
        }
        out
    }
}

impl VecField for KillingJVec {
    fn n(&self) -> usize {
        self.field.n()
    }
    fn rank(&self) -> usize {
        0
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> Vec<T> {
        let n = self.n();
        let v = self.field.holomorphic_components(coords);
        let mut out = vec![T::zero(); 2 * n];
        for j in 0..n {
            let w = v[j].times_i();
            out[j] = w.re;
            out[n + j] = w.im;
        }
        out
    }
}

/// Linear combination of Killing fields (used by the isotropy recombination).
pub struct CombinedJVec {
    pub fields: Vec<KillingField>,
    pub coeffs: Vec<f64>,
}

impl VecField for CombinedJVec {
    fn n(&self) -> usize {
        self.fields[0].n()
    }
    fn rank(&self) -> usize {
        0
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> Vec<T> {
        let n = self.n();
        let mut out = vec![T::zero(); 2 * n];
        for (f, &c) in self.fields.iter().zip(&self.coeffs) {
            let v = f.holomorphic_components(coords);
            let c = T::from_f64(c);
            for j in 0..n {
                let w = v[j].times_i();
                out[j] += w.re * c;
                out[n + j] += w.im * c;
            }
        }
        out
    }
}

/// Levi-Civita covariant derivative of a vector-valued tensor field; the new
/// slot comes first: `(∇W)^k_{a,b..} = ∂_a W^k_{b..} + Γ^k_{ac} W^c_{b..}
/// − Σ_m Γ^c_{a b_m} W^k_{..c..}`.
pub struct CovDerivVec<F> {
    pub inner: F,
}

impl<F: VecField> VecField for CovDerivVec<F> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn rank(&self) -> usize {
        self.inner.rank() + 1
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> Vec<T> {
        let n = self.n();
        let dim = 2 * n;
        let q = self.inner.rank();
        let gam = christoffel_generic(n, coords);
        let w = self.inner.eval(coords);
        let block = w.len(); // dim^{q+1}
        let mut out = vec![T::zero(); dim * block];
        for a in 0..dim {
            let seeded = seed(coords, a);
            let wd: Vec<Dual<T>> = self.inner.eval(&seeded);
            let dst = &mut out[a * block..(a + 1) * block];
            for (o, d) in dst.iter_mut().zip(&wd) {
                *o = d.eps;
            }
            // iterate over the inner multi-index (slots s_1..s_q, upper k)
            let mut idx = vec![0usize; q + 1];
            for flat in 0..block {
                // decode flat into idx (outermost slot first, upper index last)
                let mut rest = flat;
                for m in (0..=q).rev() {
                    idx[m] = rest % dim;
                    rest /= dim;
                }
                let k = idx[q];
                // + Γ^k_{a c} W^c_{slots}
                let mut corr = T::zero();
                for c in 0..dim {
                    let mut src = 0usize;
                    for s in idx.iter().take(q) {
                        src = src * dim + s;
                    }
                    src = src * dim + c;
                    corr += gam[k].get(a, c) * w[src];
                }
                // − Σ_m Γ^c_{a s_m} W^k_{.. c ..}
                for m in 0..q {
                    let sm = idx[m];
                    for c in 0..dim {
                        let mut src = 0usize;
                        for (mm, s) in idx.iter().take(q).enumerate() {
                            src = src * dim + if mm == m { c } else { *s };
                        }
                        src = src * dim + k;
                        corr -= gam[c].get(a, sm) * w[src];
                    }
                }
                dst[flat] += corr;
            }
        }
        out
    }
}

/// Label of a basis element, matrix indices `0..=n` (C is `1..=n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisFamily {
    A(usize, usize),
    B(usize, usize),
    C(usize),
}

/// The orthonormal Killing basis of cardinality `n² + 2n`.
#[derive(Clone, Debug)]
pub struct KillingBasis {
    pub elements: Vec<KillingField>,
    pub labels: Vec<BasisFamily>,
}

impl KillingBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Builds the basis `A_kl = (E_kl − E_lk)/√2`, `B_kl = i(E_kl + E_lk)/√2`
/// (`0 ≤ k < l ≤ n`) and `C_t = i(Σ_{s<t} E_ss − t E_tt)/√(t(t+1))`.
pub fn su_basis(n: usize) -> KillingBasis {
    assert!(n >= 1);
    let size = n + 1;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    for k in 0..size {
        for l in (k + 1)..size {
            let mut m = SuMatrix::zeros(size);
            m.set(k, l, Cplx::new(inv_sqrt2, 0.0));
            m.set(l, k, Cplx::new(-inv_sqrt2, 0.0));
            elements.push(KillingField::new(m));
            labels.push(BasisFamily::A(k, l));
        }
    }
    for k in 0..size {
        for l in (k + 1)..size {
            let mut m = SuMatrix::zeros(size);
            m.set(k, l, Cplx::new(0.0, inv_sqrt2));
            m.set(l, k, Cplx::new(0.0, inv_sqrt2));
            elements.push(KillingField::new(m));
            labels.push(BasisFamily::B(k, l));
        }
    }
    for t in 1..=n {
        let c = 1.0 / ((t * (t + 1)) as f64).sqrt();
        let mut m = SuMatrix::zeros(size);
        for s in 0..t {
            m.set(s, s, Cplx::new(0.0, c));
        }
        m.set(t, t, Cplx::new(0.0, -c * t as f64));
        elements.push(KillingField::new(m));
        labels.push(BasisFamily::C(t));
    }
    debug_assert_eq!(elements.len(), n * n + 2 * n);
    KillingBasis { elements, labels }
}

/// Evaluates `V_A` at a chart point.
pub fn killing_eval(v: &KillingField, p: &ChartPoint) -> Tangent {
    Tangent::new(KillingVec { field: v.clone() }.eval(p.coords()))
}

/// Evaluates `J V_A` at a chart point.
pub fn killing_eval_j(v: &KillingField, p: &ChartPoint) -> Tangent {
    Tangent::new(KillingJVec { field: v.clone() }.eval(p.coords()))
}

/// `D_X V` at `p` via the Levi-Civita connection.
pub fn killing_cov_deriv(v: &KillingField, p: &ChartPoint, x: &Tangent) -> Tangent {
    let dim = 2 * v.n();
    let dv = CovDerivVec {
        inner: KillingVec { field: v.clone() },
    }
    .eval(p.coords());
    let mut out = vec![0.0; dim];
    for a in 0..dim {
        let xa = x.components[a];
        if xa == 0.0 {
            continue;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o += xa * dv[a * dim + k];
        }
    }
    Tangent::new(out)
}

/// `D_X (JV)` at `p`.
pub fn killing_cov_deriv_j(v: &KillingField, p: &ChartPoint, x: &Tangent) -> Tangent {
    let dim = 2 * v.n();
    let dv = CovDerivVec {
        inner: KillingJVec { field: v.clone() },
    }
    .eval(p.coords());
    let mut out = vec![0.0; dim];
    for a in 0..dim {
        let xa = x.components[a];
        if xa == 0.0 {
            continue;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o += xa * dv[a * dim + k];
        }
    }
    Tangent::new(out)
}

/// `|D²_{X,Y} V − R(X, V) Y|_g` at `p`, with
/// `D²_{X,Y} V = D_X D_Y V − D_{D_X Y} V` realized as the second covariant
/// derivative tensor.
pub fn killing_second_identity_residual(
    v: &KillingField,
    p: &ChartPoint,
    x: &Tangent,
    y: &Tangent,
) -> f64 {
    let n = v.n();
    let dim = 2 * n;
    let ddv = CovDerivVec {
        inner: CovDerivVec {
            inner: KillingVec { field: v.clone() },
        },
    }
    .eval(p.coords());
    // (∇∇V)^k_{a,b}: layout ((a)*dim + b)*dim + k
    let mut d2 = vec![0.0; dim];
    for a in 0..dim {
        let xa = x.components[a];
        if xa == 0.0 {
            continue;
        }
        for b in 0..dim {
            let w = xa * y.components[b];
            if w == 0.0 {
                continue;
            }
            for (k, o) in d2.iter_mut().enumerate() {
                *o += w * ddv[(a * dim + b) * dim + k];
            }
        }
    }
    let rm = riemann_generic(n, p.coords());
    let vp = killing_eval(v, p);
    let rxy = crate::geometry::riemann_apply(&rm, x, &vp, y);
    let diff = Tangent::new(d2).sub(&rxy);
    metric_inner(p, &diff, &diff).max(0.0).sqrt()
}

/// Isotropy split of the Killing algebra at a point.
#[derive(Clone, Debug)]
pub struct IsotropyDecomposition {
    /// Fields vanishing at the point.
    pub f_part: Vec<KillingField>,
    /// Fields with vanishing covariant derivative at the point; their J-images
    /// evaluate to a g-orthogonal tangent basis.
    pub p_part: Vec<KillingField>,
}

/// Splits `span(basis)` at `p` into the vanishing part and the
/// derivative-free part by a singular value decomposition of the evaluation
/// map, recombining with the right singular vectors so both parts stay
/// orthonormal in the trace inner product.
pub fn isotropy_decompose(basis: &KillingBasis, p: &ChartPoint) -> IsotropyDecomposition {
    let q = basis.len();
    let n = basis.elements[0].n();
    let dim = 2 * n;
    let frame = frame_at(p);
    // E[i][k] = g(V_k(p), f_i)
    let e = nalgebra::DMatrix::from_fn(dim, q, |i, k| {
        metric_inner(p, &killing_eval(&basis.elements[k], p), &frame[i])
    });
    // eigenvectors of EᵀE: eigenvalue ≈ 0 ⇔ the combination vanishes at p
    let gram = e.transpose() * &e;
    let eig = gram.symmetric_eigen();
    let mut p_part = Vec::new();
    let mut f_part = Vec::new();
    let combine = |col: usize| -> KillingField {
        let mut m = SuMatrix::zeros(n + 1);
        for k in 0..q {
            let c = eig.eigenvectors[(k, col)];
            if c != 0.0 {
                m = m.add(&basis.elements[k].generator.scale(c));
            }
        }
        KillingField::new(m)
    };
    for col in 0..q {
        if eig.eigenvalues[col] > 1e-8 {
            p_part.push(combine(col));
        } else {
            f_part.push(combine(col));
        }
    }
    assert_eq!(
        p_part.len(),
        dim,
        "evaluation map must have full rank 2n (got {})",
        p_part.len()
    );
    IsotropyDecomposition { f_part, p_part }
}

/// Frame components of `D_{e_i} J V` at the origin for a basis element:
/// returns `M` with `D_{e_i} J V = Σ_j M[(i, j)] e_j` in the canonical frame.
///
/// The `α = t` entry of the C family carries the normalization `√((t+1)/t)`,
/// fixed here by the covariant-derivative oracle rather than read off a
/// display. Elements involving index 0 have `D(JV)(z_0) = 0`.
pub fn djv_frame_table(n: usize, family: BasisFamily) -> SqMat<f64> {
    let dim = 2 * n;
    let mut m = SqMat::zeros(dim);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    match family {
        BasisFamily::A(k, l) => {
            if k >= 1 {
                // table indices are 1-based chart slots
                let (k, l) = (k - 1, l - 1);
                for al in 0..n {
                    if al == l {
                        m[(al, n + k)] += inv_sqrt2;
                    }
                    if al == k {
                        m[(al, n + l)] -= inv_sqrt2;
                    }
                    if al == k {
                        m[(n + al, l)] += inv_sqrt2;
                    }
                    if al == l {
                        m[(n + al, k)] -= inv_sqrt2;
                    }
                }
            }
        }
        BasisFamily::B(k, l) => {
            if k >= 1 {
                let (k, l) = (k - 1, l - 1);
                for al in 0..n {
                    if al == l {
                        m[(al, k)] -= inv_sqrt2;
                    }
                    if al == k {
                        m[(al, l)] -= inv_sqrt2;
                    }
                    if al == l {
                        m[(n + al, n + k)] -= inv_sqrt2;
                    }
                    if al == k {
                        m[(n + al, n + l)] -= inv_sqrt2;
                    }
                }
            }
        }
        BasisFamily::C(t) => {
            let tc = t - 1; // chart slot of index t
            let big = ((t + 1) as f64 / t as f64).sqrt();
            let small = 1.0 / ((t * (t + 1)) as f64).sqrt();
            for al in 0..n {
                if al == tc {
                    m[(al, tc)] = big;
                    m[(n + al, n + tc)] = big;
                } else if al > tc {
                    m[(al, al)] = small;
                    m[(n + al, n + al)] = small;
                }
            }
        }
    }
    m
}

/// Finite-difference flow oracle: `(d/dt) chart(exp(tA)·ẑ)` at `t = 0`.
pub fn flow_derivative_oracle(v: &KillingField, p: &ChartPoint) -> Tangent {
    let n = v.n();
    let mut w = vec![Cplx::new(1.0, 0.0)];
    for j in 0..n {
        let (re, im) = p.z(j);
        w.push(Cplx::new(re, im));
    }
    let h = 1e-5;
    let chart = |t: f64| -> Vec<f64> {
        let wt = v.generator.exp_apply(t, &w);
        let inv = 1.0 / (wt[0].re * wt[0].re + wt[0].im * wt[0].im);
        let w0c = wt[0].conj();
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            let z = Cplx::new(
                (wt[j + 1] * w0c).re * inv,
                (wt[j + 1] * w0c).im * inv,
            );
            out[j] = z.re;
            out[n + j] = z.im;
        }
        out
    };
    let plus = chart(h);
    let plus2 = chart(2.0 * h);
    let minus = chart(-h);
    let minus2 = chart(-2.0 * h);
    Tangent::new(
        (0..2 * n)
            .map(|a| (8.0 * (plus[a] - minus[a]) - (plus2[a] - minus2[a])) / (12.0 * h))
            .collect(),
    )
}

/// Rough Laplacian `D*D W = −g^{ab} (∇∇W)_{ab}` of a vector field at `p`.
pub fn vec_rough_laplacian<F: VecField>(field: &F, p: &ChartPoint) -> Tangent {
    let n = field.n();
    let dim = 2 * n;
    let dd = CovDerivVec {
        inner: CovDerivVec { inner: FieldRef(field) },
    }
    .eval(p.coords());
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let mut out = vec![0.0; dim];
    for a in 0..dim {
        for b in 0..dim {
            let w = ginv.get(a, b);
            if w == 0.0 {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o -= w * dd[(a * dim + b) * dim + k];
            }
        }
    }
    Tangent::new(out)
}

/// Borrow adapter so combinators can wrap `&F` without cloning.
pub struct FieldRef<'a, F: ?Sized>(pub &'a F);

impl<'a, F: VecField + ?Sized> VecField for FieldRef<'a, F> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn rank(&self) -> usize {
        self.0.rank()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> Vec<T> {
        self.0.eval(coords)
    }
}
