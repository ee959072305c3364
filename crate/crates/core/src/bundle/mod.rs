//! 𝔤_E-valued tensor calculus.
//!
//! Values live in the antisymmetric r×r matrices (structure group inside
//! SO(r)); a degree-p object carries p covariant slots over the 2n real
//! coordinates. Fields are closures-with-structure implementing [`AlgField`]
//! with a scalar-generic `eval`, so covariant derivative combinators nest:
//! wrapping a field in [`CovDerivAlg`] evaluates the inner field on dual
//! numbers, and a second wrap evaluates on duals of duals. Operator formulas
//! contract with the inverse metric instead of an explicit orthonormal frame;
//! frame invariance of that choice is itself under test.

pub mod connection;
pub mod ops;

use crate::error::{Error, Result};
use crate::geometry::christoffel_generic;
use crate::linalg::SqMat;
use crate::scalar::{seed, Dual, Scalar};

pub use connection::{BumpForm, ConnectionSpec, CurvatureField, PotentialField};

/// A fiber value: antisymmetric r×r matrix.
pub type AlgValue<T> = SqMat<T>;

/// Trace inner product `⟨φ, ψ⟩ = tr(φᵀ ψ)` on fiber values.
pub fn alg_inner<T: Scalar>(phi: &AlgValue<T>, psi: &AlgValue<T>) -> Result<T> {
    if phi.dim != psi.dim {
        return Err(Error::DimensionMismatch(phi.dim, psi.dim));
    }
    Ok(phi.trace_inner(psi))
}

/// A 𝔤_E-valued covariant tensor at a point: `comps` holds `(2n)^rank`
/// fiber values in row-major multi-index order (first slot outermost).
#[derive(Clone, Debug)]
pub struct AlgTensor<T> {
    pub n: usize,
    pub rank: usize,
    pub r: usize,
    pub comps: Vec<AlgValue<T>>,
}

impl<T: Scalar> AlgTensor<T> {
    pub fn zeros(n: usize, rank: usize, r: usize) -> Self {
        let dim = 2 * n;
        AlgTensor {
            n,
            rank,
            r,
            comps: vec![SqMat::zeros(r); dim.pow(rank as u32)],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        let dim = self.dim();
        idx.iter().fold(0usize, |acc, &i| acc * dim + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> &AlgValue<T> {
        &self.comps[self.flat(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut AlgValue<T> {
        let f = self.flat(idx);
        &mut self.comps[f]
    }

    pub fn scale(&self, c: T) -> Self {
        AlgTensor {
            n: self.n,
            rank: self.rank,
            r: self.r,
            comps: self.comps.iter().map(|m| m.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        AlgTensor {
            n: self.n,
            rank: self.rank,
            r: self.r,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        AlgTensor {
            n: self.n,
            rank: self.rank,
            r: self.r,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    /// Contraction `i_X φ` on the first slot.
    pub fn contract_first(&self, x: &[T]) -> Self {
        assert!(self.rank >= 1);
        let dim = self.dim();
        let block = self.comps.len() / dim;
        let mut out = AlgTensor::zeros(self.n, self.rank - 1, self.r);
        for a in 0..dim {
            let xa = x[a];
            for f in 0..block {
                let src = &self.comps[a * block + f];
                let dst = &mut out.comps[f];
                for (d, s) in dst.data.iter_mut().zip(&src.data) {
                    *d += xa * *s;
                }
            }
        }
        out
    }

    /// Frobenius-style max-abs over all entries' value parts, for residuals.
    pub fn max_abs_value(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|m| m.data.iter())
            .fold(0.0f64, |acc, v| acc.max(v.value().abs()))
    }
}

/// Tensor inner product with the slot metric `ginv`: for equal rank p,
/// `(1/p!) Σ g^{i_1 j_1} ... g^{i_p j_p} ⟨φ_I, ψ_J⟩`.
pub fn form_inner<T: Scalar>(
    phi: &AlgTensor<T>,
    psi: &AlgTensor<T>,
    ginv: &SqMat<T>,
) -> Result<T> {
    if phi.rank != psi.rank {
        return Err(Error::DegreeMismatch(phi.rank, psi.rank));
    }
    if phi.r != psi.r {
        return Err(Error::DimensionMismatch(phi.r, psi.r));
    }
    let p = phi.rank;
    if p == 0 {
        return alg_inner(&phi.comps[0], &psi.comps[0]);
    }
    let dim = phi.dim();
    let count = phi.comps.len();
    let mut total = T::zero();
    let mut idx_i = vec![0usize; p];
    let mut idx_j = vec![0usize; p];
    for fi in 0..count {
        let mut rest = fi;
        for m in (0..p).rev() {
            idx_i[m] = rest % dim;
            rest /= dim;
        }
        for fj in 0..count {
            let mut rest = fj;
            for m in (0..p).rev() {
                idx_j[m] = rest % dim;
                rest /= dim;
            }
            let mut w = T::one();
            let mut zero = false;
            for m in 0..p {
                let g = ginv.get(idx_i[m], idx_j[m]);
                if g.value() == 0.0 {
                    zero = true;
                    break;
                }
                w *= g;
            }
            if zero {
                continue;
            }
            total += w * phi.comps[fi].trace_inner(&psi.comps[fj]);
        }
    }
    let mut fact = 1.0;
    for m in 1..=p {
        fact *= m as f64;
    }
    Ok(total * T::from_f64(1.0 / fact))
}

/// Field interface: a 𝔤_E-valued tensor field on the chart, evaluable at any
/// dual-number depth.
pub trait AlgField: Sync {
    fn n(&self) -> usize;
    fn rank(&self) -> usize;
    fn r(&self) -> usize;
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T>;
}

/// Borrow adapter so combinators can wrap `&F`.
pub struct AlgRef<'a, F: ?Sized>(pub &'a F);

impl<'a, F: AlgField + ?Sized> AlgField for AlgRef<'a, F> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn rank(&self) -> usize {
        self.0.rank()
    }
    fn r(&self) -> usize {
        self.0.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        self.0.eval(coords)
    }
}

/// Total covariant derivative: bracket with the potential on the fiber,
/// Levi-Civita on the slots; the new slot comes first.
///
/// `(∇φ)_{a; I} = ∂_a φ_I + [A_a, φ_I] − Σ_m Γ^b_{a i_m} φ_{..b..}`
pub struct CovDerivAlg<F> {
    pub conn: ConnectionSpec,
    pub inner: F,
}

impl<F: AlgField> AlgField for CovDerivAlg<F> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn rank(&self) -> usize {
        self.inner.rank() + 1
    }
    fn r(&self) -> usize {
        self.inner.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        let n = self.n();
        let dim = 2 * n;
        let p = self.inner.rank();
        let r = self.r();
        let gam = christoffel_generic(n, coords);
        let apot = self.conn.potential(coords);
        let phi = self.inner.eval(coords);
        let block = phi.comps.len();
        let mut out = AlgTensor::zeros(n, p + 1, r);
        let mut idx = vec![0usize; p];
        for a in 0..dim {
            let seeded = seed(coords, a);
            let phid: AlgTensor<Dual<T>> = self.inner.eval(&seeded);
            for f in 0..block {
                let dst = &mut out.comps[a * block + f];
                // ∂_a φ
                for (d, s) in dst.data.iter_mut().zip(&phid.comps[f].data) {
                    *d = s.eps;
                }
                // + [A_a, φ]
                let br = apot.comps[a].bracket(&phi.comps[f]);
                for (d, s) in dst.data.iter_mut().zip(&br.data) {
                    *d += *s;
                }
                // − Σ_m Γ^b_{a i_m} φ_{.. b ..}
                if p > 0 {
                    let mut rest = f;
                    for m in (0..p).rev() {
                        idx[m] = rest % dim;
                        rest /= dim;
                    }
                    for m in 0..p {
                        let im = idx[m];
                        // stride of slot m in the flat index
                        let stride = dim.pow((p - 1 - m) as u32);
                        let base = f - im * stride;
                        for b in 0..dim {
                            let g = gam[b].get(a, im);
                            if g.value() == 0.0 {
                                continue;
                            }
                            let src = &phi.comps[base + b * stride];
                            for (d, s) in dst.data.iter_mut().zip(&src.data) {
                                *d -= g * *s;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Field scaled pointwise by a scalar function of position.
pub struct ScaledAlg<F, S> {
    pub inner: F,
    pub factor: S,
}

/// Scalar field on the chart, generic over the scalar.
pub trait ScalarField: Sync {
    fn n(&self) -> usize;
    fn eval<T: Scalar>(&self, coords: &[T]) -> T;
}

impl<F: AlgField, S: ScalarField> AlgField for ScaledAlg<F, S> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn rank(&self) -> usize {
        self.inner.rank()
    }
    fn r(&self) -> usize {
        self.inner.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        let f = self.factor.eval(coords);
        self.inner.eval(coords).scale(f)
    }
}

/// Pointwise sum of two fields of equal rank.
pub struct SumAlg<F, G> {
    pub a: F,
    pub b: G,
}

impl<F: AlgField, G: AlgField> AlgField for SumAlg<F, G> {
    fn n(&self) -> usize {
        self.a.n()
    }
    fn rank(&self) -> usize {
        self.a.rank()
    }
    fn r(&self) -> usize {
        self.a.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        self.a.eval(coords).add(&self.b.eval(coords))
    }
}

/// `|φ|²` of a field as a scalar field (tensor inner product against itself).
pub struct NormSqField<F> {
    pub inner: F,
}

impl<F: AlgField> ScalarField for NormSqField<F> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> T {
        let phi = self.inner.eval(coords);
        let ginv = crate::geometry::real_metric_generic(self.n(), coords).inverse();
        form_inner(&phi, &phi, &ginv).expect("matching ranks")
    }
}
