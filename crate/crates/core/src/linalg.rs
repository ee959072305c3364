//! Small dense matrices and complex arithmetic over a generic [`Scalar`].
//!
//! The dimensions in play are tiny (2n ≤ 6 base slots, fiber rank r ≤ 3), so
//! plain `Vec`-backed row-major storage with Gauss-Jordan inversion is all the
//! linear algebra the differentiated code paths need. nalgebra is used only
//! on concrete `f64` data (decompositions in the isotropy split and tests).

use crate::scalar::Scalar;

/// Row-major square matrix over `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SqMat<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SqMat<T> {
    pub fn zeros(dim: usize) -> Self {
        SqMat {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        Self::from_fn(d, |i, j| {
            let mut s = T::zero();
            for k in 0..d {
                s += self.get(i, k) * other.get(k, j);
            }
            s
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: T) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) - other.get(i, j))
    }

    /// Commutator `[self, other] = self·other − other·self`.
    pub fn bracket(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Trace inner product `tr(selfᵀ · other)`.
    pub fn trace_inner(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                let mut s = T::zero();
                for j in 0..d {
                    s += self.get(i, j) * v[j];
                }
                s
            })
            .collect()
    }

    /// Gauss-Jordan inverse with partial pivoting on the value part.
    ///
    /// Pivot sizes are compared on [`Scalar::value`] so the routine stays
    /// correct under dual numbers. Panics on a numerically singular matrix;
    /// the metric and Gram matrices inverted here are positive definite.
    pub fn inverse(&self) -> Self {
        let d = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(d);
        for col in 0..d {
            let mut piv = col;
            let mut best = a.get(col, col).value().abs();
            for row in (col + 1)..d {
                let v = a.get(row, col).value().abs();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            assert!(best > 1e-300, "singular matrix in inverse()");
            if piv != col {
                for j in 0..d {
                    a.data.swap(col * d + j, piv * d + j);
                    inv.data.swap(col * d + j, piv * d + j);
                }
            }
            let diag = a.get(col, col);
            let scale = T::one() / diag;
            for j in 0..d {
                a[(col, j)] *= scale;
                inv[(col, j)] *= scale;
            }
            for row in 0..d {
                if row == col {
                    continue;
                }
                let f = a.get(row, col);
                for j in 0..d {
                    let v = a.get(col, j) * f;
                    a[(row, j)] -= v;
                    let w = inv.get(col, j) * f;
                    inv[(row, j)] -= w;
                }
            }
        }
        inv
    }

    /// Determinant by LU with partial pivoting on the value part.
    pub fn det(&self) -> T {
        let d = self.dim;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..d {
            let mut piv = col;
            let mut best = a.get(col, col).value().abs();
            for row in (col + 1)..d {
                let v = a.get(row, col).value().abs();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best == 0.0 {
                return T::zero();
            }
            if piv != col {
                for j in 0..d {
                    a.data.swap(col * d + j, piv * d + j);
                }
                det = -det;
            }
            let diag = a.get(col, col);
            det *= diag;
            for row in (col + 1)..d {
                let f = a.get(row, col) / diag;
                for j in col..d {
                    let v = a.get(col, j) * f;
                    a[(row, j)] -= v;
                }
            }
        }
        det
    }
}

impl<T> std::ops::Index<(usize, usize)> for SqMat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SqMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// Complex number over a generic scalar, enough for the chart formulas.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Cplx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> Cplx<T> {
    #[inline]
    pub fn new(re: T, im: T) -> Self {
        Cplx { re, im }
    }

    #[inline]
    pub fn zero() -> Self {
        Cplx::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn from_f64(re: f64, im: f64) -> Self {
        Cplx::new(T::from_f64(re), T::from_f64(im))
    }

    #[inline]
    pub fn conj(self) -> Self {
        Cplx::new(self.re, -self.im)
    }

    /// Multiplication by i.
    #[inline]
    pub fn times_i(self) -> Self {
        Cplx::new(-self.im, self.re)
    }
}

impl<T: Scalar> std::ops::Add for Cplx<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Cplx::new(self.re + o.re, self.im + o.im)
    }
}

impl<T: Scalar> std::ops::Sub for Cplx<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Cplx::new(self.re - o.re, self.im - o.im)
    }
}

impl<T: Scalar> std::ops::Mul for Cplx<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Cplx::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl<T: Scalar> std::ops::Neg for Cplx<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Cplx::new(-self.re, -self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_roundtrip() {
        let m = SqMat::from_fn(4, |i, j| {
            if i == j {
                2.0 + i as f64
            } else {
                0.3 / (1.0 + (i as f64 - j as f64).abs())
            }
        });
        let inv = m.inverse();
        let id = m.matmul(&inv);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(id.get(i, j), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn det_of_known_matrix() {
        let mut m = SqMat::zeros(2);
        m[(0, 0)] = 3.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 2.0;
        m[(1, 1)] = 4.0;
        assert_relative_eq!(m.det(), 10.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_propagates_derivatives() {
        // d/dt inverse of [[1+t, 0],[0, 2]] at t=0 is [[-1, 0],[0, 0]]
        let mut m = SqMat::zeros(2);
        m[(0, 0)] = Dual::seeded(1.0_f64);
        m[(1, 1)] = Dual::constant(2.0);
        let inv = m.inverse();
        assert_relative_eq!(inv.get(0, 0).re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(inv.get(0, 0).eps, -1.0, epsilon = 1e-14);
        assert_relative_eq!(inv.get(1, 1).eps, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn det_derivative_matches_jacobi_formula() {
        // d/dt det(I + t E) = tr(E) at t = 0
        let e = [[0.5, 0.2], [0.1, -0.3]];
        let m = SqMat::from_fn(2, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Dual::new(id, e[i][j])
        });
        assert_relative_eq!(m.det().eps, 0.2, epsilon = 1e-14);
    }
}
