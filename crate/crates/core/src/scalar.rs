//! Forward-mode differentiation scalars.
//!
//! Every chart-analytic quantity in this crate (metric, Christoffel symbols,
//! connection potentials, Killing fields, ...) is written generically over a
//! [`Scalar`]. Instantiating the same code at [`Dual<T>`] turns an evaluation
//! into an exact directional derivative, and duals nest: `Dual<Dual<f64>>`
//! carries second derivatives, `Dual<Dual<Dual<f64>>>` third. The curvature
//! tensor, the Killing second-derivative identity and the Laplacian identity
//! checks all run at nesting depth up to three.

use num_traits::Float;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Closed set of operations the chart-analytic fields need.
///
/// Implemented by `f32`/`f64` and by [`Dual<T>`] for any `T: Scalar`, so the
/// whole geometric stack can be evaluated at any dual-number nesting depth.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    /// Underlying value with all derivative parts stripped. Used for pivot
    /// selection and domain checks, never inside differentiated formulas.
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    /// Power with a constant (non-differentiated) exponent.
    fn powf_const(self, e: f64) -> Self;
}

macro_rules! impl_scalar_float {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            #[inline] fn zero() -> Self { 0.0 }
            #[inline] fn one() -> Self { 1.0 }
            #[inline] fn from_f64(v: f64) -> Self { v as $t }
            #[inline] fn value(self) -> f64 { self as f64 }
            #[inline] fn sqrt(self) -> Self { Float::sqrt(self) }
            #[inline] fn exp(self) -> Self { Float::exp(self) }
            #[inline] fn ln(self) -> Self { Float::ln(self) }
            #[inline] fn powf_const(self, e: f64) -> Self { Float::powf(self, e as $t) }
        }
    )*};
}

impl_scalar_float!(f32, f64);

/// First-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// Constant lift: derivative part zero.
    #[inline]
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    /// Seed for the variable being differentiated: derivative part one.
    #[inline]
    pub fn seeded(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        Dual::new(self.re * inv, (self.eps - self.re * inv * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    #[inline]
    fn one() -> Self {
        Dual::constant(T::one())
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    #[inline]
    fn value(self) -> f64 {
        self.re.value()
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (T::from_f64(2.0) * r))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    #[inline]
    fn powf_const(self, e: f64) -> Self {
        let d = self.re.powf_const(e - 1.0);
        Dual::new(d * self.re, self.eps * T::from_f64(e) * d)
    }
}

/// Seeds coordinate slot `dir` of `coords` and lifts the rest, so that an
/// evaluation over `Dual<T>` returns the partial derivative in `eps`.
pub fn seed<T: Scalar>(coords: &[T], dir: usize) -> Vec<Dual<T>> {
    coords
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if i == dir {
                Dual::seeded(c)
            } else {
                Dual::constant(c)
            }
        })
        .collect()
}
