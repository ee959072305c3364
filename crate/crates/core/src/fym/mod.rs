//! The functional `∫ F(½|R^∇|²) dV`, its critical-point residual, and the
//! second variation along arbitrary and Killing-contraction directions.

pub mod gap;
pub mod jterms;
pub mod pointcurv;
pub mod stability;

use crate::bundle::ops::{frak_r, DNabla, DeltaNabla};
use crate::bundle::{
    form_inner, AlgField, AlgRef, AlgTensor, BumpForm, ConnectionSpec, CurvatureField, ScalarField,
    ScaledAlg,
};
use crate::error::{Error, Result};
use crate::geometry::quadrature::QuadratureRule;
use crate::geometry::{real_metric_generic, ChartPoint};
use crate::killing::{KillingField, KillingJVec, VecField};
use crate::scalar::{seed, Dual, Scalar};
use std::sync::Mutex;

/// The profile `F` with first and second derivatives on `x ≥ 0`.
///
/// `Power` with `α < 2` is only defined for `x > 0` (the second derivative
/// blows up at the origin); `RegularizedPower` shifts the argument by `ε`
/// and stays smooth on the whole half-line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Linear,
    Power { alpha: f64 },
    RegularizedPower { alpha: f64, eps: f64 },
    Exponential,
}

impl Profile {
    pub fn check_domain(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::ProfileDomain {
                x,
                reason: "argument outside [0, ∞)",
            });
        }
        if let Profile::Power { alpha } = self {
            if *alpha < 2.0 && x <= 0.0 {
                return Err(Error::ProfileDomain {
                    x,
                    reason: "power profile with exponent < 2 needs x > 0",
                });
            }
        }
        Ok(())
    }

    pub fn f<T: Scalar>(&self, x: T) -> T {
        match self {
            Profile::Linear => x,
            Profile::Power { alpha } => x.powf_const(*alpha),
            Profile::RegularizedPower { alpha, eps } => {
                (x + T::from_f64(*eps)).powf_const(*alpha) - T::from_f64(eps.powf(*alpha))
            }
            Profile::Exponential => x.exp(),
        }
    }

    pub fn f1<T: Scalar>(&self, x: T) -> T {
        match self {
            Profile::Linear => T::one(),
            Profile::Power { alpha } => x.powf_const(alpha - 1.0) * T::from_f64(*alpha),
            Profile::RegularizedPower { alpha, eps } => {
                (x + T::from_f64(*eps)).powf_const(alpha - 1.0) * T::from_f64(*alpha)
            }
            Profile::Exponential => x.exp(),
        }
    }

    pub fn f2<T: Scalar>(&self, x: T) -> T {
        match self {
            Profile::Linear => T::zero(),
            Profile::Power { alpha } => {
                x.powf_const(alpha - 2.0) * T::from_f64(alpha * (alpha - 1.0))
            }
            Profile::RegularizedPower { alpha, eps } => {
                (x + T::from_f64(*eps)).powf_const(alpha - 2.0)
                    * T::from_f64(alpha * (alpha - 1.0))
            }
            Profile::Exponential => x.exp(),
        }
    }
}

/// `x(z) = ½ |R^∇|²` as a scalar field.
#[derive(Clone)]
pub struct CurvatureHalfNormSq {
    pub conn: ConnectionSpec,
}

impl ScalarField for CurvatureHalfNormSq {
    fn n(&self) -> usize {
        self.conn.n()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> T {
        let rv = CurvatureField {
            conn: self.conn.clone(),
        }
        .eval(coords);
        let ginv = real_metric_generic(self.n(), coords).inverse();
        form_inner(&rv, &rv, &ginv).expect("rank match") * T::from_f64(0.5)
    }
}

/// `F'(x(z))` as a scalar field.
#[derive(Clone)]
pub struct ProfileSlopeField {
    pub conn: ConnectionSpec,
    pub profile: Profile,
}

impl ScalarField for ProfileSlopeField {
    fn n(&self) -> usize {
        self.conn.n()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> T {
        let x = CurvatureHalfNormSq {
            conn: self.conn.clone(),
        }
        .eval(coords);
        self.profile.f1(x)
    }
}

/// `F(x(z))` as a scalar field.
#[derive(Clone)]
pub struct ProfileValueField {
    pub conn: ConnectionSpec,
    pub profile: Profile,
}

impl ScalarField for ProfileValueField {
    fn n(&self) -> usize {
        self.conn.n()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> T {
        let x = CurvatureHalfNormSq {
            conn: self.conn.clone(),
        }
        .eval(coords);
        self.profile.f(x)
    }
}

fn integrate_checked<F>(q: &QuadratureRule, f: F) -> Result<f64>
where
    F: Fn(&ChartPoint) -> Result<f64> + Sync,
{
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let total = q.integrate(|p| match f(p) {
        Ok(v) => v,
        Err(e) => {
            let mut slot = failure.lock().unwrap();
            if slot.is_none() {
                *slot = Some(e);
            }
            0.0
        }
    });
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `𝒜_F(∇) = ∫ F(½|R^∇|²) dV` by quadrature.
pub fn functional(conn: &ConnectionSpec, profile: &Profile, q: &QuadratureRule) -> Result<f64> {
    let xf = CurvatureHalfNormSq { conn: conn.clone() };
    integrate_checked(q, |p| {
        let x = xf.eval(p.coords());
        profile.check_domain(x)?;
        Ok(profile.f(x))
    })
}

/// `|δ^∇(F' R^∇)|` at a point: the Euler-Lagrange residual, computed by
/// differentiating the scaled curvature field directly.
pub fn el_residual(conn: &ConnectionSpec, profile: &Profile, p: &ChartPoint) -> Result<f64> {
    let x0 = CurvatureHalfNormSq { conn: conn.clone() }.eval(p.coords());
    profile.check_domain(x0)?;
    let scaled = ScaledAlg {
        inner: CurvatureField { conn: conn.clone() },
        factor: ProfileSlopeField {
            conn: conn.clone(),
            profile: *profile,
        },
    };
    let delta = DeltaNabla::new(conn.clone(), scaled).eval(p.coords());
    let ginv = real_metric_generic(conn.n(), p.coords()).inverse();
    Ok(form_inner(&delta, &delta, &ginv)?.max(0.0).sqrt())
}

/// Residual of the split form `F' δ^∇R^∇ − F'' i_{X₀} R^∇` at a point, where
/// `X₀ = grad(½|R|²)`; agrees with [`el_residual`] by the product rule but is
/// assembled from independently differentiated pieces.
pub fn el_residual_split(conn: &ConnectionSpec, profile: &Profile, p: &ChartPoint) -> Result<f64> {
    let n = conn.n();
    let dim = 2 * n;
    let x0val = CurvatureHalfNormSq { conn: conn.clone() }.eval(p.coords());
    profile.check_domain(x0val)?;
    let f1 = profile.f1(x0val);
    let f2 = profile.f2(x0val);
    let delta_r = DeltaNabla::new(conn.clone(), CurvatureField { conn: conn.clone() })
        .eval(p.coords());
    let ginv = real_metric_generic(n, p.coords()).inverse();
    // X₀^a = g^{ab} ∂_b x
    let xfield = CurvatureHalfNormSq { conn: conn.clone() };
    let mut grad_x = vec![0.0; dim];
    for b in 0..dim {
        let seeded = seed(p.coords(), b);
        let xv: Dual<f64> = xfield.eval(&seeded);
        grad_x[b] = xv.eps;
    }
    let x0 = (0..dim)
        .map(|a| (0..dim).map(|b| ginv.get(a, b) * grad_x[b]).sum::<f64>())
        .collect::<Vec<_>>();
    let rv = CurvatureField { conn: conn.clone() }.eval(p.coords());
    let ix0r = rv.contract_first(&x0);
    let combined = delta_r.scale(f1).sub(&ix0r.scale(f2));
    Ok(form_inner(&combined, &combined, &ginv)?.max(0.0).sqrt())
}

/// How the middle term of the second variation is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiddleTerm {
    /// `∫ F' |d^∇B|²` (integration by parts; valid for globally defined
    /// bounded directions).
    ByParts,
    /// `∫ ⟨δ^∇(F' d^∇B), B⟩` evaluated literally.
    Direct,
}

/// Second variation value together with the scale of its parts (the integral
/// of the absolute values), used for relative comparisons.
#[derive(Clone, Copy, Debug)]
pub struct SecondVariation {
    pub value: f64,
    pub abs_scale: f64,
}

/// `ℒ_F^∇(B) = ∫ F''⟨R, d^∇B⟩² + ⟨δ^∇(F' d^∇B), B⟩ + F'⟨𝕽^∇(B), B⟩ dV`.
pub fn second_variation<B: AlgField>(
    conn: &ConnectionSpec,
    profile: &Profile,
    b: &B,
    q: &QuadratureRule,
    middle: MiddleTerm,
) -> Result<SecondVariation> {
    assert_eq!(b.rank(), 1, "variation directions are 1-forms");
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let parts = q.integrate_many(2, |p, out| {
        let res = second_variation_integrand(conn, profile, b, p, middle);
        match res {
            Ok((v, s)) => {
                out[0] = v;
                out[1] = s;
            }
            Err(e) => {
                let mut slot = failure.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(e);
                }
            }
        }
    });
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(SecondVariation {
            value: parts[0],
            abs_scale: parts[1],
        }),
    }
}

fn second_variation_integrand<B: AlgField>(
    conn: &ConnectionSpec,
    profile: &Profile,
    b: &B,
    p: &ChartPoint,
    middle: MiddleTerm,
) -> Result<(f64, f64)> {
    let n = conn.n();
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let rv = CurvatureField { conn: conn.clone() }.eval(p.coords());
    let x = 0.5 * form_inner(&rv, &rv, &ginv)?;
    profile.check_domain(x)?;
    let f1 = profile.f1(x);
    let f2 = profile.f2(x);
    let bv = b.eval(p.coords());
    let db = DNabla::new(conn.clone(), AlgRef(b)).eval(p.coords());
    let rdb = form_inner(&rv, &db, &ginv)?;
    let t1 = f2 * rdb * rdb;
    let t2 = match middle {
        MiddleTerm::ByParts => f1 * form_inner(&db, &db, &ginv)?,
        MiddleTerm::Direct => {
            let scaled = ScaledAlg {
                inner: DNabla::new(conn.clone(), AlgRef(b)),
                factor: ProfileSlopeField {
                    conn: conn.clone(),
                    profile: *profile,
                },
            };
            let delta = DeltaNabla::new(conn.clone(), scaled).eval(p.coords());
            form_inner(&delta, &bv, &ginv)?
        }
    };
    let t3 = f1 * form_inner(&frak_r(&rv, &bv, &ginv)?, &bv, &ginv)?;
    Ok((t1 + t2 + t3, t1.abs() + t2.abs() + t3.abs()))
}

/// Finite-difference oracle for the second variation: five-point second
/// derivative of `t ↦ 𝒜_F(∇ + tB)` using the exact curvature expansion
/// `R + t d^∇B + ½t²[B∧B]`.
pub fn second_variation_fd<B: AlgField>(
    conn: &ConnectionSpec,
    profile: &Profile,
    b: &B,
    q: &QuadratureRule,
    h: f64,
) -> Result<f64> {
    let ts = [-2.0 * h, -h, 0.0, h, 2.0 * h];
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let vals = q.integrate_many(5, |p, out| {
        let inner = || -> Result<[f64; 5]> {
            let n = conn.n();
            let dim = 2 * n;
            let ginv = real_metric_generic(n, p.coords()).inverse();
            let rv = CurvatureField { conn: conn.clone() }.eval(p.coords());
            let db = DNabla::new(conn.clone(), AlgRef(b)).eval(p.coords());
            let bv = b.eval(p.coords());
            let mut bb = AlgTensor::zeros(n, 2, b.r());
            for i in 0..dim {
                for j in 0..dim {
                    bb.comps[i * dim + j] = bv.comps[i].bracket(&bv.comps[j]);
                }
            }
            let mut res = [0.0; 5];
            for (slot, t) in ts.iter().enumerate() {
                let rt = rv.add(&db.scale(*t)).add(&bb.scale(t * t));
                let x = 0.5 * form_inner(&rt, &rt, &ginv)?;
                profile.check_domain(x)?;
                res[slot] = profile.f(x);
            }
            Ok(res)
        };
        match inner() {
            Ok(v) => out.copy_from_slice(&v),
            Err(e) => {
                let mut slot = failure.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(e);
                }
            }
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok((-vals[0] + 16.0 * vals[1] - 30.0 * vals[2] + 16.0 * vals[3] - vals[4]) / (12.0 * h * h))
}

/// The Killing-contraction variation `B_V = i_{JV} R^∇` as an analytic field.
#[derive(Clone)]
pub struct VariationField {
    pub conn: ConnectionSpec,
    pub generator: KillingField,
}

impl AlgField for VariationField {
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
        let rv = CurvatureField {
            conn: self.conn.clone(),
        }
        .eval(coords);
        let jv = KillingJVec {
            field: self.generator.clone(),
        }
        .eval(coords);
        rv.contract_first(&jv)
    }
}

/// Builds `B_V` for a Killing generator.
pub fn variation_field(conn: &ConnectionSpec, v: &KillingField) -> VariationField {
    VariationField {
        conn: conn.clone(),
        generator: v.clone(),
    }
}

/// A gauge direction `d^∇φ₀` for a decaying section `φ₀ ∈ Ω⁰(𝔤_E)`.
pub fn gauge_direction(conn: &ConnectionSpec, phi0: BumpForm) -> DNabla<BumpForm> {
    assert_eq!(phi0.rank, 0);
    DNabla::new(conn.clone(), phi0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::quadrature::{make_quadrature, Scheme};
    use crate::geometry::Tangent;
    use crate::killing::{killing_eval, su_basis, BasisFamily};
    use crate::sample::random_point;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_domain_rules() {
        let p = Profile::Power { alpha: 0.5 };
        assert!(p.check_domain(0.0).is_err());
        assert!(p.check_domain(1.0).is_ok());
        assert!(Profile::Linear.check_domain(0.0).is_ok());
        assert!(Profile::Power { alpha: 2.0 }.check_domain(0.0).is_ok());
        assert!(Profile::RegularizedPower { alpha: 0.5, eps: 1e-6 }
            .check_domain(0.0)
            .is_ok());
    }

    #[test]
    fn profile_derivatives_match_duals() {
        for prof in [
            Profile::Power { alpha: 0.63 },
            Profile::RegularizedPower { alpha: 0.5, eps: 1e-3 },
            Profile::Exponential,
        ] {
            let x = 1.37;
            let d = prof.f(Dual::seeded(x));
            assert_relative_eq!(d.eps, prof.f1(x), max_relative = 1e-12);
            let d2 = prof.f1(Dual::seeded(x));
            assert_relative_eq!(d2.eps, prof.f2(x), max_relative = 1e-12);
        }
    }

    #[test]
    fn functional_flat_linear_is_zero() {
        let q = make_quadrature(1, 24, Scheme::TensorGauss).unwrap();
        let v = functional(&ConnectionSpec::Flat { n: 1, r: 2 }, &Profile::Linear, &q).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn functional_kahler_desk_numbers() {
        // x = n k² = 4 constant; Linear: 4·Vol = 8π; Power(1/2): 2·Vol = 4π
        let q = make_quadrature(1, 96, Scheme::TensorGauss).unwrap();
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let lin = functional(&conn, &Profile::Linear, &q).unwrap();
        assert_relative_eq!(lin, 8.0 * std::f64::consts::PI, max_relative = 1e-6);
        let pow = functional(&conn, &Profile::Power { alpha: 0.5 }, &q).unwrap();
        assert_relative_eq!(pow, 4.0 * std::f64::consts::PI, max_relative = 1e-6);
    }

    #[test]
    fn functional_power_on_flat_rejects_domain() {
        let q = make_quadrature(1, 8, Scheme::TensorGauss).unwrap();
        let flat = ConnectionSpec::Flat { n: 1, r: 2 };
        let r = functional(&flat, &Profile::Power { alpha: 0.5 }, &q);
        assert!(matches!(r, Err(Error::ProfileDomain { .. })));
        let r = el_residual(&flat, &Profile::Power { alpha: 0.5 }, &ChartPoint::origin(1));
        assert!(matches!(r, Err(Error::ProfileDomain { .. })));
    }

    #[test]
    fn el_residual_zero_for_critical_connections() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        for prof in [
            Profile::Linear,
            Profile::Power { alpha: 2.0 / 3.0 },
            Profile::Power { alpha: 0.25 },
            Profile::Exponential,
        ] {
            for _ in 0..4 {
                let p = random_point(&mut rng, 1, 1.0);
                let r = el_residual(&conn, &prof, &p).unwrap();
                assert!(r < 1e-8, "el residual {r} for {prof:?}");
            }
        }
        // flat connection with a benign profile
        let flat = ConnectionSpec::Flat { n: 1, r: 2 };
        let p = random_point(&mut rng, 1, 1.0);
        assert!(el_residual(&flat, &Profile::Linear, &p).unwrap() < 1e-14);
    }

    #[test]
    fn el_residual_formulations_agree_on_noncritical_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let conn = ConnectionSpec::NonabelianTest {
            n: 1,
            r: 3,
            k: 1.1,
            eps: 0.6,
        };
        for _ in 0..6 {
            let p = random_point(&mut rng, 1, 0.8);
            let a = el_residual(&conn, &Profile::Exponential, &p).unwrap();
            let b = el_residual_split(&conn, &Profile::Exponential, &p).unwrap();
            assert!(a > 1e-4, "test connection should not be critical ({a})");
            assert!((a - b).abs() < 1e-6 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn second_variation_zero_direction() {
        struct Zero;
        impl AlgField for Zero {
            fn n(&self) -> usize {
                1
            }
            fn rank(&self) -> usize {
                1
            }
            fn r(&self) -> usize {
                2
            }
            fn eval<T: Scalar>(&self, _c: &[T]) -> AlgTensor<T> {
                AlgTensor::zeros(1, 1, 2)
            }
        }
        let q = make_quadrature(1, 16, Scheme::TensorGauss).unwrap();
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let sv = second_variation(&conn, &Profile::Linear, &Zero, &q, MiddleTerm::ByParts).unwrap();
        assert_eq!(sv.value, 0.0);
    }

    #[test]
    fn second_variation_matches_fd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let q = make_quadrature(1, 40, Scheme::TensorGauss).unwrap();
        // integral checks need curvature the functional can integrate, so the
        // non-flat backgrounds here are decaying perturbations of the
        // abelian connection rather than the test connection with constant
        // potential pieces
        let perturbed = |r: usize, seed: u64, amp: f64| ConnectionSpec::Perturbed {
            base: Box::new(ConnectionSpec::KahlerAbelian { n: 1, r, k: 1.5 }),
            bump: BumpForm::random(&mut ChaCha8Rng::seed_from_u64(seed), 1, r, 1, 1.0)
                .scaled(amp),
        };
        let cases: Vec<(ConnectionSpec, Profile)> = vec![
            (
                ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 },
                Profile::Power { alpha: 0.7 },
            ),
            (
                perturbed(3, 17, 0.4),
                Profile::RegularizedPower {
                    alpha: 0.6,
                    eps: 1e-6,
                },
            ),
            (perturbed(3, 18, 0.15), Profile::Exponential),
        ];
        for (conn, prof) in cases {
            for _ in 0..3 {
                let b = BumpForm::random(&mut rng, 1, conn.r(), 1, 1.0);
                let direct =
                    second_variation(&conn, &prof, &b, &q, MiddleTerm::ByParts).unwrap();
                let fd = second_variation_fd(&conn, &prof, &b, &q, 1e-3).unwrap();
                let scale = direct.abs_scale.max(1e-8);
                assert!(
                    (direct.value - fd).abs() < 1e-4 * scale.max(direct.value.abs()),
                    "{:?}: direct {} vs fd {} (scale {scale})",
                    conn,
                    direct.value,
                    fd
                );
            }
        }
    }

    #[test]
    fn middle_term_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let q = make_quadrature(1, 96, Scheme::TensorGauss).unwrap();
        let conn = ConnectionSpec::Perturbed {
            base: Box::new(ConnectionSpec::KahlerAbelian { n: 1, r: 3, k: 1.5 }),
            bump: BumpForm::random(&mut rng, 1, 3, 1, 0.9).scaled(0.15),
        };
        let b = BumpForm::random(&mut rng, 1, 3, 1, 1.2);
        let by_parts =
            second_variation(&conn, &Profile::Exponential, &b, &q, MiddleTerm::ByParts).unwrap();
        let direct =
            second_variation(&conn, &Profile::Exponential, &b, &q, MiddleTerm::Direct).unwrap();
        assert!(
            (by_parts.value - direct.value).abs() < 1e-4 * by_parts.abs_scale.max(1.0),
            "{} vs {}",
            by_parts.value,
            direct.value
        );
    }

    #[test]
    fn gauge_direction_is_null_at_critical_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let q = make_quadrature(1, 48, Scheme::TensorGauss).unwrap();
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let phi0 = BumpForm::random(&mut rng, 1, 2, 0, 1.0);
        let dir = gauge_direction(&conn, phi0);
        let sv = second_variation(&conn, &Profile::Linear, &dir, &q, MiddleTerm::ByParts).unwrap();
        assert!(
            sv.value.abs() < 1e-4 * sv.abs_scale.max(1e-10),
            "gauge direction not null: {} (scale {})",
            sv.value,
            sv.abs_scale
        );
    }

    #[test]
    fn variation_field_closed_form_on_kahler() {
        // B_V(X) = −k g(V, X) σ₀
        let n = 2;
        let k = 1.4;
        let conn = ConnectionSpec::KahlerAbelian { n, r: 2, k };
        let basis = su_basis(n);
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for (v, label) in basis.elements.iter().zip(&basis.labels) {
            if !matches!(label, BasisFamily::A(..) | BasisFamily::C(_)) {
                continue;
            }
            let p = random_point(&mut rng, n, 0.9);
            let bv = variation_field(&conn, v).eval(p.coords());
            let vp = killing_eval(v, &p);
            let g = real_metric_generic(n, p.coords());
            let sig = crate::bundle::connection::sigma0::<f64>(2);
            for a in 0..2 * n {
                let gv: f64 = (0..2 * n)
                    .map(|c| g.get(c, a) * vp.components[c])
                    .sum();
                let want = sig.scale(-k * gv);
                for (x, y) in bv.comps[a].data.iter().zip(&want.data) {
                    assert!((x - y).abs() < 1e-11, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn variation_field_vanishes_for_isotropy_fields() {
        let n = 2;
        let conn = ConnectionSpec::NonabelianTest {
            n,
            r: 3,
            k: 1.0,
            eps: 0.5,
        };
        let basis = su_basis(n);
        let p = ChartPoint::origin(n);
        let dec = crate::killing::isotropy_decompose(&basis, &p);
        for v in &dec.f_part {
            let bv = variation_field(&conn, v).eval(p.coords());
            assert!(bv.max_abs_value() < 1e-12);
        }
        // flat connection: B_V = 0 everywhere
        let flat = ConnectionSpec::Flat { n, r: 2 };
        let bv = variation_field(&flat, &basis.elements[0]).eval(p.coords());
        assert_eq!(bv.max_abs_value(), 0.0);
        let _ = Tangent::zero(n);
    }
}
