//! Stability classification from the Killing-contraction variation family.
//!
//! The family is a necessary witness, not a full spectrum: a negative member
//! certifies instability, a nonnegative family proves nothing. The
//! classifier therefore reports computed signs only.

use super::pointcurv::{sum_j4_closed_form, PointCurvature};
use super::{el_residual, Profile};
use crate::bundle::ops::frak_r;
use crate::bundle::{form_inner, AlgField, ConnectionSpec, CovDerivAlg, CurvatureField};
use crate::error::{Error, Result};
use crate::geometry::quadrature::QuadratureRule;
use crate::geometry::{real_metric_generic, ChartPoint};
use crate::killing::{KillingBasis, KillingJVec, VecField};
use std::sync::Mutex;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabilityClass {
    InstabilityCertificate,
    AverageNonpositive,
    Inconclusive,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilityClass::InstabilityCertificate => "instability certificate",
            StabilityClass::AverageNonpositive => "average-nonpositive",
            StabilityClass::Inconclusive => "inconclusive/consistent-with-stability",
        };
        write!(f, "{s}")
    }
}

/// Second-variation values along the Killing family plus the sampled sign of
/// the profile condition `(2 + 4/n) F''(x) x + (n+1) F'(x)`.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// `ℒ(B_V)` per basis element, in canonical basis order.
    pub per_v: Vec<f64>,
    pub sum: f64,
    /// Magnitude scale accumulated from the per-V integrands.
    pub abs_scale: f64,
    /// Independent route to the sum: `∫ F'q1 + F''q2 dV` over the pointwise
    /// closed form of the basis-summed integrand.
    pub sum_via_closed_form: f64,
    pub condition_min: f64,
    pub condition_max: f64,
    /// Largest Euler-Lagrange residual seen at the sample points.
    pub max_el_residual: f64,
    pub classification: StabilityClass,
}

/// Per-element second variation along `B_{V_k} = i_{JV_k} R^∇` for the whole
/// basis in one sweep over the quadrature nodes.
///
/// The exterior derivative of the contraction is assembled from the Bianchi
/// identity, `d^∇(i_W R)(X,Y) = (∇_W R)(X,Y) + R(D_X W, Y) − R(D_Y W, X)`,
/// so the expensive curvature derivative is shared by all basis elements;
/// agreement with the generic [`second_variation`](super::second_variation)
/// path is pinned by tests.
pub fn killing_family_second_variation(
    conn: &ConnectionSpec,
    profile: &Profile,
    basis: &KillingBasis,
    q: &QuadratureRule,
) -> Result<(Vec<f64>, f64)> {
    let qty = basis.len();
    let n = conn.n();
    let dim = 2 * n;
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let sums = q.integrate_many(qty + 1, |p, out| {
        let mut inner = || -> Result<()> {
            let ginv = real_metric_generic(n, p.coords()).inverse();
            let curv = CurvatureField { conn: conn.clone() };
            let rv = curv.eval(p.coords());
            let x = 0.5 * form_inner(&rv, &rv, &ginv)?;
            profile.check_domain(x)?;
            let f1 = profile.f1(x);
            let f2 = profile.f2(x);
            let grad_r = CovDerivAlg {
                conn: conn.clone(),
                inner: curv,
            }
            .eval(p.coords());
            // one Christoffel evaluation shared by all basis elements
            let gam = crate::geometry::christoffel_generic(n, p.coords());
            for (k, v) in basis.elements.iter().enumerate() {
                let jfield = KillingJVec { field: v.clone() };
                let jv = jfield.eval(p.coords());
                // (DJV)^k_a = ∂_a JV^k + Γ^k_{ac} JV^c
                let mut djv = vec![0.0; dim * dim];
                for a in 0..dim {
                    let seeded = crate::scalar::seed(p.coords(), a);
                    let jd: Vec<crate::scalar::Dual<f64>> = jfield.eval(&seeded);
                    for kk in 0..dim {
                        let mut val = jd[kk].eps;
                        for c in 0..dim {
                            val += gam[kk].get(a, c) * jv[c];
                        }
                        djv[a * dim + kk] = val;
                    }
                }
                let bv = rv.contract_first(&jv);
                // d^∇B_V from the contraction identity
                let njv = grad_r.contract_first(&jv);
                let mut db = njv.clone();
                for a in 0..dim {
                    for c in 0..dim {
                        let mut m = db.comps[a * dim + c].clone();
                        for kk in 0..dim {
                            let wa = djv[a * dim + kk];
                            if wa != 0.0 {
                                m = m.add(&rv.comps[kk * dim + c].scale(wa));
                            }
                            let wc = djv[c * dim + kk];
                            if wc != 0.0 {
                                m = m.sub(&rv.comps[kk * dim + a].scale(wc));
                            }
                        }
                        db.comps[a * dim + c] = m;
                    }
                }
                let rdb = form_inner(&rv, &db, &ginv)?;
                let t1 = f2 * rdb * rdb;
                let t2 = f1 * form_inner(&db, &db, &ginv)?;
                let t3 = f1 * form_inner(&frak_r(&rv, &bv, &ginv)?, &bv, &ginv)?;
                out[k] = t1 + t2 + t3;
                out[qty] += t1.abs() + t2.abs() + t3.abs();
            }
            Ok(())
        };
        if let Err(e) = inner() {
            let mut slot = failure.lock().unwrap();
            if slot.is_none() {
                *slot = Some(e);
            }
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let per_v = sums[..qty].to_vec();
    Ok((per_v, sums[qty]))
}

/// `∫ F' q1 + F'' q2 dV`: the closed form of the basis-summed second
/// variation, evaluated without any Killing-field machinery.
pub fn family_sum_closed_form(
    conn: &ConnectionSpec,
    profile: &Profile,
    q: &QuadratureRule,
) -> Result<f64> {
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let v = q.integrate(|p| {
        let rpt = PointCurvature::from_connection_at(conn, p);
        match sum_j4_closed_form(&rpt, profile) {
            Ok(v) => v,
            Err(e) => {
                let mut slot = failure.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(e);
                }
                0.0
            }
        }
    });
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Evaluates the family `{ℒ(B_{V_k})}` and classifies the observed signs.
pub fn stability_report(
    conn: &ConnectionSpec,
    profile: &Profile,
    basis: &KillingBasis,
    q: &QuadratureRule,
) -> Result<StabilityReport> {
    let n = conn.n();
    // criticality spot-check at a few fixed chart points
    let mut max_el_residual: f64 = 0.0;
    for pt in sample_points(n) {
        max_el_residual = max_el_residual.max(el_residual(conn, profile, &pt)?);
    }
    let (per_v, abs_scale) = killing_family_second_variation(conn, profile, basis, q)?;
    let sum: f64 = per_v.iter().sum();
    let sum_via_closed_form = family_sum_closed_form(conn, profile, q)?;
    // sampled sign of the profile condition
    let mut condition_min = f64::INFINITY;
    let mut condition_max = f64::NEG_INFINITY;
    for pt in sample_points(n) {
        let ginv = real_metric_generic(n, pt.coords()).inverse();
        let rv = CurvatureField { conn: conn.clone() }.eval(pt.coords());
        let x = 0.5 * form_inner(&rv, &rv, &ginv)?;
        profile.check_domain(x)?;
        let c = (2.0 + 4.0 / n as f64) * profile.f2(x) * x + (n as f64 + 1.0) * profile.f1(x);
        condition_min = condition_min.min(c);
        condition_max = condition_max.max(c);
    }
    let tol = 1e-6 * abs_scale.max(1e-12);
    let classification = if per_v.iter().any(|v| *v < -tol) {
        StabilityClass::InstabilityCertificate
    } else if sum < -tol {
        StabilityClass::AverageNonpositive
    } else {
        StabilityClass::Inconclusive
    };
    Ok(StabilityReport {
        per_v,
        sum,
        abs_scale,
        sum_via_closed_form,
        condition_min,
        condition_max,
        max_el_residual,
        classification,
    })
}

fn sample_points(n: usize) -> Vec<ChartPoint> {
    let mut pts = vec![ChartPoint::origin(n)];
    let mut coords = vec![0.0; 2 * n];
    for (i, c) in coords.iter_mut().enumerate() {
        *c = 0.3 + 0.2 * i as f64;
    }
    pts.push(ChartPoint::new(coords.clone()));
    for c in coords.iter_mut() {
        *c = -*c * 1.8;
    }
    pts.push(ChartPoint::new(coords));
    pts
}

/// The exponent where `(2 + 4/n) α(α−1) + (n+1) α` changes sign:
/// `α = (−n² + n + 4) / (2n + 4)`.
pub fn power_threshold(n: usize) -> f64 {
    let nf = n as f64;
    (-nf * nf + nf + 4.0) / (2.0 * nf + 4.0)
}

/// Locates the zero crossing of `α ↦ Σ_k ℒ(B_{V_k})` for a power profile by
/// bisection on `(lo, hi)`.
pub fn power_family_zero_crossing(
    conn: &ConnectionSpec,
    basis: &KillingBasis,
    q: &QuadratureRule,
    lo: f64,
    hi: f64,
    iterations: usize,
) -> Result<f64> {
    let sum_at = |alpha: f64| -> Result<f64> {
        let profile = Profile::Power { alpha };
        let (per_v, _) = killing_family_second_variation(conn, &profile, basis, q)?;
        Ok(per_v.iter().sum())
    };
    let mut lo = lo;
    let mut hi = hi;
    let flo = sum_at(lo)?;
    let fhi = sum_at(hi)?;
    assert!(
        flo * fhi < 0.0,
        "no sign change on [{lo}, {hi}]: {flo} vs {fhi}"
    );
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let fm = sum_at(mid)?;
        if fm * flo.signum() >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fym::{second_variation, variation_field, MiddleTerm};
    use crate::geometry::quadrature::{make_quadrature, Scheme};
    use crate::killing::su_basis;
    use approx::assert_relative_eq;

    #[test]
    fn power_threshold_values() {
        assert_relative_eq!(power_threshold(1), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(power_threshold(2), 0.25, epsilon = 1e-15);
        assert_relative_eq!(power_threshold(3), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn fast_family_path_matches_generic_second_variation() {
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let basis = su_basis(1);
        let q = make_quadrature(1, 32, Scheme::TensorGauss).unwrap();
        let prof = Profile::Power { alpha: 0.7 };
        let (fast, _) = killing_family_second_variation(&conn, &prof, &basis, &q).unwrap();
        for (v, fv) in basis.elements.iter().zip(&fast) {
            let bv = variation_field(&conn, v);
            let slow = second_variation(&conn, &prof, &bv, &q, MiddleTerm::ByParts)
                .unwrap()
                .value;
            assert_relative_eq!(*fv, slow, max_relative = 1e-9);
        }
    }

    #[test]
    fn linear_profile_desk_number() {
        // Σ_k ℒ(B_{V_k}) = (4+4n)|R|²·Vol = 8·8·2π = 128π at n=1, k=2
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let basis = su_basis(1);
        let q = make_quadrature(1, 64, Scheme::TensorGauss).unwrap();
        let rep = stability_report(&conn, &Profile::Linear, &basis, &q).unwrap();
        let want = 128.0 * std::f64::consts::PI;
        assert_relative_eq!(rep.sum, want, max_relative = 1e-3);
        assert_relative_eq!(rep.sum_via_closed_form, want, max_relative = 1e-3);
        assert!(rep.max_el_residual < 1e-8);
        // F'' = 0, F' = 1: condition is (n+1) > 0 everywhere
        assert!(rep.condition_min > 0.0);
        assert_eq!(rep.classification, StabilityClass::Inconclusive);
    }

    #[test]
    fn power_family_crossing_near_half() {
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let basis = su_basis(1);
        let q = make_quadrature(1, 32, Scheme::TensorGauss).unwrap();
        let alpha = power_family_zero_crossing(&conn, &basis, &q, 0.2, 0.9, 40).unwrap();
        assert!((alpha - 0.5).abs() < 0.01, "crossing at {alpha}");
    }

    #[test]
    fn small_alpha_gives_instability_certificate() {
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let basis = su_basis(1);
        let q = make_quadrature(1, 32, Scheme::TensorGauss).unwrap();
        let rep = stability_report(&conn, &Profile::Power { alpha: 0.3 }, &basis, &q).unwrap();
        assert!(rep.sum < 0.0);
        assert_eq!(rep.classification, StabilityClass::InstabilityCertificate);
        // condition negative on constant-|R| background for small α
        assert!(rep.condition_max < 0.0);
    }
}
