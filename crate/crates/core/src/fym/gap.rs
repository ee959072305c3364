//! Gap-analysis quantities: the dimensional threshold, the Laplacian
//! identity for `F(½|R|²)`, and the pointwise inequality chain on random
//! curvature samples.

use super::pointcurv::{j_index, PointCurvature};
use super::{CurvatureHalfNormSq, Profile, ProfileValueField};
use crate::bundle::ops::rough_laplacian;
use crate::bundle::{form_inner, AlgField, ConnectionSpec, CovDerivAlg, CurvatureField, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::quadrature::QuadratureRule;
use crate::geometry::{christoffel_generic, real_metric_generic, riemann_generic, ChartPoint};
use crate::linalg::SqMat;
use crate::scalar::{seed, Dual};
use rand::Rng;

/// `(2n−1)√(2n(2n−1)) / (8(n−1))` for `n ≥ 2`.
pub fn gap_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedDimension { required: 2, got: n });
    }
    let m = 2.0 * n as f64;
    Ok((m - 1.0) * (m * (m - 1.0)).sqrt() / (4.0 * (m - 2.0)))
}

/// The curvature-operator coefficient `8(n−1)/√(2n(2n−1))` in the lower
/// bound for `⟨𝕽^∇(R), R⟩`.
pub fn frak_bound_coefficient(n: usize) -> f64 {
    let m = 2.0 * n as f64;
    2.0 * (m - 2.0) / (m * (m - 1.0)).sqrt()
}

/// Base curvature components at the origin in the canonical frame, used for
/// the sample-based checks. On this homogeneous space the components agree
/// in every J-adapted orthonormal frame at every point.
pub struct FrameCurvature {
    pub n: usize,
    /// `rm[i][j][k][l]`: `R(e_i, e_j) e_k = rm.. e_l`.
    pub rm: Vec<Vec<Vec<Vec<f64>>>>,
    /// `ric[i][l]`: `Ric(e_i) = ric.. e_l`.
    pub ric: Vec<Vec<f64>>,
}

impl FrameCurvature {
    pub fn at_origin(n: usize) -> Self {
        let dim = 2 * n;
        let coord = riemann_generic(n, ChartPoint::origin(n).coords());
        // e_i = coordinate/√2: frame components are the coordinate ones / 2
        let mut rm = vec![vec![vec![vec![0.0; dim]; dim]; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        rm[i][j][k][l] = coord[i][j][k][l] / 2.0;
                    }
                }
            }
        }
        let mut ric = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for l in 0..dim {
                ric[i][l] = (0..dim).map(|j| rm[i][j][j][l]).sum();
            }
        }
        FrameCurvature { n, rm, ric }
    }
}

/// `⟨R∘(Ric∧I), R⟩` for a frame sample, with
/// `(φ∘ω)(X,Y) = ½ Σ_j φ(e_j, ω(X,Y) e_j)` and `(U∧V)Z = g(U,Z)V − g(V,Z)U`.
pub fn ric_wedge_pairing(rpt: &PointCurvature, fc: &FrameCurvature) -> f64 {
    let dim = rpt.dim();
    let mut total = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            // endo M[z][l] of (Ric e_a ∧ e_b + e_a ∧ Ric e_b)
            let mut val = SqMat::zeros(rpt.r);
            for z in 0..dim {
                for l in 0..dim {
                    let mut m = fc.ric[a][z] * kr(b, l) - kr(b, z) * fc.ric[a][l];
                    m += kr(a, z) * fc.ric[b][l] - fc.ric[b][z] * kr(a, l);
                    if m != 0.0 {
                        val = val.add(&rpt.get(z, l).scale(0.5 * m));
                    }
                }
            }
            total += 0.5 * val.trace_inner(rpt.get(a, b));
        }
    }
    total
}

/// `(R∘2R)(e_a, e_b)` for a frame sample.
pub fn r_2r_component(rpt: &PointCurvature, fc: &FrameCurvature, a: usize, b: usize) -> SqMat<f64> {
    let dim = rpt.dim();
    let mut val = SqMat::zeros(rpt.r);
    for j in 0..dim {
        for l in 0..dim {
            let m = fc.rm[a][b][j][l];
            if m != 0.0 {
                val = val.add(&rpt.get(j, l).scale(m));
            }
        }
    }
    val
}

/// `⟨R∘2R, R⟩` for a frame sample.
pub fn r_2r_pairing(rpt: &PointCurvature, fc: &FrameCurvature) -> f64 {
    let dim = rpt.dim();
    let mut total = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            total += 0.5 * r_2r_component(rpt, fc, a, b).trace_inner(rpt.get(a, b));
        }
    }
    total
}

/// Max-abs residual of the expansion
/// `(R∘2R)(X,Y) = −R(X,Y) − R(JX,JY) − Σ_j R(e_j, Je_j) g(JX, Y)`.
pub fn rii_expansion_residual(rpt: &PointCurvature, fc: &FrameCurvature) -> f64 {
    let n = rpt.n;
    let dim = rpt.dim();
    let t = rpt.j_trace();
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        let (ja, sa) = j_index(n, a);
        for b in 0..dim {
            let (jb, sb) = j_index(n, b);
            let lhs = r_2r_component(rpt, fc, a, b);
            let mut rhs = rpt
                .get(a, b)
                .scale(-1.0)
                .sub(&rpt.get(ja, jb).scale(sa * sb));
            // g(Je_a, e_b) = sa δ_{σ(a), b}
            if ja == b {
                rhs = rhs.sub(&t.scale(sa));
            }
            worst = worst.max(lhs.sub(&rhs).data.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }
    worst
}

/// `⟨𝕽^∇(R), R⟩ = Σ_{j,a,b} ⟨[R(e_j,e_a), R(e_j,e_b)] ..⟩` for a frame sample.
pub fn frak_r_pairing(rpt: &PointCurvature) -> f64 {
    let dim = rpt.dim();
    let mut total = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let mut val = SqMat::zeros(rpt.r);
            for j in 0..dim {
                val = val.add(&rpt.get(j, a).bracket(rpt.get(j, b)));
            }
            // 𝕽(R)(a,b) = 2 Σ_j [R(j,a), R(j,b)]; the ½ of the 2-form inner
            // product cancels one factor of 2
            total += val.trace_inner(rpt.get(a, b));
        }
    }
    total
}

/// Residual of the pointwise Laplacian identity for `u = F(½|R|²)`:
/// `Δu = −¼F''|grad|R|²|² − F'|∇R|² + F'⟨∇*∇R, R⟩` (positive Laplacian).
pub fn lap_f_residual(
    conn: &ConnectionSpec,
    profile: &Profile,
    p: &ChartPoint,
) -> Result<(f64, f64)> {
    let n = conn.n();
    let dim = 2 * n;
    let xf = CurvatureHalfNormSq { conn: conn.clone() };
    let x = xf.eval(p.coords());
    profile.check_domain(x)?;
    let uf = ProfileValueField {
        conn: conn.clone(),
        profile: *profile,
    };
    // Hessian and gradient of u by nested duals
    let mut grad_u = vec![0.0; dim];
    let mut hess_u = SqMat::zeros(dim);
    for a in 0..dim {
        let s1 = seed(p.coords(), a);
        let du: Dual<f64> = uf.eval(&s1);
        grad_u[a] = du.eps;
        for b in 0..=a {
            let s2 = seed(&s1, b);
            let ddu: Dual<Dual<f64>> = uf.eval(&s2);
            hess_u[(a, b)] = ddu.eps.eps;
            hess_u[(b, a)] = ddu.eps.eps;
        }
    }
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let gam = christoffel_generic(n, p.coords());
    let mut lap_u = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let g = ginv.get(a, b);
            if g == 0.0 {
                continue;
            }
            let mut v = hess_u.get(a, b);
            for c in 0..dim {
                v -= gam[c].get(a, b) * grad_u[c];
            }
            lap_u -= g * v;
        }
    }
    // right-hand side from curvature derivatives
    let f1 = profile.f1(x);
    let f2 = profile.f2(x);
    // grad |R|² = 2 grad x
    let mut grad_x = vec![0.0; dim];
    for (a, g) in grad_x.iter_mut().enumerate() {
        let s1 = seed(p.coords(), a);
        let dx: Dual<f64> = xf.eval(&s1);
        *g = dx.eps;
    }
    let mut grad_norm2_sq = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            grad_norm2_sq += ginv.get(a, b) * (2.0 * grad_x[a]) * (2.0 * grad_x[b]);
        }
    }
    let curv = CurvatureField { conn: conn.clone() };
    let grad_r = CovDerivAlg {
        conn: conn.clone(),
        inner: curv.clone(),
    }
    .eval(p.coords());
    let block = grad_r.comps.len() / dim;
    let slice = |a: usize| crate::bundle::AlgTensor {
        n,
        rank: 2,
        r: conn.r(),
        comps: grad_r.comps[a * block..(a + 1) * block].to_vec(),
    };
    let mut grad_r_norm2 = 0.0;
    for a in 0..dim {
        let sa = slice(a);
        for b in 0..dim {
            let g = ginv.get(a, b);
            if g == 0.0 {
                continue;
            }
            grad_r_norm2 += g * form_inner(&sa, &slice(b), &ginv)?;
        }
    }
    let rv = curv.eval(p.coords());
    let rough = rough_laplacian(conn, &curv, p);
    let pair = form_inner(&rough, &rv, &ginv)?;
    let rhs = -0.25 * f2 * grad_norm2_sq - f1 * grad_r_norm2 + f1 * pair;
    let scale = lap_u.abs() + 0.25 * (f2 * grad_norm2_sq).abs()
        + (f1 * grad_r_norm2).abs()
        + (f1 * pair).abs();
    Ok(((lap_u - rhs).abs(), scale.max(1e-12)))
}

/// Everything the gap analysis reports.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub n: usize,
    pub threshold: f64,
    /// Max of `|R^∇|` over the quadrature nodes (no rigorous global sup is
    /// claimed).
    pub sup_r_norm: f64,
    pub lap_identity_residuals: Vec<f64>,
    pub lap_identity_max_relative: f64,
    /// Max relative defect of `⟨R∘(Ric∧I), R⟩ = (2n+2)|R|²` over samples.
    pub ric_wedge_max_residual: f64,
    /// Max component residual of the curvature-operator expansion.
    pub rii_expansion_max_residual: f64,
    /// Extremum of `⟨R∘2R, R⟩ / |R|²` and the count below −3.
    pub r2r_min_ratio: f64,
    pub r2r_violations: usize,
    /// Extremum of `⟨𝕽(R), R⟩ / |R|³` and the count below the coefficient
    /// bound.
    pub frak_min_ratio: f64,
    pub frak_violations: usize,
    pub samples: usize,
    /// Range over nodes of `(2n−1 − c_n |R|) |R|²`.
    pub integrand_min: f64,
    pub integrand_max: f64,
    /// `∫ F' ⟨R∘(Ric∧I + 2R) + 𝕽(R), R⟩ dV`.
    pub bochner_balance: f64,
    /// Sampled minimum of `F''` over the nodes (precondition `F'' ≥ 0`).
    pub min_f2: f64,
}

/// Runs the gap analysis: threshold, sup-norm estimate, Laplacian identity
/// at random points, and the inequality chain over random samples.
pub fn gap_report<R: Rng>(
    conn: &ConnectionSpec,
    profile: &Profile,
    q: &QuadratureRule,
    lap_points: usize,
    samples: usize,
    rng: &mut R,
) -> Result<GapReport> {
    let n = conn.n();
    let threshold = gap_threshold(n)?;
    let fc = FrameCurvature::at_origin(n);
    let cn = frak_bound_coefficient(n);

    // sup |R| over nodes, the sign integrand range, the balance integral and
    // the profile-convexity sample in one sweep
    let per_node = |p: &ChartPoint, out: &mut [f64]| {
        let rpt = PointCurvature::from_connection_at(conn, p);
        let r2 = rpt.norm_sq();
        let rn = r2.sqrt();
        let x = 0.5 * r2;
        let f1 = if profile.check_domain(x).is_ok() {
            profile.f1(x)
        } else {
            f64::NAN
        };
        let f2v = if profile.check_domain(x).is_ok() {
            profile.f2(x)
        } else {
            f64::NAN
        };
        let pairing = ric_wedge_pairing(&rpt, &fc) + r_2r_pairing(&rpt, &fc) + frak_r_pairing(&rpt);
        out[0] = f1 * pairing; // integrand of the balance integral
        out[1] = rn; // max tracked outside quadrature weights
        out[2] = (2.0 * n as f64 - 1.0 - cn * rn) * r2;
        out[3] = f2v;
    };
    // integrate gives Σ w·f; for extrema walk the nodes directly
    let mut sup_r: f64 = 0.0;
    let mut integrand_min = f64::INFINITY;
    let mut integrand_max = f64::NEG_INFINITY;
    let mut min_f2 = f64::INFINITY;
    {
        let mut vals = vec![0.0; 4];
        for idx in 0..q.node_count() {
            let (p, _w) = q.node(idx);
            per_node(&p, &mut vals);
            sup_r = sup_r.max(vals[1]);
            integrand_min = integrand_min.min(vals[2]);
            integrand_max = integrand_max.max(vals[2]);
            min_f2 = min_f2.min(vals[3]);
        }
    }
    let bochner_balance = q.integrate(|p| {
        let mut vals = vec![0.0; 4];
        per_node(p, &mut vals);
        vals[0]
    });

    // Laplacian identity at random points
    let mut lap_identity_residuals = Vec::with_capacity(lap_points);
    let mut lap_identity_max_relative: f64 = 0.0;
    for _ in 0..lap_points {
        let p = crate::sample::random_point(rng, n, 0.8);
        let (res, scale) = lap_f_residual(conn, profile, &p)?;
        lap_identity_max_relative = lap_identity_max_relative.max(res / scale);
        lap_identity_residuals.push(res);
    }

    // inequality chain over random samples
    let mut ric_wedge_max_residual: f64 = 0.0;
    let mut rii_expansion_max_residual: f64 = 0.0;
    let mut r2r_min_ratio = f64::INFINITY;
    let mut r2r_violations = 0usize;
    let mut frak_min_ratio = f64::INFINITY;
    let mut frak_violations = 0usize;
    for _ in 0..samples {
        let rpt = PointCurvature::random(rng, n, conn.r().max(3), true);
        let r2 = rpt.norm_sq();
        let rw = ric_wedge_pairing(&rpt, &fc);
        ric_wedge_max_residual =
            ric_wedge_max_residual.max((rw - (2.0 * n as f64 + 2.0) * r2).abs() / r2.max(1e-30));
        rii_expansion_max_residual =
            rii_expansion_max_residual.max(rii_expansion_residual(&rpt, &fc));
        let r2r = r_2r_pairing(&rpt, &fc) / r2;
        r2r_min_ratio = r2r_min_ratio.min(r2r);
        if r2r < -3.0 - 1e-12 {
            r2r_violations += 1;
        }
        let fr = frak_r_pairing(&rpt) / r2.powf(1.5);
        frak_min_ratio = frak_min_ratio.min(fr);
        if fr < -cn - 1e-12 {
            frak_violations += 1;
        }
    }

    Ok(GapReport {
        n,
        threshold,
        sup_r_norm: sup_r,
        lap_identity_residuals,
        lap_identity_max_relative,
        ric_wedge_max_residual,
        rii_expansion_max_residual,
        r2r_min_ratio,
        r2r_violations,
        frak_min_ratio,
        frak_violations,
        samples,
        integrand_min,
        integrand_max,
        bochner_balance,
        min_f2,
    })
}

#[inline]
fn kr(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::connection::sigma0;
    use crate::geometry::quadrature::{make_quadrature, Scheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_values() {
        assert!((gap_threshold(2).unwrap() - 3.0 * 3.0f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(matches!(
            gap_threshold(1),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn frame_curvature_has_constant_ricci() {
        for n in 2..=3usize {
            let fc = FrameCurvature::at_origin(n);
            let dim = 2 * n;
            for i in 0..dim {
                for l in 0..dim {
                    let want = if i == l { (n + 1) as f64 } else { 0.0 };
                    assert!((fc.ric[i][l] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ric_wedge_identity_and_expansion_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let n = 2;
        let fc = FrameCurvature::at_origin(n);
        for _ in 0..200 {
            let rpt = PointCurvature::random(&mut rng, n, 3, true);
            let r2 = rpt.norm_sq();
            let rw = ric_wedge_pairing(&rpt, &fc);
            assert!(
                (rw - (2.0 * n as f64 + 2.0) * r2).abs() < 1e-8 * r2,
                "ric-wedge {rw} vs {}",
                (2.0 * n as f64 + 2.0) * r2
            );
            assert!(rii_expansion_residual(&rpt, &fc) < 1e-8);
        }
    }

    #[test]
    fn equality_family_pairing_value() {
        // ⟨R∘2R, R⟩ = −(2+2n)|R|² on the equality family: the sharp bound
        let n = 2;
        let fc = FrameCurvature::at_origin(n);
        let rpt = PointCurvature::equality_case(n, &sigma0::<f64>(3).scale(0.8));
        let r2 = rpt.norm_sq();
        let v = r_2r_pairing(&rpt, &fc) / r2;
        assert!((v + (2.0 + 2.0 * n as f64)).abs() < 1e-10, "ratio {v}");
    }

    #[test]
    fn frak_bound_holds_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let n = 2;
        let cn = frak_bound_coefficient(n);
        for _ in 0..500 {
            let rpt = PointCurvature::random(&mut rng, n, 3, true);
            let fr = frak_r_pairing(&rpt) / rpt.norm_sq().powf(1.5);
            assert!(fr >= -cn - 1e-12, "frak ratio {fr} below −{cn}");
        }
    }

    #[test]
    fn lap_identity_on_test_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let conn = ConnectionSpec::NonabelianTest {
            n: 2,
            r: 3,
            k: 0.9,
            eps: 0.5,
        };
        for _ in 0..5 {
            let p = crate::sample::random_point(&mut rng, 2, 0.7);
            let (res, scale) = lap_f_residual(&conn, &Profile::Exponential, &p).unwrap();
            assert!(res < 1e-5 * scale, "lap residual {res} scale {scale}");
        }
    }

    #[test]
    fn gap_report_flat_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(94);
        let conn = ConnectionSpec::Flat { n: 2, r: 3 };
        let q = make_quadrature(2, 6, Scheme::TensorGauss).unwrap();
        let rep = gap_report(&conn, &Profile::Linear, &q, 3, 200, &mut rng).unwrap();
        assert!(rep.sup_r_norm < 1e-14);
        assert!(rep.sup_r_norm <= rep.threshold);
        assert!(rep.bochner_balance.abs() < 1e-12);
        assert!(rep.lap_identity_max_relative < 1e-5);
        // identities hold on the random samples regardless of the connection
        assert!(rep.ric_wedge_max_residual < 1e-8);
        assert!(rep.rii_expansion_max_residual < 1e-8);
        assert_eq!(rep.frak_violations, 0);
    }
}
