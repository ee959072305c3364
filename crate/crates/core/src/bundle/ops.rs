//! Differential operators on 𝔤_E-valued forms.
//!
//! `d^∇` antisymmetrizes the total covariant derivative; `δ^∇` and the rough
//! Laplacian contract it with the inverse metric, which equals the
//! orthonormal-frame sums at every point. All derivative levels are exact.

use super::connection::{ConnectionSpec, CurvatureField};
use super::{AlgField, AlgRef, AlgTensor, CovDerivAlg};
use crate::error::{Error, Result};
use crate::geometry::{real_metric_generic, riemann_generic, ChartPoint, Tangent};
use crate::linalg::SqMat;
use crate::scalar::Scalar;

/// Exterior covariant differential as a field:
/// `(d^∇φ)_{i_0..i_p} = Σ_m (−1)^m (∇φ)_{i_m; i_0..î_m..i_p}`.
pub struct DNabla<F> {
    pub cov: CovDerivAlg<F>,
}

impl<F: AlgField> DNabla<F> {
    pub fn new(conn: ConnectionSpec, inner: F) -> Self {
        DNabla {
            cov: CovDerivAlg { conn, inner },
        }
    }
}

impl<F: AlgField> AlgField for DNabla<F> {
    fn n(&self) -> usize {
        self.cov.n()
    }
    fn rank(&self) -> usize {
        self.cov.rank()
    }
    fn r(&self) -> usize {
        self.cov.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        let cov = self.cov.eval(coords);
        let p1 = cov.rank;
        let dim = cov.dim();
        let mut out = AlgTensor::zeros(cov.n, p1, cov.r);
        let count = out.comps.len();
        let mut idx = vec![0usize; p1];
        let mut rest_idx = vec![0usize; p1.max(1) - 1];
        for f in 0..count {
            let mut rest = f;
            for m in (0..p1).rev() {
                idx[m] = rest % dim;
                rest /= dim;
            }
            let dst = &mut out.comps[f];
            for m in 0..p1 {
                // (∇φ) slot order: derivative direction first, then the
                // remaining indices in original order
                let mut w = 0usize;
                for (t, v) in idx.iter().enumerate() {
                    if t != m {
                        rest_idx[w] = *v;
                        w += 1;
                    }
                }
                let mut src = idx[m];
                for v in rest_idx.iter().take(w) {
                    src = src * dim + v;
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let s = &cov.comps[src];
                if sign > 0.0 {
                    for (d, x) in dst.data.iter_mut().zip(&s.data) {
                        *d += *x;
                    }
                } else {
                    for (d, x) in dst.data.iter_mut().zip(&s.data) {
                        *d -= *x;
                    }
                }
            }
        }
        out
    }
}

/// Codifferential as a field: `(δ^∇φ)_I = −g^{ab} (∇φ)_{a; b, I}`.
pub struct DeltaNabla<F> {
    pub cov: CovDerivAlg<F>,
}

impl<F: AlgField> DeltaNabla<F> {
    pub fn new(conn: ConnectionSpec, inner: F) -> Self {
        DeltaNabla {
            cov: CovDerivAlg { conn, inner },
        }
    }
}

impl<F: AlgField> AlgField for DeltaNabla<F> {
    fn n(&self) -> usize {
        self.cov.n()
    }
    fn rank(&self) -> usize {
        self.cov.inner.rank() - 1
    }
    fn r(&self) -> usize {
        self.cov.r()
    }
    fn eval<T: Scalar>(&self, coords: &[T]) -> AlgTensor<T> {
        assert!(self.cov.inner.rank() >= 1, "codifferential needs degree >= 1");
        let cov = self.cov.eval(coords);
        let dim = cov.dim();
        let ginv = real_metric_generic(cov.n, coords).inverse();
        let mut out = AlgTensor::zeros(cov.n, self.rank(), cov.r);
        let block = out.comps.len();
        for a in 0..dim {
            for b in 0..dim {
                let g = ginv.get(a, b);
                if g.value() == 0.0 {
                    continue;
                }
                for f in 0..block {
                    let src = &cov.comps[(a * dim + b) * block + f];
                    let dst = &mut out.comps[f];
                    for (d, s) in dst.data.iter_mut().zip(&src.data) {
                        *d -= g * *s;
                    }
                }
            }
        }
        out
    }
}

/// Total covariant derivative of a field, evaluated at a point.
pub fn cov_deriv_form<F: AlgField>(
    conn: &ConnectionSpec,
    field: &F,
    p: &ChartPoint,
    x: &Tangent,
) -> AlgTensor<f64> {
    let cov = CovDerivAlg {
        conn: conn.clone(),
        inner: AlgRef(field),
    };
    cov.eval(p.coords()).contract_first(&x.components)
}

/// Rough Laplacian `∇*∇φ = −g^{ab} (∇∇φ)_{a,b;I}` at a point.
pub fn rough_laplacian<F: AlgField>(
    conn: &ConnectionSpec,
    field: &F,
    p: &ChartPoint,
) -> AlgTensor<f64> {
    let ddphi = CovDerivAlg {
        conn: conn.clone(),
        inner: CovDerivAlg {
            conn: conn.clone(),
            inner: AlgRef(field),
        },
    }
    .eval(p.coords());
    let n = field.n();
    let dim = 2 * n;
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let mut out = AlgTensor::zeros(n, field.rank(), field.r());
    let block = out.comps.len();
    for a in 0..dim {
        for b in 0..dim {
            let g = ginv.get(a, b);
            if g == 0.0 {
                continue;
            }
            for f in 0..block {
                let src = &ddphi.comps[(a * dim + b) * block + f];
                let dst = &mut out.comps[f];
                for (d, s) in dst.data.iter_mut().zip(&src.data) {
                    *d -= g * *s;
                }
            }
        }
    }
    out
}

/// The curvature operator `𝕽^∇` on 1- and 2-forms built from a pointwise
/// curvature sample; `ginv` is the slot metric of the components (identity
/// for orthonormal-frame components).
///
/// Degree 1: `𝕽(ψ)(X) = Σ_j [R(e_j, X), ψ(e_j)]`.
/// Degree 2: `𝕽(φ)(X,Y) = Σ_j [R(e_j,X), φ(e_j,Y)] − [R(e_j,Y), φ(e_j,X)]`.
pub fn frak_r(
    rpt: &AlgTensor<f64>,
    phi: &AlgTensor<f64>,
    ginv: &SqMat<f64>,
) -> Result<AlgTensor<f64>> {
    if phi.rank != 1 && phi.rank != 2 {
        return Err(Error::UnsupportedDegree(phi.rank));
    }
    if rpt.r != phi.r {
        return Err(Error::DimensionMismatch(rpt.r, phi.r));
    }
    let dim = rpt.dim();
    let mut out = AlgTensor::zeros(rpt.n, phi.rank, phi.r);
    if phi.rank == 1 {
        for x in 0..dim {
            let mut acc = SqMat::zeros(phi.r);
            for a in 0..dim {
                for b in 0..dim {
                    let g = ginv.get(a, b);
                    if g == 0.0 {
                        continue;
                    }
                    acc = acc.add(&rpt.get(&[a, x]).bracket(&phi.get(&[b])).scale(g));
                }
            }
            out.comps[x] = acc;
        }
    } else {
        for x in 0..dim {
            for y in 0..dim {
                let mut acc = SqMat::zeros(phi.r);
                for a in 0..dim {
                    for b in 0..dim {
                        let g = ginv.get(a, b);
                        if g == 0.0 {
                            continue;
                        }
                        acc = acc.add(&rpt.get(&[a, x]).bracket(&phi.get(&[b, y])).scale(g));
                        acc = acc.sub(&rpt.get(&[a, y]).bracket(&phi.get(&[b, x])).scale(g));
                    }
                }
                out.comps[x * dim + y] = acc;
            }
        }
    }
    Ok(out)
}

/// Combined bundle/base curvature action on a p-tensor:
/// `R(X,Y)φ(X_1..X_p) = [R^∇(X,Y), φ(X_1..)] − Σ_i φ(X_1,..,R_M(X,Y)X_i,..)`.
pub fn curvature_action(
    rpt: &AlgTensor<f64>,
    rm: &[Vec<Vec<Vec<f64>>>],
    phi: &AlgTensor<f64>,
    x: &Tangent,
    y: &Tangent,
) -> AlgTensor<f64> {
    let dim = phi.dim();
    let p = phi.rank;
    // R^∇(X, Y)
    let rxy = {
        let c1 = rpt.contract_first(&x.components);
        c1.contract_first(&y.components).comps[0].clone()
    };
    // R_M(X, Y) as an endomorphism: M[c][d] ∂_d = R_M(X,Y) ∂_c
    let mut endo = vec![vec![0.0; dim]; dim];
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
            for c in 0..dim {
                for d in 0..dim {
                    endo[c][d] += w * rm[a][b][c][d];
                }
            }
        }
    }
    let mut out = AlgTensor::zeros(phi.n, p, phi.r);
    let mut idx = vec![0usize; p];
    for f in 0..out.comps.len() {
        let mut rest = f;
        for m in (0..p).rev() {
            idx[m] = rest % dim;
            rest /= dim;
        }
        let mut acc = rxy.bracket(&phi.comps[f]);
        for m in 0..p {
            let stride = dim.pow((p - 1 - m) as u32);
            let base = f - idx[m] * stride;
            for d in 0..dim {
                let w = endo[idx[m]][d];
                if w == 0.0 {
                    continue;
                }
                acc = acc.sub(&phi.comps[base + d * stride].scale(w));
            }
        }
        out.comps[f] = acc;
    }
    out
}

/// Hodge Laplacian `Δ^∇ = d^∇δ^∇ + δ^∇d^∇` of a field at a point.
pub fn hodge_laplacian<F: AlgField>(
    conn: &ConnectionSpec,
    field: &F,
    p: &ChartPoint,
) -> AlgTensor<f64> {
    let dd = DeltaNabla::new(
        conn.clone(),
        DNabla::new(conn.clone(), AlgRef(field)),
    )
    .eval(p.coords());
    if field.rank() == 0 {
        return dd;
    }
    let sd = DNabla::new(
        conn.clone(),
        DeltaNabla::new(conn.clone(), AlgRef(field)),
    )
    .eval(p.coords());
    dd.add(&sd)
}

/// Pointwise Bochner-Weizenböck defect
/// `|Δ^∇φ − (∇*∇φ + 𝕽^∇(φ) + correction)|` in max-abs component norm.
///
/// The correction is `φ∘Ric` in degree 1 and `φ∘(Ric∧I + 2R)` in degree 2,
/// with `(φ∘ω)(X,Y) = ½ Σ_j φ(e_j, ω(X,Y) e_j)` and `(U∧V)Z = g(U,Z)V −
/// g(V,Z)U`.
pub fn bochner_residual<F: AlgField>(
    conn: &ConnectionSpec,
    field: &F,
    p: &ChartPoint,
) -> Result<f64> {
    let degree = field.rank();
    if degree != 1 && degree != 2 {
        return Err(Error::UnsupportedDegree(degree));
    }
    let n = field.n();
    let dim = 2 * n;
    let lap = hodge_laplacian(conn, field, p);
    let rough = rough_laplacian(conn, field, p);
    let rpt = CurvatureField { conn: conn.clone() }.eval(p.coords());
    let phi = field.eval(p.coords());
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let fr = frak_r(&rpt, &phi, &ginv)?;
    let rm = riemann_generic(n, p.coords());
    // Ric^k_b = g^{ce} rm[b][c][e][k]
    let mut ric = vec![vec![0.0; dim]; dim];
    for b in 0..dim {
        for k in 0..dim {
            let mut s = 0.0;
            for c in 0..dim {
                for e in 0..dim {
                    s += ginv.get(c, e) * rm[b][c][e][k];
                }
            }
            ric[b][k] = s;
        }
    }
    let mut corr = AlgTensor::zeros(n, degree, field.r());
    if degree == 1 {
        // (ψ∘Ric)(X) = ψ(Ric X)
        for b in 0..dim {
            let mut acc = SqMat::zeros(field.r());
            for (k, rk) in ric[b].iter().enumerate() {
                if *rk != 0.0 {
                    acc = acc.add(&phi.comps[k].scale(*rk));
                }
            }
            corr.comps[b] = acc;
        }
    } else {
        let g = real_metric_generic(n, p.coords());
        for x in 0..dim {
            for y in 0..dim {
                // endo M[z][k]: (Ric∧I + 2R)(∂x, ∂y) ∂z = M[z][k] ∂k
                let mut endo = vec![vec![0.0; dim]; dim];
                for z in 0..dim {
                    for k in 0..dim {
                        // (RicX ∧ Y)Z = g(RicX, Z) Y − g(Y, Z) RicX
                        let mut grx_z = 0.0;
                        let mut gry_z = 0.0;
                        for c in 0..dim {
                            grx_z += g.get(c, z) * ric[x][c];
                            gry_z += g.get(c, z) * ric[y][c];
                        }
                        let mut v = 0.0;
                        v += grx_z * if k == y { 1.0 } else { 0.0 } - g.get(y, z) * ric[x][k];
                        // (X ∧ RicY)Z = g(X, Z) RicY − g(RicY, Z) X
                        v += g.get(x, z) * ric[y][k] - gry_z * if k == x { 1.0 } else { 0.0 };
                        // + 2 R_M(∂x, ∂y)
                        v += 2.0 * rm[x][y][z][k];
                        endo[z][k] = v;
                    }
                }
                // (φ∘ω)(X,Y) = ½ g^{jp} M[p][k] φ_{jk}
                let mut acc = SqMat::zeros(field.r());
                for j in 0..dim {
                    for pp in 0..dim {
                        let gjp = ginv.get(j, pp);
                        if gjp == 0.0 {
                            continue;
                        }
                        for k in 0..dim {
                            let w = 0.5 * gjp * endo[pp][k];
                            if w == 0.0 {
                                continue;
                            }
                            acc = acc.add(&phi.get(&[j, k]).scale(w));
                        }
                    }
                }
                corr.comps[x * dim + y] = acc;
            }
        }
    }
    let rhs = rough.add(&fr).add(&corr);
    Ok(lap.sub(&rhs).max_abs_value())
}

/// `|R^{∇+tB} − (R + t d^∇B + ½ t² [B∧B])|` in max-abs norm, with
/// `[B∧B](X,Y) = 2[B(X), B(Y)]`; zero to round-off because the curvature is
/// exactly quadratic in the potential.
pub fn t_expansion_residual(
    conn: &ConnectionSpec,
    bump: &super::BumpForm,
    p: &ChartPoint,
    t: f64,
) -> f64 {
    let n = conn.n();
    let dim = 2 * n;
    let perturbed = ConnectionSpec::Perturbed {
        base: Box::new(conn.clone()),
        bump: bump.scaled(t),
    };
    let lhs = CurvatureField { conn: perturbed }.eval(p.coords());
    let r0 = CurvatureField { conn: conn.clone() }.eval(p.coords());
    let db = DNabla::new(conn.clone(), AlgRef(bump)).eval(p.coords());
    let bv = bump.eval(p.coords());
    let mut rhs = r0.add(&db.scale(t));
    for a in 0..dim {
        for c in 0..dim {
            let br = bv.comps[a].bracket(&bv.comps[c]).scale(t * t);
            rhs.comps[a * dim + c] = rhs.comps[a * dim + c].add(&br);
        }
    }
    lhs.sub(&rhs).max_abs_value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::connection::{sigma0, BumpForm};
    use crate::bundle::{alg_inner, form_inner};
    use crate::geometry::quadrature::{make_quadrature, Scheme};
    use crate::sample::{random_point, random_tangent};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn connections(n: usize, r: usize) -> Vec<ConnectionSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        vec![
            ConnectionSpec::Flat { n, r },
            ConnectionSpec::KahlerAbelian { n, r, k: 1.3 },
            ConnectionSpec::NonabelianTest {
                n,
                r,
                k: 0.8,
                eps: 0.5,
            },
            ConnectionSpec::Perturbed {
                base: Box::new(ConnectionSpec::NonabelianTest {
                    n,
                    r,
                    k: 0.6,
                    eps: 0.4,
                }),
                bump: BumpForm::random(&mut rng, n, r, 1, 0.9),
            },
        ]
    }

    #[test]
    fn second_bianchi_for_all_connection_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in 1..=2usize {
            for conn in connections(n, 3) {
                for _ in 0..5 {
                    let p = random_point(&mut rng, n, 1.0);
                    let d_r = DNabla::new(conn.clone(), CurvatureField { conn: conn.clone() })
                        .eval(p.coords());
                    assert!(
                        d_r.max_abs_value() < 1e-6,
                        "dR != 0 for {conn:?}: {}",
                        d_r.max_abs_value()
                    );
                }
            }
        }
    }

    #[test]
    fn kahler_curvature_is_parallel_and_coclosed() {
        let n = 2;
        let conn = ConnectionSpec::KahlerAbelian { n, r: 2, k: 1.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let p = random_point(&mut rng, n, 1.1);
            let x = random_tangent(&mut rng, n);
            let grad =
                cov_deriv_form(&conn, &CurvatureField { conn: conn.clone() }, &p, &x);
            assert!(grad.max_abs_value() < 1e-8, "∇R = {}", grad.max_abs_value());
            let del = DeltaNabla::new(conn.clone(), CurvatureField { conn: conn.clone() })
                .eval(p.coords());
            assert!(del.max_abs_value() < 1e-8);
        }
    }

    #[test]
    fn flat_constant_field_has_zero_derivative() {
        struct Const;
        impl AlgField for Const {
            fn n(&self) -> usize {
                1
            }
            fn rank(&self) -> usize {
                0
            }
            fn r(&self) -> usize {
                2
            }
            fn eval<T: crate::scalar::Scalar>(&self, _c: &[T]) -> AlgTensor<T> {
                let mut t = AlgTensor::zeros(1, 0, 2);
                t.comps[0] = sigma0::<T>(2);
                t
            }
        }
        let conn = ConnectionSpec::Flat { n: 1, r: 2 };
        let p = ChartPoint::new(vec![0.2, -0.7]);
        let x = Tangent::new(vec![1.0, 2.0]);
        let d = cov_deriv_form(&conn, &Const, &p, &x);
        assert_eq!(d.max_abs_value(), 0.0);
    }

    #[test]
    fn leibniz_rule_for_inner_products() {
        // X⟨φ,ψ⟩ = ⟨∇_Xφ,ψ⟩ + ⟨φ,∇_Xψ⟩ pointwise
        let n = 2;
        let r = 3;
        let conn = ConnectionSpec::NonabelianTest {
            n,
            r,
            k: 0.7,
            eps: 0.4,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let phi = BumpForm::random(&mut rng, n, r, 1, 0.8);
        let psi = BumpForm::random(&mut rng, n, r, 1, 1.1);
        for _ in 0..5 {
            let p = random_point(&mut rng, n, 0.7);
            let x = random_tangent(&mut rng, n);
            // directional derivative of ⟨φ,ψ⟩ via duals
            let mut lhs = 0.0;
            for (a, xa) in x.components.iter().enumerate() {
                if *xa == 0.0 {
                    continue;
                }
                let seeded = crate::scalar::seed(p.coords(), a);
                let pd = phi.eval(&seeded);
                let sd = psi.eval(&seeded);
                let ginvd =
                    crate::geometry::real_metric_generic(n, &seeded).inverse();
                let v = form_inner(&pd, &sd, &ginvd).unwrap();
                lhs += xa * v.eps;
            }
            let ginv = real_metric_generic(n, p.coords()).inverse();
            let dphi = cov_deriv_form(&conn, &phi, &p, &x);
            let dpsi = cov_deriv_form(&conn, &psi, &p, &x);
            let pv = phi.eval(p.coords());
            let sv = psi.eval(p.coords());
            let rhs = form_inner(&dphi, &sv, &ginv).unwrap()
                + form_inner(&pv, &dpsi, &ginv).unwrap();
            assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn delta_is_adjoint_of_d_under_integration() {
        // ∫⟨d^∇φ, ψ⟩ = ∫⟨φ, δ^∇ψ⟩ for rapidly decaying forms
        let n = 1;
        let r = 3;
        let conn = ConnectionSpec::NonabelianTest {
            n,
            r,
            k: 0.9,
            eps: 0.6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let phi = BumpForm::random(&mut rng, n, r, 1, 1.0);
        let psi = BumpForm::random(&mut rng, n, r, 2, 1.2);
        let q = make_quadrature(n, 80, Scheme::TensorGauss).unwrap();
        let dphi = DNabla::new(conn.clone(), AlgRef(&phi));
        let dpsi = DeltaNabla::new(conn.clone(), AlgRef(&psi));
        let lhs = q.integrate(|p| {
            let ginv = real_metric_generic(n, p.coords()).inverse();
            form_inner(&dphi.eval(p.coords()), &psi.eval(p.coords()), &ginv).unwrap()
        });
        let rhs = q.integrate(|p| {
            let ginv = real_metric_generic(n, p.coords()).inverse();
            form_inner(&phi.eval(p.coords()), &dpsi.eval(p.coords()), &ginv).unwrap()
        });
        assert!(
            (lhs - rhs).abs() < 1e-4 * lhs.abs().max(1.0),
            "adjointness {lhs} vs {rhs}"
        );
    }

    #[test]
    fn frak_r_self_adjoint_on_one_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let n = 2;
        let r = 3;
        let conn = ConnectionSpec::NonabelianTest {
            n,
            r,
            k: 1.1,
            eps: 0.7,
        };
        let phi = BumpForm::random(&mut rng, n, r, 1, 0.9);
        let psi = BumpForm::random(&mut rng, n, r, 1, 1.3);
        for _ in 0..5 {
            let p = random_point(&mut rng, n, 0.8);
            let rpt = CurvatureField { conn: conn.clone() }.eval(p.coords());
            let ginv = real_metric_generic(n, p.coords()).inverse();
            let pv = phi.eval(p.coords());
            let sv = psi.eval(p.coords());
            let lhs = form_inner(&frak_r(&rpt, &pv, &ginv).unwrap(), &sv, &ginv).unwrap();
            let rhs = form_inner(&pv, &frak_r(&rpt, &sv, &ginv).unwrap(), &ginv).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn frak_r_on_abelian_samples_vanishes() {
        // all values along one σ: brackets vanish
        let n = 1;
        let mut rpt = AlgTensor::zeros(n, 2, 2);
        let mut phi = AlgTensor::zeros(n, 1, 2);
        rpt.comps[1] = sigma0::<f64>(2).scale(1.4);
        rpt.comps[2] = sigma0::<f64>(2).scale(-1.4);
        phi.comps[0] = sigma0::<f64>(2).scale(0.3);
        phi.comps[1] = sigma0::<f64>(2).scale(-2.1);
        let out = frak_r(&rpt, &phi, &SqMat::identity(2)).unwrap();
        assert_eq!(out.max_abs_value(), 0.0);
        assert!(matches!(
            frak_r(&rpt, &AlgTensor::<f64>::zeros(n, 3, 2), &SqMat::identity(2)),
            Err(Error::UnsupportedDegree(3))
        ));
    }

    #[test]
    fn frak_r_degree_two_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let n = 2;
        let dim = 4;
        let rpt = BumpForm::random(&mut rng, n, 3, 2, 0.5).eval(&[0.1, 0.2, -0.3, 0.4]);
        let phi = BumpForm::random(&mut rng, n, 3, 2, 0.5).eval(&[0.1, 0.2, -0.3, 0.4]);
        let out = frak_r(&rpt, &phi, &SqMat::identity(dim)).unwrap();
        for a in 0..dim {
            for b in 0..dim {
                let x = out.get(&[a, b]);
                let y = out.get(&[b, a]);
                for (u, v) in x.data.iter().zip(&y.data) {
                    assert!((u + v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn curvature_action_matches_second_derivative_commutator() {
        // ∇_a∇_b φ − ∇_b∇_a φ = R(∂a,∂b)φ for coordinate directions
        let n = 1;
        let r = 3;
        let conn = ConnectionSpec::NonabelianTest {
            n,
            r,
            k: 0.8,
            eps: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let phi = BumpForm::random(&mut rng, n, r, 1, 0.7);
        for _ in 0..4 {
            let p = random_point(&mut rng, n, 0.6);
            let ddphi = CovDerivAlg {
                conn: conn.clone(),
                inner: CovDerivAlg {
                    conn: conn.clone(),
                    inner: AlgRef(&phi),
                },
            }
            .eval(p.coords());
            let dim = 2 * n;
            let block = dim; // rank-1 inner
            let rpt = CurvatureField { conn: conn.clone() }.eval(p.coords());
            let rm = riemann_generic(n, p.coords());
            let phiv = phi.eval(p.coords());
            for a in 0..dim {
                for b in 0..dim {
                    let x = Tangent::basis(n, a);
                    let y = Tangent::basis(n, b);
                    let act = curvature_action(&rpt, &rm, &phiv, &x, &y);
                    for f in 0..block {
                        let comm = ddphi.comps[(a * dim + b) * block + f]
                            .sub(&ddphi.comps[(b * dim + a) * block + f]);
                        let diff = comm.sub(&act.comps[f]);
                        let err = diff
                            .data
                            .iter()
                            .fold(0.0f64, |m, v| m.max(v.abs()));
                        assert!(err < 1e-6, "commutator mismatch {err}");
                    }
                }
            }
        }
    }

    #[test]
    fn curvature_action_degree_zero_is_pure_bracket() {
        let n = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let rpt = BumpForm::random(&mut rng, n, 3, 2, 0.5).eval(&[0.3, -0.2]);
        let phi0 = BumpForm::random(&mut rng, n, 3, 0, 0.5);
        let p = ChartPoint::new(vec![0.3, -0.2]);
        let rm = riemann_generic(n, p.coords());
        let pv = phi0.eval(p.coords());
        let x = Tangent::new(vec![1.0, 0.5]);
        let y = Tangent::new(vec![-0.4, 1.1]);
        let act = curvature_action(&rpt, &rm, &pv, &x, &y);
        let rxy = rpt
            .contract_first(&x.components)
            .contract_first(&y.components);
        let want = rxy.comps[0].bracket(&pv.comps[0]);
        for (u, v) in act.comps[0].data.iter().zip(&want.data) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn bochner_residual_below_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        for n in 1..=2usize {
            for r in 2..=3usize {
                for conn in connections(n, r) {
                    for degree in 1..=2usize {
                        for _ in 0..2 {
                            let bump = BumpForm::random(&mut rng, n, r, degree, 1.0);
                            let p = random_point(&mut rng, n, 0.6);
                            let res = bochner_residual(&conn, &bump, &p).unwrap();
                            let scale = hodge_laplacian(&conn, &bump, &p)
                                .max_abs_value()
                                .max(1.0);
                            assert!(
                                res < 1e-5 * scale,
                                "n={n} r={r} deg={degree} {conn:?}: residual {res} scale {scale}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bochner_rejects_degree_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let bump = BumpForm::random(&mut rng, 1, 2, 3, 1.0);
        let conn = ConnectionSpec::Flat { n: 1, r: 2 };
        assert!(matches!(
            bochner_residual(&conn, &bump, &ChartPoint::origin(1)),
            Err(Error::UnsupportedDegree(3))
        ));
    }

    #[test]
    fn bochner_zero_form_input_gives_zero() {
        // a identically-zero 1-form has residual exactly 0
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
            fn eval<T: crate::scalar::Scalar>(&self, _c: &[T]) -> AlgTensor<T> {
                AlgTensor::zeros(1, 1, 2)
            }
        }
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 1.0 };
        let res = bochner_residual(&conn, &Zero, &ChartPoint::new(vec![0.4, 0.1])).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn t_expansion_exact_in_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for n in 1..=2usize {
            let conn = ConnectionSpec::NonabelianTest {
                n,
                r: 3,
                k: 0.7,
                eps: 0.4,
            };
            for _ in 0..10 {
                let bump = BumpForm::random(&mut rng, n, 3, 1, 1.0);
                let p = random_point(&mut rng, n, 0.8);
                let t: f64 = rng.gen_range(-0.8..0.8);
                let res = t_expansion_residual(&conn, &bump, &p, t);
                assert!(res < 1e-8, "t-expansion residual {res}");
            }
        }
        // t = 0 is exactly zero
        let conn = ConnectionSpec::Flat { n: 1, r: 2 };
        let bump = BumpForm::random(&mut rng, 1, 2, 1, 1.0);
        let res = t_expansion_residual(&conn, &bump, &ChartPoint::origin(1), 0.0);
        assert!(res < 1e-14);
    }

    #[test]
    fn abelian_bump_quadratic_term_vanishes() {
        // bump along σ₀ on the abelian connection: [B∧B] = 0, so the linear
        // truncation R + t dB is already exact
        let n = 1;
        let conn = ConnectionSpec::KahlerAbelian { n, r: 2, k: 1.2 };
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        // at r = 2 every so(2) coefficient is a multiple of σ₀
        let bump = BumpForm::random(&mut rng, n, 2, 1, 1.0);
        let p = random_point(&mut rng, n, 0.5);
        let t = 0.37;
        let perturbed = ConnectionSpec::Perturbed {
            base: Box::new(conn.clone()),
            bump: bump.scaled(t),
        };
        let lhs = CurvatureField { conn: perturbed }.eval(p.coords());
        let r0 = CurvatureField { conn: conn.clone() }.eval(p.coords());
        let db = DNabla::new(conn.clone(), AlgRef(&bump)).eval(p.coords());
        let rhs = r0.add(&db.scale(t));
        assert!(lhs.sub(&rhs).max_abs_value() < 1e-12);
    }

    #[test]
    fn kahler_norm_squared_is_2nksq() {
        for n in 1..=2usize {
            let k = 2.0;
            let conn = ConnectionSpec::KahlerAbelian { n, r: 2, k };
            let mut rng = ChaCha8Rng::seed_from_u64(53);
            for _ in 0..5 {
                let p = random_point(&mut rng, n, 1.0);
                let rv = CurvatureField { conn: conn.clone() }.eval(p.coords());
                let ginv = real_metric_generic(n, p.coords()).inverse();
                let nrm = form_inner(&rv, &rv, &ginv).unwrap();
                let want = 2.0 * n as f64 * k * k;
                assert!((nrm - want).abs() < 1e-10, "|R|² = {nrm}, want {want}");
            }
        }
    }

    #[test]
    fn alg_inner_sigma0_value() {
        let s = sigma0::<f64>(2);
        assert_eq!(alg_inner(&s, &s).unwrap(), 2.0);
    }
}
