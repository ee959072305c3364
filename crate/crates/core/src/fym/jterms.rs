//! The four-part split of the second-variation integrand along a
//! Killing-contraction direction, and its sums over the Killing basis.

use super::Profile;
use crate::bundle::ops::DeltaNabla;
use crate::bundle::{form_inner, AlgField, AlgTensor, ConnectionSpec, CovDerivAlg, CurvatureField};
use crate::error::Result;
use crate::geometry::{real_metric_generic, riemann_generic, ChartPoint};
use crate::killing::{CovDerivVec, KillingBasis, KillingField, KillingJVec, VecField};
use crate::linalg::SqMat;
use crate::scalar::{seed, Dual};

/// Pointwise values of the four integrand pieces.
#[derive(Clone, Copy, Debug, Default)]
pub struct JTermBreakdown {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
}

impl JTermBreakdown {
    pub fn total(&self) -> f64 {
        self.j1 + self.j2 + self.j3 + self.j4
    }

    /// Sum of magnitudes, for relative tolerances.
    pub fn abs_scale(&self) -> f64 {
        self.j1.abs() + self.j2.abs() + self.j3.abs() + self.j4.abs()
    }
}

/// Sums of the pieces over a Killing basis at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct KillingSums {
    pub sum_j1: f64,
    pub sum_j2: f64,
    pub sum_j3_pointwise: f64,
    pub sum_j4: f64,
    /// Sum of per-field magnitudes, for relative tolerances.
    pub abs_scale: f64,
}

/// Shared V-independent data for evaluating J-terms at one point.
///
/// The curvature derivatives dominate the cost; computing them once lets the
/// basis sums reuse them across all `n² + 2n` fields.
pub struct JTermsContext {
    conn: ConnectionSpec,
    profile: Profile,
    dim: usize,
    f1: f64,
    f2: f64,
    ginv: SqMat<f64>,
    /// Curvature components `R_{ab}`.
    rv: AlgTensor<f64>,
    /// `(∇R)_{a; bc}`.
    grad_r: AlgTensor<f64>,
    /// `(∇ δR)_{a; b}`.
    grad_delta_r: AlgTensor<f64>,
    /// `X₀ = grad(½|R|²)` components.
    x0: Vec<f64>,
    /// Riemann components of the base.
    rm: Vec<Vec<Vec<Vec<f64>>>>,
    coords: Vec<f64>,
}

impl JTermsContext {
    pub fn new(conn: &ConnectionSpec, profile: &Profile, p: &ChartPoint) -> Result<Self> {
        let n = conn.n();
        let dim = 2 * n;
        let ginv = real_metric_generic(n, p.coords()).inverse();
        let curv = CurvatureField { conn: conn.clone() };
        let rv = curv.eval(p.coords());
        let x = 0.5 * form_inner(&rv, &rv, &ginv)?;
        profile.check_domain(x)?;
        let f1 = profile.f1(x);
        let f2 = profile.f2(x);
        let grad_r = CovDerivAlg {
            conn: conn.clone(),
            inner: curv.clone(),
        }
        .eval(p.coords());
        let grad_delta_r = CovDerivAlg {
            conn: conn.clone(),
            inner: DeltaNabla::new(conn.clone(), curv.clone()),
        }
        .eval(p.coords());
        // X₀^a = g^{ab} ⟨∇_b R, R⟩
        let mut grad_x = vec![0.0; dim];
        for (b, gx) in grad_x.iter_mut().enumerate() {
            let nb = grad_r.clone_slice(b);
            *gx = form_inner(&nb, &rv, &ginv)?;
        }
        let x0 = (0..dim)
            .map(|a| (0..dim).map(|b| ginv.get(a, b) * grad_x[b]).sum())
            .collect();
        let rm = riemann_generic(n, p.coords());
        Ok(JTermsContext {
            conn: conn.clone(),
            profile: *profile,
            dim,
            f1,
            f2,
            ginv,
            rv,
            grad_r,
            grad_delta_r,
            x0,
            rm,
            coords: p.coords().to_vec(),
        })
    }

    /// J-terms for one Killing generator.
    pub fn j_terms(&self, v: &KillingField) -> JTermBreakdown {
        let dim = self.dim;
        let jv_field = KillingJVec { field: v.clone() };
        let jv = jv_field.eval(&self.coords);
        // DJV endomorphism: W[k][a] with D_{∂a} JV = W^k_a ∂_k, plus D²JV
        let djv = CovDerivVec {
            inner: KillingJVec { field: v.clone() },
        }
        .eval(&self.coords);
        let ddjv = CovDerivVec {
            inner: CovDerivVec {
                inner: KillingJVec { field: v.clone() },
            },
        }
        .eval(&self.coords);
        let w = |a: usize, k: usize| djv[a * dim + k];

        // ∇_{JV} R (rank 2)
        let njv = self.grad_r.contract_first(&jv);
        // i_{JV} R (1-form)
        let ijv_r = self.rv.contract_first(&jv);
        // ⟨R, ∇_{JV}R⟩ (2-form inner)
        let r_njv = form_inner(&self.rv, &njv, &self.ginv).unwrap();
        // i_{X₀} ∇_{JV} R
        let ix0_njv = njv.contract_first(&self.x0);
        let j1 = self.f2
            * (r_njv * r_njv - form_inner(&ix0_njv, &ijv_r, &self.ginv).unwrap());

        // S = Σ_{ij} ⟨R(e_i,e_j), R(D_{e_i}JV, e_j)⟩
        let s = self.double_contraction(&self.rv, &djv);
        // D_{X₀} JV
        let dx0jv: Vec<f64> = (0..dim)
            .map(|k| (0..dim).map(|a| self.x0[a] * w(a, k)).sum())
            .collect();
        let idx0jv_r = self.rv.contract_first(&dx0jv);
        // T2 = Σ_{ij} ⟨(∇R)(e_i; D_{e_i}JV, e_j) + (∇R)(D_{e_i}JV; e_i, e_j), R(JV, e_j)⟩
        let mut t2 = 0.0;
        for a in 0..dim {
            for c in 0..dim {
                let gac = self.ginv.get(a, c);
                if gac == 0.0 {
                    continue;
                }
                for b in 0..dim {
                    for d in 0..dim {
                        let gbd = self.ginv.get(b, d);
                        if gbd == 0.0 {
                            continue;
                        }
                        let target = &ijv_r.comps[d];
                        let mut acc = SqMat::zeros(self.rv.r);
                        for k in 0..dim {
                            let wk = w(c, k);
                            if wk == 0.0 {
                                continue;
                            }
                            acc = acc.add(
                                &self.grad_r.comps[(a * dim + k) * dim + b]
                                    .add(&self.grad_r.comps[(k * dim + a) * dim + b])
                                    .scale(wk),
                            );
                        }
                        t2 += gac * gbd * acc.trace_inner(target);
                    }
                }
            }
        }
        let j2 = self.f2
            * (2.0 * r_njv * s - form_inner(&idx0jv_r, &ijv_r, &self.ginv).unwrap())
            - self.f1 * t2;

        // J3 = F' ⟨∇_{JV} δR, i_{JV} R⟩
        let njv_delta = self.grad_delta_r.contract_first(&jv);
        let j3 = self.f1 * form_inner(&njv_delta, &ijv_r, &self.ginv).unwrap();

        // J4
        // D*D JV = −g^{ab} (∇∇JV)_{ab}
        let ddjv_vec: Vec<f64> = (0..dim)
            .map(|k| {
                let mut s = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        let g = self.ginv.get(a, b);
                        if g != 0.0 {
                            s -= g * ddjv[(a * dim + b) * dim + k];
                        }
                    }
                }
                s
            })
            .collect();
        // Ric(JV) = g^{ce} R_M(JV, ∂c) ∂e
        let ric_jv: Vec<f64> = (0..dim)
            .map(|k| {
                let mut s = 0.0;
                for b in 0..dim {
                    let jb = jv[b];
                    if jb == 0.0 {
                        continue;
                    }
                    for c in 0..dim {
                        for e in 0..dim {
                            s += jb * self.ginv.get(c, e) * self.rm[b][c][e][k];
                        }
                    }
                }
                s
            })
            .collect();
        let idd = self.rv.contract_first(&ddjv_vec);
        let iric = self.rv.contract_first(&ric_jv);
        let laplace_defect =
            form_inner(&idd.sub(&iric), &ijv_r, &self.ginv).unwrap();

        // U = Σ_{ij} ⟨R(D²_{e_i,e_j}JV, e_i) + R(e_i, R_M(e_i, JV) e_j), R(JV, e_j)⟩
        let mut u = 0.0;
        // M^k_{ab} = R_M(∂a, JV)∂b components
        let mut m = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for vslot in 0..dim {
                let jvv = jv[vslot];
                if jvv == 0.0 {
                    continue;
                }
                for b in 0..dim {
                    for k in 0..dim {
                        m[(a * dim + b) * dim + k] += jvv * self.rm[a][vslot][b][k];
                    }
                }
            }
        }
        for a in 0..dim {
            for c in 0..dim {
                let gac = self.ginv.get(a, c);
                if gac == 0.0 {
                    continue;
                }
                for b in 0..dim {
                    for d in 0..dim {
                        let gbd = self.ginv.get(b, d);
                        if gbd == 0.0 {
                            continue;
                        }
                        let target = &ijv_r.comps[d];
                        let mut acc = SqMat::zeros(self.rv.r);
                        for k in 0..dim {
                            // R((D²JV)^k_{ab}, ∂c): D² slots (a, b), R slots (k, c)
                            let c1 = ddjv[(a * dim + b) * dim + k];
                            if c1 != 0.0 {
                                acc = acc.add(&self.rv.comps[k * dim + c].scale(c1));
                            }
                            // R(∂a, M(∂c, ∂b)): frame i pairs R-slot a with M-slot c
                            let c2 = m[(c * dim + b) * dim + k];
                            if c2 != 0.0 {
                                acc = acc.add(&self.rv.comps[a * dim + k].scale(c2));
                            }
                        }
                        u += gac * gbd * acc.trace_inner(target);
                    }
                }
            }
        }
        let j4 = self.f2 * s * s + self.f1 * laplace_defect + self.f1 * u;
        JTermBreakdown { j1, j2, j3, j4 }
    }

    /// `Σ_{ij} ⟨R(e_i, e_j), R(W(e_i), e_j)⟩` for an endomorphism `W` given as
    /// the first covariant derivative layout `djv[a*dim + k]`.
    fn double_contraction(&self, rv: &AlgTensor<f64>, djv: &[f64]) -> f64 {
        let dim = self.dim;
        let mut s = 0.0;
        for a in 0..dim {
            for c in 0..dim {
                let gac = self.ginv.get(a, c);
                if gac == 0.0 {
                    continue;
                }
                for b in 0..dim {
                    for d in 0..dim {
                        let gbd = self.ginv.get(b, d);
                        if gbd == 0.0 {
                            continue;
                        }
                        let mut acc = SqMat::zeros(rv.r);
                        for k in 0..dim {
                            let wk = djv[c * dim + k];
                            if wk != 0.0 {
                                acc = acc.add(&rv.comps[k * dim + d].scale(wk));
                            }
                        }
                        s += gac * gbd * rv.comps[a * dim + b].trace_inner(&acc);
                    }
                }
            }
        }
        s
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn f2(&self) -> f64 {
        self.f2
    }

    /// `Σ_{ij}⟨R(e_i,e_j), R(D_{e_i}JV, e_j)⟩` for one generator, exposed for
    /// the origin-table contraction checks.
    pub fn s_contraction(&self, v: &KillingField) -> f64 {
        let djv = CovDerivVec {
            inner: KillingJVec { field: v.clone() },
        }
        .eval(&self.coords);
        self.double_contraction(&self.rv, &djv)
    }

    pub fn conn(&self) -> &ConnectionSpec {
        &self.conn
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }
}

impl AlgTensor<f64> {
    /// Rank-(p−1) slice with the first slot fixed at `a`.
    fn clone_slice(&self, a: usize) -> AlgTensor<f64> {
        let block = self.comps.len() / self.dim();
        AlgTensor {
            n: self.n,
            rank: self.rank - 1,
            r: self.r,
            comps: self.comps[a * block..(a + 1) * block].to_vec(),
        }
    }
}

/// J-terms for one generator at one point.
pub fn j_terms(
    conn: &ConnectionSpec,
    profile: &Profile,
    v: &KillingField,
    p: &ChartPoint,
) -> Result<JTermBreakdown> {
    Ok(JTermsContext::new(conn, profile, p)?.j_terms(v))
}

/// Sums of the four pieces over the full basis at one point.
pub fn killing_sums(
    conn: &ConnectionSpec,
    profile: &Profile,
    basis: &KillingBasis,
    p: &ChartPoint,
) -> Result<KillingSums> {
    let ctx = JTermsContext::new(conn, profile, p)?;
    let mut out = KillingSums::default();
    for v in &basis.elements {
        let t = ctx.j_terms(v);
        out.sum_j1 += t.j1;
        out.sum_j2 += t.j2;
        out.sum_j3_pointwise += t.j3;
        out.sum_j4 += t.j4;
        out.abs_scale += t.abs_scale();
    }
    Ok(out)
}

/// Replaces the basis by an orthogonal recombination (for the invariance
/// checks): `V'_i = Σ_k Q[k][i] V_k` with `Q` orthogonal.
pub fn recombine_basis(basis: &KillingBasis, q: &nalgebra::DMatrix<f64>) -> KillingBasis {
    let m = basis.len();
    assert_eq!(q.nrows(), m);
    let elements = (0..m)
        .map(|i| {
            let mut acc = crate::killing::SuMatrix::zeros(basis.elements[0].generator.size);
            for k in 0..m {
                let c = q[(k, i)];
                if c != 0.0 {
                    acc = acc.add(&basis.elements[k].generator.scale(c));
                }
            }
            KillingField::new(acc)
        })
        .collect();
    KillingBasis {
        elements,
        labels: basis.labels.clone(),
    }
}

/// Random special orthogonal matrix via QR of a Gaussian sample.
pub fn random_orthogonal<R: rand::Rng>(rng: &mut R, m: usize) -> nalgebra::DMatrix<f64> {
    let a = nalgebra::DMatrix::from_fn(m, m, |_, _| crate::sample::normal(rng));
    let qr = a.qr();
    qr.q()
}

/// X₀ components at a point (gradient of `½|R|²`), exposed for tests.
pub fn x0_vector(conn: &ConnectionSpec, p: &ChartPoint) -> Vec<f64> {
    let n = conn.n();
    let dim = 2 * n;
    let xf = super::CurvatureHalfNormSq { conn: conn.clone() };
    let ginv = real_metric_generic(n, p.coords()).inverse();
    let mut grad = vec![0.0; dim];
    for (b, g) in grad.iter_mut().enumerate() {
        let seeded = seed(p.coords(), b);
        let xv: Dual<f64> = crate::bundle::ScalarField::eval(&xf, &seeded);
        *g = xv.eps;
    }
    (0..dim)
        .map(|a| (0..dim).map(|b| ginv.get(a, b) * grad[b]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::BumpForm;
    use crate::fym::{second_variation, variation_field, MiddleTerm};
    use crate::geometry::quadrature::{make_quadrature, Scheme};
    use crate::killing::su_basis;
    use crate::sample::random_point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kahler_j123_vanish_pointwise() {
        let conn = ConnectionSpec::KahlerAbelian { n: 1, r: 2, k: 2.0 };
        let prof = Profile::Power { alpha: 0.5 };
        let basis = su_basis(1);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..5 {
            let p = random_point(&mut rng, 1, 1.0);
            for v in &basis.elements {
                let t = j_terms(&conn, &prof, v, &p).unwrap();
                let scale = t.abs_scale().max(1.0);
                assert!(t.j1.abs() < 1e-9 * scale, "j1 = {}", t.j1);
                assert!(t.j2.abs() < 1e-9 * scale, "j2 = {}", t.j2);
                assert!(t.j3.abs() < 1e-9 * scale, "j3 = {}", t.j3);
            }
        }
    }

    #[test]
    fn flat_connection_all_terms_vanish() {
        let conn = ConnectionSpec::Flat { n: 1, r: 2 };
        let basis = su_basis(1);
        let p = ChartPoint::new(vec![0.3, -0.4]);
        for v in &basis.elements {
            let t = j_terms(&conn, &Profile::Linear, v, &p).unwrap();
            assert_eq!(t.total(), 0.0);
        }
    }

    #[test]
    fn sums_j1_j2_vanish_on_arbitrary_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for n in 1..=2usize {
            let conn = ConnectionSpec::Perturbed {
                base: Box::new(ConnectionSpec::NonabelianTest {
                    n,
                    r: 3,
                    k: 0.9,
                    eps: 0.5,
                }),
                bump: BumpForm::random(&mut rng, n, 3, 1, 0.8),
            };
            let basis = su_basis(n);
            for _ in 0..3 {
                let p = random_point(&mut rng, n, 0.8);
                let s = killing_sums(&conn, &Profile::Exponential, &basis, &p).unwrap();
                let scale = s.abs_scale.max(1.0);
                assert!(s.sum_j1.abs() < 1e-6 * scale, "Σj1 = {} (scale {scale})", s.sum_j1);
                assert!(s.sum_j2.abs() < 1e-6 * scale, "Σj2 = {} (scale {scale})", s.sum_j2);
            }
        }
    }

    #[test]
    fn sums_invariant_under_orthogonal_recombination() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let n = 1;
        let conn = ConnectionSpec::NonabelianTest {
            n,
            r: 3,
            k: 1.1,
            eps: 0.6,
        };
        let basis = su_basis(n);
        let q = random_orthogonal(&mut rng, basis.len());
        let recombined = recombine_basis(&basis, &q);
        let p = random_point(&mut rng, n, 0.9);
        let a = killing_sums(&conn, &Profile::Exponential, &basis, &p).unwrap();
        let b = killing_sums(&conn, &Profile::Exponential, &recombined, &p).unwrap();
        let scale = a.abs_scale.max(1.0);
        assert!((a.sum_j1 - b.sum_j1).abs() < 1e-10 * scale);
        assert!((a.sum_j2 - b.sum_j2).abs() < 1e-10 * scale);
        assert!((a.sum_j3_pointwise - b.sum_j3_pointwise).abs() < 1e-10 * scale);
        assert!((a.sum_j4 - b.sum_j4).abs() < 1e-10 * scale);
    }

    #[test]
    fn per_v_reassembly_matches_second_variation_on_kahler() {
        // ∫(J¹+J²+J³+J⁴) dV = ℒ(B_V) for a critical connection
        let n = 1;
        let conn = ConnectionSpec::KahlerAbelian { n, r: 2, k: 2.0 };
        let prof = Profile::Power { alpha: 0.7 };
        let basis = su_basis(n);
        let q = make_quadrature(n, 48, Scheme::TensorGauss).unwrap();
        for v in basis.elements.iter().take(2) {
            let bv = variation_field(&conn, v);
            let lhs = second_variation(&conn, &prof, &bv, &q, MiddleTerm::ByParts)
                .unwrap()
                .value;
            let rhs = q.integrate(|p| j_terms(&conn, &prof, v, p).unwrap().total());
            assert!(
                (lhs - rhs).abs() < 1e-3 * lhs.abs().max(1.0),
                "ℒ = {lhs} vs ∫ΣJ = {rhs}"
            );
        }
    }

    #[test]
    fn sum_j4_matches_closed_form_for_every_connection_kind() {
        use crate::fym::pointcurv::{sum_j4_closed_form, PointCurvature};
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        for n in 1..=2usize {
            let basis = su_basis(n);
            let conns = [
                ConnectionSpec::KahlerAbelian { n, r: 2, k: 1.6 },
                ConnectionSpec::NonabelianTest {
                    n,
                    r: 3,
                    k: 0.8,
                    eps: 0.5,
                },
                ConnectionSpec::Perturbed {
                    base: Box::new(ConnectionSpec::KahlerAbelian { n, r: 3, k: 1.1 }),
                    bump: BumpForm::random(&mut rng, n, 3, 1, 0.9).scaled(0.5),
                },
            ];
            for conn in &conns {
                for _ in 0..3 {
                    let p = random_point(&mut rng, n, 0.8);
                    let s = killing_sums(conn, &Profile::Exponential, &basis, &p).unwrap();
                    let rpt = PointCurvature::from_connection_at(conn, &p);
                    let closed = sum_j4_closed_form(&rpt, &Profile::Exponential).unwrap();
                    assert!(
                        (s.sum_j4 - closed).abs() < 1e-6 * closed.abs().max(1.0),
                        "{conn:?}: basis sum {} vs closed form {closed}",
                        s.sum_j4
                    );
                }
            }
        }
    }

    #[test]
    fn x0_vanishes_where_curvature_norm_constant() {
        let conn = ConnectionSpec::KahlerAbelian { n: 2, r: 2, k: 1.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let p = random_point(&mut rng, 2, 1.0);
        let x0 = x0_vector(&conn, &p);
        assert!(x0.iter().all(|v| v.abs() < 1e-9), "{x0:?}");
    }
}
