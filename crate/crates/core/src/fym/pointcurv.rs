//! Pointwise curvature samples in an orthonormal J-adapted frame, the
//! estimate quantities, and the origin-table contraction identities.
//!
//! A sample need not arise from any connection; the algebraic identities
//! and bounds are checked over i.i.d. Gaussian samples antisymmetrized in
//! the frame pair and the fiber indices.

use super::Profile;
use crate::bundle::{AlgField, ConnectionSpec, CurvatureField};
use crate::error::Result;
use crate::geometry::{frame_at, ChartPoint};
use crate::killing::{djv_frame_table, BasisFamily};
use crate::linalg::SqMat;

/// Frame index of `J e_i` together with the sign: `J e_α = e_{n+α}`,
/// `J e_{n+α} = −e_α`.
#[inline]
pub fn j_index(n: usize, i: usize) -> (usize, f64) {
    if i < n {
        (i + n, 1.0)
    } else {
        (i - n, -1.0)
    }
}

/// An algebraic curvature sample: components `F_{ij} ∈ so(r)` over an
/// orthonormal J-adapted frame, antisymmetric in `(i, j)`.
#[derive(Clone, Debug)]
pub struct PointCurvature {
    pub n: usize,
    pub r: usize,
    comps: Vec<SqMat<f64>>,
}

impl PointCurvature {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &SqMat<f64> {
        &self.comps[i * self.dim() + j]
    }

    pub fn from_components(n: usize, r: usize, comps: Vec<SqMat<f64>>) -> Self {
        assert_eq!(comps.len(), 4 * n * n);
        PointCurvature { n, r, comps }
    }

    /// Samples i.i.d. standard normal entries, antisymmetrized over the frame
    /// pair and the fiber matrix; optionally normalized to `|R| = 1`.
    pub fn random<R: rand::Rng>(rng: &mut R, n: usize, r: usize, normalize: bool) -> Self {
        let dim = 2 * n;
        let mut comps = vec![SqMat::zeros(r); dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let mut m = SqMat::zeros(r);
                for a in 0..r {
                    for b in (a + 1)..r {
                        let v = crate::sample::normal(rng);
                        m[(a, b)] = v;
                        m[(b, a)] = -v;
                    }
                }
                comps[i * dim + j] = m.clone();
                comps[j * dim + i] = m.scale(-1.0);
            }
        }
        let mut out = PointCurvature { n, r, comps };
        if normalize {
            let nrm = out.norm_sq().sqrt();
            if nrm > 0.0 {
                for m in out.comps.iter_mut() {
                    *m = m.scale(1.0 / nrm);
                }
            }
        }
        out
    }

    /// The equality-case sample `R(X, Y) = g(X, JY) σ`.
    pub fn equality_case(n: usize, sigma: &SqMat<f64>) -> Self {
        let dim = 2 * n;
        let mut comps = vec![SqMat::zeros(sigma.dim); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                // g(e_i, J e_j)
                let (jj, s) = j_index(n, j);
                let c = if i == jj { s } else { 0.0 };
                comps[i * dim + j] = sigma.scale(c);
            }
        }
        PointCurvature {
            n,
            r: sigma.dim,
            comps,
        }
    }

    /// Samples a connection's curvature at a chart point, expressed in the
    /// J-adapted orthonormal frame there.
    pub fn from_connection_at(conn: &ConnectionSpec, p: &ChartPoint) -> Self {
        let n = conn.n();
        let dim = 2 * n;
        let rv = CurvatureField { conn: conn.clone() }.eval(p.coords());
        let frame = frame_at(p);
        let mut comps = vec![SqMat::zeros(conn.r()); dim * dim];
        for i in 0..dim {
            let ci = rv.contract_first(&frame[i].components);
            for j in 0..dim {
                comps[i * dim + j] = ci.contract_first(&frame[j].components).comps[0].clone();
            }
        }
        PointCurvature {
            n,
            r: conn.r(),
            comps,
        }
    }

    /// `|R|² = ½ Σ_{ij} |F_{ij}|²`.
    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for m in &self.comps {
            s += m.trace_inner(m);
        }
        0.5 * s
    }

    /// `M_{ij} = ⟨i_{e_i}R, i_{e_j}R⟩ = Σ_m ⟨F_{im}, F_{jm}⟩`.
    pub fn contraction_gram(&self) -> SqMat<f64> {
        let dim = self.dim();
        SqMat::from_fn(dim, |i, j| {
            let mut s = 0.0;
            for m in 0..dim {
                s += self.get(i, m).trace_inner(self.get(j, m));
            }
            s
        })
    }

    /// `T = Σ_i F(e_i, J e_i)`.
    pub fn j_trace(&self) -> SqMat<f64> {
        let dim = self.dim();
        let mut t = SqMat::zeros(self.r);
        for i in 0..dim {
            let (ji, s) = j_index(self.n, i);
            t = t.add(&self.get(i, ji).scale(s));
        }
        t
    }

    /// `Σ_{ij} ⟨F_{ij}, F(Je_i, Je_j)⟩`.
    pub fn j_pair_inner(&self) -> f64 {
        let dim = self.dim();
        let mut s = 0.0;
        for i in 0..dim {
            let (ji, si) = j_index(self.n, i);
            for j in 0..dim {
                let (jj, sj) = j_index(self.n, j);
                s += si * sj * self.get(i, j).trace_inner(self.get(ji, jj));
            }
        }
        s
    }
}

/// The two frame-sum quantities bounded by the estimate analysis:
/// `q1 = 2|R|² + Σ⟨R(e_i,e_j), R(Je_i,Je_j)⟩ + |Σ R(e_i,Je_i)|²` and
/// `q2 = 4|R|⁴ + Σ(⟨i_{e_i}R, i_{e_j}R⟩² + ⟨i_{e_i}R,i_{e_j}R⟩⟨i_{Je_i}R,i_{Je_j}R⟩)`.
#[derive(Clone, Copy, Debug)]
pub struct EstimateQuantities {
    pub q1: f64,
    pub q2: f64,
    pub r_norm2: f64,
    /// Norm of `R − g(·, J·)σ*` at the least-squares `σ*`; zero exactly on
    /// the equality-case family.
    pub equality_residual: f64,
}

/// Computes the estimate quantities of a sample.
pub fn estimate_quantities(rpt: &PointCurvature) -> EstimateQuantities {
    let n = rpt.n;
    let dim = rpt.dim();
    let r_norm2 = rpt.norm_sq();
    let t = rpt.j_trace();
    let q1 = 2.0 * r_norm2 + rpt.j_pair_inner() + t.trace_inner(&t);
    let m = rpt.contraction_gram();
    let mut q2 = 4.0 * r_norm2 * r_norm2;
    for i in 0..dim {
        let (ji, si) = j_index(n, i);
        for j in 0..dim {
            let (jj, sj) = j_index(n, j);
            let mij = m.get(i, j);
            q2 += mij * mij + mij * si * sj * m.get(ji, jj);
        }
    }
    // least squares over σ: minimize Σ|F_ij − c_ij σ|², c_ij = g(e_i, Je_j)
    let mut sigma = SqMat::zeros(rpt.r);
    let mut csum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let (jj, s) = j_index(n, j);
            let c = if i == jj { s } else { 0.0 };
            if c != 0.0 {
                sigma = sigma.add(&rpt.get(i, j).scale(c));
                csum += c * c;
            }
        }
    }
    let sigma = sigma.scale(1.0 / csum);
    let mut res2 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let (jj, s) = j_index(n, j);
            let c = if i == jj { s } else { 0.0 };
            let d = rpt.get(i, j).sub(&sigma.scale(c));
            res2 += d.trace_inner(&d);
        }
    }
    EstimateQuantities {
        q1,
        q2,
        r_norm2,
        equality_residual: (0.5 * res2).max(0.0).sqrt(),
    }
}

/// `F' q1 + F'' q2` at `x = ½|R|²`: the closed form of the basis-summed
/// fourth piece.
pub fn sum_j4_closed_form(rpt: &PointCurvature, profile: &Profile) -> Result<f64> {
    let est = estimate_quantities(rpt);
    let x = 0.5 * est.r_norm2;
    profile.check_domain(x)?;
    Ok(profile.f1(x) * est.q1 + profile.f2(x) * est.q2)
}

/// `Σ_{ij} ⟨R(e_i,e_j), R(D_{e_i}JV, e_j)⟩` at the origin for a basis
/// element, with `D JV` read from the frame table.
pub fn djv_contraction_z0(rpt: &PointCurvature, family: BasisFamily) -> f64 {
    let dim = rpt.dim();
    let table = djv_frame_table(rpt.n, family);
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let w = table.get(i, k);
                if w != 0.0 {
                    s += w * rpt.get(i, j).trace_inner(rpt.get(k, j));
                }
            }
        }
    }
    s
}

/// Family-summed squares of the origin contraction, and their closed forms.
#[derive(Clone, Copy, Debug)]
pub struct FamilySums {
    pub a_sum: f64,
    pub b_sum: f64,
    pub c_sum: f64,
    pub a_closed: f64,
    pub b_closed: f64,
    pub c_closed: f64,
}

/// Sums `(Σ⟨R(e_i,e_j), R(D_{e_i}JV, e_j)⟩)²` over each family with indices
/// `1 ≤ k < l ≤ n` (A, B) and `1 ≤ t ≤ n` (C), next to their closed forms
/// in the contraction Gram matrix.
pub fn family_sums_z0(rpt: &PointCurvature) -> FamilySums {
    let n = rpt.n;
    let (mut a_sum, mut b_sum, mut c_sum) = (0.0, 0.0, 0.0);
    for k in 1..=n {
        for l in (k + 1)..=n {
            a_sum += djv_contraction_z0(rpt, BasisFamily::A(k, l)).powi(2);
            b_sum += djv_contraction_z0(rpt, BasisFamily::B(k, l)).powi(2);
        }
    }
    for t in 1..=n {
        c_sum += djv_contraction_z0(rpt, BasisFamily::C(t)).powi(2);
    }
    let m = rpt.contraction_gram();
    let mut a_closed = 0.0;
    let mut b_closed = 0.0;
    for al in 0..n {
        for be in 0..n {
            a_closed += (m.get(al, n + be) - m.get(n + al, be)).powi(2);
            b_closed += (m.get(al, be) + m.get(n + al, n + be)).powi(2);
        }
    }
    // ½ Σ_i (|i_{e_i}R|² + |i_{Je_i}R|²)²
    let mut half_diag = 0.0;
    for i in 0..2 * n {
        let (ji, _) = j_index(n, i);
        half_diag += (m.get(i, i) + m.get(ji, ji)).powi(2);
    }
    half_diag *= 0.5;
    let r2 = rpt.norm_sq();
    FamilySums {
        a_sum,
        b_sum,
        c_sum,
        a_closed,
        b_closed: b_closed - half_diag,
        c_closed: half_diag + 4.0 * r2 * r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::connection::sigma0;
    use crate::fym::jterms::JTermsContext;
    use crate::killing::su_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equality_case_attains_both_constants() {
        for n in 1..=3usize {
            let sig = sigma0::<f64>(2).scale(1.3);
            let rpt = PointCurvature::equality_case(n, &sig);
            let est = estimate_quantities(&rpt);
            let nf = n as f64;
            assert!((est.q1 - (4.0 + 4.0 * nf) * est.r_norm2).abs() < 1e-10 * est.r_norm2);
            assert!(
                (est.q2 - (4.0 + 4.0 / nf) * est.r_norm2.powi(2)).abs()
                    < 1e-10 * est.r_norm2.powi(2)
            );
            assert!(est.equality_residual < 1e-12);
        }
    }

    #[test]
    fn bounds_hold_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for n in 1..=3usize {
            let nf = n as f64;
            let mut min_ratio = f64::INFINITY;
            for _ in 0..500 {
                let rpt = PointCurvature::random(&mut rng, n, 3, true);
                let est = estimate_quantities(&rpt);
                assert!(est.q1 <= (4.0 + 4.0 * nf) * est.r_norm2 + 1e-10);
                assert!(est.q2 >= (4.0 + 4.0 / nf) * est.r_norm2.powi(2) - 1e-10);
                min_ratio = min_ratio.min(est.q2 / est.r_norm2.powi(2));
            }
            // every sample sits below the factor-2-slipped constant
            assert!(min_ratio < 4.0 + 8.0 / nf);
        }
    }

    #[test]
    fn zero_sample_contractions_vanish() {
        let rpt = PointCurvature::from_components(2, 2, vec![SqMat::zeros(2); 16]);
        for fam in [BasisFamily::A(1, 2), BasisFamily::B(1, 2), BasisFamily::C(1)] {
            assert_eq!(djv_contraction_z0(&rpt, fam), 0.0);
        }
    }

    #[test]
    fn family_identities_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        for n in 2..=3usize {
            for _ in 0..50 {
                let rpt = PointCurvature::random(&mut rng, n, 3, true);
                let fs = family_sums_z0(&rpt);
                assert!((fs.a_sum - fs.a_closed).abs() < 1e-8, "A: {fs:?}");
                assert!((fs.b_sum - fs.b_closed).abs() < 1e-8, "B: {fs:?}");
                assert!((fs.c_sum - fs.c_closed).abs() < 1e-8, "C: {fs:?}");
            }
        }
    }

    #[test]
    fn closed_form_matches_basis_sum_of_s_squares() {
        // Σ_k S(V_k)² over the whole basis = q2 at the origin
        for n in 1..=2usize {
            let conn = ConnectionSpec::NonabelianTest {
                n,
                r: 3,
                k: 0.9,
                eps: 0.6,
            };
            let p = ChartPoint::origin(n);
            let rpt = PointCurvature::from_connection_at(&conn, &p);
            let est = estimate_quantities(&rpt);
            let ctx = JTermsContext::new(&conn, &Profile::Linear, &p).unwrap();
            let basis = su_basis(n);
            let mut total = 0.0;
            for v in &basis.elements {
                total += ctx.s_contraction(v).powi(2);
            }
            assert!(
                (total - est.q2).abs() < 1e-8 * est.q2.max(1.0),
                "n={n}: Σ S² = {total} vs q2 = {}",
                est.q2
            );
        }
    }

    #[test]
    fn kahler_sample_from_connection_is_equality_case() {
        let conn = ConnectionSpec::KahlerAbelian { n: 2, r: 2, k: 1.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        let p = crate::sample::random_point(&mut rng, 2, 1.0);
        let rpt = PointCurvature::from_connection_at(&conn, &p);
        let est = estimate_quantities(&rpt);
        assert!(est.equality_residual < 1e-8, "{}", est.equality_residual);
        assert!((est.r_norm2 - 2.0 * 2.0 * 1.5 * 1.5).abs() < 1e-8);
    }
}
