//! Deterministic random sampling helpers used by the verification suites.

use crate::geometry::{ChartPoint, Tangent};
use rand::Rng;
use rand_distr::StandardNormal;

/// Convenience alias: every suite seeds one of these for reproducibility.
pub type SuiteRng = rand_chacha::ChaCha8Rng;

/// Random chart point with normally distributed coordinates of scale `sigma`.
pub fn random_point<R: Rng>(rng: &mut R, n: usize, sigma: f64) -> ChartPoint {
    let coords = (0..2 * n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ChartPoint::new(coords)
}

/// Random tangent vector with standard normal coordinate components.
pub fn random_tangent<R: Rng>(rng: &mut R, n: usize) -> Tangent {
    Tangent::new(
        (0..2 * n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

/// Standard normal draw.
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}
