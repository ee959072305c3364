//! Numerical verification library for Fubini-Study geometry and the
//! F-Yang-Mills functional on the affine chart of complex projective space.
//!
//! The crate evaluates every geometric object in the stack exactly — metric,
//! Levi-Civita connection, curvature, Killing fields, bundle connections and
//! their differential operators — through nested forward-mode differentiation
//! (see [`scalar`]), and checks the pointwise and integral identities of the
//! second-variation and gap analyses at desk scale.
//!
//! Modules mirror the mathematical layers:
//! - [`geometry`]: chart, metric, curvature tensors, quadrature;
//! - [`killing`]: su(n+1), the explicit Killing basis, covariant derivatives,
//!   isotropy decomposition;
//! - [`bundle`]: 𝔤_E-valued forms, connections, d/δ/Laplacians, curvature
//!   operators, Bochner-Weizenböck residuals;
//! - [`fym`]: profiles, the functional, Euler-Lagrange residuals, second
//!   variation, Killing-contraction variations, estimate and gap quantities.

pub mod bundle;
pub mod error;
pub mod fym;
pub mod geometry;
pub mod killing;
pub mod linalg;
pub mod sample;
pub mod scalar;

pub use error::{Error, Result};

/// Concrete scalar used by all public (non-generic) entry points.
pub type Real = f64;
