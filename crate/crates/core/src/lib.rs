//! Exact counts of rational points `a/q` lying close to a planar curve, and
//! the analytic machinery behind their asymptotics: Selberg extremal
//! polynomials, exponential sums and oscillatory integrals, regime-dependent
//! error bounds, and an experiment harness.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod asymptotics;
pub mod curve;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod oscillatory;
pub mod poly;
pub mod quad;
pub mod scalar;
pub mod selberg;

pub use curve::{Curve, CurveSpec};
pub use error::{Error, Result};
pub use lattice::{count, count_exact, dyadic_sum, CountOptions, CountQuery, CountResult, Mode};
pub use selberg::Sign;

/// Exact rationals used for curve endpoints and boundary decisions.
pub type Rational = num_rational::BigRational;

pub type SelbergPolynomial64 = selberg::SelbergPolynomial<f64>;
pub type SelbergPolynomial32 = selberg::SelbergPolynomial<f32>;
pub type VerifyReport64 = selberg::VerifyReport<f64>;
pub type PhasePoint64 = oscillatory::PhasePoint<f64>;
pub type QuadResult64 = quad::QuadResult<f64>;
