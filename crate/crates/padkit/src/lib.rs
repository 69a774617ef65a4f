//! Exact arithmetic over `Q_p` at finite precision, locally constant measures
//! with singular germ tails, a Mellin-symbol calculus for multiplicative
//! Fourier convolutions, quadratic-form pushforwards with germ extraction,
//! Kuznetsov and X-side orbital integrals, and the root-theoretic derivation
//! of the rank-one spherical table.
//!
//! Everything is built over `Q_p` with `p` an odd prime. Complex values use
//! `f64` pairs; all sums are finite, with a default comparison tolerance of
//! `1e-9` (see [`DEFAULT_TOL`]).

pub mod err;
pub mod exec;
pub mod rng;

pub mod padic;

pub mod measure;

pub mod mellin;

pub mod quadform;

pub mod orbital;

pub mod roots;

pub mod transfer;

pub mod suites;

pub use err::Error;

/// Default numerical tolerance used by the verification suites.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Shared complex scalar type.
pub type C64 = num_complex::Complex64;

/// Exact rational type for exponents and s-parameters.
pub type Q = num_rational::Ratio<i64>;
