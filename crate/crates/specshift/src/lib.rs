//! Numerical toolkit for spectral shift functions of unitary and Hermitian
//! matrix pairs.
//!
//! The library computes, at finite matrix scale, the objects behind the
//! trace identities `trace(f(A) - f(B)) = \int f'(t) xi(t) dt` (Hermitian
//! pairs) and `trace(f(U) - f(V)) = \oint f'(z) xi(z) dz` (unitary pairs):
//! divided differences and their Loewner matrices, double operator
//! integrals, Schur-multiplier and operator-Lipschitz norm sandwiches, and
//! the shift function `xi` itself by three independent methods, with
//! verifiers that compare each identity against exact finite-dimensional
//! evaluation.
//!
//! Modules:
//! * [`linalg`] — self-contained dense complex eigensolvers, matrix
//!   functions, principal logarithm, one-parameter unitary groups.
//! * [`circlefn`] — functions on the unit circle (trig polynomials,
//!   truncated series, the sawtooth witness) and their derivatives.
//! * [`doi`] — double operator integrals, Haagerup factorizations, and
//!   certified norm bounds.
//! * [`ssf_unitary`] — the shift function for unitary pairs by counting,
//!   Fourier, and path quadrature, plus the trace-formula, derivative, and
//!   winding-profile checks.
//! * [`ssf_selfadjoint`] — the Hermitian analog.
//! * [`report`] — structured verification reports.

pub mod circlefn;
pub mod doi;
pub mod linalg;
pub mod quad;
pub mod random;
pub mod report;
pub mod ssf_selfadjoint;
pub mod ssf_unitary;

pub use linalg::{Complex64, ComplexMatrix};
