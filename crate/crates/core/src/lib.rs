//! Regularized residue-current pairings on `ℂ^n`.
//!
//! Polynomials in `z, z̄`, compactly supported test forms, regularizing
//! kernels and ε-schedules, adaptive cubature, the pairing routines and a
//! closed-form oracle for monomial Coleff–Herrera products.

pub mod error;
pub mod form;
pub mod kernels;
pub mod oracle;
pub mod pairings;
pub mod poly;
pub mod quadrature;

pub use error::{Error, Result};
pub use form::{permutation_sign, volume_constant, HoloMap, RadialBump, TestForm};
pub use kernels::{EpsilonSchedule, Kernel, ScheduleKind, TildeKernel};
pub use num_complex::Complex64;
pub use poly::{ComplexPolynomial, MultiIndex, Term};
pub use quadrature::{
    integrate_1d, integrate_adaptive, integrate_torus, FnIntegrand, Integrand, IntegrationDomain,
    PairingResult, QuadratureOptions,
};
