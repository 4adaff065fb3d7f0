//! Dimension-free polynomial interpolation on product sampling sets in the
//! polydisc.
//!
//! The crate builds explicit interpolation coefficients `c_ξ(z)` over a product
//! grid `Y = Z_1 × … × Z_n` such that `f(z) = Σ_ξ c_ξ(z) f(ξ)` for every analytic
//! polynomial of total degree at most `d` and individual degree at most `K − 1`,
//! with `Σ_ξ |c_ξ(z)|` bounded independently of `n`. Around that engine sit the
//! measurement tools used to check uniform-norm and `L^p` discretization
//! constants, small block sampling sets, and lower-bound probes.
//!
//! Module map:
//!
//! * [`poly`]: sparse multivariate polynomials, evaluation, Fourier recovery.
//! * [`vander`]: Vandermonde moment solves and elimination weights.
//! * [`scheme`]: coefficient splits and the piecewise maps `r`, `w`.
//! * [`interp`]: interpolation plans, exact expectations and coefficient tables.
//! * [`smallset`]: block exponent sets, determinant search, small sampling sets.
//! * [`normlab`]: norm estimates and experiment reports.

pub mod cplx;
pub mod error;
pub mod interp;
pub mod linalg;
pub mod normlab;
pub mod par;
pub mod poly;
pub mod scheme;
pub mod smallset;
pub mod vander;

pub use error::{Error, Result};

/// Double precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Version string embedded in every experiment report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
