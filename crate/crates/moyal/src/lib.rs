//! Numerical laboratory for the noncommutative plane at finite matrix truncation.
//!
//! Elements of the quantized plane are modelled as `N x N` complex matrices in
//! the harmonic-oscillator basis of the irreducible Weyl representation, and in
//! parallel as sampled frequency symbols on a uniform grid. The crate provides
//! the trace and Schatten norms, Weyl displacement unitaries, the twisted
//! convolution algebra of symbols, Littlewood-Paley blocks with Besov/Sobolev
//! norms, elementary two-sided pseudodifferential operators with the Bony
//! product decomposition, double operator integrals with a quadrature-realized
//! divided-difference kernel, and exponential integrators for reaction-diffusion,
//! Schroedinger and incompressible-flow model equations.

pub mod doi;
pub mod error;
pub mod evolve;
pub mod io;
pub mod lp;
pub mod mask;
pub mod mikhlin;
pub mod ncpoly;
pub mod operator;
pub mod paraprod;
pub mod random;
pub mod suites;
pub mod symbol;
pub mod theta;
pub mod weyl;

pub use error::MoyalError;
pub use operator::NcOperator;
pub use symbol::{GridSpec, Symbol};
pub use theta::ThetaData;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, MoyalError>;
