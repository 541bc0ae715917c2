//! Numerical building blocks shared by the solvers.

pub mod bessel;
pub mod dopri;
pub mod fit;
pub mod interp;
pub mod quadrature;
pub mod tridiag;
