//! Numerical building blocks shared by the estimators: log-space special
//! functions, compensated summation and Gauss-Legendre quadrature.

pub mod quadrature;
pub mod special;
pub mod summation;

pub use quadrature::{GaussLegendre, GradedIntegral};
pub use summation::NeumaierSum;
