//! Shared numerical machinery: quadrature rules, an adaptive Runge-Kutta
//! integrator for complex matrix ODEs, convergence-slope fitting and a few
//! dense linear-algebra helpers.

pub mod fit;
pub mod linalg;
pub mod quad;
pub mod rk;
