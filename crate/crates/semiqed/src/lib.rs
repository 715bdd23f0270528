//! Numerical workbench for the dynamics of fixed 1/2-spin particles coupled
//! to a quantized radiation field, truncated to finitely many photon modes.
//!
//! The library is organized around three pillars:
//!
//! * a *classical* phase-space layer ([`phasespace`], [`fields`]) carrying the
//!   free photon flow, linear field symbols, Poisson brackets and the heat
//!   operator linking Weyl and Wick symbols;
//! * a *semiclassical* layer ([`hierarchy`]) solving the transport system for
//!   the symbol coefficients `g_0, g_1, g_2` of the reduced propagator,
//!   together with their phase-space derivative jets;
//! * an *exact* desk-scale oracle ([`fock`], [`spinframe`]) on a dense
//!   truncated Fock ⊗ spin space: Hamiltonians, propagators, coherent states,
//!   Wick symbols, commutator norms and rotating-frame reductions.
//!
//! [`modes`] builds the underlying photon-mode models (Laguerre radial basis ×
//! tangent vector fields on the sphere, coupling coefficients by quadrature),
//! and [`driver`] wires everything into reproducible command-line experiments.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod driver;
pub mod error;
pub mod fields;
pub mod fock;
pub mod hierarchy;
pub mod modes;
pub mod numerics;
pub mod phasespace;
pub mod spin;
pub mod spinframe;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = ndarray::Array2<C64>;

/// Dense complex vector.
pub type CVec = ndarray::Array1<C64>;
