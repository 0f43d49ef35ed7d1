//! Variational symplectic integrators for the one-dimensional harmonic oscillator.
//!
//! Two schemes are derived from a discrete stationary-action principle:
//!
//! * the classical midpoint scheme (affine interpolation, midpoint quadrature),
//!   which coincides with an unconditionally stable Newmark method and conserves
//!   the physical energy exactly;
//! * the symplectic Simpson scheme (quadratic interpolation, Simpson quadrature,
//!   internal node eliminated in closed form), which is fourth order accurate,
//!   stable for `0 < ωh < 2√2` and conserves a modified discrete energy.
//!
//! [`oscillator`] holds the closed-form objects (propagation matrices, energies,
//! stability analysis), [`variational`] the discrete Lagrangian machinery they are
//! derived from, [`analysis`] the convergence and conservation experiments, and
//! [`cli`] the command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod oscillator;
pub mod variational;

pub use error::{Error, Result};
pub use oscillator::{OscillatorConfig, PhaseState, Propagator};
