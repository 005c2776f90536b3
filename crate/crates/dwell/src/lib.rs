//! Bound states of the one-dimensional Schrödinger equation through
//! Wronskian/Green's-function machinery, with the strong-coupling double-well
//! ground state worked end to end.
//!
//! The crate provides four layers:
//!
//! * generic second-order ODE tools (Abel's identity, the second independent
//!   solution, variation of parameters, the solvability functional) in
//!   [`ode_green`], backed by double-exponential quadrature in [`quadrature`];
//! * an iterative integral-equation engine for perturbed bound states in
//!   [`iterate`], supporting two rules for fixing the free constant of each
//!   iterate;
//! * exact-rational series machinery in [`series`] (Puiseux arithmetic,
//!   series reversion, reduction of nested exponential triple integrals) that
//!   produces the `1/g` expansions of the double-well ground-state energy in
//!   [`double_well`], including a variational route;
//! * an independent finite-difference/shooting eigenvalue oracle in
//!   [`oracle`] used to cross-check everything at finite coupling.
//!
//! The `dwell` binary exposes the table-generating commands; see the README.

pub mod cli;
pub mod double_well;
mod error;
pub mod field;
pub mod iterate;
pub mod ode_green;
pub mod oracle;
pub mod quadrature;
pub mod series;

pub use error::{Error, Result};
pub use field::{GridFunction, ScalarField1D};
