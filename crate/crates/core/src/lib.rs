//! Bound-state spectrum of the generalized Kaluza-Klein monopole.
//!
//! The energy levels are obtained by four routes that do not share code paths
//! beyond the final scalar root solve:
//!
//! * separation in spherical coordinates ([`spectra::energy_spherical`]),
//! * separation in parabolic coordinates ([`spectra::energy_parabolic`]),
//! * finite-dimensional unitary representations of the quadratic symmetry
//!   algebra ([`qalgebra::solve_representation`]),
//! * the su(1,1) spectrum-generating algebra of the radial problem
//!   ([`ladder::ladder_spectrum`]).
//!
//! The [`oracle`] module provides finite-difference Sturm-Liouville solvers that
//! never look at the closed forms, and [`repmatrix`] builds explicit matrix
//! realizations of the algebra so that every commutation relation can be
//! checked as a matrix identity.
//!
//! A handful of signs and factors are not pinned down by the closed forms
//! alone. They live in a [`Calibration`] which is fixed against the oracle and
//! shipped as a text file.

// `!(x < tol)` is deliberate throughout: NaN has to fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod ladder;
pub mod model;
pub mod numdiff;
pub mod oracle;
pub mod poly;
pub mod qalgebra;
pub mod repmatrix;
pub mod specfun;
pub mod spectra;
pub mod suite;
pub mod sweep;
pub mod tridiag;

pub use calibration::{Calibration, Convention, Mode};
pub use error::{Error, Result};
pub use model::{DeltaPair, Half, ModelParams, ParabolicQN, Sector, SphericalQN};
pub use spectra::{EnergySolution, Route};
