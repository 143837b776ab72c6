//! Ground-state classification for systems of coupled semilinear
//! Schrödinger equations
//! `Δu_i − ω_i u_i + Σ_j k_ij |u_j|^{p+1} |u_i|^{p−1} u_i = 0`.
//!
//! The [`reduction`] module decides existence and structure of ground-states
//! through a finite-dimensional maximization; [`scalar`] and [`variational`]
//! are independent numerical oracles for the closed-form results.

pub mod action;
pub mod algebraic;
pub mod error;
pub mod mandel;
pub mod model;
pub mod numeric;
mod ode;
pub mod reduction;
pub mod scalar;
pub mod variational;

pub use error::{Error, Result};
pub use model::{ActionTriple, AmplitudeVector, DiscreteField, Grid, ProblemSpec, Support};
pub use reduction::{classify, maximize_f, GroundStateReport, MaximizerSet, MultistartOptions, Verdict};
