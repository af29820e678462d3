//! Non-equilibrium asymptotic states of boundary-driven XY spin chains.
//!
//! Two independent routes are provided:
//!
//! * the covariance route ([`model`], [`lyap`], [`pipelines`]) works with
//!   the `2N x 2N` Majorana correlation matrix and solves continuous or
//!   discrete Lyapunov equations;
//! * the master-equation route ([`liouville`]) integrates the Lindblad
//!   equation on the full `2^N` Hilbert space and is the only route for
//!   long-range couplings and spin-local observables.
//!
//! [`bands`] evaluates the quasi-energy dispersion of the infinite kicked
//! chain and counts its stationary points.
//!
//! The covariance-route types are generic over the scalar type; the aliases
//! at the crate root fix it to `f64`.

pub mod bands;
pub mod error;
pub mod liouville;
pub mod lyap;
pub mod model;
pub mod pauli;
pub mod pipelines;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{DistanceConvention, REAL_STORAGE_TOL};
pub use pipelines::{FloquetOptions, KickOrder};
pub use scalar::Real;

pub type Complex = num_complex::Complex64;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type CMatrix = nalgebra::DMatrix<Complex>;

pub type BathRates = model::BathRates<f64>;
pub type ChainParams = model::ChainParams<f64>;
pub type KickParams = model::KickParams<f64>;
pub type QuadraticForm = model::QuadraticForm<f64>;
pub type BathVectors = model::BathVectors<f64>;
pub type StructureMatrices = model::StructureMatrices<f64>;
pub type CorrelationMatrix = model::CorrelationMatrix<f64>;
pub type PeriodPropagator = lyap::PeriodPropagator<f64>;
pub type KickMap = pipelines::KickMap<f64>;
pub type CovarianceSolution = pipelines::CovarianceSolution<f64>;
