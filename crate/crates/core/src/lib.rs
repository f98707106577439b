//! Relevant-subset adaptive experimental designs.
//!
//! The crate covers the error laws and their information measures
//! ([`error_models`], [`information`]), maximum-likelihood fitting
//! ([`estimation`]), a-priori designs and optimality criteria ([`designs`]),
//! the randomized and deterministic relevant-subset allocation engines
//! ([`adaptive`]) and a reproducible Monte Carlo harness ([`montecarlo`]).
//!
//! ```
//! use rsdesign::error_models::ErrorModel;
//!
//! let cauchy = ErrorModel::cauchy(1.0).unwrap();
//! assert!((cauchy.elemental_info() - 0.5).abs() < 1e-12);
//! ```

pub mod adaptive;
pub mod basis;
pub mod cli;
pub mod designs;
pub mod error;
pub mod error_models;
pub mod estimation;
pub mod information;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;

pub use basis::Basis;
pub use designs::{Criterion, CriterionKind, Design, RandomDesign};
pub use error::{Error, Result};
pub use error_models::{ErrorModel, ModelSpec, MomentTable};
