//! Boosted sparse nonlinear Mahalanobis metric learning for binary
//! classification.
//!
//! The weight matrix `W` of a Mahalanobis distance is built as a stage-wise
//! sum of sparse rank-one updates `w_m ξ_m ξ_mᵀ`, each obtained by a truncated
//! power iteration on the gradient matrix of an exponential surrogate loss.
//! Nonlinear structure is captured by expanding the feature space with
//! interaction monomials of previously selected features, and an early
//! stopping rule trades training loss against a trace-based complexity
//! measure. The result is positive semi-definite, low rank and element-wise
//! sparse by construction.
//!
//! ```
//! use sdist_core::boosting::{fit, BoostConfig};
//! use sdist_core::datagen::{gen_xor, ScenarioKind, ScenarioSpec};
//! use sdist_core::eval::{evaluate, Classifier};
//!
//! let spec = ScenarioSpec::new(ScenarioKind::Xor, 80, 6, 2, 7);
//! let (train, _) = gen_xor(&spec).unwrap();
//! let (test, _) = gen_xor(&spec.with_seed(8)).unwrap();
//!
//! let cfg = BoostConfig { max_steps: 30, ..BoostConfig::default() };
//! let (model, trace) = fit(&train, &cfg).unwrap();
//! assert_eq!(trace.records.len(), 30);
//!
//! let report = evaluate(&model, &train, &test, 3, Classifier::Knn).unwrap();
//! assert!(report.test_error <= 0.5);
//! ```
//!
//! The crate is `no_std` compatible (with `alloc`); disable the default
//! `std` feature for embedded targets. File formats and the command line
//! front end live in the companion `sdist` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod boosting;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod linalg;
mod math;
pub mod metric;
pub mod neighbors;

pub use error::Error;
pub use linalg::{SparseUnitVector, SymMatrix};
pub use metric::{Dataset, MetricModel};
