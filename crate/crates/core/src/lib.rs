//! Estimation of the separation coefficient Λ(Y|X).
//!
//! Λ measures how strongly the conditional distributions of a scalar
//! response `Y` given a (possibly vector-valued) predictor `X` are separated
//! in the sense of the nonparametric relative effect. It is `0` when every
//! pair of conditional distributions is stochastically comparable and `1`
//! under complete separation.
//!
//! The crate provides
//!
//! * [`estimators::lambda_nn`], the nearest-neighbour estimator computed in
//!   `O(n log n)` through an exact k-d tree and a merge-sort concordance kernel,
//! * [`estimators::lambda_rank_based`], the midrank plug-in estimator for
//!   discrete predictors,
//! * [`oracles`], exact population values for a range of parametric models,
//! * [`inference::permutation_test`] and [`selection`] built on top of the
//!   estimator, and
//! * [`simgen`], seeded generators for the simulation scenarios.

pub mod concordance;
pub mod data;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod neighbors;
pub mod oracles;
pub mod rng;
pub mod selection;
pub mod simgen;

pub use data::{GroupedSample, ObservationSet, PreprocessMode, PreprocessSpec, ValidationReport};
pub use error::{Error, Result};
pub use estimators::{LambdaEstimate, NnVariant, RelativeEffectEstimate, Variant};
pub use neighbors::NeighborMap;
