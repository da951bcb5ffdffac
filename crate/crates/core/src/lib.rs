//! Simultaneous inference for parameter vectors.
//!
//! [`mest`] solves stacked estimating equations and estimates the empirical
//! sandwich covariance; [`estimators`] provides the estimating functions for
//! multiple-effect and effect-modification analyses (randomized and
//! inverse-probability weighted); [`regions`] turns an estimate and its
//! covariance into Wald intervals, Bonferroni and sup-t bands and Wald
//! ellipsoids; [`coverage`] checks their simultaneous coverage by simulation.

pub mod coverage;
pub mod data;
pub mod estimators;
pub mod mest;
pub mod quantile;
pub mod regions;
pub mod spline;
pub mod synthetic;

pub use data::{ColumnMapping, DataError, Dataset};
pub use estimators::{CovariateTerm, EstimatorError, MsmLayout, MsmModel};
pub use mest::{EstimatingModel, FitResult, MestError, SolverOptions};
pub use regions::{BandKind, Ellipsoid, GridPrediction, IntervalSet, RegionError};
pub use spline::SplineSpec;
