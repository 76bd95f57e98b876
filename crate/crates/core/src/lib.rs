//! Index numbers for health and air pollution, with machine-checked verdicts
//! on whether statements made with them are meaningful.
//!
//! A statement about measurements is meaningful when its truth value does not
//! depend on the arbitrary parts of the measurement scales involved: the unit
//! of a ratio scale, the unit and zero point of an interval scale, or any
//! order-preserving relabelling of an ordinal scale.
//!
//! * [`scales`]: scale types, admissible transformations, derived scales
//! * [`statements`]: statement AST, rule table, randomized falsifier
//! * [`stats`]: means, Kendall τ, Spearman ρ, Pearson r, least squares
//! * [`health`]: BMI, Ponderal index, obesity bands
//! * [`airquality`]: Pindex, AQI, BQI, Shannon index, I(A), ASI, exceedance days
//! * [`cli`]: CSV/TOML ingestion and text/JSON reports behind the `scalecheck` binary

pub mod airquality;
pub mod cli;
pub mod health;
pub mod provenance;
pub mod scales;
pub mod statements;
pub mod stats;

pub use scales::{Bindings, DerivedScale, ScaleBinding, ScaleType, Transform};
pub use statements::{
    check, classify_symbolic, evaluate, falsify, CheckOptions, MeanKind, Quantity, Statement, Verdict,
};
