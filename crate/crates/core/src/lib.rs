//! PLS path modeling for composite indices.
//!
//! The pipeline: load a panel ([`dataset`]), describe the latent model
//! ([`model`]), estimate it ([`estimator`]), validate it ([`assessment`]),
//! decompose effects ([`effects`]), bootstrap them ([`bootstrap`]), turn a
//! block into a 0–100 ranking ([`index`]) and benchmark it in growth
//! regressions ([`econometrics`]). [`report`] lays results out as tables and
//! [`testkit`] generates data with known truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assessment;
pub mod bootstrap;
pub mod dataset;
pub mod econometrics;
pub mod effects;
pub mod error;
pub mod estimator;
pub mod index;
pub mod linalg;
pub mod model;
pub mod report;
pub mod stats;
pub mod testkit;

pub use error::{Error, Result};
