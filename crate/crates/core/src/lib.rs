//! Confidence intervals for combinations of dependent parameter estimates.
//!
//! Each input parameter is described by a reported confidence interval, from
//! which a continuous marginal distribution is fitted ([`fit`]). Dependence
//! between parameters is modeled by a Gaussian copula with a user-supplied
//! correlation matrix ([`copula`]). The bootstrap engine ([`engine`]) draws
//! joint parameter sets, pushes them through a combination function and
//! summarizes the combined values with a percentile or highest-density
//! interval.

pub mod copula;
pub mod dist;
pub mod engine;
pub mod epi;
pub mod error;
pub mod expr;
pub mod fit;
pub mod simplex;
pub mod special;
pub mod validation;

pub use error::{CorrelationError, Error, Result};
