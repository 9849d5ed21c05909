//! Simulation and analysis toolkit for auto-regressive (AR) market models of
//! wealth distribution and the kinetic exchange models they subsume.
//!
//! The AR market update for a single agent is
//!
//! ```text
//! x(t) = (1 - mu) * x(t-1) + xi(t)
//! ```
//!
//! where `mu` is the agent's investment capacity (savings `lambda = 1 - mu`)
//! and `xi(t)` is a stochastic market return. The crate provides:
//!
//! - [`noise`]: market-return distributions, optionally with a time-varying
//!   mean schedule (growing markets);
//! - [`ar`]: quenched, annealed and growing-market simulators for the AR
//!   update;
//! - [`kinetic`]: pairwise wealth-conserving exchange models (CCM, CC,
//!   generic two-noise, Yakovenko) and their effective-noise records;
//! - [`analytics`]: exact and semi-analytic steady states — the Gaussian
//!   fixed point, the exponential-noise series with product coefficients,
//!   a convolution-recursion oracle, Gamma references and the Pareto
//!   density of average wealth;
//! - [`estimation`]: empirical distributions, Kolmogorov-Smirnov distances,
//!   batch-means moments and Hill tail-exponent fits;
//! - [`experiment`]: the declarative experiment runner behind the
//!   `armarket` CLI (JSON config in, CSV/JSON artifacts out).

// `!(x > 0.0)` style domain checks intentionally treat NaN as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod ar;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod kinetic;
pub mod noise;
pub mod rng;

pub use error::{Error, Result};
