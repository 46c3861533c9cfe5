//! Multivariate distorted distributions.
//!
//! A joint distribution function is written as `F(x) = D(G_1(x_1), …, G_n(x_n))`
//! where the `G_i` are univariate baselines and `D` is a distortion function:
//! a continuous distribution function on the unit cube. This crate builds such
//! `D` from copulas for residual lifetimes, ordered pairs, order statistics and
//! coherent-system pairs, and derives conditionals, regression curves,
//! quantile bands, samples and orthant-order comparisons from them.

pub mod checks;
pub mod constructions;
pub mod copulas;
pub mod distortion;
pub mod error;
pub mod exec;
pub mod inclusion_exclusion;
pub mod marginals;
pub mod oracle;
mod params;
pub mod quadrature;
pub mod regression;
pub mod rng;
pub mod roots;

pub use copulas::{Copula, SurvivalCopula};
pub use distortion::{Distortion, DualDistortion, MddModel, OrderReport, OrderVerdict, Provenance, ValidationReport};
pub use error::{MddError, Result};
pub use exec::Execution;
pub use marginals::UnivariateDist;
