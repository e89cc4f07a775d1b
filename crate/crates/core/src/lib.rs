//! Gaussian process simulation, fractional calculus, pathwise integration, pricing kernels,
//! expected-utility optimization and replication strategies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod frac_calc;
pub mod gauss_sim;
pub mod malliavin;
pub mod pricing;
pub mod strategy;
pub mod utility;
pub mod path;
pub(crate) mod quad;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use path::{GridFunction, SamplePath};
