#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod exec;
pub mod figures;
pub mod lifetime;
pub mod montecarlo;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod scenarios;
pub mod system;
pub mod validation;

pub use error::{Error, Result};
