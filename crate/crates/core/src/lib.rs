#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod spectral;
pub mod steady_state;

pub use error::{Error, Result};
