//! Experiment orchestration for the Min-oscillation toolkit: experiment specs,
//! ensemble pipelines, figure-data emitters, the acceptance suite and the
//! command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod error;
pub mod experiment;
pub mod report;
pub mod spec;
pub mod verify;

pub use error::{CliError, CliResult};
