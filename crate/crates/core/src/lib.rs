//! Simulator and learning harness for UAV-assisted IoT data collection over
//! a procedurally generated urban map.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod citymap;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod planners;
pub mod seeds;
pub mod td3;

pub use error::{Error, Result};
