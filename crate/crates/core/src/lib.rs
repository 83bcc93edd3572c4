//! Two-habitat reaction-diffusion model with skew interface conditions.

pub mod banded;
pub mod cmath;
pub mod config;
pub mod dst;
pub mod error;
pub mod grid;
pub mod initial;
pub mod lemmas;
pub mod mode;
pub mod model;
pub mod oracle;
pub mod report;
pub mod resolvent;
pub mod sector;
pub mod simulator;
pub mod snapshot;
pub mod verify;

pub use error::{Error, Result};
