pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod readout;
pub mod reservoir;
pub mod signals;

pub use error::{EsnError, Result};
pub use reservoir::{activate, autonomous_power_form, build_reservoir, Activation, NetworkState, Reservoir, ReservoirConfig, ReservoirDraw, Trajectory};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;
