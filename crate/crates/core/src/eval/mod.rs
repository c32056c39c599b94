//! Oversmoothing measurement and linear evaluation of frozen representations.

mod mad;
mod probe;

pub use mad::{mad, mad_profile, MAD_ZERO_NORM};
pub use probe::{linear_probe, ProbeConfig, ProbeResult};
