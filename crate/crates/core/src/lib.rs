//! Monte Carlo laboratory for branching Brownian motion (BBM): confinement in
//! expanding balls, mild Poissonian obstacles, closed-form reference laws and
//! a deterministic replication harness.

pub mod engine;
pub mod environment;
pub mod experiments;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod theory;

pub use error::{Error, Result};
pub use geometry::{AxisBox, Point, MAX_DIM};
pub use kernels::RngStream;
