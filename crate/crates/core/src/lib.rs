//! Coverage-axis skeletonization: pick the fewest dilated inner balls that
//! cover every surface sample of a shape, then connect them through a
//! regular triangulation and measure the reconstruction error.

pub mod connect;
pub mod cover;
pub mod error;
pub mod geom;
pub mod inner;
pub mod io;
pub mod partition;
pub mod pipeline;
pub mod recon;
pub mod rng;
pub mod sample;
pub mod shapes;
pub mod solve;
pub mod tri;

pub use error::{Error, Result};
