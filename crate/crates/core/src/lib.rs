pub mod basis;
pub mod diffengine;
pub mod error;
pub mod network;
pub mod optim;
pub mod physics;
pub mod trainer;

pub use error::{Error, Result};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
