pub mod analysis;
pub mod artvisc;
pub mod checks;
pub mod config;
pub mod error;
pub mod limiters;
pub mod mesh;
pub mod metrics;
pub mod output;
pub mod positivity;
pub mod problems;
pub mod sbp;
pub mod scheme;
pub mod thermo;
pub mod two_point;
pub mod viscous;

pub use error::{Error, Result};
