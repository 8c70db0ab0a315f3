pub mod cli;
pub mod container;
pub mod em;
pub mod error;
pub mod fft;
pub mod filters;
pub mod geometry;
pub mod kernel;
pub mod lp_ops;
pub mod oracle;
pub mod raster;
pub mod spline;

pub use error::{Error, Result};
