//! Variational free-boundary solver for steady two-dimensional compressible
//! subsonic jets with vorticity issuing from a semi-infinite nozzle.

pub mod asymptotics;
pub mod config;
pub mod domain;
pub mod error;
pub mod flow;
pub mod freeboundary;
pub mod gas;
pub mod interp;
pub mod io;
pub mod minimizer;
pub mod pipeline;
pub mod quad;
pub mod strip;
pub mod truncation;
pub mod upstream;

pub use error::{Error, Result};
