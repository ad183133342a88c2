//! Random compositions of paired tent maps: transfer operators on step
//! functions, Hilbert-metric cone contraction, Lyapunov spectrum estimates and
//! exact Markov-partition spectra.

pub mod bound_calculator;
pub mod cone_metric;
pub mod error;
pub mod interval_maps;
pub mod markov_analysis;
pub mod poly;
pub mod rds_cocycle;
pub mod sampling;
pub mod scalar;
pub mod step_functions;

pub use error::{Error, Result};
