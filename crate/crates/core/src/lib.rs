//! Noise models, spectral estimation and differential-readout calibration
//! for a milligram-scale optomechanical torsion pendulum.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod config;
pub mod constants;
pub mod csl;
pub mod io;
pub mod error;
pub mod mechanics;
pub mod optics;
pub mod readout;
pub mod simulate;
pub mod spectra;
pub mod spectral;

pub use error::{Error, Result};
