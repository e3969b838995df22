//! Physical constants (CODATA 2018 exact or recommended values, SI units).

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Unified atomic mass unit, the CSL reference mass.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
