//! Torsion-pendulum dynamics and thermal noise.
//!
//! The pendulum is a rectangular bar of length `L`, width `w` and thickness
//! `d` rotating about the suspension fibre, which runs through the bar's
//! centre perpendicular to its length. Dissipation is either viscous
//! (`γ = ω_m/Q_m`) or structural (`γ(ω) = (ω_m/Q_m)(ω_m/ω)`, a constant loss
//! angle `1/Q_m` on the fibre stiffness).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::spectra::{FrequencyGrid, SpectralDensity, TransferFunction, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingModel {
    Viscous,
    Structural,
}

/// Bar geometry, resonance and bath of the torsion oscillator. SI units,
/// angular frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub density: f64,
    pub omega_m: f64,
    pub quality: f64,
    pub l_eff: f64,
    pub temperature: f64,
    pub damping: DampingModel,
}

impl PendulumParams {
    /// Validates the hard invariants. Temperature may be zero.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("density", self.density),
            ("omega_m", self.omega_m),
            ("l_eff", self.l_eff),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("pendulum {name} = {v} must be positive")));
            }
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid(format!(
                "pendulum temperature {} must be non-negative",
                self.temperature
            )));
        }
        if !(self.quality > 0.5) || !self.quality.is_finite() {
            return Err(Error::invalid(format!(
                "pendulum quality {} must exceed 1/2 (underdamped)",
                self.quality
            )));
        }
        Ok(())
    }

    /// Soft consistency checks that do not prevent evaluation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let geometric = self.density * self.length * self.width * self.thickness;
        if (self.mass - geometric).abs() > 0.2 * geometric {
            out.push(format!(
                "mass {:.3e} kg differs from density·volume {:.3e} kg by more than 20%",
                self.mass, geometric
            ));
        }
        out
    }

    pub fn moment_of_inertia(&self) -> f64 {
        moment_of_inertia(self)
    }

    /// Torsional stiffness of the fibre, `I·ω_m²`.
    pub fn fibre_stiffness(&self) -> f64 {
        self.moment_of_inertia() * self.omega_m * self.omega_m
    }
}

/// Flexural (or holder structural) mode seen as a displacement at the beam
/// spot: resonance in rad/s, quality factor, effective mass in kg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendingMode {
    pub omega: f64,
    pub quality: f64,
    pub effective_mass: f64,
}

impl BendingMode {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("quality", self.quality),
            ("effective_mass", self.effective_mass),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("mode {name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// `I = m(L² + w²)/12` about the axis through the centre, perpendicular to
/// the length and width.
pub fn moment_of_inertia(p: &PendulumParams) -> f64 {
    p.mass * (p.length * p.length + p.width * p.width) / 12.0
}

/// Velocity damping rate `γ(ω)` in rad/s.
pub fn damping_rate(p: &PendulumParams, omega: f64) -> f64 {
    let viscous = p.omega_m / p.quality;
    match p.damping {
        DampingModel::Viscous => viscous,
        DampingModel::Structural => viscous * p.omega_m / omega,
    }
}

/// Fluctuation-dissipation torque PSD `4·k_B·T·I·γ(ω)` in Nm²/Hz.
pub fn thermal_torque_psd(p: &PendulumParams, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    p.validate()?;
    let coeff = 4.0 * BOLTZMANN * p.temperature * p.moment_of_inertia();
    SpectralDensity::from_angular_fn(grid, Unit::Torque, |w| coeff * damping_rate(p, w))
}

/// Angular response to torque, rad/Nm.
///
/// `κ_opt` is a lossless optical torsional stiffness added to the fibre.
/// Viscous damping enters as `iωγ`; structural damping as a loss angle
/// `1/Q_m` on the fibre stiffness only, so
/// `χ⁻¹ = I·ω_m²(1 + i/Q_m) + κ_opt − I·ω²`.
pub fn susceptibility(p: &PendulumParams, optical_stiffness: f64, grid: &FrequencyGrid) -> Result<TransferFunction> {
    p.validate()?;
    if !(optical_stiffness >= 0.0) || !optical_stiffness.is_finite() {
        return Err(Error::invalid(format!(
            "optical stiffness {optical_stiffness} must be non-negative"
        )));
    }
    let i = p.moment_of_inertia();
    let k_fibre = p.fibre_stiffness();
    TransferFunction::from_angular_fn(grid, Unit::Torque, Unit::Angle, |w| {
        let inv = match p.damping {
            DampingModel::Viscous => Complex64::new(
                k_fibre + optical_stiffness - i * w * w,
                i * w * p.omega_m / p.quality,
            ),
            DampingModel::Structural => Complex64::new(
                k_fibre + optical_stiffness - i * w * w,
                k_fibre / p.quality,
            ),
        };
        inv.inv()
    })
}

/// Effective torsional resonance `√(ω_m² + κ_opt/I)`.
pub fn effective_frequency(p: &PendulumParams, optical_stiffness: f64) -> f64 {
    (p.omega_m * p.omega_m + optical_stiffness / p.moment_of_inertia()).sqrt()
}

/// Optical stiffness that places the effective resonance at `omega_eff`.
pub fn stiffness_for_frequency(p: &PendulumParams, omega_eff: f64) -> Result<f64> {
    if omega_eff < p.omega_m {
        return Err(Error::invalid(format!(
            "effective frequency {omega_eff} rad/s is below the bare resonance {} rad/s",
            p.omega_m
        )));
    }
    Ok(p.moment_of_inertia() * (omega_eff * omega_eff - p.omega_m * p.omega_m))
}

/// Thermal displacement PSD (m²/Hz) of one structurally damped mode:
/// `S_x = 4k_BT·k·φ / (ω[(k − mω²)² + k²φ²])` with `k = mω₀²`, `φ = 1/Q`.
pub fn structural_mode_displacement(mode: &BendingMode, temperature: f64, omega: f64) -> f64 {
    let k = mode.effective_mass * mode.omega * mode.omega;
    let phi = 1.0 / mode.quality;
    let re = k - mode.effective_mass * omega * omega;
    4.0 * BOLTZMANN * temperature * k * phi / (omega * (re * re + k * k * phi * phi))
}

/// Thermal displacement PSD (m²/Hz) of one viscously damped mode:
/// `S_x = 4k_BT·γ / (m[(ω₀² − ω²)² + γ²ω²])` with `γ = ω₀/Q`.
pub fn viscous_mode_displacement(mode: &BendingMode, temperature: f64, omega: f64) -> f64 {
    let gamma = mode.omega / mode.quality;
    let re = mode.omega * mode.omega - omega * omega;
    4.0 * BOLTZMANN * temperature * gamma
        / (mode.effective_mass * (re * re + gamma * gamma * omega * omega))
}

/// Incoherent sum of structurally damped bending-mode displacement noise at
/// the beam spot, m²/Hz.
pub fn bending_mode_thermal(modes: &[BendingMode], temperature: f64, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    if modes.is_empty() {
        return Err(Error::invalid("bending-mode list is empty"));
    }
    for m in modes {
        m.validate()?;
    }
    SpectralDensity::from_angular_fn(grid, Unit::Displacement, |w| {
        modes
            .iter()
            .map(|m| structural_mode_displacement(m, temperature, w))
            .sum()
    })
}
