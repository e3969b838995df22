//! JSON configuration.
//!
//! One document with sections `pendulum`, `cavities` (exactly two: A then B),
//! `seismic`, `laser`, `holder_modes`, `bending_modes`, `csl`, `estimation`
//! and `simulation`. Unknown keys are rejected. Every section accepts a
//! free-text `comment` for recording where a number came from.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{BendingMode, DampingModel, PendulumParams};
use crate::optics::CavityParams;
use crate::spectra::FrequencyGrid;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub pendulum: PendulumConfig,
    pub cavities: Vec<CavityConfig>,
    pub seismic: SeismicConfig,
    pub laser: LaserConfig,
    #[serde(default)]
    pub holder_modes: Vec<ModeConfig>,
    #[serde(default)]
    pub bending_modes: Vec<ModeConfig>,
    pub csl: CslConfig,
    pub estimation: EstimationConfig,
    pub simulation: SimulationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumConfig {
    pub mass_kg: f64,
    pub length_m: f64,
    pub width_m: f64,
    pub thickness_m: f64,
    pub density_kg_m3: f64,
    pub resonance_hz: f64,
    pub quality: f64,
    pub l_eff_m: f64,
    pub temperature_k: f64,
    pub damping: DampingModel,
    /// Measured trapped torsional resonance. When absent the adiabatic
    /// optical-spring model of both cavities is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_spring_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub name: String,
    pub finesse: f64,
    pub round_trip_length_m: f64,
    pub input_power_w: f64,
    pub wavelength_m: f64,
    pub detuning: f64,
    pub mode_coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsolationPreset {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeismicConfig {
    /// Ground displacement ASD at 1 Hz, m/√Hz.
    pub ground_asd_at_1hz: f64,
    /// ASD falls as `f^-ground_slope`.
    pub ground_slope: f64,
    pub isolation: IsolationPreset,
    pub isolation_corner_hz: f64,
    pub isolation_order: i32,
    /// Ground-to-cavity-length coupling after isolation.
    pub transduction: f64,
    /// Residual fraction of the common-mode length noise in the angle.
    pub cmrr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    /// Residual laser frequency noise, Hz/√Hz (flat).
    pub frequency_noise_hz: f64,
    /// Residual intensity noise as a multiple of the shot-noise RIN of the
    /// per-cavity input power.
    pub rin_shot_noise_multiple: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub frequency_hz: f64,
    pub quality: f64,
    pub effective_mass_kg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl ModeConfig {
    pub fn to_mode(&self) -> BendingMode {
        BendingMode {
            omega: 2.0 * PI * self.frequency_hz,
            quality: self.quality,
            effective_mass: self.effective_mass_kg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CslConfig {
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub points: usize,
    /// Torque sensitivity override, Nm/√Hz. When absent the band median of
    /// the measured (or budgeted) spectrum is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
    pub band_hz: [f64; 2],
    #[serde(default)]
    pub overlays: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
    /// Welch segment duration, s.
    pub segment_seconds: f64,
    pub overlap: f64,
    /// Measured/total power ratio above which a bin counts as excess.
    pub excess_threshold: f64,
    pub excess_band_hz: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub sample_rate_hz: f64,
    /// Common-mode vibration line.
    pub line_hz: f64,
    /// Line amplitude in cavity A, m.
    pub line_amplitude_m: f64,
    /// Cavity B's transduction of common-mode motion relative to cavity A.
    pub alpha: f64,
    /// White sensing noise per channel, m/√Hz.
    pub sensing_noise_m: f64,
    /// Calibration band half-width around the line, Hz.
    pub band_halfwidth_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

fn bad(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(path, format!("must be positive and finite (got {v})")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(path, format!("must be non-negative and finite (got {v})")))
    }
}

impl Config {
    /// Parses and validates a JSON document. Errors carry the JSON path of
    /// the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            bad(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let p = &self.pendulum;
        for (name, v) in [
            ("mass_kg", p.mass_kg),
            ("length_m", p.length_m),
            ("width_m", p.width_m),
            ("thickness_m", p.thickness_m),
            ("density_kg_m3", p.density_kg_m3),
            ("resonance_hz", p.resonance_hz),
            ("l_eff_m", p.l_eff_m),
        ] {
            positive(&format!("pendulum.{name}"), v)?;
        }
        non_negative("pendulum.temperature_k", p.temperature_k)?;
        if !(p.quality > 0.5) {
            return Err(bad("pendulum.quality", "must exceed 1/2"));
        }
        if let Some(f) = p.optical_spring_hz {
            if !(f >= p.resonance_hz) {
                return Err(bad("pendulum.optical_spring_hz", "must be at least the bare resonance"));
            }
        }
        if self.cavities.len() != 2 {
            return Err(bad(
                "cavities",
                format!("expected exactly 2 cavities (A, B), got {}", self.cavities.len()),
            ));
        }
        for (i, c) in self.cavities.iter().enumerate() {
            c.to_params()
                .validate()
                .map_err(|e| bad(&format!("cavities[{i}]"), e.to_string()))?;
        }
        let s = &self.seismic;
        positive("seismic.ground_asd_at_1hz", s.ground_asd_at_1hz)?;
        non_negative("seismic.ground_slope", s.ground_slope)?;
        positive("seismic.isolation_corner_hz", s.isolation_corner_hz)?;
        if s.isolation_order < 0 {
            return Err(bad("seismic.isolation_order", "must be non-negative"));
        }
        non_negative("seismic.transduction", s.transduction)?;
        non_negative("seismic.cmrr", s.cmrr)?;
        non_negative("laser.frequency_noise_hz", self.laser.frequency_noise_hz)?;
        non_negative("laser.rin_shot_noise_multiple", self.laser.rin_shot_noise_multiple)?;
        for (section, modes) in [("holder_modes", &self.holder_modes), ("bending_modes", &self.bending_modes)] {
            for (i, m) in modes.iter().enumerate() {
                positive(&format!("{section}[{i}].frequency_hz"), m.frequency_hz)?;
                positive(&format!("{section}[{i}].effective_mass_kg"), m.effective_mass_kg)?;
                if !(m.quality > 0.5) {
                    return Err(bad(&format!("{section}[{i}].quality"), "must exceed 1/2"));
                }
            }
        }
        let c = &self.csl;
        positive("csl.r_min_m", c.r_min_m)?;
        if !(c.r_max_m >= c.r_min_m) {
            return Err(bad("csl.r_max_m", "must be at least r_min_m"));
        }
        if c.points == 0 {
            return Err(bad("csl.points", "must be at least 1"));
        }
        if let Some(s) = c.sensitivity {
            positive("csl.sensitivity", s)?;
        }
        if !(c.band_hz[0] > 0.0 && c.band_hz[1] > c.band_hz[0]) {
            return Err(bad("csl.band_hz", "must be an increasing positive pair"));
        }
        let e = &self.estimation;
        positive("estimation.f_min_hz", e.f_min_hz)?;
        if !(e.f_max_hz > e.f_min_hz) {
            return Err(bad("estimation.f_max_hz", "must exceed f_min_hz"));
        }
        if e.points < 2 {
            return Err(bad("estimation.points", "must be at least 2"));
        }
        positive("estimation.segment_seconds", e.segment_seconds)?;
        if !(0.0..1.0).contains(&e.overlap) {
            return Err(bad("estimation.overlap", "must lie in [0, 1)"));
        }
        positive("estimation.excess_threshold", e.excess_threshold)?;
        if !(e.excess_band_hz[0] > 0.0 && e.excess_band_hz[1] > e.excess_band_hz[0]) {
            return Err(bad("estimation.excess_band_hz", "must be an increasing positive pair"));
        }
        let m = &self.simulation;
        positive("simulation.sample_rate_hz", m.sample_rate_hz)?;
        positive("simulation.line_hz", m.line_hz)?;
        if m.line_hz + m.band_halfwidth_hz >= m.sample_rate_hz / 2.0 {
            return Err(bad("simulation.line_hz", "line band must lie below Nyquist"));
        }
        non_negative("simulation.line_amplitude_m", m.line_amplitude_m)?;
        if !m.alpha.is_finite() {
            return Err(bad("simulation.alpha", "must be finite"));
        }
        non_negative("simulation.sensing_noise_m", m.sensing_noise_m)?;
        positive("simulation.band_halfwidth_hz", m.band_halfwidth_hz)?;
        Ok(())
    }

    pub fn pendulum_params(&self) -> PendulumParams {
        let p = &self.pendulum;
        PendulumParams {
            mass: p.mass_kg,
            length: p.length_m,
            width: p.width_m,
            thickness: p.thickness_m,
            density: p.density_kg_m3,
            omega_m: 2.0 * PI * p.resonance_hz,
            quality: p.quality,
            l_eff: p.l_eff_m,
            temperature: p.temperature_k,
            damping: p.damping,
        }
    }

    pub fn cavity_params(&self) -> [CavityParams; 2] {
        [self.cavities[0].to_params(), self.cavities[1].to_params()]
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        let e = &self.estimation;
        FrequencyGrid::logspace(e.f_min_hz, e.f_max_hz, e.points)
    }
}

impl CavityConfig {
    pub fn to_params(&self) -> CavityParams {
        CavityParams {
            finesse: self.finesse,
            round_trip_length: self.round_trip_length_m,
            input_power: self.input_power_w,
            wavelength: self.wavelength_m,
            detuning: self.detuning,
            mode_coupling: self.mode_coupling,
        }
    }
}

/// The configuration shipped as `configs/reference.json`.
pub const REFERENCE_CONFIG_JSON: &str = include_str!("../../../configs/reference.json");

pub fn reference_config() -> Config {
    Config::from_json(REFERENCE_CONFIG_JSON).expect("shipped configuration is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_parses() {
        let c = reference_config();
        assert_eq!(c.cavities.len(), 2);
        let p = c.pendulum_params();
        assert!(p.warnings().is_empty());
        assert!((p.moment_of_inertia() - 1.89e-10).abs() / 1.89e-10 < 0.01);
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let mut v: serde_json::Value = serde_json::from_str(REFERENCE_CONFIG_JSON).unwrap();
        v["pendulum"]["massx_kg"] = serde_json::json!(1.0);
        let err = Config::from_json(&v.to_string()).unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert!(path.starts_with("pendulum"), "{path}");
                assert!(message.contains("massx_kg"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn type_error_reports_path() {
        let mut v: serde_json::Value = serde_json::from_str(REFERENCE_CONFIG_JSON).unwrap();
        v["cavities"][1]["finesse"] = serde_json::json!("high");
        match Config::from_json(&v.to_string()).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "cavities[1].finesse"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn semantic_errors_report_path() {
        let mut v: serde_json::Value = serde_json::from_str(REFERENCE_CONFIG_JSON).unwrap();
        v["pendulum"]["quality"] = serde_json::json!(0.1);
        match Config::from_json(&v.to_string()).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "pendulum.quality"),
            e => panic!("{e}"),
        }
        let mut v: serde_json::Value = serde_json::from_str(REFERENCE_CONFIG_JSON).unwrap();
        v["schema_version"] = serde_json::json!(99);
        assert!(Config::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(REFERENCE_CONFIG_JSON).unwrap();
        v["cavities"].as_array_mut().unwrap().pop();
        match Config::from_json(&v.to_string()).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "cavities"),
            e => panic!("{e}"),
        }
    }
}
