//! Synthetic two-cavity readout for exercising the analysis pipeline.
//!
//! Both channels carry the same common-mode motion (a vibration line plus
//! isolated ground motion), cavity B scaled by `alpha`. The bar angle,
//! shaped by the budgeted torque noise through the pendulum response, moves
//! the two ends in opposite directions, and each channel adds its own white
//! sensing noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::{assemble_budget, ground_motion_psd, optical_stiffness, IsolationModel, TorqueReferral};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::spectra::{apply_transfer, quadrature_sum_named, FrequencyGrid, SpectralDensity, TimeSeries, Unit};
use crate::spectral::synthesize_timeseries;

const SYNTHESIS_POINTS: usize = 2048;

#[derive(Debug, Clone)]
pub struct Simulation {
    pub x_a: TimeSeries,
    pub x_b: TimeSeries,
    pub alpha: f64,
    pub line_hz: f64,
    pub line_amplitude_m: f64,
    pub line_phase_rad: f64,
}

/// Shortest accepted duration: two calibration segments and one period of
/// the lowest budget frequency.
pub fn minimum_duration(config: &Config) -> f64 {
    (2.0 * config.estimation.segment_seconds).max(1.0 / config.estimation.f_min_hz)
}

pub fn simulate(config: &Config, duration: f64, seed: u64) -> Result<Simulation> {
    let min = minimum_duration(config);
    if !(duration >= min) {
        return Err(Error::InsufficientData(format!(
            "duration {duration} s is shorter than the {min} s needed for the lowest grid frequency and two segments"
        )));
    }
    let sim = &config.simulation;
    let fs = sim.sample_rate_hz;
    let n = (duration * fs).round() as usize;
    let grid = FrequencyGrid::logspace(fs / n as f64, fs / 2.0, SYNTHESIS_POINTS)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: [u64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let phase = rng.gen::<f64>() * 2.0 * PI;

    let s = &config.seismic;
    let iso = IsolationModel::preset(s.isolation, s.isolation_corner_hz, s.isolation_order).transfer(&grid)?;
    let length = apply_transfer(&iso, &ground_motion_psd(s.ground_asd_at_1hz, s.ground_slope, &grid)?)?
        .scale(s.transduction * s.transduction)?;
    let common = synthesize_timeseries(&length, duration, fs, seeds[0])?;

    let budget = assemble_budget(config, &grid)?;
    let torque = quadrature_sum_named(
        budget
            .components()
            .iter()
            .filter(|(name, _)| name != "seismic")
            .map(|(name, s)| (name.as_str(), s)),
    )?;
    let referral = TorqueReferral::new(&config.pendulum_params(), optical_stiffness(config)?, &grid)?;
    let theta = synthesize_timeseries(&referral.torque_to_angle(&torque)?, duration, fs, seeds[1])?;

    let white = SpectralDensity::flat(&grid, sim.sensing_noise_m.powi(2), Unit::Displacement)?;
    let noise_a = synthesize_timeseries(&white, duration, fs, seeds[2])?;
    let noise_b = synthesize_timeseries(&white, duration, fs, seeds[3])?;

    let half = config.pendulum.l_eff_m / 2.0;
    let w = 2.0 * PI * sim.line_hz;
    let mut xa = Vec::with_capacity(n);
    let mut xb = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let cm = sim.line_amplitude_m * (w * t + phase).sin() + common.samples()[i];
        let th = theta.samples()[i];
        xa.push(cm - half * th + noise_a.samples()[i]);
        xb.push(sim.alpha * cm + half * th + noise_b.samples()[i]);
    }
    Ok(Simulation {
        x_a: TimeSeries::new(fs, xa, Unit::Displacement)?,
        x_b: TimeSeries::new(fs, xb, Unit::Displacement)?,
        alpha: sim.alpha,
        line_hz: sim.line_hz,
        line_amplitude_m: sim.line_amplitude_m,
        line_phase_rad: phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reference_config;
    use crate::readout::{calibrate_alpha, CalibrationSettings, ReadoutPair};
    use crate::spectral::welch_psd;

    #[test]
    fn deterministic_per_seed() {
        let cfg = reference_config();
        let a = simulate(&cfg, 4.0, 7).unwrap();
        let b = simulate(&cfg, 4.0, 7).unwrap();
        let c = simulate(&cfg, 4.0, 8).unwrap();
        assert_eq!(a.x_a, b.x_a);
        assert_eq!(a.x_b, b.x_b);
        assert_ne!(a.x_a, c.x_a);
    }

    #[test]
    fn rejects_short_duration() {
        let cfg = reference_config();
        assert!(matches!(simulate(&cfg, 1.0, 1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn line_visible_at_injected_amplitude() {
        let cfg = reference_config();
        let sim = simulate(&cfg, 64.0, 3).unwrap();
        let psd = welch_psd(&sim.x_a, 1024, 0.5).unwrap();
        let df = psd.grid().first();
        let power: f64 = psd
            .grid()
            .hz()
            .iter()
            .zip(psd.values())
            .filter(|(f, _)| (**f - 73.0).abs() <= 2.0)
            .map(|(_, v)| v * df)
            .sum();
        let amp = (2.0 * power).sqrt();
        assert!((amp / 1e-12 - 1.0).abs() < 0.05, "{amp}");
    }

    #[test]
    fn calibration_recovers_alpha() {
        let cfg = reference_config();
        let sim = simulate(&cfg, 64.0, 11).unwrap();
        let pair = ReadoutPair::new(sim.x_a, sim.x_b, cfg.pendulum.l_eff_m).unwrap();
        let settings = CalibrationSettings::new(73.0, 2.0, pair.sample_rate());
        let cal = calibrate_alpha(&pair, &settings).unwrap();
        assert!((cal.alpha - 0.88).abs() < 0.01, "{}", cal.alpha);
        assert!(cal.suppression_vs_single <= 0.05, "{}", cal.suppression_vs_single);
        println!("alpha {} suppression {}", cal.alpha, cal.suppression_vs_single);
    }
}
