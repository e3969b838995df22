//! Torque-referred noise budget.
//!
//! Every component is a torque PSD (Nm²/Hz) on one shared grid. Displacement
//! noise at the cavity mirrors becomes angle through `L_eff` and torque
//! through the inverse pendulum susceptibility.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::config::{Config, IsolationPreset};
use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::mechanics::{
    bending_mode_thermal, effective_frequency, stiffness_for_frequency, susceptibility,
    thermal_torque_psd, viscous_mode_displacement, BendingMode, PendulumParams,
};
use crate::optics::{
    circulating_power, optical_spring_stiffness, qrpn_torque_psd, shot_noise_torque_floor,
    CavityParams,
};
use crate::spectra::{
    apply_transfer, quadrature_sum_named, FrequencyGrid, SpectralDensity, TransferFunction, Unit,
};

pub const DEFAULT_EXCESS_THRESHOLD: f64 = 2.0;

/// Maps mirror displacement and pendulum angle to equivalent torque.
#[derive(Debug, Clone)]
pub struct TorqueReferral {
    l_eff: f64,
    chi: TransferFunction,
}

impl TorqueReferral {
    pub fn new(p: &PendulumParams, optical_stiffness: f64, grid: &FrequencyGrid) -> Result<Self> {
        Ok(Self {
            l_eff: p.l_eff,
            chi: susceptibility(p, optical_stiffness, grid)?,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.chi.grid()
    }

    pub fn susceptibility(&self) -> &TransferFunction {
        &self.chi
    }

    /// `S_τ = S_θ / |χ|²`.
    pub fn angle_to_torque(&self, s: &SpectralDensity) -> Result<SpectralDensity> {
        if s.unit() != Unit::Angle {
            return Err(Error::UnitMismatch(format!("expected angle PSD, got {}", s.unit().psd_label())));
        }
        apply_transfer(&self.chi.inverse()?, s)
    }

    /// `S_θ = |χ|²·S_τ`.
    pub fn torque_to_angle(&self, s: &SpectralDensity) -> Result<SpectralDensity> {
        apply_transfer(&self.chi, s)
    }

    /// `S_τ = S_x / (L_eff²·|χ|²)`.
    pub fn displacement_to_torque(&self, s: &SpectralDensity) -> Result<SpectralDensity> {
        if s.unit() != Unit::Displacement {
            return Err(Error::UnitMismatch(format!(
                "expected displacement PSD, got {}",
                s.unit().psd_label()
            )));
        }
        let angle = s.scale(1.0 / (self.l_eff * self.l_eff))?.with_unit(Unit::Angle);
        self.angle_to_torque(&angle)
    }
}

/// Vibration isolation magnitude: flat below `corner_hz`, falling as
/// `f^-order` above it, normalised to `gain_at_100hz` at 100 Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationModel {
    pub corner_hz: f64,
    pub order: i32,
    pub gain_at_100hz: f64,
}

impl IsolationModel {
    /// 70 dB at 100 Hz above a 20 Hz platform resonance.
    pub fn vertical() -> Self {
        Self::preset(IsolationPreset::Vertical, 20.0, 4)
    }

    /// 100 dB at 100 Hz above a 20 Hz platform resonance.
    pub fn horizontal() -> Self {
        Self::preset(IsolationPreset::Horizontal, 20.0, 4)
    }

    pub fn preset(preset: IsolationPreset, corner_hz: f64, order: i32) -> Self {
        let db = match preset {
            IsolationPreset::Vertical => 70.0,
            IsolationPreset::Horizontal => 100.0,
        };
        Self {
            corner_hz,
            order,
            gain_at_100hz: 10f64.powf(-db / 20.0),
        }
    }

    pub fn magnitude(&self, f_hz: f64) -> f64 {
        let ratio = 100.0 / f_hz.max(self.corner_hz);
        let norm = if 100.0 >= self.corner_hz {
            1.0
        } else {
            (self.corner_hz / 100.0).powi(self.order)
        };
        self.gain_at_100hz * ratio.powi(self.order) * norm
    }

    pub fn transfer(&self, grid: &FrequencyGrid) -> Result<TransferFunction> {
        let values = grid.hz().iter().map(|&f| self.magnitude(f).into()).collect();
        TransferFunction::new(grid.clone(), values, Unit::Displacement, Unit::Displacement)
    }
}

/// Ground displacement PSD `(a₁·(1 Hz/f)^slope)²`, m²/Hz.
pub fn ground_motion_psd(asd_at_1hz: f64, slope: f64, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    let values = grid
        .hz()
        .iter()
        .map(|&f| (asd_at_1hz * f.powf(-slope)).powi(2))
        .collect();
    SpectralDensity::new(grid.clone(), values, Unit::Displacement)
}

/// Ground motion through isolation, scaled by the ground-to-length
/// `transduction` and the residual common-mode fraction `cmrr`.
pub fn seismic_component(
    ground: &SpectralDensity,
    isolation: &TransferFunction,
    transduction: f64,
    cmrr: f64,
    referral: &TorqueReferral,
) -> Result<SpectralDensity> {
    if !(transduction >= 0.0) || !(cmrr >= 0.0) {
        return Err(Error::invalid("transduction and cmrr must be non-negative"));
    }
    let length = apply_transfer(isolation, ground)?.scale((transduction * cmrr).powi(2))?;
    referral.displacement_to_torque(&length)
}

/// Viscously damped holder resonances, summed incoherently and referred to
/// torque.
pub fn mirror_holder_component(
    modes: &[BendingMode],
    temperature: f64,
    referral: &TorqueReferral,
) -> Result<SpectralDensity> {
    for m in modes {
        m.validate()?;
        if !(m.quality > 0.5) {
            return Err(Error::invalid(format!("holder mode Q = {} must exceed 1/2", m.quality)));
        }
    }
    let grid = referral.grid();
    let x = SpectralDensity::from_angular_fn(grid, Unit::Displacement, |w| {
        modes
            .iter()
            .map(|m| viscous_mode_displacement(m, temperature, w))
            .sum()
    })?;
    referral.displacement_to_torque(&x)
}

/// Structural bending modes of the bar referred to torque. An empty list
/// gives zero.
pub fn bending_mode_component(
    modes: &[BendingMode],
    temperature: f64,
    referral: &TorqueReferral,
) -> Result<SpectralDensity> {
    if modes.is_empty() {
        return Ok(SpectralDensity::zeros(referral.grid(), Unit::Torque));
    }
    referral.displacement_to_torque(&bending_mode_thermal(modes, temperature, referral.grid())?)
}

/// Relative intensity noise of shot-noise-limited light at the cavity input
/// power, 1/√Hz.
pub fn shot_noise_rin(c: &CavityParams) -> f64 {
    (2.0 * HBAR * c.laser_angular_frequency() / c.input_power).sqrt()
}

/// Laser-noise contributions of one cavity, each a torque PSD.
#[derive(Debug, Clone)]
pub struct LaserNoise {
    /// Frequency noise → detuning → circulating power → radiation pressure.
    pub frequency_rp: SpectralDensity,
    /// Intensity noise on the circulating power → radiation pressure.
    pub intensity_rp: SpectralDensity,
    /// Intensity noise in the reflected light read as displacement. `None`
    /// on resonance, where reflection carries no linear displacement signal.
    pub intensity_sensing: Option<SpectralDensity>,
}

impl LaserNoise {
    pub fn total(&self) -> Result<SpectralDensity> {
        let mut parts = vec![("frequency_rp", &self.frequency_rp), ("intensity_rp", &self.intensity_rp)];
        if let Some(s) = &self.intensity_sensing {
            parts.push(("intensity_sensing", s));
        }
        quadrature_sum_named(parts)
    }
}

fn unit_check(s: &SpectralDensity, unit: Unit, grid: &FrequencyGrid, what: &str) -> Result<()> {
    if s.unit() != unit {
        return Err(Error::UnitMismatch(format!(
            "{what} must be {}, got {}",
            unit.psd_label(),
            s.unit().psd_label()
        )));
    }
    if !s.grid().same_as(grid) {
        return Err(Error::GridMismatch(format!("{what} is on a different grid")));
    }
    Ok(())
}

/// Per-term laser noise for one cavity.
///
/// Frequency noise `S_ν` becomes detuning noise `S_ν/(Δν/2)²`, then
/// circulating-power noise through `dP/dδ = −P_max·2δ/(1+δ²)²`. Power noise
/// acts as force `2P/c` at lever arm `L_eff`. Intensity noise `S_RIN` adds
/// `RIN·P_circ` of power noise and an apparent displacement
/// `RIN·P_refl / (dP_refl/dx)` in the reflected readout.
pub fn laser_noise_terms(
    freq_noise: &SpectralDensity,
    rin: &SpectralDensity,
    c: &CavityParams,
    p: &PendulumParams,
    referral: &TorqueReferral,
) -> Result<LaserNoise> {
    c.validate()?;
    let grid = referral.grid();
    unit_check(freq_noise, Unit::Frequency, grid, "frequency noise")?;
    unit_check(rin, Unit::Relative, grid, "intensity noise")?;
    let d = c.detuning;
    let denom = (1.0 + d * d).powi(2);
    let rp_lever = (2.0 / SPEED_OF_LIGHT * p.l_eff).powi(2);

    let dp_ddelta = c.peak_circulating_power() * 2.0 * d / denom;
    let hwhm = c.linewidth_fwhm() / 2.0;
    let frequency_rp = freq_noise
        .scale(rp_lever * (dp_ddelta / hwhm).powi(2))?
        .with_unit(Unit::Torque);

    let p_circ = circulating_power(c);
    let intensity_rp = rin.scale(rp_lever * p_circ * p_circ)?.with_unit(Unit::Torque);

    let refl_slope = c.input_power * c.mode_coupling * 2.0 * d / denom * c.detuning_per_metre();
    let intensity_sensing = if refl_slope == 0.0 {
        None
    } else {
        let p_refl = c.input_power * (1.0 - c.mode_coupling / (1.0 + d * d));
        let x = rin
            .scale((p_refl / refl_slope).powi(2))?
            .with_unit(Unit::Displacement);
        Some(referral.displacement_to_torque(&x)?)
    };
    Ok(LaserNoise {
        frequency_rp,
        intensity_rp,
        intensity_sensing,
    })
}

/// Quadrature sum of the laser-noise terms of one cavity.
pub fn laser_noise_component(
    freq_noise: &SpectralDensity,
    rin: &SpectralDensity,
    c: &CavityParams,
    p: &PendulumParams,
    referral: &TorqueReferral,
) -> Result<SpectralDensity> {
    laser_noise_terms(freq_noise, rin, c, p, referral)?.total()
}

/// `(√S_b − √S_a)²` pointwise: one noise source seen by both cavities with the
/// same sign, entering the differential torque as a difference.
pub fn common_source_difference(a: &SpectralDensity, b: &SpectralDensity) -> Result<SpectralDensity> {
    unit_check(b, a.unit(), a.grid(), "second channel")?;
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (y.sqrt() - x.sqrt()).powi(2))
        .collect();
    SpectralDensity::new(a.grid().clone(), values, a.unit())
}

/// Both cavities share one laser, so each term is combined coherently across
/// the pair before the terms are summed in quadrature.
pub fn laser_pair_component(a: &LaserNoise, b: &LaserNoise) -> Result<SpectralDensity> {
    let f = common_source_difference(&a.frequency_rp, &b.frequency_rp)?;
    let i = common_source_difference(&a.intensity_rp, &b.intensity_rp)?;
    let mut parts = vec![f, i];
    match (&a.intensity_sensing, &b.intensity_sensing) {
        (Some(x), Some(y)) => parts.push(common_source_difference(x, y)?),
        (Some(x), None) | (None, Some(x)) => parts.push(x.clone()),
        (None, None) => {}
    }
    quadrature_sum_named(parts.iter().map(|s| ("laser", s)))
}

/// Named torque PSDs on one grid and their quadrature sum.
#[derive(Debug, Clone)]
pub struct NoiseBudget {
    components: Vec<(String, SpectralDensity)>,
    total: SpectralDensity,
    measured: Option<SpectralDensity>,
}

impl NoiseBudget {
    pub fn from_components(components: Vec<(String, SpectralDensity)>) -> Result<Self> {
        for (name, s) in &components {
            if s.unit() != Unit::Torque {
                return Err(Error::UnitMismatch(format!(
                    "component {name} is {}, expected torque",
                    s.unit().psd_label()
                )));
            }
        }
        for (i, (name, _)) in components.iter().enumerate() {
            if components[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::invalid(format!("duplicate component name {name}")));
            }
        }
        let total = quadrature_sum_named(components.iter().map(|(n, s)| (n.as_str(), s)))?;
        Ok(Self {
            components,
            total,
            measured: None,
        })
    }

    pub fn with_measured(mut self, measured: SpectralDensity) -> Result<Self> {
        unit_check(&measured, Unit::Torque, self.total.grid(), "measured spectrum")?;
        self.measured = Some(measured);
        Ok(self)
    }

    pub fn components(&self) -> &[(String, SpectralDensity)] {
        &self.components
    }

    pub fn component(&self, name: &str) -> Option<&SpectralDensity> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn total(&self) -> &SpectralDensity {
        &self.total
    }

    pub fn measured(&self) -> Option<&SpectralDensity> {
        self.measured.as_ref()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.total.grid()
    }

    /// Amplitude spectra, one column per component, then `total` and
    /// `measured` when present.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        for line in metadata {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# unit: {}", Unit::Torque.asd_label())?;
        let mut header = String::from("frequency_hz");
        for (name, _) in &self.components {
            header.push(',');
            header.push_str(name);
        }
        header.push_str(",total");
        if self.measured.is_some() {
            header.push_str(",measured");
        }
        writeln!(w, "{header}")?;
        for (i, f) in self.grid().hz().iter().enumerate() {
            let mut row = format!("{f:.9e}");
            let columns = self
                .components
                .iter()
                .map(|(_, s)| s)
                .chain(std::iter::once(&self.total))
                .chain(self.measured.iter());
            for s in columns {
                row.push_str(&format!(",{:.9e}", s.values()[i].sqrt()));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn summary(&self, band: (f64, f64), threshold: f64) -> Result<BudgetSummary> {
        let stats = |name: &str, s: &SpectralDensity| ComponentSummary {
            name: name.to_string(),
            band_power: s.integrate_band(band.0, band.1),
            band_median_asd: s.band_median(band.0, band.1).map(f64::sqrt),
        };
        Ok(BudgetSummary {
            band_hz: [band.0, band.1],
            components: self.components.iter().map(|(n, s)| stats(n, s)).collect(),
            total: stats("total", &self.total),
            measured: self.measured.as_ref().map(|s| stats("measured", s)),
            excess: match self.measured {
                Some(_) => Some(excess_report(self, band, threshold)?),
                None => None,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub name: String,
    /// Integrated PSD over the band, Nm².
    pub band_power: f64,
    /// Median amplitude in the band, Nm/√Hz.
    pub band_median_asd: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetSummary {
    pub band_hz: [f64; 2],
    pub components: Vec<ComponentSummary>,
    pub total: ComponentSummary,
    pub measured: Option<ComponentSummary>,
    pub excess: Option<ExcessReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcessReport {
    pub threshold: f64,
    pub band_hz: [f64; 2],
    /// Measured/total power ratio at every grid point.
    pub ratio: Vec<[f64; 2]>,
    /// Frequencies whose ratio exceeds the threshold.
    pub flagged_hz: Vec<f64>,
    /// Ratio of band-integrated measured and total power.
    pub band_ratio: f64,
}

/// Measured/total power ratio per bin and over `band`.
pub fn excess_report(b: &NoiseBudget, band: (f64, f64), threshold: f64) -> Result<ExcessReport> {
    let measured = b
        .measured
        .as_ref()
        .ok_or_else(|| Error::invalid("excess report needs a measured spectrum"))?;
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!("threshold {threshold} must be positive")));
    }
    let ratio: Vec<[f64; 2]> = b
        .grid()
        .hz()
        .iter()
        .zip(measured.values().iter().zip(b.total.values()))
        .map(|(&f, (&m, &t))| {
            let r = if t > 0.0 {
                m / t
            } else if m > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            [f, r]
        })
        .collect();
    let flagged_hz = ratio.iter().filter(|r| r[1] > threshold).map(|r| r[0]).collect();
    let total_band = b.total.integrate_band(band.0, band.1);
    let band_ratio = if total_band > 0.0 {
        measured.integrate_band(band.0, band.1) / total_band
    } else {
        f64::INFINITY
    };
    Ok(ExcessReport {
        threshold,
        band_hz: [band.0, band.1],
        ratio,
        flagged_hz,
        band_ratio,
    })
}

/// Optical torsional stiffness used for referral: the configured trapped
/// frequency when given, otherwise the adiabatic spring of both cavities.
pub fn optical_stiffness(config: &Config) -> Result<f64> {
    let p = config.pendulum_params();
    match config.pendulum.optical_spring_hz {
        Some(f) => stiffness_for_frequency(&p, 2.0 * PI * f),
        None => {
            let mut k = 0.0;
            for c in config.cavity_params() {
                k += optical_spring_stiffness(&c, p.l_eff)?.torsional_per_cavity;
            }
            if k < 0.0 {
                return Err(Error::invalid("net optical spring is anti-restoring"));
            }
            Ok(k)
        }
    }
}

fn component(name: &str, r: Result<SpectralDensity>) -> Result<(String, SpectralDensity)> {
    r.map(|s| (name.to_string(), s)).map_err(|e| Error::Component {
        component: name.to_string(),
        source: Box::new(e),
    })
}

/// Builds every component from a validated configuration.
pub fn assemble_budget(config: &Config, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    let p = config.pendulum_params();
    let [ca, cb] = config.cavity_params();
    let kappa = optical_stiffness(config)?;
    let referral = TorqueReferral::new(&p, kappa, grid)?;
    let omega_eff = effective_frequency(&p, kappa);
    let temperature = p.temperature;

    let s = &config.seismic;
    let seismic = component("seismic", (|| {
        let ground = ground_motion_psd(s.ground_asd_at_1hz, s.ground_slope, grid)?;
        let iso = IsolationModel::preset(s.isolation, s.isolation_corner_hz, s.isolation_order)
            .transfer(grid)?;
        seismic_component(&ground, &iso, s.transduction, s.cmrr, &referral)
    })())?;

    let holder: Vec<BendingMode> = config.holder_modes.iter().map(|m| m.to_mode()).collect();
    let mirror_holder = component(
        "mirror_holder",
        mirror_holder_component(&holder, temperature, &referral),
    )?;

    let laser = component("laser", (|| {
        let fnoise = SpectralDensity::flat(grid, config.laser.frequency_noise_hz.powi(2), Unit::Frequency)?;
        let terms = |c: &CavityParams| {
            let rin = config.laser.rin_shot_noise_multiple * shot_noise_rin(c);
            let rin = SpectralDensity::flat(grid, rin * rin, Unit::Relative)?;
            laser_noise_terms(&fnoise, &rin, c, &p, &referral)
        };
        laser_pair_component(&terms(&ca)?, &terms(&cb)?)
    })())?;

    let bending: Vec<BendingMode> = config.bending_modes.iter().map(|m| m.to_mode()).collect();
    let bending_mode = component(
        "bending_mode",
        bending_mode_component(&bending, temperature, &referral),
    )?;

    let suspension_thermal = component("suspension_thermal", thermal_torque_psd(&p, grid))?;

    let qrpn = component(
        "qrpn",
        qrpn_torque_psd(ca.detuning, p.mass, omega_eff, p.l_eff, grid),
    )?;

    let shot_noise = component("shot_noise", (|| {
        let a = shot_noise_torque_floor(&ca, &p, kappa, grid)?;
        let b = shot_noise_torque_floor(&cb, &p, kappa, grid)?;
        quadrature_sum_named([("A", &a), ("B", &b)])
    })())?;

    NoiseBudget::from_components(vec![
        seismic,
        mirror_holder,
        laser,
        bending_mode,
        suspension_thermal,
        qrpn,
        shot_noise,
    ])
}
