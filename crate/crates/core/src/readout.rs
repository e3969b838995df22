//! Two-cavity differential readout.
//!
//! Each cavity senses the displacement of one end of the bar. The torsional
//! angle is formed as `θ = (x_B − α·x_A)/L_eff`, where the coefficient `α`
//! absorbs the transduction mismatch between the two cavities. Because
//! common-mode vibration should not produce an angle, `α` is calibrated by
//! minimising the power of a common-mode vibration line in `θ`.
//!
//! The module also fits the optical-spring resonance of a measured
//! open-loop transfer function.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::{FrequencyGrid, SpectralDensity, TimeSeries, TransferFunction, Unit};
use crate::spectral::{welch_psd, DEFAULT_OVERLAP};

/// Displacement records of cavities A and B and the bar's effective length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutPair {
    x_a: TimeSeries,
    x_b: TimeSeries,
    l_eff: f64,
}

impl ReadoutPair {
    pub fn new(x_a: TimeSeries, x_b: TimeSeries, l_eff: f64) -> Result<Self> {
        if x_a.sample_rate() != x_b.sample_rate() {
            return Err(Error::invalid(format!(
                "channel sample rates differ ({} vs {} Hz)",
                x_a.sample_rate(),
                x_b.sample_rate()
            )));
        }
        if x_a.len() != x_b.len() {
            return Err(Error::invalid(format!(
                "channel lengths differ ({} vs {})",
                x_a.len(),
                x_b.len()
            )));
        }
        if x_a.is_empty() {
            return Err(Error::InsufficientData("readout channels are empty".into()));
        }
        if !(l_eff > 0.0) || !l_eff.is_finite() {
            return Err(Error::invalid(format!("L_eff {l_eff} must be positive")));
        }
        Ok(Self { x_a, x_b, l_eff })
    }

    pub fn x_a(&self) -> &TimeSeries {
        &self.x_a
    }

    pub fn x_b(&self) -> &TimeSeries {
        &self.x_b
    }

    pub fn l_eff(&self) -> f64 {
        self.l_eff
    }

    pub fn sample_rate(&self) -> f64 {
        self.x_a.sample_rate()
    }

    pub fn decimate(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_a.decimate(factor)?, self.x_b.decimate(factor)?, self.l_eff)
    }
}

/// `θ = (x_B − α·x_A)/L_eff` sample by sample, in radians.
pub fn combine_differential(pair: &ReadoutPair, alpha: f64) -> Result<TimeSeries> {
    if !alpha.is_finite() {
        return Err(Error::invalid("α must be finite"));
    }
    let inv = 1.0 / pair.l_eff;
    let samples = pair
        .x_a
        .samples()
        .iter()
        .zip(pair.x_b.samples())
        .map(|(a, b)| (b - alpha * a) * inv)
        .collect();
    TimeSeries::new(pair.sample_rate(), samples, Unit::Angle)
}

/// Power in bins with `f_lo ≤ f ≤ f_hi` (bin sum × resolution).
fn band_power(psd: &SpectralDensity, f_lo: f64, f_hi: f64) -> f64 {
    let f = psd.grid().hz();
    let df = f[0];
    f.iter()
        .zip(psd.values())
        .filter(|(fk, _)| **fk >= f_lo && **fk <= f_hi)
        .map(|(_, v)| v * df)
        .sum()
}

/// Welch settings shared by the readout estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchSettings {
    pub segment_length: usize,
    pub overlap: f64,
}

impl WelchSettings {
    /// Segments of `segment_seconds` at the pair's sample rate, rounded to an
    /// even sample count.
    pub fn for_resolution(sample_rate: f64, segment_seconds: f64) -> Self {
        let n = ((sample_rate * segment_seconds).round() as usize).max(2);
        Self {
            segment_length: n + n % 2,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

/// Band power of the combined angle around the calibration band.
fn band_objective(pair: &ReadoutPair, alpha: f64, band: (f64, f64), welch: WelchSettings) -> Result<f64> {
    let theta = combine_differential(pair, alpha)?;
    let psd = welch_psd(&theta, welch.segment_length, welch.overlap)?;
    Ok(band_power(&psd, band.0, band.1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub line_frequency: f64,
    pub band_halfwidth: f64,
    pub search_interval: (f64, f64),
    pub coarse_points: usize,
    pub welch: WelchSettings,
}

impl CalibrationSettings {
    /// 50-point coarse scan over `[0, 2]`, 1 s Welch segments.
    pub fn new(line_frequency: f64, band_halfwidth: f64, sample_rate: f64) -> Self {
        Self {
            line_frequency,
            band_halfwidth,
            search_interval: (0.0, 2.0),
            coarse_points: 50,
            welch: WelchSettings::for_resolution(sample_rate, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaCalibration {
    pub alpha: f64,
    /// Line amplitude at `alpha` relative to the single-sensor (α = 0) reference.
    pub suppression_vs_single: f64,
    /// Line amplitude at `alpha` relative to the plain difference (α = 1).
    pub suppression_vs_unity: f64,
    pub band_power_at_alpha: f64,
    /// Coarse scan `(α, band power)`.
    pub profile: Vec<(f64, f64)>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const ALPHA_TOLERANCE: f64 = 1e-7;
/// Relative variation below which the coarse objective counts as flat.
const FLAT_OBJECTIVE: f64 = 1e-6;

/// Finds `α*` minimising the band power of the combined angle around the
/// common-mode line: coarse scan, then golden-section refinement inside the
/// bracket around the best scan point (ties go to the smaller α).
pub fn calibrate_alpha(pair: &ReadoutPair, settings: &CalibrationSettings) -> Result<AlphaCalibration> {
    let fs = pair.sample_rate();
    let band = (
        settings.line_frequency - settings.band_halfwidth,
        settings.line_frequency + settings.band_halfwidth,
    );
    if !(settings.band_halfwidth > 0.0) || band.0 <= 0.0 || band.1 >= fs / 2.0 {
        return Err(Error::invalid(format!(
            "calibration band [{}, {}] Hz must lie inside (0, {}) Hz",
            band.0,
            band.1,
            fs / 2.0
        )));
    }
    let (lo, hi) = settings.search_interval;
    if !(hi > lo) || settings.coarse_points < 3 {
        return Err(Error::invalid("search interval must be non-empty with ≥ 3 scan points"));
    }
    let objective = |a: f64| band_objective(pair, a, band, settings.welch);

    let n = settings.coarse_points;
    let mut profile = Vec::with_capacity(n);
    for i in 0..n {
        let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        profile.push((a, objective(a)?));
    }
    let (min_v, max_v) = profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), (_, v)| (mn.min(*v), mx.max(*v)));
    if !(max_v > 0.0) || (max_v - min_v) <= FLAT_OBJECTIVE * max_v {
        return Err(Error::Degenerate {
            reason: "band-power objective is flat over the search interval (no common-mode content)".into(),
            profile,
        });
    }
    let local_minima = (0..n)
        .filter(|&i| {
            let v = profile[i].1;
            let left = i == 0 || v < profile[i - 1].1;
            let right = i == n - 1 || v < profile[i + 1].1;
            left && right
        })
        .count();
    if local_minima > 1 {
        return Err(Error::Degenerate {
            reason: format!("objective has {local_minima} local minima over the search interval"),
            profile,
        });
    }
    let best = profile
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.1 < profile[b].1 { i } else { b });
    let mut a = profile[best.saturating_sub(1)].0;
    let mut b = profile[(best + 1).min(n - 1)].0;

    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while (b - a).abs() > ALPHA_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = objective(d)?;
        }
    }
    let mut alpha = 0.5 * (a + b);
    let mut at_alpha = objective(alpha)?;
    if profile[best].1 < at_alpha {
        alpha = profile[best].0;
        at_alpha = profile[best].1;
    }
    let single = objective(0.0)?;
    let unity = objective(1.0)?;
    let ratio = |reference: f64| {
        if reference > 0.0 {
            (at_alpha / reference).sqrt()
        } else {
            0.0
        }
    };
    Ok(AlphaCalibration {
        alpha,
        suppression_vs_single: ratio(single),
        suppression_vs_unity: ratio(unity),
        band_power_at_alpha: at_alpha,
        profile,
    })
}

/// RMS amplitude over `band` of the angle combined at `alpha`, relative to
/// the single-sensor combination `α = 0`.
pub fn broadband_suppression(pair: &ReadoutPair, alpha: f64, band: (f64, f64), welch: WelchSettings) -> Result<f64> {
    if !(band.1 > band.0) || band.0 <= 0.0 || band.1 > pair.sample_rate() / 2.0 {
        return Err(Error::invalid(format!(
            "band [{}, {}] Hz must lie inside the Nyquist range",
            band.0, band.1
        )));
    }
    let reference = band_objective(pair, 0.0, band, welch)?;
    let combined = band_objective(pair, alpha, band, welch)?;
    if reference == 0.0 {
        return Err(Error::Degenerate {
            reason: "reference channel has no power in band".into(),
            profile: vec![],
        });
    }
    Ok((combined / reference).sqrt())
}

/// Plant response `gain·ω₀²/(ω₀² − ω² + iγω)` of a damped spring.
pub fn spring_response(omega_eff: f64, gamma_eff: f64, gain: f64, omega: f64) -> Complex64 {
    let w2 = omega_eff * omega_eff;
    Complex64::new(gain * w2, 0.0) / Complex64::new(w2 - omega * omega, gamma_eff * omega)
}

/// Builds a sampled [`spring_response`] on `grid`.
pub fn spring_transfer_function(
    grid: &FrequencyGrid,
    omega_eff: f64,
    gamma_eff: f64,
    gain: f64,
) -> Result<TransferFunction> {
    TransferFunction::from_angular_fn(grid, Unit::Dimensionless, Unit::Dimensionless, |w| {
        spring_response(omega_eff, gamma_eff, gain, w)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpringFit {
    pub omega_eff: f64,
    pub gamma_eff: f64,
    pub gain: f64,
    /// RMS of the log-magnitude and phase residuals.
    pub residual: f64,
    pub iterations: usize,
}

impl SpringFit {
    pub fn quality(&self) -> f64 {
        self.omega_eff / self.gamma_eff
    }
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Magnitude variation (max/min) below which the input counts as flat.
const MIN_MAGNITUDE_CONTRAST: f64 = 1.5;
/// Fits whose residual exceeds this are reported as failures.
const MAX_FIT_RESIDUAL: f64 = 0.5;

struct SpringProblem<'a> {
    omega: Vec<f64>,
    log_mag: Vec<f64>,
    phase: Vec<f64>,
    _tf: &'a TransferFunction,
}

impl SpringProblem<'_> {
    /// Residual vector (log-magnitude then phase) and its Jacobian with
    /// respect to `(ln ω₀, ln γ, ln gain)`.
    fn evaluate(&self, p: [f64; 3], jac: Option<&mut Vec<[f64; 3]>>) -> Vec<f64> {
        let (w0, g, k) = (p[0].exp(), p[1].exp(), p[2].exp());
        let n = self.omega.len();
        let mut r = vec![0.0; 2 * n];
        let mut rows = Vec::with_capacity(2 * n);
        for (i, &w) in self.omega.iter().enumerate() {
            let d = Complex64::new(w0 * w0 - w * w, g * w);
            let model = spring_response(w0, g, k, w);
            r[i] = model.norm().ln() - self.log_mag[i];
            r[n + i] = wrap_phase(model.arg() - self.phase[i]);
            if jac.is_some() {
                let d_w0 = Complex64::new(2.0, 0.0) - Complex64::new(2.0 * w0 * w0, 0.0) / d;
                let d_g = -Complex64::new(0.0, g * w) / d;
                rows.push((d_w0, d_g));
            }
        }
        if let Some(j) = jac {
            j.clear();
            j.resize(2 * n, [0.0; 3]);
            for (i, (d_w0, d_g)) in rows.into_iter().enumerate() {
                j[i] = [d_w0.re, d_g.re, 1.0];
                j[n + i] = [d_w0.im, d_g.im, 0.0];
            }
        }
        r
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>()
}

/// Levenberg–Marquardt fit of [`spring_response`] to a measured transfer
/// function, with log-magnitude and phase residuals weighted equally.
pub fn fit_optical_spring(measured: &TransferFunction) -> Result<SpringFit> {
    let mags = measured.magnitude();
    if mags.len() < 4 {
        return Err(Error::InsufficientData("need at least 4 transfer-function points".into()));
    }
    if mags.iter().any(|m| *m <= 0.0) {
        return Err(Error::invalid("transfer-function magnitude must be non-zero"));
    }
    let (mn, mx) = mags
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), m| (a.min(*m), b.max(*m)));
    if mx / mn < MIN_MAGNITUDE_CONTRAST {
        return Err(Error::FitFailure {
            reason: format!("no resonant feature: magnitude varies only by {:.3}×", mx / mn),
            residual: f64::NAN,
        });
    }
    let omega: Vec<f64> = measured.grid().angular().collect();
    let phase: Vec<f64> = measured.values().iter().map(|h| h.arg()).collect();
    let problem = SpringProblem {
        omega: omega.clone(),
        log_mag: mags.iter().map(|m| m.ln()).collect(),
        phase: phase.clone(),
        _tf: measured,
    };

    // Resonance where the phase crosses −90°, else at the magnitude peak.
    let peak = (0..mags.len()).fold(0, |b, i| if mags[i] > mags[b] { i } else { b });
    let w0 = (1..phase.len())
        .find(|&i| {
            let (a, b) = (phase[i - 1] + PI / 2.0, phase[i] + PI / 2.0);
            a >= 0.0 && b < 0.0
        })
        .map(|i| 0.5 * (omega[i - 1] + omega[i]))
        .unwrap_or(omega[peak]);
    let gain0 = {
        let d = spring_response(w0, w0, 1.0, omega[0]).norm();
        mags[0] / d
    };
    let near = (0..omega.len()).fold(0, |b, i| {
        if (omega[i] - w0).abs() < (omega[b] - w0).abs() {
            i
        } else {
            b
        }
    });
    let gamma0 = (gain0 * w0 / mags[near]).clamp(w0 * 1e-4, w0 * 10.0);

    let mut params = [w0.ln(), gamma0.ln(), gain0.ln()];
    let mut jac = Vec::new();
    let mut r = problem.evaluate(params, Some(&mut jac));
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..3 {
                jtr[a] += row[a] * ri;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12);
            }
            let Some(step) = solve3(damped, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [params[0] + step[0], params[1] + step[1], params[2] + step[2]];
            let rt = problem.evaluate(trial, None);
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                let step_norm = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
                params = trial;
                r = problem.evaluate(params, Some(&mut jac));
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-14 || step_norm < 1e-12 {
                    return finish(params, &r, iterations);
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    finish(params, &r, iterations)
}

fn finish(params: [f64; 3], r: &[f64], iterations: usize) -> Result<SpringFit> {
    let residual = (cost(r) / r.len() as f64).sqrt();
    if !(residual <= MAX_FIT_RESIDUAL) {
        return Err(Error::FitFailure {
            reason: "spring model does not describe the transfer function".into(),
            residual,
        });
    }
    Ok(SpringFit {
        omega_eff: params[0].exp(),
        gamma_eff: params[1].exp(),
        gain: params[2].exp(),
        residual,
        iterations,
    })
}
