//! Continuous spontaneous localisation (CSL) torque noise and the exclusion
//! bound a measured torque sensitivity places on the collapse rate.
//!
//! The collapse-induced torque noise on a thin bar is white:
//! `S = λ·(8πħ²r²/m₀²)·(ρI/d)`. Inverting at a measured PSD gives the largest
//! rate `λ_max(r)` compatible with the measurement; larger rates are excluded.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::constants::{ATOMIC_MASS_UNIT, HBAR};
use crate::error::{Error, Result};
use crate::mechanics::PendulumParams;

/// Collapse rate `lambda` (1/s) and correlation length `r` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CslParams {
    pub lambda: f64,
    pub r: f64,
}

impl CslParams {
    pub fn new(lambda: f64, r: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(r > 0.0) || !lambda.is_finite() || !r.is_finite() {
            return Err(Error::invalid(format!(
                "CSL parameters must be positive (λ = {lambda}, r = {r})"
            )));
        }
        Ok(Self { lambda, r })
    }
}

/// Torque PSD per unit collapse rate at correlation length `r`, Nm²·s/Hz.
pub fn csl_coupling(r: f64, p: &PendulumParams) -> f64 {
    8.0 * PI * HBAR * HBAR * r * r / (ATOMIC_MASS_UNIT * ATOMIC_MASS_UNIT) * p.density
        * p.moment_of_inertia()
        / p.thickness
}

/// Frequency-independent CSL torque PSD, Nm²/Hz.
pub fn csl_torque_psd(c: &CslParams, p: &PendulumParams) -> f64 {
    c.lambda * csl_coupling(c.r, p)
}

/// One point of an exclusion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub r_m: f64,
    pub lambda_max_per_s: f64,
    /// `r` exceeds the bar thickness, outside the thin-plate regime.
    pub extrapolated: bool,
}

/// `λ_max(r) = S_measured / coupling(r)` for each `r`.
pub fn lambda_bound(s_measured: f64, r_grid: &[f64], p: &PendulumParams) -> Result<Vec<BoundPoint>> {
    if !(s_measured > 0.0) || !s_measured.is_finite() {
        return Err(Error::invalid(format!(
            "measured torque PSD {s_measured} must be positive"
        )));
    }
    r_grid
        .iter()
        .map(|&r| {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!("correlation length {r} must be positive")));
            }
            Ok(BoundPoint {
                r_m: r,
                lambda_max_per_s: s_measured / csl_coupling(r, p),
                extrapolated: r > p.thickness,
            })
        })
        .collect()
}

/// Externally supplied exclusion curve, passed through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlayPoint {
    pub r_m: f64,
    pub lambda_per_s: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overlay {
    /// Where the overlay came from (file path or caller label).
    pub source: String,
    pub points: Vec<OverlayPoint>,
}

/// Parses an overlay CSV with rows `r_m,lambda_per_s,label`. Lines starting
/// with `#`, blank lines and a header row naming `r_m` are skipped.
pub fn parse_overlay(text: &str, source: &str) -> Result<Overlay> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("r_m") {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, ',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("{source}: expected `r_m,lambda_per_s,label`"),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("{source}: {what} `{s}` is not a positive number"),
                })
        };
        points.push(OverlayPoint {
            r_m: num(fields[0], "r_m")?,
            lambda_per_s: num(fields[1], "lambda_per_s")?,
            label: fields[2].to_string(),
        });
    }
    Ok(Overlay {
        source: source.to_string(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionLandscape {
    pub s_measured: f64,
    pub curve: Vec<BoundPoint>,
    pub overlays: Vec<Overlay>,
}

/// `n` log-spaced correlation lengths in `[r_min, r_max]`. A single point
/// returns `[r_min]`.
pub fn log_r_grid(r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0) || !(r_max >= r_min) || n == 0 {
        return Err(Error::invalid(format!(
            "r range [{r_min}, {r_max}] with {n} points is not a positive log span"
        )));
    }
    if n == 1 {
        return Ok(vec![r_min]);
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

pub fn exclusion_landscape(
    s_measured: f64,
    r_grid: &[f64],
    p: &PendulumParams,
    overlays: Vec<Overlay>,
) -> Result<ExclusionLandscape> {
    Ok(ExclusionLandscape {
        s_measured,
        curve: lambda_bound(s_measured, r_grid, p)?,
        overlays,
    })
}

impl ExclusionLandscape {
    /// Curve rows `r_m,lambda_max_per_s,label`, then overlay rows with their
    /// own labels.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        for line in metadata {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "r_m,lambda_per_s,label")?;
        for pt in &self.curve {
            let label = if pt.extrapolated {
                "this work (formula extrapolation)"
            } else {
                "this work"
            };
            writeln!(w, "{:.9e},{:.9e},{label}", pt.r_m, pt.lambda_max_per_s)?;
        }
        for o in &self.overlays {
            for pt in &o.points {
                writeln!(w, "{:.9e},{:.9e},{}", pt.r_m, pt.lambda_per_s, pt.label)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::fixtures::reference_pendulum;
    use crate::mechanics::DampingModel;

    #[test]
    fn torque_psd_reference_value() {
        let p = reference_pendulum(DampingModel::Structural);
        let s = csl_torque_psd(&CslParams::new(1.0, 1e-7).unwrap(), &p);
        assert!((s - 2.1e-30).abs() / 2.1e-30 < 0.02, "{s}");
    }

    #[test]
    fn scaling_laws() {
        let p = reference_pendulum(DampingModel::Structural);
        let base = csl_torque_psd(&CslParams::new(1.0, 1e-7).unwrap(), &p);
        let l3 = csl_torque_psd(&CslParams::new(3.0, 1e-7).unwrap(), &p);
        let r2 = csl_torque_psd(&CslParams::new(1.0, 2e-7).unwrap(), &p);
        assert!((l3 / base - 3.0).abs() < 1e-12);
        assert!((r2 / base - 4.0).abs() < 1e-12);
        let mut thick = p.clone();
        thick.thickness *= 2.0;
        let t = csl_torque_psd(&CslParams::new(1.0, 1e-7).unwrap(), &thick);
        assert!((t / base - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bounds_and_monotonicity() {
        let p = reference_pendulum(DampingModel::Structural);
        let b = lambda_bound((2e-17f64).powi(2), &[1e-7, 2e-7], &p).unwrap();
        assert!((b[0].lambda_max_per_s - 1.9e-4).abs() / 1.9e-4 < 0.02);
        assert!((b[1].lambda_max_per_s - b[0].lambda_max_per_s / 4.0).abs() < 1e-18);
        assert!(!b[0].extrapolated);
        let grid = log_r_grid(1e-9, 1e-2, 50).unwrap();
        let curve = lambda_bound(1e-36, &grid, &p).unwrap();
        assert!(curve.windows(2).all(|w| w[1].lambda_max_per_s < w[0].lambda_max_per_s));
        assert!(curve.last().unwrap().extrapolated);
        assert!(lambda_bound(0.0, &grid, &p).is_err());
    }

    #[test]
    fn single_point_grid() {
        assert_eq!(log_r_grid(1e-7, 1e-5, 1).unwrap(), vec![1e-7]);
        assert!(log_r_grid(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn overlay_parsing() {
        let text = "# LISA Pathfinder digitised\nr_m,lambda_per_s,label\n1e-7, 1e-8, LPF\n\n1e-6,2e-9,LPF, extra\n";
        let o = parse_overlay(text, "lpf.csv").unwrap();
        assert_eq!(o.points.len(), 2);
        assert_eq!(o.points[1].label, "LPF, extra");
        let err = parse_overlay("1e-7,1e-8,ok\n1e-7,abc,bad\n", "x.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_overlay("1e-7;1e-8\n", "x.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn landscape_without_overlays() {
        let p = reference_pendulum(DampingModel::Structural);
        let l = exclusion_landscape(1e-36, &[1e-7], &p, vec![]).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with(",this work\n"));
    }
}
