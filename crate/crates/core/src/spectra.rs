//! Frequency-domain value types shared by every model in the crate.
//!
//! All spectra are one-sided power spectral densities in Hz: integrating a
//! [`SpectralDensity`] over `f ∈ (0, ∞)` yields the variance of the
//! underlying process. Formulas are evaluated in angular frequency; the only
//! conversion point is [`FrequencyGrid::angular`].
//!
//! Amplitude spectral densities never appear in arithmetic. They are produced
//! only when emitting CSV via [`SpectralDensity::write_csv_amplitude`].

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Closed set of physical units carried by time series, spectra and
/// transfer functions. A spectral density in unit `U` has values in `U²/Hz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    /// Newton-metre.
    Torque,
    /// Radian.
    Angle,
    /// Metre.
    Displacement,
    /// Watt.
    Power,
    /// Hertz (laser frequency fluctuation).
    Frequency,
    /// Fractional (relative intensity).
    Relative,
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Torque => "Nm",
            Unit::Angle => "rad",
            Unit::Displacement => "m",
            Unit::Power => "W",
            Unit::Frequency => "Hz",
            Unit::Relative => "relative",
            Unit::Dimensionless => "1",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Unit> {
        Some(match s.trim() {
            "Nm" => Unit::Torque,
            "rad" => Unit::Angle,
            "m" => Unit::Displacement,
            "W" => Unit::Power,
            "Hz" => Unit::Frequency,
            "relative" => Unit::Relative,
            "1" => Unit::Dimensionless,
            _ => return None,
        })
    }

    pub fn psd_label(self) -> String {
        match self {
            Unit::Dimensionless => "1/Hz".to_string(),
            u => format!("{}^2/Hz", u.symbol()),
        }
    }

    pub fn asd_label(self) -> String {
        match self {
            Unit::Dimensionless => "1/sqrt(Hz)".to_string(),
            u => format!("{}/sqrt(Hz)", u.symbol()),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Strictly increasing, positive frequencies in Hz.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    values: Arc<[f64]>,
}

impl FrequencyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("frequency grid is empty"));
        }
        if let Some((i, f)) = values
            .iter()
            .enumerate()
            .find(|(_, f)| !f.is_finite() || **f <= 0.0)
        {
            return Err(Error::invalid(format!(
                "frequency grid entry {i} = {f} is not finite and positive"
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "frequency grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            values: values.into(),
        })
    }

    /// `n` log-spaced points from `f_min` to `f_max` inclusive.
    pub fn logspace(f_min: f64, f_max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(f_min > 0.0) || !(f_max > f_min) {
            return Err(Error::invalid(format!(
                "logspace needs 0 < f_min < f_max and n >= 2 (got {f_min}, {f_max}, {n})"
            )));
        }
        let (a, b) = (f_min.ln(), f_max.ln());
        let step = (b - a) / (n - 1) as f64;
        let mut v: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
        v[0] = f_min;
        v[n - 1] = f_max;
        Self::new(v)
    }

    /// `n` evenly spaced points from `f_min` to `f_max` inclusive.
    pub fn linspace(f_min: f64, f_max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(f_min > 0.0) || !(f_max > f_min) {
            return Err(Error::invalid(format!(
                "linspace needs 0 < f_min < f_max and n >= 2 (got {f_min}, {f_max}, {n})"
            )));
        }
        let step = (f_max - f_min) / (n - 1) as f64;
        Self::new((0..n).map(|i| f_min + step * i as f64).collect())
    }

    pub fn hz(&self) -> &[f64] {
        &self.values
    }

    /// Angular frequencies ω = 2πf in rad/s.
    pub fn angular(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|f| 2.0 * PI * f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index of the grid point closest to `f`.
    pub fn nearest_index(&self, f: f64) -> usize {
        let i = self.values.partition_point(|&x| x < f);
        if i == 0 {
            0
        } else if i == self.values.len() {
            i - 1
        } else if (self.values[i] - f) < (f - self.values[i - 1]) {
            i
        } else {
            i - 1
        }
    }

    /// Every-`factor`-th point, starting at the first.
    pub fn decimate(&self, factor: usize) -> FrequencyGrid {
        let factor = factor.max(1);
        FrequencyGrid {
            values: self.values.iter().step_by(factor).copied().collect(),
        }
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        Arc::ptr_eq(&self.values, &other.values) || self.values[..] == other.values[..]
    }
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    grid: FrequencyGrid,
    values: Vec<f64>,
    unit: Unit,
}

impl SpectralDensity {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "PSD value {v} at index {i} is not finite and non-negative"
            )));
        }
        Ok(Self { grid, values, unit })
    }

    /// Builds a PSD by evaluating `f` at each angular frequency of `grid`.
    pub fn from_angular_fn(grid: &FrequencyGrid, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.angular().map(f).collect();
        Self::new(grid.clone(), values, unit)
    }

    pub fn flat(grid: &FrequencyGrid, value: f64, unit: Unit) -> Result<Self> {
        Self::new(grid.clone(), vec![value; grid.len()], unit)
    }

    /// Builds a PSD from amplitude spectral density values (unit/√Hz).
    pub fn from_amplitude(grid: FrequencyGrid, asd: &[f64], unit: Unit) -> Result<Self> {
        Self::new(grid, asd.iter().map(|a| a * a).collect(), unit)
    }

    pub fn zeros(grid: &FrequencyGrid, unit: Unit) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            unit,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }

    /// PSD value at the grid point nearest `f_hz`.
    pub fn at(&self, f_hz: f64) -> f64 {
        self.values[self.grid.nearest_index(f_hz)]
    }

    /// Multiplies every value by a non-negative scalar (power units).
    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.unit,
        )
    }

    /// Same values re-tagged with another unit. Used where a model converts
    /// between units by a scalar that has already been applied.
    pub fn with_unit(self, unit: Unit) -> Self {
        Self { unit, ..self }
    }

    /// Trapezoidal integral over the grid (variance in the covered band).
    pub fn integrate(&self) -> f64 {
        self.integrate_band(self.grid.first(), self.grid.last())
    }

    /// Trapezoidal integral restricted to grid points with `f_lo ≤ f ≤ f_hi`.
    pub fn integrate_band(&self, f_lo: f64, f_hi: f64) -> f64 {
        let f = self.grid.hz();
        let mut acc = 0.0;
        for i in 1..f.len() {
            if f[i - 1] >= f_lo && f[i] <= f_hi {
                acc += 0.5 * (self.values[i] + self.values[i - 1]) * (f[i] - f[i - 1]);
            }
        }
        acc
    }

    /// Median of the PSD values on grid points inside `[f_lo, f_hi]`.
    pub fn band_median(&self, f_lo: f64, f_hi: f64) -> Option<f64> {
        let mut band: Vec<f64> = self
            .grid
            .hz()
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(_, v)| *v)
            .collect();
        if band.is_empty() {
            return None;
        }
        band.sort_by(|a, b| a.total_cmp(b));
        let n = band.len();
        Some(if n % 2 == 1 {
            band[n / 2]
        } else {
            0.5 * (band[n / 2 - 1] + band[n / 2])
        })
    }

    /// Emits `frequency_hz,value` rows (PSD units) after a `# unit:` header.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        for line in metadata {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# unit: {}", self.unit.psd_label())?;
        writeln!(w, "frequency_hz,value")?;
        for (f, v) in self.grid.hz().iter().zip(&self.values) {
            writeln!(w, "{f:.9e},{v:.9e}")?;
        }
        Ok(())
    }

    /// Same as [`write_csv`](Self::write_csv) but with amplitude (√PSD) values.
    pub fn write_csv_amplitude<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        for line in metadata {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# unit: {}", self.unit.asd_label())?;
        writeln!(w, "frequency_hz,value")?;
        for (f, v) in self.grid.hz().iter().zip(&self.values) {
            writeln!(w, "{f:.9e},{:.9e}", v.sqrt())?;
        }
        Ok(())
    }
}

/// Complex frequency response mapping `input` units to `output` units.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
    input: Unit,
    output: Unit,
}

impl TransferFunction {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>, input: Unit, output: Unit) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} transfer-function values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::invalid(format!(
                "transfer-function value at index {i} is not finite"
            )));
        }
        Ok(Self {
            grid,
            values,
            input,
            output,
        })
    }

    pub fn from_angular_fn(
        grid: &FrequencyGrid,
        input: Unit,
        output: Unit,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let values = grid.angular().map(f).collect();
        Self::new(grid.clone(), values, input, output)
    }

    /// Frequency-independent real gain.
    pub fn constant(grid: &FrequencyGrid, gain: f64, input: Unit, output: Unit) -> Result<Self> {
        Self::new(grid.clone(), vec![Complex64::new(gain, 0.0); grid.len()], input, output)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn input(&self) -> Unit {
        self.input
    }

    pub fn output(&self) -> Unit {
        self.output
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|h| h.norm()).collect()
    }

    /// Series composition: `self` applied after `first`.
    pub fn compose(&self, first: &TransferFunction) -> Result<Self> {
        if !self.grid.same_as(&first.grid) {
            return Err(Error::GridMismatch("composed transfer functions differ in grid".into()));
        }
        if first.output != self.input {
            return Err(Error::UnitMismatch(format!(
                "cannot feed {} output into a {} input",
                first.output, self.input
            )));
        }
        let values = self.values.iter().zip(&first.values).map(|(a, b)| a * b).collect();
        Self::new(self.grid.clone(), values, first.input, self.output)
    }

    /// Pointwise reciprocal, swapping input and output units.
    pub fn inverse(&self) -> Result<Self> {
        if let Some(i) = self.values.iter().position(|h| h.norm() == 0.0) {
            return Err(Error::invalid(format!(
                "transfer function vanishes at index {i}; cannot invert"
            )));
        }
        let values = self.values.iter().map(|h| h.inv()).collect();
        Self::new(self.grid.clone(), values, self.output, self.input)
    }

    /// Emits `frequency_hz,re,im` rows after a `# unit:` header.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        for line in metadata {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# unit: {}/{}", self.output.symbol(), self.input.symbol())?;
        writeln!(w, "frequency_hz,re,im")?;
        for (f, h) in self.grid.hz().iter().zip(&self.values) {
            writeln!(w, "{f:.9e},{:.9e},{:.9e}", h.re, h.im)?;
        }
        Ok(())
    }
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_rate: f64,
    samples: Vec<f64>,
    unit: Unit,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>, unit: Unit) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(format!("sample rate {sample_rate} must be positive")));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            sample_rate,
            samples,
            unit,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len().max(1) as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Keeps every `factor`-th sample without anti-alias filtering.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        let factor = factor.max(1);
        Self::new(
            self.sample_rate / factor as f64,
            self.samples.iter().step_by(factor).copied().collect(),
            self.unit,
        )
    }
}

fn check_compatible(a: &SpectralDensity, b: &SpectralDensity, label: &str) -> Result<()> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(format!("component {label} is on a different grid")));
    }
    if a.unit != b.unit {
        return Err(Error::UnitMismatch(format!(
            "component {label} has unit {} but expected {}",
            b.unit.psd_label(),
            a.unit.psd_label()
        )));
    }
    Ok(())
}

/// Incoherent sum: PSDs add in power.
pub fn quadrature_sum(components: &[SpectralDensity]) -> Result<SpectralDensity> {
    let labelled: Vec<(String, &SpectralDensity)> = components
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("#{i}"), s))
        .collect();
    quadrature_sum_named(labelled.iter().map(|(n, s)| (n.as_str(), *s)))
}

/// [`quadrature_sum`] with caller-supplied names used in diagnostics.
pub fn quadrature_sum_named<'a>(
    components: impl IntoIterator<Item = (&'a str, &'a SpectralDensity)>,
) -> Result<SpectralDensity> {
    let mut iter = components.into_iter();
    let (_, first) = iter
        .next()
        .ok_or_else(|| Error::invalid("quadrature sum of zero components"))?;
    let mut acc = first.values.clone();
    for (name, s) in iter {
        check_compatible(first, s, name)?;
        for (a, v) in acc.iter_mut().zip(&s.values) {
            *a += v;
        }
    }
    SpectralDensity::new(first.grid.clone(), acc, first.unit)
}

/// Propagates a PSD through a linear system: `|H|²·S`, re-tagged with the
/// transfer function's output unit.
pub fn apply_transfer(h: &TransferFunction, s: &SpectralDensity) -> Result<SpectralDensity> {
    if !h.grid.same_as(&s.grid) {
        return Err(Error::GridMismatch(
            "transfer function and spectrum are on different grids".into(),
        ));
    }
    if h.input != s.unit {
        return Err(Error::UnitMismatch(format!(
            "transfer function expects {} input but spectrum is {}",
            h.input.psd_label(),
            s.unit.psd_label()
        )));
    }
    let values = h
        .values
        .iter()
        .zip(&s.values)
        .map(|(hv, sv)| hv.norm_sqr() * sv)
        .collect();
    SpectralDensity::new(s.grid.clone(), values, h.output)
}
