//! CSV readers and writers for time series, spectra and transfer functions.
//!
//! Every file may open with `#`-prefixed metadata lines. A `# unit: X` line
//! names the unit; the first non-comment line is the column header.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectra::{FrequencyGrid, SpectralDensity, TimeSeries, TransferFunction, Unit};

/// Relative tolerance on sample-interval uniformity.
pub const UNIFORM_SAMPLING_TOLERANCE: f64 = 1e-9;

/// Parsed numeric table.
#[derive(Debug, Clone)]
pub struct Table {
    pub unit: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// 1-based source line of each row.
    pub lines: Vec<usize>,
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut unit = None;
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(u) = meta.trim().strip_prefix("unit:") {
                unit = Some(u.trim().to_string());
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match &columns {
            None => columns = Some(fields.iter().map(|s| s.to_string()).collect()),
            Some(cols) => {
                if fields.len() != cols.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {} fields, found {}", cols.len(), fields.len()),
                    });
                }
                let row = fields
                    .iter()
                    .map(|s| {
                        s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                            line: line_no,
                            message: format!("`{s}` is not a finite number"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rows.push(row);
                lines.push(line_no);
            }
        }
    }
    let columns = columns.ok_or_else(|| Error::InsufficientData("file has no header row".into()))?;
    Ok(Table {
        unit,
        columns,
        rows,
        lines,
    })
}

fn expect_columns(t: &Table, want: &[&str]) -> Result<()> {
    if t.columns.iter().map(String::as_str).ne(want.iter().copied()) {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected columns `{}`, found `{}`", want.join(","), t.columns.join(",")),
        });
    }
    Ok(())
}

fn unit_of(t: &Table, default: Unit) -> Result<Unit> {
    match &t.unit {
        None => Ok(default),
        Some(u) => Unit::from_symbol(u).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unknown unit `{u}`"),
        }),
    }
}

/// Sample rate implied by a time column, which must be uniform within
/// [`UNIFORM_SAMPLING_TOLERANCE`].
fn sample_rate(t: &Table) -> Result<f64> {
    let n = t.rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} samples; need at least 2")));
    }
    let t0 = t.rows[0][0];
    let dt = (t.rows[n - 1][0] - t0) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Parse {
            line: t.lines[n - 1],
            message: "time column is not increasing".into(),
        });
    }
    for i in 1..n {
        let step = t.rows[i][0] - t.rows[i - 1][0];
        if ((step - dt) / dt).abs() > UNIFORM_SAMPLING_TOLERANCE {
            return Err(Error::Parse {
                line: t.lines[i],
                message: format!("non-uniform sampling: step {step:e} s vs mean {dt:e} s"),
            });
        }
    }
    Ok(1.0 / dt)
}

/// Reads `time_s,value`.
pub fn read_timeseries(text: &str) -> Result<TimeSeries> {
    let t = parse_table(text)?;
    expect_columns(&t, &["time_s", "value"])?;
    let fs = sample_rate(&t)?;
    TimeSeries::new(fs, t.rows.iter().map(|r| r[1]).collect(), unit_of(&t, Unit::Dimensionless)?)
}

/// Reads `time_s,x_a,x_b`.
pub fn read_two_channel(text: &str) -> Result<(TimeSeries, TimeSeries)> {
    let t = parse_table(text)?;
    expect_columns(&t, &["time_s", "x_a", "x_b"])?;
    let fs = sample_rate(&t)?;
    let unit = unit_of(&t, Unit::Displacement)?;
    Ok((
        TimeSeries::new(fs, t.rows.iter().map(|r| r[1]).collect(), unit)?,
        TimeSeries::new(fs, t.rows.iter().map(|r| r[2]).collect(), unit)?,
    ))
}

fn time(i: usize, fs: f64) -> f64 {
    i as f64 / fs
}

pub fn write_timeseries<W: Write>(mut w: W, x: &TimeSeries, metadata: &[String]) -> Result<()> {
    for line in metadata {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "# unit: {}", x.unit().symbol())?;
    writeln!(w, "time_s,value")?;
    for (i, v) in x.samples().iter().enumerate() {
        writeln!(w, "{},{v:e}", time(i, x.sample_rate()))?;
    }
    Ok(())
}

pub fn write_two_channel<W: Write>(
    mut w: W,
    a: &TimeSeries,
    b: &TimeSeries,
    metadata: &[String],
) -> Result<()> {
    if a.len() != b.len() || a.sample_rate() != b.sample_rate() || a.unit() != b.unit() {
        return Err(Error::invalid("channels differ in length, rate or unit"));
    }
    for line in metadata {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "# unit: {}", a.unit().symbol())?;
    writeln!(w, "time_s,x_a,x_b")?;
    for (i, (x, y)) in a.samples().iter().zip(b.samples()).enumerate() {
        writeln!(w, "{},{x:e},{y:e}", time(i, a.sample_rate()))?;
    }
    Ok(())
}

/// Reads `frequency_hz,magnitude_db,phase_deg` (dB as `20·log10|H|`).
pub fn read_bode(text: &str) -> Result<TransferFunction> {
    let t = parse_table(text)?;
    expect_columns(&t, &["frequency_hz", "magnitude_db", "phase_deg"])?;
    if t.rows.is_empty() {
        return Err(Error::InsufficientData("transfer function has no rows".into()));
    }
    let grid = FrequencyGrid::new(t.rows.iter().map(|r| r[0]).collect())?;
    let values = t
        .rows
        .iter()
        .map(|r| Complex64::from_polar(10f64.powf(r[1] / 20.0), r[2] * PI / 180.0))
        .collect();
    TransferFunction::new(grid, values, Unit::Dimensionless, Unit::Dimensionless)
}

pub fn write_bode<W: Write>(mut w: W, h: &TransferFunction, metadata: &[String]) -> Result<()> {
    for line in metadata {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "frequency_hz,magnitude_db,phase_deg")?;
    for (f, v) in h.grid().hz().iter().zip(h.values()) {
        writeln!(w, "{f:.9e},{:.9e},{:.9e}", 20.0 * v.norm().log10(), v.arg() * 180.0 / PI)?;
    }
    Ok(())
}

/// Reads `frequency_hz,value`. The `# unit:` line decides whether values
/// are amplitude (`U/sqrt(Hz)`) or power (`U^2/Hz`); either way the result
/// is a PSD.
pub fn read_spectrum(text: &str) -> Result<SpectralDensity> {
    let t = parse_table(text)?;
    expect_columns(&t, &["frequency_hz", "value"])?;
    let label = t.unit.clone().ok_or_else(|| Error::Parse {
        line: 0,
        message: "spectrum needs a `# unit:` line".into(),
    })?;
    let (symbol, amplitude) = if let Some(s) = label.strip_suffix("/sqrt(Hz)") {
        (s, true)
    } else if let Some(s) = label.strip_suffix("^2/Hz") {
        (s, false)
    } else {
        return Err(Error::Parse {
            line: 0,
            message: format!("unit `{label}` is neither U/sqrt(Hz) nor U^2/Hz"),
        });
    };
    let unit = Unit::from_symbol(symbol).ok_or_else(|| Error::Parse {
        line: 0,
        message: format!("unknown unit `{symbol}`"),
    })?;
    let grid = FrequencyGrid::new(t.rows.iter().map(|r| r[0]).collect())?;
    let values: Vec<f64> = t.rows.iter().map(|r| r[1]).collect();
    if amplitude {
        SpectralDensity::from_amplitude(grid, &values, unit)
    } else {
        SpectralDensity::new(grid, values, unit)
    }
}
