#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use torsion_core::budget::{assemble_budget, NoiseBudget};
use torsion_core::config::Config;
use torsion_core::csl::{exclusion_landscape, log_r_grid, parse_overlay};
use torsion_core::io::{read_bode, read_spectrum, read_timeseries, read_two_channel, write_two_channel};
use torsion_core::readout::{broadband_suppression, calibrate_alpha, fit_optical_spring, CalibrationSettings, ReadoutPair};
use torsion_core::simulate::simulate;
use torsion_core::spectra::{SpectralDensity, Unit};
use torsion_core::spectral::{resample_loglog, ringdown_fit};
use torsion_core::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "torsion", version, about = "Torque-noise budget, readout calibration and CSL bounds for a torsion pendulum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Torque-referred noise budget, optionally against a measured spectrum.
    Budget {
        #[arg(long)]
        config: PathBuf,
        /// Measured torque spectrum CSV (`frequency_hz,value`, unit line required).
        #[arg(long)]
        measured: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic two-channel readout.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 64.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose α by minimising a common-mode line in the combined angle.
    Calibrate {
        /// Two-channel CSV (`time_s,x_a,x_b`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 73.0)]
        line_hz: f64,
        #[arg(long, default_value_t = 2.0)]
        halfwidth_hz: f64,
        #[arg(long, default_value_t = 0.01)]
        l_eff: f64,
        /// Band for the broadband suppression figure, Hz.
        #[arg(long, num_args = 2, default_values_t = [50.0, 100.0])]
        broadband_hz: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a damped-spring response to an open-loop transfer function.
    FitSpring {
        /// Bode CSV (`frequency_hz,magnitude_db,phase_deg`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// CSL exclusion curve from a torque sensitivity.
    Csl {
        #[arg(long)]
        config: PathBuf,
        /// Torque sensitivity in Nm/√Hz; overrides every other source.
        #[arg(long)]
        sensitivity: Option<f64>,
        /// Measured torque spectrum whose band median sets the sensitivity.
        #[arg(long)]
        measured: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resonance and quality factor from a free decay.
    Ringdown {
        /// Time series CSV (`time_s,value`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::FitFailure { .. } | Error::Degenerate { .. } => 4,
        Error::Component { source, .. } => exit_code(source),
        _ => 3,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn data_error(message: String) -> Failure {
    Failure { code: 3, message }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A loaded input file and its digest.
struct Input {
    text: String,
    sha256: String,
}

fn read_input(path: &Path, code: u8) -> Result<Input, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure {
        code,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let sha256 = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| Failure {
        code,
        message: format!("{} is not UTF-8", path.display()),
    })?;
    Ok(Input { text, sha256 })
}

fn load_config(path: &Path) -> Result<(Config, Input), Failure> {
    let input = read_input(path, 2)?;
    let config = Config::from_json(&input.text)?;
    Ok((config, input))
}

fn with_context<T>(r: torsion_core::Result<T>, path: &Path) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// Files produced by one command, written together once everything has
/// been computed.
struct Artifacts {
    metadata: Vec<String>,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new(command: &str, provenance: &[(&str, &str)]) -> Self {
        let mut metadata = vec![format!("tool: torsion {VERSION}"), format!("command: {command}")];
        for (k, v) in provenance {
            metadata.push(format!("{k}: {v}"));
        }
        Self {
            metadata,
            files: Vec::new(),
        }
    }

    fn metadata_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .metadata
            .iter()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        Value::Object(map)
    }

    fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>, &[String]) -> torsion_core::Result<()>,
    ) -> Result<(), Failure> {
        let mut buf = Vec::new();
        write(&mut buf, &self.metadata)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    fn json(&mut self, name: &str, mut body: Value) {
        body["metadata"] = self.metadata_json();
        let mut buf = serde_json::to_vec_pretty(&body).expect("JSON values serialise");
        buf.push(b'\n');
        self.files.push((name.to_string(), buf));
    }

    /// Each file goes to a temporary sibling and is renamed into place.
    fn commit(self, dir: &Path) -> Result<(), Failure> {
        let io = |e: std::io::Error, what: &Path| Failure {
            code: 3,
            message: format!("cannot write {}: {e}", what.display()),
        };
        fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        for (name, bytes) in self.files {
            let target = dir.join(&name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let mut f = fs::File::create(&tmp).map_err(|e| io(e, &tmp))?;
            f.write_all(&bytes).and_then(|_| f.sync_all()).map_err(|e| io(e, &tmp))?;
            fs::rename(&tmp, &target).map_err(|e| io(e, &target))?;
        }
        Ok(())
    }
}

fn load_measured(path: &Path, budget: &NoiseBudget) -> Result<(SpectralDensity, Input), Failure> {
    let input = read_input(path, 3)?;
    let s = with_context(read_spectrum(&input.text), path)?;
    if s.unit() != Unit::Torque {
        return Err(data_error(format!(
            "{}: measured spectrum is {}, expected torque",
            path.display(),
            s.unit().psd_label()
        )));
    }
    let s = with_context(resample_loglog(&s, budget.grid()), path)?;
    Ok((s, input))
}

fn run_budget(config: &Path, measured: Option<&Path>, out: &Path) -> Result<Value, Failure> {
    let (cfg, cfg_in) = load_config(config)?;
    let grid = cfg.frequency_grid()?;
    let mut budget = assemble_budget(&cfg, &grid)?;
    let mut provenance = vec![("config_sha256", cfg_in.sha256.clone())];
    if let Some(path) = measured {
        let (s, input) = load_measured(path, &budget)?;
        budget = budget.with_measured(s)?;
        provenance.push(("measured_sha256", input.sha256));
    }
    let prov: Vec<(&str, &str)> = provenance.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let mut art = Artifacts::new("budget", &prov);
    art.csv("budget.csv", |w, m| budget.write_csv(w, m))?;
    let e = &cfg.estimation;
    let summary = budget.summary((e.excess_band_hz[0], e.excess_band_hz[1]), e.excess_threshold)?;
    let body = serde_json::to_value(&summary).expect("summary serialises");
    art.json("budget_summary.json", body.clone());
    art.commit(out)?;
    Ok(json!({
        "total_band_median_asd": summary.total.band_median_asd,
        "excess_band_ratio": summary.excess.as_ref().map(|x| x.band_ratio),
    }))
}

fn run_simulate(config: &Path, duration: f64, seed: u64, out: &Path) -> Result<Value, Failure> {
    let (cfg, cfg_in) = load_config(config)?;
    let sim = simulate(&cfg, duration, seed)?;
    let seed_s = seed.to_string();
    let dur_s = duration.to_string();
    let mut art = Artifacts::new(
        "simulate",
        &[("config_sha256", &cfg_in.sha256), ("seed", &seed_s), ("duration_s", &dur_s)],
    );
    art.csv("timeseries.csv", |w, m| write_two_channel(w, &sim.x_a, &sim.x_b, m))?;
    let truth = json!({
        "alpha": sim.alpha,
        "line_hz": sim.line_hz,
        "line_amplitude_m": sim.line_amplitude_m,
        "line_phase_rad": sim.line_phase_rad,
        "sample_rate_hz": sim.x_a.sample_rate(),
        "samples": sim.x_a.len(),
    });
    art.json("simulation.json", truth.clone());
    art.commit(out)?;
    Ok(truth)
}

fn run_calibrate(
    input: &Path,
    line_hz: f64,
    halfwidth: f64,
    l_eff: f64,
    broadband: (f64, f64),
    out: &Path,
) -> Result<Value, Failure> {
    let data = read_input(input, 3)?;
    let (a, b) = with_context(read_two_channel(&data.text), input)?;
    let pair = ReadoutPair::new(a, b, l_eff)?;
    let settings = CalibrationSettings::new(line_hz, halfwidth, pair.sample_rate());
    let cal = calibrate_alpha(&pair, &settings)?;
    let broad = broadband_suppression(&pair, cal.alpha, broadband, settings.welch)?;
    let mut art = Artifacts::new("calibrate", &[("input_sha256", &data.sha256)]);
    let body = json!({
        "alpha": cal.alpha,
        "line_hz": line_hz,
        "band_hz": [line_hz - halfwidth, line_hz + halfwidth],
        "suppression_vs_single": cal.suppression_vs_single,
        "suppression_vs_unity": cal.suppression_vs_unity,
        "band_power_at_alpha": cal.band_power_at_alpha,
        "broadband_band_hz": [broadband.0, broadband.1],
        "broadband_suppression": broad,
        "profile": cal.profile,
    });
    art.json("calibration.json", body.clone());
    art.commit(out)?;
    Ok(json!({
        "alpha": cal.alpha,
        "suppression_vs_single": cal.suppression_vs_single,
        "broadband_suppression": broad,
    }))
}

fn run_fit_spring(input: &Path, out: &Path) -> Result<Value, Failure> {
    let data = read_input(input, 3)?;
    let tf = with_context(read_bode(&data.text), input)?;
    let fit = fit_optical_spring(&tf)?;
    let mut art = Artifacts::new("fit-spring", &[("input_sha256", &data.sha256)]);
    let body = json!({
        "omega_eff_rad_s": fit.omega_eff,
        "f_eff_hz": fit.omega_eff / (2.0 * std::f64::consts::PI),
        "gamma_eff_rad_s": fit.gamma_eff,
        "quality": fit.quality(),
        "gain": fit.gain,
        "residual": fit.residual,
        "iterations": fit.iterations,
    });
    art.json("spring_fit.json", body.clone());
    art.commit(out)?;
    Ok(body)
}

fn run_csl(config: &Path, sensitivity: Option<f64>, measured: Option<&Path>, out: &Path) -> Result<Value, Failure> {
    let (cfg, cfg_in) = load_config(config)?;
    let c = &cfg.csl;
    let band = (c.band_hz[0], c.band_hz[1]);
    let mut provenance = vec![("config_sha256".to_string(), cfg_in.sha256.clone())];
    let (psd, source) = if let Some(s) = sensitivity {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Failure {
                code: 2,
                message: format!("--sensitivity {s} must be positive"),
            });
        }
        (s * s, "command line".to_string())
    } else if let Some(path) = measured {
        let grid = cfg.frequency_grid()?;
        let budget = assemble_budget(&cfg, &grid)?;
        let (m, input) = load_measured(path, &budget)?;
        provenance.push(("measured_sha256".into(), input.sha256));
        let median = m.band_median(band.0, band.1).ok_or_else(|| {
            data_error(format!("no measured points in {}-{} Hz", band.0, band.1))
        })?;
        (median, format!("measured band median {}-{} Hz", band.0, band.1))
    } else if let Some(s) = c.sensitivity {
        (s * s, "config".to_string())
    } else {
        let grid = cfg.frequency_grid()?;
        let budget = assemble_budget(&cfg, &grid)?;
        let median = budget.total().band_median(band.0, band.1).ok_or_else(|| Failure {
            code: 2,
            message: format!("csl.band_hz {}-{} Hz lies outside the budget grid", band.0, band.1),
        })?;
        (median, format!("budget total band median {}-{} Hz", band.0, band.1))
    };
    let base = config.parent().unwrap_or(Path::new("."));
    let mut overlays = Vec::new();
    for rel in &c.overlays {
        let path = base.join(rel);
        let input = read_input(&path, 3)?;
        overlays.push(with_context(parse_overlay(&input.text, rel), &path)?);
        provenance.push((format!("overlay_sha256[{rel}]"), input.sha256));
    }
    let r_grid = log_r_grid(c.r_min_m, c.r_max_m, c.points)?;
    let landscape = exclusion_landscape(psd, &r_grid, &cfg.pendulum_params(), overlays)?;
    let asd = format!("{:.6e}", psd.sqrt());
    provenance.push(("sensitivity_nm_per_rthz".into(), asd));
    provenance.push(("sensitivity_source".into(), source.clone()));
    let prov: Vec<(&str, &str)> = provenance.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let mut art = Artifacts::new("csl", &prov);
    art.csv("csl_bound.csv", |w, m| landscape.write_csv(w, m))?;
    let body = json!({
        "sensitivity_nm_per_rthz": psd.sqrt(),
        "torque_psd": psd,
        "sensitivity_source": source,
        "curve": landscape.curve,
        "overlays": landscape.overlays,
    });
    art.json("csl_bound.json", body);
    art.commit(out)?;
    let first = landscape.curve[0];
    Ok(json!({
        "sensitivity_nm_per_rthz": psd.sqrt(),
        "r_m": first.r_m,
        "lambda_max_per_s": first.lambda_max_per_s,
    }))
}

fn run_ringdown(input: &Path, out: &Path) -> Result<Value, Failure> {
    let data = read_input(input, 3)?;
    let x = with_context(read_timeseries(&data.text), input)?;
    let fit = ringdown_fit(&x)?;
    let mut art = Artifacts::new("ringdown", &[("input_sha256", &data.sha256)]);
    let body = json!({
        "omega_rad_s": fit.omega,
        "f_hz": fit.omega / (2.0 * std::f64::consts::PI),
        "gamma_rad_s": fit.gamma,
        "gamma_stderr_rad_s": fit.gamma_stderr,
        "quality": if fit.quality.is_finite() { json!(fit.quality) } else { Value::Null },
        "damping_consistent_with_zero": fit.damping_consistent_with_zero(),
        "envelope_residual_rms": fit.residual_rms,
    });
    art.json("ringdown.json", body.clone());
    art.commit(out)?;
    Ok(body)
}

fn run(cli: Cli) -> Result<Value, Failure> {
    match cli.command {
        Command::Budget { config, measured, out } => run_budget(&config, measured.as_deref(), &out),
        Command::Simulate { config, duration, seed, out } => run_simulate(&config, duration, seed, &out),
        Command::Calibrate {
            input,
            line_hz,
            halfwidth_hz,
            l_eff,
            broadband_hz,
            out,
        } => run_calibrate(&input, line_hz, halfwidth_hz, l_eff, (broadband_hz[0], broadband_hz[1]), &out),
        Command::FitSpring { input, out } => run_fit_spring(&input, &out),
        Command::Csl {
            config,
            sensitivity,
            measured,
            out,
        } => run_csl(&config, sensitivity, measured.as_deref(), &out),
        Command::Ringdown { input, out } => run_ringdown(&input, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
