use torsion_core::budget::{assemble_budget, excess_report, NoiseBudget, TorqueReferral, optical_stiffness};
use torsion_core::config::reference_config;
use torsion_core::mechanics::thermal_torque_psd;
use torsion_core::spectra::{SpectralDensity, Unit};

/// Measured spectrum shaped like the reported one: the budget everywhere,
/// plus an excess confined to 50-150 Hz that lifts 100 Hz to 2e-17 Nm/√Hz.
fn excess_shaped_measured(b: &NoiseBudget) -> SpectralDensity {
    let g = b.grid();
    let total_100 = b.total().at(100.0);
    let peak = 4e-34 - total_100;
    let centre = (50.0f64 * 150.0).sqrt();
    let half = (150.0f64 / centre).ln();
    let values = g
        .hz()
        .iter()
        .zip(b.total().values())
        .map(|(f, t)| {
            let x = (f / centre).ln() / half;
            let bump = if x.abs() < 1.0 { peak * (-(x.powi(8)) * 2f64.ln()).exp() } else { 0.0 };
            t + bump
        })
        .collect();
    SpectralDensity::new(g.clone(), values, Unit::Torque).unwrap()
}

#[test]
fn excess_flagged_only_inside_band() {
    let cfg = reference_config();
    let g = cfg.frequency_grid().unwrap();
    let b = assemble_budget(&cfg, &g).unwrap();
    let measured = excess_shaped_measured(&b);
    assert!((measured.at(100.0).sqrt() - 2e-17).abs() / 2e-17 < 0.01);
    let b = b.with_measured(measured).unwrap();
    let r = excess_report(&b, (50.0, 150.0), 2.0).unwrap();
    assert!(!r.flagged_hz.is_empty());
    assert!(r.flagged_hz.iter().all(|f| (50.0..=150.0).contains(f)), "{:?}", r.flagged_hz);
    assert!(r.band_ratio > 1.0);
    let thermal = b.component("suspension_thermal").unwrap().at(100.0).sqrt();
    assert!(b.measured().unwrap().at(100.0).sqrt() / thermal > 10.0);
}

#[test]
fn ordering_does_not_change_total() {
    let cfg = reference_config();
    let g = cfg.frequency_grid().unwrap();
    let b = assemble_budget(&cfg, &g).unwrap();
    let mut reversed = b.components().to_vec();
    reversed.reverse();
    let r = NoiseBudget::from_components(reversed).unwrap();
    for (x, y) in b.total().values().iter().zip(r.total().values()) {
        assert!((x - y).abs() <= 1e-12 * x);
    }
}

#[test]
fn total_dominates_each_component() {
    let cfg = reference_config();
    let g = cfg.frequency_grid().unwrap();
    let b = assemble_budget(&cfg, &g).unwrap();
    for (name, s) in b.components() {
        for (t, v) in b.total().values().iter().zip(s.values()) {
            assert!(t >= v, "{name}");
        }
    }
}

#[test]
fn referral_round_trip_on_budget_grid() {
    let cfg = reference_config();
    let g = cfg.frequency_grid().unwrap();
    let p = cfg.pendulum_params();
    let r = TorqueReferral::new(&p, optical_stiffness(&cfg).unwrap(), &g).unwrap();
    let tau = thermal_torque_psd(&p, &g).unwrap();
    let back = r.angle_to_torque(&r.torque_to_angle(&tau).unwrap()).unwrap();
    for (a, b) in tau.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 1e-12 * a);
    }
}

#[test]
fn csv_and_summary_emission() {
    let cfg = reference_config();
    let g = cfg.frequency_grid().unwrap();
    let b = assemble_budget(&cfg, &g).unwrap();
    let b = b.clone().with_measured(excess_shaped_measured(&b)).unwrap();
    let mut buf = Vec::new();
    b.write_csv(&mut buf, &["test".into()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "frequency_hz,seismic,mirror_holder,laser,bending_mode,suspension_thermal,qrpn,shot_noise,total,measured"
    );
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), g.len() + 1);
    let s = b.summary((50.0, 150.0), 2.0).unwrap();
    assert_eq!(s.components.len(), 7);
    assert!(s.excess.is_some());
    serde_json::to_string(&s).unwrap();
}
