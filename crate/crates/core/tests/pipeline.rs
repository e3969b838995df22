use torsion_core::config::reference_config;
use torsion_core::io::{read_two_channel, write_two_channel};
use torsion_core::readout::{broadband_suppression, calibrate_alpha, CalibrationSettings, ReadoutPair, WelchSettings};
use torsion_core::simulate::simulate;

fn calibrate(pair: &ReadoutPair) -> f64 {
    let settings = CalibrationSettings::new(73.0, 2.0, pair.sample_rate());
    calibrate_alpha(pair, &settings).unwrap().alpha
}

#[test]
fn alpha_stable_under_decimation() {
    let cfg = reference_config();
    let sim = simulate(&cfg, 64.0, 5).unwrap();
    let pair = ReadoutPair::new(sim.x_a, sim.x_b, 0.01).unwrap();
    let full = calibrate(&pair);
    let half = calibrate(&pair.decimate(2).unwrap());
    assert!((full - half).abs() / full < 0.01, "{full} vs {half}");
}

#[test]
fn csv_round_trip_preserves_calibration() {
    let cfg = reference_config();
    let sim = simulate(&cfg, 16.0, 9).unwrap();
    let mut buf = Vec::new();
    write_two_channel(&mut buf, &sim.x_a, &sim.x_b, &[]).unwrap();
    let (a, b) = read_two_channel(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(a.samples(), sim.x_a.samples());
    assert_eq!(b.samples(), sim.x_b.samples());
    let direct = calibrate(&ReadoutPair::new(sim.x_a, sim.x_b, 0.01).unwrap());
    let read = calibrate(&ReadoutPair::new(a, b, 0.01).unwrap());
    assert_eq!(direct, read);
}

#[test]
fn broadband_suppression_below_unity_at_alpha() {
    let cfg = reference_config();
    let sim = simulate(&cfg, 64.0, 13).unwrap();
    let pair = ReadoutPair::new(sim.x_a, sim.x_b, 0.01).unwrap();
    let alpha = calibrate(&pair);
    let s = broadband_suppression(&pair, alpha, (50.0, 100.0), WelchSettings::for_resolution(1024.0, 1.0)).unwrap();
    assert!(s > 0.0 && s < 1.0, "{s}");
}
