use fusion_core::probability::RectanglePolygon;
use fusion_sim::experiment::{run_experiment, sig9, wilson_interval, SimConfig, Z95};
use fusion_sim::lattice::LatticeSpec;
use proptest::prelude::*;

fn cfg(trials: u64, meshes: Vec<usize>, seed: u64) -> SimConfig {
    SimConfig { trials, meshes, seed, ..Default::default() }
}

#[test]
fn same_seed_same_bytes() {
    let r = RectanglePolygon::corners(1.0).unwrap();
    let c = cfg(3000, vec![8, 12], 77);
    let a = run_experiment(&r, &c).unwrap().to_csv().unwrap();
    let b = run_experiment(&r, &c).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
    let other = run_experiment(&r, &SimConfig { seed: 78, ..c }).unwrap().to_csv().unwrap();
    assert_ne!(a, other);
}

#[test]
fn counts_add_up() {
    let r = RectanglePolygon::corners(1.5).unwrap();
    let rep = run_experiment(&r, &cfg(2000, vec![8], 5)).unwrap();
    let m = &rep.meshes[0];
    assert_eq!(m.rows.len(), 4);
    assert_eq!(m.rows.iter().map(|r| r.count).sum::<u64>(), 2000);
    assert!((m.rows.iter().map(|r| r.freq).sum::<f64>() - 1.0).abs() < 1e-12);
    let theory: f64 = m.rows.iter().map(|r| r.theory).sum();
    assert!((theory - 1.0).abs() < 1e-9);
    let json = rep.to_json().unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn larger_boundary_values_favour_crossings() {
    // Common random numbers across the sweep; the positive horizontal
    // crossing is pattern 2 in the exact table.
    let r = RectanglePolygon::corners(1.0).unwrap();
    let freqs: Vec<f64> = [1.0, 1.2533, 1.5]
        .iter()
        .map(|&mu| {
            let rep = run_experiment(&r, &SimConfig { mu, ..cfg(6000, vec![16], 99) }).unwrap();
            rep.meshes[0].rows[2].freq
        })
        .collect();
    assert!(freqs[0] < freqs[1] && freqs[1] < freqs[2], "{freqs:?}");
}

#[test]
fn general_marked_points_snap() {
    let r = RectanglePolygon::new(1.0, vec![3.3, 0.2, 1.4, 2.5]).unwrap();
    let spec = LatticeSpec::new(&r, 10).unwrap();
    assert_eq!(spec.marked_vertices(), &[(0, 7), (2, 0), (10, 4), (5, 10)]);
    assert!(spec.snap_distances().iter().all(|&d| d < 0.05 + 1e-12));
    let rep = run_experiment(&r, &cfg(500, vec![10], 1)).unwrap();
    assert_eq!(rep.meshes[0].anomalies, 0);
}

#[test]
fn invalid_configs_are_rejected() {
    let r = RectanglePolygon::corners(1.0).unwrap();
    assert!(run_experiment(&r, &SimConfig { mu: 0.0, ..Default::default() }).is_err());
    assert!(run_experiment(&r, &SimConfig { trials: 0, ..Default::default() }).is_err());
    assert!(run_experiment(&r, &SimConfig { meshes: vec![], ..Default::default() }).is_err());
}

proptest! {
    #[test]
    fn wilson_contains_the_point_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn nine_significant_digits(x in -1e12f64..1e12) {
        let s = sig9(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs() + f64::MIN_POSITIVE, "{} {}", x, s);
        let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 9);
    }
}
