use std::fs;

use biasrb::experiment::run::ExactDecays;
use biasrb::experiment::{analyze_dir, simulate_to_dir, ChannelSource, ExperimentConfig};
use biasrb::protocols::{Branch, Protocol};

fn spec(pd: f64, pnd: f64, d: usize, seed: u64) -> Option<ChannelSource> {
    Some(ChannelSource::Spec { p_dephasing: pd, p_nondephasing: pnd, d, seed })
}

fn brb_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Protocol::Brb, 2, 17);
    c.grid = vec![1, 2, 4, 8, 16, 32];
    c.shots = 4000;
    c.sequences = 200;
    c.resamples = 30;
    c.noise.gate = spec(2e-3, 1e-4, 6, 1);
    c.noise.prep = spec(1e-2, 1e-3, 3, 2);
    c.noise.meas = spec(1e-2, 1e-3, 4, 3);
    c
}

#[test]
fn brb_estimates_agree_with_exact_decays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let meta = simulate_to_dir(&brb_config(), dir.path(), &out).unwrap();
    let report = analyze_dir(&out).unwrap();
    let ExactDecays::Brb { lambda_1, lambda_2 } = meta.exact else { panic!("wrong protocol") };
    for (b, exact) in [(Branch::Brb1, lambda_1), (Branch::Brb2, lambda_2)] {
        let f = &report.fits[&b];
        assert!((f.lambda - exact).abs() <= 3.0 * f.lambda_stderr().unwrap(), "{b}");
    }
    let e = &report.estimate;
    assert!((e.p_dephasing - meta.truth.p_dephasing).abs() <= 3.0 * e.stderr_pd);
    assert!((e.p_nondephasing - meta.truth.p_nondephasing).abs() <= 3.0 * e.stderr_pnd);
}

#[test]
fn interleaved_survival_tracks_exact_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::new(Protocol::Ibrb, 2, 23);
    c.fill_defaults();
    c.shots = 2000;
    c.sequences = 200;
    c.resamples = 10;
    c.noise.z_gate = spec(1e-3, 1e-4, 3, 4);
    c.noise.cx = spec(5e-3, 5e-4, 5, 5);
    c.noise.cx_prime = spec(5e-3, 5e-4, 7, 6);
    c.noise.prep = spec(5e-3, 5e-4, 2, 7);
    let out = dir.path().join("res");
    simulate_to_dir(&c, dir.path(), &out).unwrap();
    let report = analyze_dir(&out).unwrap();
    // each sequence mean lies in [-1, 1], so the point's variance is at most 1/sequences
    let bound = 4.0 / (c.sequences as f64).sqrt();
    let mut worst = 0.0f64;
    for curve in report.curves.values() {
        for p in curve {
            worst = worst.max((p.survival - p.exact).abs());
        }
    }
    assert!(worst < bound, "{worst} vs {bound}");
    assert_eq!(report.curves.len(), 6);
}

#[test]
fn analysis_reads_only_the_results_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = brb_config();
    c.shots = 400;
    c.sequences = 20;
    c.resamples = 5;
    let first = dir.path().join("a");
    simulate_to_dir(&c, dir.path(), &first).unwrap();
    let in_place = analyze_dir(&first).unwrap();
    let moved = dir.path().join("elsewhere/b");
    fs::create_dir_all(moved.parent().unwrap()).unwrap();
    fs::rename(&first, &moved).unwrap();
    fs::remove_file(moved.join("report.json")).unwrap();
    assert_eq!(analyze_dir(&moved).unwrap(), in_place);
}

#[test]
fn reruns_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = brb_config();
    c.shots = 400;
    c.sequences = 20;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate_to_dir(&c, dir.path(), &a).unwrap();
    simulate_to_dir(&c, dir.path(), &b).unwrap();
    for f in ["records.csv", "metadata.json", "noise/gate.json", "noise/prep.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
