use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use biasrb::channels::{read_channel, write_channel, KrausChannel};
use biasrb::experiment::Report;
use biasrb::pauli::{bias_report, chi_diagonal};
use biasrb::protocols::{brb_exact_decay, Branch};

fn biasrb(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biasrb")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value printed after `key` in the gen-channel report.
fn field(out: &str, key: &str) -> f64 {
    let line = out.lines().find(|l| l.split_whitespace().next() == Some(key)).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn gen_channel_report_matches_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = biasrb(&["gen-channel", "--n", "2", "--pd", "0.02", "--pnd", "1e-4", "--d", "5", "--seed", "7", "--out", "c.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let truth = bias_report(&chi_diagonal(&read_channel(&dir.path().join("c.json")).unwrap()).unwrap());
    assert!(truth.p_nondephasing > 0.0);
    assert!((field(&out, "p_D") - truth.p_dephasing).abs() <= 1e-6 * truth.p_dephasing);
    assert!((field(&out, "p_ND") - truth.p_nondephasing).abs() <= 1e-6 * truth.p_nondephasing);
    assert!((field(&out, "bias") - truth.bias.value()).abs() <= 1e-6 * truth.bias.value());
    assert!((field(&out, "fidelity") - truth.avg_fidelity).abs() <= 1e-9);
}

#[test]
fn single_kraus_operator_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = biasrb(&["gen-channel", "--pd", "0.02", "--pnd", "1e-3", "--d", "1", "--seed", "3", "--out", "id.json"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!((field(&out, "p_D"), field(&out, "p_ND"), field(&out, "bias")), (0.0, 0.0, 0.0));
    assert_eq!(field(&out, "fidelity"), 1.0);
}

#[test]
fn gen_channel_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = biasrb(&["gen-channel", "--pd", "0.01", "--pnd", "1e-3", "--d", "9", "--seed", "11", "--out", name], dir.path());
        assert!(o.status.success());
    }
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

fn read_report(dir: &Path) -> Report {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn noiseless_brb_estimates_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "protocol = \"brb\"\nseed = 4\ngrid = [1, 2, 4, 8]\nshots = 400\nsequences = 20\nresamples = 10\n";
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let o = biasrb(&["simulate-brb", "--config", "run.toml", "--out", "res"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = biasrb(&["analyze", "res"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e = read_report(&dir.path().join("res")).estimate;
    assert!(e.p_dephasing.abs() <= 3.0 * e.stderr_pd + 1e-12);
    assert!(e.p_nondephasing.abs() <= 3.0 * e.stderr_pnd + 1e-12);
}

#[test]
fn pauli_noise_decays_match_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = vec![0.0; 16];
    p[1] = 0.004; // IZ
    p[3] = 0.002; // ZZ
    p[4] = 0.001; // XI
    p[13] = 0.0015; // YZ
    p[0] = 1.0 - p.iter().sum::<f64>();
    let ch = KrausChannel::from_pauli_distribution(2, &p).unwrap();
    write_channel(&dir.path().join("gate.json"), &ch, None).unwrap();
    let cfg = "protocol = \"brb\"\nseed = 9\ngrid = [1, 2, 4, 8, 16, 32]\nshots = 2000\nsequences = 100\nresamples = 20\n\
               [noise.gate]\nfile = \"gate.json\"\n";
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    assert!(biasrb(&["simulate-brb", "--config", "run.toml", "--out", "res"], dir.path()).status.success());
    assert!(biasrb(&["analyze", "res"], dir.path()).status.success());
    let r = read_report(&dir.path().join("res"));
    let (l1, l2) = brb_exact_decay(&ch);
    for (b, exact) in [(Branch::Brb1, l1), (Branch::Brb2, l2)] {
        let f = &r.fits[&b];
        let se = f.lambda_stderr().unwrap();
        assert!((f.lambda - exact).abs() <= 3.0 * se, "{b}: {} vs {exact} ({se})", f.lambda);
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = biasrb(&["simulate-ibrb", "--seed", "5", "--shots", "500", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("records.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn odd_only_interleaved_grid_is_rejected_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "protocol = \"ibrb\"\nseed = 1\ngrid = [1, 3, 5]\n").unwrap();
    let o = biasrb(&["simulate-ibrb", "--config", "run.toml", "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("res").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(biasrb(&["simulate-brb", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(biasrb(&["simulate-brb"], dir.path()).status.code(), Some(1));
    assert_eq!(biasrb(&["analyze", "missing"], dir.path()).status.code(), Some(1));
    fs::write(dir.path().join("run.toml"), "protocol = \"brb\"\nseed = 1\n").unwrap();
    assert_eq!(biasrb(&["simulate-ibrb", "--config", "run.toml"], dir.path()).status.code(), Some(1));
    assert!(biasrb(&["--help"], dir.path()).status.success());
}

#[test]
fn small_sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "protocol = \"brb\"\nseed = 2\nchannels = 3\nshots = 200\nsequences = 20\nresamples = 10\ngrid = [1, 2, 4, 8, 16]\n";
    fs::write(dir.path().join("sweep.toml"), cfg).unwrap();
    let o = biasrb(&["sweep", "--config", "sweep.toml", "--out", "sw"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(dir.path().join("sw/summary.json").exists());
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = biasrb(&["verify"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 10);
}
