use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bootstrap, fraction_within, reduced_chi2, BootstrapConfig};
use crate::channels::{ChannelSpec, KrausChannel};
use crate::error::{Error, Result};
use crate::protocols::{NoiseModel, Protocol, IBRB_QUBITS};
use crate::seeds::{child_rng, derive_seed, tag};

use super::config::{DEFAULT_BRB_GRID, DEFAULT_IBRB_GRID, DEFAULT_SEQUENCES, DEFAULT_SHOTS};
use super::run::{simulate_records, truth, RunPlan};

/// Random-channel ensemble and measurement budget of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub protocol: Protocol,
    pub n_qubits: usize,
    pub channels: usize,
    pub grid: Vec<usize>,
    pub shots: u32,
    pub sequences: usize,
    pub resamples: usize,
    pub seed: u64,
    /// Non-dephasing probabilities are log-spaced over this range.
    pub p_nondephasing_range: (f64, f64),
    /// Dephasing probabilities are uniform over this range.
    pub p_dephasing_range: (f64, f64),
    /// Kraus counts are uniform over this inclusive range.
    pub kraus_range: (usize, usize),
    /// Probabilities of the random preparation and measurement channels.
    pub spam: (f64, f64),
    /// When set, the ranges above are mean measured probabilities and the
    /// generator's targets are scaled down by its expected inflation;
    /// otherwise they are passed to the generator as is.
    pub calibrated: bool,
    /// Z-gate targets relative to the CX targets (interleaved only).
    pub z_gate_scale: f64,
}

impl SweepConfig {
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        Self {
            protocol,
            n_qubits: 2,
            channels: 50,
            grid: match protocol {
                Protocol::Brb => DEFAULT_BRB_GRID.to_vec(),
                Protocol::Ibrb => DEFAULT_IBRB_GRID.to_vec(),
            },
            shots: DEFAULT_SHOTS,
            sequences: DEFAULT_SEQUENCES,
            resamples: 50,
            seed,
            p_nondephasing_range: (1e-5, 1e-2),
            p_dephasing_range: (5e-3, 5e-2),
            kraus_range: (2, 16),
            spam: (0.01, 0.002),
            z_gate_scale: 0.1,
            calibrated: true,
        }
    }

    /// Parses a partial TOML table over the defaults of its `protocol`;
    /// `protocol` and `seed` are required.
    pub fn from_toml(text: &str) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
        let user: toml::Table = text.parse().map_err(|e| bad(&e))?;
        #[derive(Deserialize)]
        struct Head {
            protocol: Protocol,
            seed: u64,
        }
        let head: Head = user.clone().try_into().map_err(|e| bad(&e))?;
        let mut table = toml::Table::try_from(Self::new(head.protocol, head.seed)).map_err(|e| bad(&e))?;
        for (k, v) in user {
            if !table.contains_key(&k) {
                return Err(Error::Config(format!("unknown sweep key `{k}`")));
            }
            table.insert(k, v);
        }
        let c: Self = table.try_into().map_err(|e| bad(&e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::Config("sweep needs at least one channel".into()));
        }
        if self.sequences == 0 || !(self.shots as usize).is_multiple_of(self.sequences) {
            return Err(Error::Config("shots must split evenly over a positive number of sequences".into()));
        }
        if self.protocol == Protocol::Ibrb && self.n_qubits != IBRB_QUBITS {
            return Err(Error::Config(format!("the interleaved protocol acts on {IBRB_QUBITS} qubits")));
        }
        let (lo, hi) = self.p_nondephasing_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config("non-dephasing range must be positive and ordered".into()));
        }
        Ok(())
    }

    /// Non-dephasing target of channel `i`.
    pub fn p_nondephasing_target(&self, i: usize) -> f64 {
        let (lo, hi) = self.p_nondephasing_range;
        if self.channels == 1 {
            return lo;
        }
        let t = i as f64 / (self.channels - 1) as f64;
        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
    }

    /// Noise model of channel `i`.
    pub fn noise(&self, i: usize) -> Result<NoiseModel> {
        let mut rng = child_rng(self.seed, &[tag("channel"), i as u64]);
        let n = self.n_qubits;
        let pnd = self.p_nondephasing_target(i);
        let (a, b) = self.p_dephasing_range;
        let pd = a + (b - a) * rng.random::<f64>();
        let mut random = |pd: f64, pnd: f64| -> Result<KrausChannel> {
            let d = rng.random_range(self.kraus_range.0..=self.kraus_range.1.min(1 << (2 * n)));
            let seed = rng.random();
            let (mut pd, mut pnd) = (pd, pnd);
            if self.calibrated && d > 1 {
                let (ed, end) = ChannelSpec::new(n, 1e-3, 1e-3, d, seed)?.expected_probabilities();
                pd *= 1e-3 / ed;
                pnd *= 1e-3 / end;
            }
            ChannelSpec::new(n, pd, pnd, d, seed)?.generate()
        };
        let prep = random(self.spam.0, self.spam.1)?;
        let meas = random(self.spam.0, self.spam.1)?;
        match self.protocol {
            Protocol::Brb => NoiseModel::brb(random(pd, pnd)?, prep, meas),
            Protocol::Ibrb => {
                let s = self.z_gate_scale;
                let z = random(pd * s, pnd * s)?;
                NoiseModel::ibrb(z, random(pd, pnd)?, random(pd, pnd)?, prep, meas)
            }
        }
    }
}

/// One channel of the sweep: truth, estimate and bootstrap error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub channel: usize,
    pub truth_pd: f64,
    pub truth_pnd: f64,
    pub truth_bias: f64,
    pub est_pd: Option<f64>,
    pub est_pnd: Option<f64>,
    pub est_bias: Option<f64>,
    pub stderr_pd: Option<f64>,
    pub stderr_pnd: Option<f64>,
    pub stderr_bias: Option<f64>,
    pub error: Option<String>,
}

/// Reduced chi2 and 3-sigma coverage per quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub protocol: Protocol,
    pub channels: usize,
    pub failed: usize,
    pub chi2_pd: f64,
    pub chi2_pnd: f64,
    pub chi2_bias: f64,
    pub within3_pd: f64,
    pub within3_pnd: f64,
    pub within3_bias: f64,
}

fn run_channel(cfg: &SweepConfig, i: usize) -> Result<SweepRow> {
    let noise = cfg.noise(i)?;
    let t = truth(cfg.protocol, &noise)?;
    let mut row = SweepRow {
        channel: i,
        truth_pd: t.p_dephasing,
        truth_pnd: t.p_nondephasing,
        truth_bias: t.bias.value(),
        est_pd: None,
        est_pnd: None,
        est_bias: None,
        stderr_pd: None,
        stderr_pnd: None,
        stderr_bias: None,
        error: None,
    };
    let plan = RunPlan {
        protocol: cfg.protocol,
        n_qubits: cfg.n_qubits,
        grid: cfg.grid.clone(),
        sequences: cfg.sequences,
        shots_per_sequence: cfg.shots / cfg.sequences as u32,
        seed: derive_seed(cfg.seed, &[tag("simulate"), i as u64]),
    };
    let records = simulate_records(&plan, &noise)?;
    let bs = BootstrapConfig { resamples: cfg.resamples, seed: derive_seed(cfg.seed, &[tag("bootstrap"), i as u64]) };
    match bootstrap(cfg.protocol, cfg.n_qubits, &records, bs) {
        Ok(e) => {
            row.est_pd = Some(e.p_dephasing);
            row.est_pnd = Some(e.p_nondephasing);
            row.est_bias = Some(e.p_dephasing / e.p_nondephasing);
            row.stderr_pd = Some(e.stderr_pd);
            row.stderr_pnd = Some(e.stderr_pnd);
            row.stderr_bias = Some(e.stderr_bias);
        }
        Err(e) if e.is_numerical() || matches!(e, Error::InsufficientData(_)) => row.error = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn quantity(rows: &[SweepRow], f: impl Fn(&SweepRow) -> Option<(f64, f64, f64)>) -> (f64, f64) {
    // an infinite true bias (no non-dephasing error at all) has no residual
    let v: Vec<(f64, f64, f64)> =
        rows.iter().filter_map(f).filter(|t| t.0.is_finite() && t.1.is_finite() && t.2 > 0.0).collect();
    let est: Vec<f64> = v.iter().map(|t| t.0).collect();
    let tru: Vec<f64> = v.iter().map(|t| t.1).collect();
    let err: Vec<f64> = v.iter().map(|t| t.2).collect();
    (reduced_chi2(&est, &tru, &err).unwrap_or(f64::NAN), fraction_within(&est, &tru, &err, 3.0))
}

pub fn summarize(protocol: Protocol, rows: &[SweepRow]) -> SweepSummary {
    let (chi2_pd, within3_pd) = quantity(rows, |r| Some((r.est_pd?, r.truth_pd, r.stderr_pd?)));
    let (chi2_pnd, within3_pnd) = quantity(rows, |r| Some((r.est_pnd?, r.truth_pnd, r.stderr_pnd?)));
    let (chi2_bias, within3_bias) = quantity(rows, |r| Some((r.est_bias?, r.truth_bias, r.stderr_bias?)));
    SweepSummary {
        protocol,
        channels: rows.len(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        chi2_pd,
        chi2_pnd,
        chi2_bias,
        within3_pd,
        within3_pnd,
        within3_bias,
    }
}

/// Simulates and analyzes every channel of the ensemble.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(Vec<SweepRow>, SweepSummary)> {
    cfg.validate()?;
    let rows: Vec<SweepRow> = (0..cfg.channels).into_par_iter().map(|i| run_channel(cfg, i)).collect::<Result<_>>()?;
    let summary = summarize(cfg.protocol, &rows);
    Ok((rows, summary))
}

/// Writes `sweep.csv` (one row per channel) and `summary.json`.
pub fn write_sweep(dir: &Path, cfg: &SweepConfig, rows: &[SweepRow], summary: &SweepSummary) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Out<'a> {
        config: &'a SweepConfig,
        summary: &'a SweepSummary,
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&Out { config: cfg, summary })? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_are_log_spaced() {
        let c = SweepConfig::new(Protocol::Brb, 1);
        assert!((c.p_nondephasing_target(0) - 1e-5).abs() < 1e-18);
        assert!((c.p_nondephasing_target(49) - 1e-2).abs() < 1e-15);
        let r = c.p_nondephasing_target(2) / c.p_nondephasing_target(1);
        assert!((r - c.p_nondephasing_target(1) / c.p_nondephasing_target(0)).abs() < 1e-12);
    }

    #[test]
    fn channel_noise_is_deterministic() {
        let c = SweepConfig::new(Protocol::Ibrb, 4);
        assert_eq!(c.noise(3).unwrap(), c.noise(3).unwrap());
        assert_ne!(c.noise(3).unwrap(), c.noise(4).unwrap());
    }

    #[test]
    fn partial_toml_overrides_defaults() {
        let c = SweepConfig::from_toml("protocol = \"ibrb\"\nseed = 5\nchannels = 7\nspam = [0.0, 0.0]\n").unwrap();
        let mut expected = SweepConfig::new(Protocol::Ibrb, 5);
        expected.channels = 7;
        expected.spam = (0.0, 0.0);
        assert_eq!(c, expected);
        assert!(SweepConfig::from_toml("protocol = \"brb\"\n").is_err());
        assert!(SweepConfig::from_toml("protocol = \"brb\"\nseed = 1\nchanels = 3\n").is_err());
        assert!(SweepConfig::from_toml("protocol = \"brb\"\nseed = 1\nshots = 999\n").is_err());
    }

    #[test]
    fn small_sweep_runs() {
        let mut c = SweepConfig::new(Protocol::Brb, 2);
        c.channels = 3;
        c.shots = 200;
        c.sequences = 20;
        c.resamples = 10;
        c.grid = vec![1, 2, 4, 8, 16];
        let (rows, summary) = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(summary.channels, 3);
        let dir = tempfile::tempdir().unwrap();
        write_sweep(dir.path(), &c, &rows, &summary).unwrap();
        assert!(dir.path().join("sweep.csv").exists());
        assert_eq!(run_sweep(&c).unwrap().0, rows);
    }
}
