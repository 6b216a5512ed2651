use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::{read_channel, ChannelSpec, KrausChannel};
use crate::error::{Error, Result};
use crate::protocols::{NoiseModel, Protocol, IBRB_QUBITS};

pub const DEFAULT_BRB_GRID: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];
pub const DEFAULT_IBRB_GRID: [usize; 8] = [1, 2, 5, 6, 11, 12, 21, 22];
pub const DEFAULT_SHOTS: u32 = 5000;
pub const DEFAULT_SEQUENCES: usize = 250;

/// Where a noise channel comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSource {
    File { file: PathBuf },
    Spec { p_dephasing: f64, p_nondephasing: f64, d: usize, seed: u64 },
}

impl ChannelSource {
    /// Loads or generates the channel; relative paths resolve against `base`.
    pub fn load(&self, n_qubits: usize, base: &Path) -> Result<KrausChannel> {
        match self {
            ChannelSource::File { file } => {
                let path = if file.is_absolute() { file.clone() } else { base.join(file) };
                let ch = read_channel(&path)?;
                if ch.n_qubits() != n_qubits {
                    return Err(Error::Config(format!(
                        "{} acts on {} qubits, expected {n_qubits}",
                        path.display(),
                        ch.n_qubits()
                    )));
                }
                Ok(ch)
            }
            ChannelSource::Spec { p_dephasing, p_nondephasing, d, seed } => {
                ChannelSpec::new(n_qubits, *p_dephasing, *p_nondephasing, *d, *seed)?.generate()
            }
        }
    }
}

/// Noise slots; absent slots are noiseless.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub gate: Option<ChannelSource>,
    pub z_gate: Option<ChannelSource>,
    pub cx: Option<ChannelSource>,
    pub cx_prime: Option<ChannelSource>,
    pub prep: Option<ChannelSource>,
    pub meas: Option<ChannelSource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    #[serde(default)]
    pub grid: Vec<usize>,
    /// Measurements per `(b, n)` point, split evenly over the sequences.
    #[serde(default = "default_shots")]
    pub shots: u32,
    #[serde(default = "default_sequences")]
    pub sequences: usize,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub noise: NoiseConfig,
}

fn default_qubits() -> usize {
    2
}
fn default_shots() -> u32 {
    DEFAULT_SHOTS
}
fn default_sequences() -> usize {
    DEFAULT_SEQUENCES
}
fn default_resamples() -> usize {
    crate::analysis::bootstrap::DEFAULT_RESAMPLES
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol, n_qubits: usize, seed: u64) -> Self {
        Self {
            protocol,
            n_qubits,
            grid: Vec::new(),
            shots: DEFAULT_SHOTS,
            sequences: DEFAULT_SEQUENCES,
            resamples: default_resamples(),
            seed,
            out: default_out(),
            noise: NoiseConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.fill_defaults();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn fill_defaults(&mut self) {
        if self.grid.is_empty() {
            self.grid = match self.protocol {
                Protocol::Brb => DEFAULT_BRB_GRID.to_vec(),
                Protocol::Ibrb => DEFAULT_IBRB_GRID.to_vec(),
            };
        }
    }

    /// Measurements per sequence.
    pub fn shots_per_sequence(&self) -> u32 {
        self.shots / self.sequences as u32
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sequence-length grid is empty".into()));
        }
        if self.grid.contains(&0) {
            return Err(Error::Config("sequence lengths must be at least 1".into()));
        }
        if self.protocol == Protocol::Ibrb {
            if self.n_qubits != IBRB_QUBITS {
                return Err(Error::Config(format!("the interleaved protocol acts on {IBRB_QUBITS} qubits")));
            }
            if !self.grid.iter().any(|n| n % 2 == 0) || !self.grid.iter().any(|n| n % 2 == 1) {
                return Err(Error::Config("interleaved grid needs both even and odd lengths".into()));
            }
        }
        crate::pauli::superop::check_qubits(self.n_qubits).map_err(|e| Error::Config(e.to_string()))?;
        if self.sequences == 0 || self.shots == 0 {
            return Err(Error::Config("shots and sequences must be positive".into()));
        }
        if !(self.shots as usize).is_multiple_of(self.sequences) {
            return Err(Error::Config(format!(
                "{} shots do not split evenly over {} sequences",
                self.shots, self.sequences
            )));
        }
        Ok(())
    }

    /// Builds the noise model; file paths resolve against `base`.
    pub fn noise_model(&self, base: &Path) -> Result<NoiseModel> {
        let mut m = NoiseModel::noiseless(self.n_qubits)?;
        let slots = [
            ("gate", &self.noise.gate),
            ("z_gate", &self.noise.z_gate),
            ("cx", &self.noise.cx),
            ("cx_prime", &self.noise.cx_prime),
            ("prep", &self.noise.prep),
            ("meas", &self.noise.meas),
        ];
        for (name, src) in slots {
            if let Some(src) = src {
                *m.slot_mut(name)? = src.load(self.n_qubits, base)?;
            }
        }
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml("protocol = \"brb\"\nseed = 3\n").unwrap();
        assert_eq!(c.grid, DEFAULT_BRB_GRID.to_vec());
        assert_eq!(c.shots_per_sequence(), 20);
        let text = r#"
            protocol = "ibrb"
            seed = 1
            grid = [1, 2, 3]
            shots = 100
            sequences = 10
            [noise.cx]
            p_dephasing = 0.02
            p_nondephasing = 1e-4
            d = 4
            seed = 9
            [noise.meas]
            file = "meas.json"
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.noise.meas, Some(ChannelSource::File { file: "meas.json".into() }));
        assert!(matches!(c.noise.cx, Some(ChannelSource::Spec { d: 4, .. })));
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_single_parity_interleaved_grids() {
        for grid in ["[2, 4, 6]", "[1, 3, 5]", "[]"] {
            let text = format!("protocol = \"ibrb\"\nseed = 1\ngrid = {grid}\n");
            let r = ExperimentConfig::from_toml(&text);
            if grid == "[]" {
                // an empty grid falls back to the default
                assert!(r.is_ok());
            } else {
                assert!(matches!(r, Err(Error::Config(_))), "{grid}");
            }
        }
        assert!(ExperimentConfig::from_toml("protocol = \"brb\"\n").is_err());
        assert!(ExperimentConfig::from_toml("protocol = \"brb\"\nseed = 1\nshots = 10\nsequences = 3\n").is_err());
    }

    #[test]
    fn builds_noise_model() {
        let dir = tempfile::tempdir().unwrap();
        let ch = ChannelSpec::new(2, 0.01, 1e-3, 3, 5).unwrap().generate().unwrap();
        crate::channels::write_channel(&dir.path().join("g.json"), &ch, None).unwrap();
        let text = "protocol = \"brb\"\nseed = 1\n[noise.gate]\nfile = \"g.json\"\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        let m = c.noise_model(dir.path()).unwrap();
        assert_eq!(m.gate, ch);
        assert_eq!(m.meas, KrausChannel::identity(2).unwrap());
    }
}
