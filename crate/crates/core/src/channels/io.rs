use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelSpec, KrausChannel};
use crate::error::{Error, Result};
use crate::pauli::C64;

/// On-disk channel: Kraus matrices as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub n_qubits: usize,
    pub d: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ChannelSpec>,
}

impl ChannelFile {
    pub fn from_channel(channel: &KrausChannel, spec: Option<ChannelSpec>) -> Self {
        let kraus = channel
            .ops()
            .iter()
            .map(|k| (0..k.nrows()).map(|r| (0..k.ncols()).map(|c| [k[(r, c)].re, k[(r, c)].im]).collect()).collect())
            .collect();
        Self { n_qubits: channel.n_qubits(), d: channel.len(), kraus, spec }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        if self.kraus.len() != self.d {
            return Err(Error::Config(format!("d = {} but {} Kraus matrices present", self.d, self.kraus.len())));
        }
        let dim = 1usize << self.n_qubits;
        let mut ops = Vec::with_capacity(self.d);
        for m in &self.kraus {
            if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: m.len() });
            }
            ops.push(DMatrix::from_fn(dim, dim, |r, c| C64::new(m[r][c][0], m[r][c][1])));
        }
        KrausChannel::new(self.n_qubits, ops)
    }
}

/// Writes a channel as JSON. Floats use the shortest representation that
/// parses back to the identical bits (at most 17 significant digits).
pub fn write_channel(path: &Path, channel: &KrausChannel, spec: Option<ChannelSpec>) -> Result<()> {
    let mut text = serde_json::to_string(&ChannelFile::from_channel(channel, spec))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    read_channel_file(path)?.to_channel()
}

pub fn read_channel_file(path: &Path) -> Result<ChannelFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
