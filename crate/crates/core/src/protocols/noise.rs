use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::pauli::superop::check_qubits;
use crate::pauli::{Superoperator, TRACE_TOLERANCE};

use super::IBRB_QUBITS;

/// Gate-independent noise for both protocols.
///
/// The CX-dihedral protocol applies `gate` after every group element. The
/// interleaved protocol applies `z_gate` after every Z-group gate and
/// `cx` / `cx_prime` before the corresponding CX-type gate. `prep` acts
/// after state preparation and `meas` before measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub n_qubits: usize,
    pub gate: KrausChannel,
    pub z_gate: KrausChannel,
    pub cx: KrausChannel,
    pub cx_prime: KrausChannel,
    pub prep: KrausChannel,
    pub meas: KrausChannel,
}

/// Names of the channel slots, in file order.
pub const SLOTS: [&str; 6] = ["gate", "z_gate", "cx", "cx_prime", "prep", "meas"];

impl NoiseModel {
    pub fn noiseless(n_qubits: usize) -> Result<Self> {
        let id = KrausChannel::identity(n_qubits)?;
        Ok(Self {
            n_qubits,
            gate: id.clone(),
            z_gate: id.clone(),
            cx: id.clone(),
            cx_prime: id.clone(),
            prep: id.clone(),
            meas: id,
        })
    }

    pub fn brb(gate: KrausChannel, prep: KrausChannel, meas: KrausChannel) -> Result<Self> {
        let mut m = Self::noiseless(gate.n_qubits())?;
        m.gate = gate;
        m.prep = prep;
        m.meas = meas;
        m.validate()?;
        Ok(m)
    }

    pub fn ibrb(
        z_gate: KrausChannel,
        cx: KrausChannel,
        cx_prime: KrausChannel,
        prep: KrausChannel,
        meas: KrausChannel,
    ) -> Result<Self> {
        let mut m = Self::noiseless(IBRB_QUBITS)?;
        m.z_gate = z_gate;
        m.cx = cx;
        m.cx_prime = cx_prime;
        m.prep = prep;
        m.meas = meas;
        m.validate()?;
        Ok(m)
    }

    pub fn channels(&self) -> [(&'static str, &KrausChannel); 6] {
        [
            (SLOTS[0], &self.gate),
            (SLOTS[1], &self.z_gate),
            (SLOTS[2], &self.cx),
            (SLOTS[3], &self.cx_prime),
            (SLOTS[4], &self.prep),
            (SLOTS[5], &self.meas),
        ]
    }

    pub fn slot_mut(&mut self, name: &str) -> Result<&mut KrausChannel> {
        Ok(match name {
            "gate" => &mut self.gate,
            "z_gate" => &mut self.z_gate,
            "cx" => &mut self.cx,
            "cx_prime" => &mut self.cx_prime,
            "prep" => &mut self.prep,
            "meas" => &mut self.meas,
            other => return Err(Error::InvalidArgument(format!("unknown noise slot {other:?}"))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n_qubits)?;
        for (name, ch) in self.channels() {
            if ch.n_qubits() != self.n_qubits {
                return Err(Error::Config(format!(
                    "{name} channel acts on {} qubits, model on {}",
                    ch.n_qubits(),
                    self.n_qubits
                )));
            }
            let violation = ch.trace_violation();
            if violation > TRACE_TOLERANCE {
                return Err(Error::NotTracePreserving { violation });
            }
        }
        Ok(())
    }

    /// `Lambda = Lambda_C o Lambda_G` and `Lambda' = Lambda_C' o Lambda_G`.
    pub fn composite(&self) -> Result<(Superoperator, Superoperator)> {
        let g = self.z_gate.superoperator();
        Ok((self.cx.superoperator().compose(&g)?, self.cx_prime.superoperator().compose(&g)?))
    }

    /// `(Lambda + Lambda') / 2`, the channel the interleaved protocol
    /// characterizes.
    pub fn averaged_composite(&self) -> Result<KrausChannel> {
        let (a, b) = self.composite()?;
        let ka = KrausChannel::from_superoperator(&a)?;
        let kb = KrausChannel::from_superoperator(&b)?;
        ka.mixture(&kb, 0.5)
    }
}
