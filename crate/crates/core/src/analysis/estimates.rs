use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Bias;
use crate::protocols::Branch;

/// Point estimates before any clamping; `bias` is the raw ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub p_dephasing: f64,
    pub p_nondephasing: f64,
    pub bias: Bias,
}

impl BiasPoint {
    pub fn new(p_dephasing: f64, p_nondephasing: f64) -> Self {
        Self { p_dephasing, p_nondephasing, bias: Bias::ratio(p_dephasing, p_nondephasing) }
    }
}

/// Decay constants fitted for one branch; `kappa` is absent for the
/// single-decay rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPair {
    pub lambda: f64,
    pub kappa: Option<f64>,
}

/// Probabilities from the two CX-dihedral decay constants.
pub fn brb_estimates(lambda_1: f64, lambda_2: f64, n_qubits: usize) -> BiasPoint {
    let d = (1u64 << n_qubits) as f64;
    let pd = (d - 1.0) / (d * d) * (1.0 + (d - 1.0) * lambda_1 - d * lambda_2);
    let pnd = (d - 1.0) / d * (1.0 - lambda_1);
    BiasPoint::new(pd, pnd)
}

fn get(decays: &BTreeMap<Branch, DecayPair>, b: Branch) -> Result<DecayPair> {
    decays.get(&b).copied().ok_or_else(|| Error::InsufficientData(format!("missing branch {b}")))
}

fn kappa(decays: &BTreeMap<Branch, DecayPair>, b: Branch) -> Result<f64> {
    get(decays, b)?.kappa.ok_or_else(|| Error::InsufficientData(format!("branch {b} has no second decay")))
}

/// Probabilities of `(Lambda + Lambda') / 2` from the six interleaved rows.
pub fn ibrb_estimates(decays: &BTreeMap<Branch, DecayPair>) -> Result<BiasPoint> {
    use Branch::*;
    let l = |b| get(decays, b).map(|p| p.lambda);
    let trace_z = 1.0 + l(ZeroPlus)? + l(ZeroMinus)? - kappa(decays, ZeroMinus)?;
    let trace_pz = l(OnePlus)? + kappa(decays, OnePlus)? + l(OneMinus)? - kappa(decays, OneMinus)?
        + l(TwoPlus)?
        + kappa(decays, TwoPlus)?
        + l(TwoMinus)?
        + kappa(decays, TwoMinus)?
        + 4.0;
    // 16 p_D = 3 Tr_Z - Tr_(P\Z), 4 p_ND = 4 - Tr_Z
    let pd = (3.0 * trace_z - trace_pz) / 16.0;
    let pnd = 1.0 - trace_z / 4.0;
    Ok(BiasPoint::new(pd, pnd))
}
