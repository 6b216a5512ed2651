use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Bias;
use crate::protocols::{Branch, Protocol, SurvivalRecord};
use crate::seeds::child_rng;

use super::estimates::{brb_estimates, ibrb_estimates, BiasPoint, DecayPair};
use super::fit::{fit_decay, DecayFit, DecayModel, FitPoint, KappaHint};
use super::stats::std_dev;

pub const DEFAULT_RESAMPLES: usize = 50;
/// Largest tolerated fraction of resamples that fail to fit.
pub const MAX_FAILED_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: DEFAULT_RESAMPLES, seed: 0 }
    }
}

/// Point estimates with bootstrap standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub p_dephasing: f64,
    pub p_nondephasing: f64,
    pub bias: Bias,
    pub stderr_pd: f64,
    pub stderr_pnd: f64,
    pub stderr_bias: f64,
    pub n_resamples: usize,
    pub failed_resamples: usize,
}

/// Fits of every branch and the estimate derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordFit {
    pub point: BiasPoint,
    pub fits: BTreeMap<Branch, DecayFit>,
}

/// Fit model and starting sign for each branch.
///
/// The constant of `0+` multiplies the trace-preservation eigenvector, whose
/// weight is `Tr(Lambda_P(rho)) / 2 = Tr(rho) / 2 = 0` for the signed
/// preparation, so `0+` is fitted without it. Leaving it free makes
/// `lambda_0+` unidentifiable once the curve is nearly flat.
///
/// In `1+` and `2+-` both decays sit near 1 with weights near 1/2 and only
/// their sum enters the estimator. With free weights the data cannot pin
/// the sum, so these branches share one weight.
pub fn branch_model(b: Branch) -> (DecayModel, KappaHint) {
    match b {
        Branch::Brb1 | Branch::Brb2 | Branch::ZeroPlus => (DecayModel::SingleExp, KappaHint::Positive),
        Branch::ZeroMinus | Branch::OneMinus => (DecayModel::DoubleExp, KappaHint::Negative),
        Branch::OnePlus | Branch::TwoPlus | Branch::TwoMinus => (DecayModel::EqualPair, KappaHint::Positive),
    }
}

/// Merges records of the same `(b, n)` and sorts sequences canonically.
fn canonical(records: &[SurvivalRecord]) -> BTreeMap<(Branch, usize), SurvivalRecord> {
    let mut out: BTreeMap<(Branch, usize), SurvivalRecord> = BTreeMap::new();
    for r in records {
        out.entry((r.branch, r.n)).or_insert_with(|| SurvivalRecord::new(r.branch, r.n)).merge(r.clone());
    }
    for r in out.values_mut() {
        r.sequences.sort_unstable();
    }
    out
}

fn fit_all(protocol: Protocol, n_qubits: usize, grouped: &BTreeMap<(Branch, usize), SurvivalRecord>) -> Result<RecordFit> {
    let mut fits = BTreeMap::new();
    for &b in protocol.branches() {
        let points: Vec<FitPoint> = grouped
            .iter()
            .filter(|((rb, _), r)| *rb == b && r.shots() > 0)
            .map(|((_, n), r)| FitPoint { n: *n, s: r.weighted_mean(), weight: r.shots() as f64 })
            .collect();
        if points.is_empty() {
            return Err(Error::InsufficientData(format!("no data for branch {b}")));
        }
        let (model, hint) = branch_model(b);
        fits.insert(b, fit_decay(&points, model, hint)?);
    }
    let point = match protocol {
        Protocol::Brb => brb_estimates(fits[&Branch::Brb1].lambda, fits[&Branch::Brb2].lambda, n_qubits),
        Protocol::Ibrb => {
            let pairs: BTreeMap<Branch, DecayPair> =
                fits.iter().map(|(b, f)| (*b, DecayPair { lambda: f.lambda, kappa: f.kappa })).collect();
            ibrb_estimates(&pairs)?
        }
    };
    Ok(RecordFit { point, fits })
}

/// Fits every branch of the protocol and applies the matching estimator.
pub fn estimate_from_records(protocol: Protocol, n_qubits: usize, records: &[SurvivalRecord]) -> Result<RecordFit> {
    fit_all(protocol, n_qubits, &canonical(records))
}

fn resample<R: Rng + ?Sized>(
    grouped: &BTreeMap<(Branch, usize), SurvivalRecord>,
    rng: &mut R,
) -> BTreeMap<(Branch, usize), SurvivalRecord> {
    grouped
        .iter()
        .map(|(k, r)| {
            let m = r.sequences.len();
            let sequences = (0..m).map(|_| r.sequences[rng.random_range(0..m)]).collect();
            (*k, SurvivalRecord { branch: r.branch, n: r.n, sequences })
        })
        .collect()
}

/// Resamples sequences with replacement within each `(b, n)`, refits and
/// reports the standard deviation of the re-estimated quantities.
pub fn bootstrap(
    protocol: Protocol,
    n_qubits: usize,
    records: &[SurvivalRecord],
    config: BootstrapConfig,
) -> Result<BiasEstimate> {
    let grouped = canonical(records);
    let base = fit_all(protocol, n_qubits, &grouped)?;
    let draws: Vec<Option<BiasPoint>> = (0..config.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = child_rng(config.seed, &[r as u64]);
            fit_all(protocol, n_qubits, &resample(&grouped, &mut rng)).ok().map(|f| f.point)
        })
        .collect();
    let ok: Vec<BiasPoint> = draws.iter().flatten().copied().collect();
    let failed = config.resamples - ok.len();
    if config.resamples > 0 && failed as f64 > MAX_FAILED_FRACTION * config.resamples as f64 {
        return Err(Error::BootstrapDegenerate { failed, total: config.resamples });
    }
    let pd: Vec<f64> = ok.iter().map(|p| p.p_dephasing).collect();
    let pnd: Vec<f64> = ok.iter().map(|p| p.p_nondephasing).collect();
    let ratios: Vec<f64> =
        ok.iter().map(|p| p.p_dephasing / p.p_nondephasing).filter(|x| x.is_finite()).collect();
    Ok(BiasEstimate {
        p_dephasing: base.point.p_dephasing,
        p_nondephasing: base.point.p_nondephasing,
        bias: base.point.bias,
        stderr_pd: std_dev(&pd),
        stderr_pnd: std_dev(&pnd),
        stderr_bias: std_dev(&ratios),
        n_resamples: ok.len(),
        failed_resamples: failed,
    })
}
