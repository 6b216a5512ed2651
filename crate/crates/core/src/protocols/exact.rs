use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::groups::CnotDihedralElement;
use crate::pauli::superop::pauli_basis_matrix;
use crate::pauli::{subspace_traces, Superoperator, C64};

use super::noise::NoiseModel;
use super::{Branch, Preparation, Protocol, IBRB_QUBITS};

/// Real transfer matrix of a channel.
fn ptm(ch: &KrausChannel) -> DMatrix<f64> {
    ch.superoperator().ptm()
}

/// Pauli-basis vector of a Hermitian operator, `tr(P_k A) / sqrt(d)`.
fn pauli_vector(n_qubits: usize, a: &DMatrix<C64>) -> DVector<f64> {
    let b = pauli_basis_matrix(n_qubits);
    (b.adjoint() * DVector::from_column_slice(a.as_slice())).map(|z| z.re)
}

/// `(lambda_1, lambda_2)` from the subspace traces of the gate noise.
pub fn brb_exact_decay(gate_noise: &KrausChannel) -> (f64, f64) {
    let n = gate_noise.n_qubits();
    let d = (1u64 << n) as f64;
    let (tz, tpz) = subspace_traces(&gate_noise.superoperator());
    ((tz - 1.0) / (d - 1.0), tpz / (d * d - d))
}

fn brb_decay_for(branch: Branch, gate_noise: &KrausChannel) -> Result<f64> {
    let (l1, l2) = brb_exact_decay(gate_noise);
    match branch {
        Branch::Brb1 => Ok(l1),
        Branch::Brb2 => Ok(l2),
        other => Err(Error::InvalidArgument(format!("branch {other} is not a CX-dihedral branch"))),
    }
}

/// `A_b = <<E| Lambda_M Lambda Pi_b Lambda_P |rho>>` with `Pi_b` the
/// projector onto `Z...Z` (b = 1) or `X...X` (b = 2).
pub fn brb_prefactor(noise: &NoiseModel, branch: Branch) -> Result<f64> {
    let n = noise.n_qubits;
    let d = 1usize << n;
    let k = match branch {
        Branch::Brb1 => d - 1,
        Branch::Brb2 => (d - 1) << n,
        other => return Err(Error::InvalidArgument(format!("branch {other} is not a CX-dihedral branch"))),
    };
    let prep = &branch.preparations(n)[0];
    let left = pauli_vector(n, &prep.observable_matrix()).transpose() * ptm(&noise.meas) * ptm(&noise.gate);
    let right = ptm(&noise.prep) * pauli_vector(n, &prep.density_matrix());
    Ok(left[k] * right[k])
}

/// Infinite-shot, group-averaged survival `A_b lambda_b^n`.
pub fn brb_exact_survival(noise: &NoiseModel, branch: Branch, n: usize) -> Result<f64> {
    Ok(brb_prefactor(noise, branch)? * brb_decay_for(branch, &noise.gate)?.powi(n as i32))
}

/// Pauli-basis indices of the Z-group sector with X part `alpha`.
fn sector(alpha: usize) -> Vec<usize> {
    (0..1usize << IBRB_QUBITS).map(|beta| (alpha << IBRB_QUBITS) | beta).collect()
}

/// Sectors sandwiching the step operator: `(outer, inner)`.
fn sectors(branch: Branch) -> Result<(usize, usize)> {
    Ok(match branch {
        Branch::ZeroPlus | Branch::ZeroMinus => (0, 0),
        Branch::OnePlus | Branch::OneMinus => (1, 1),
        Branch::TwoPlus | Branch::TwoMinus => (2, 3),
        other => return Err(Error::InvalidArgument(format!("branch {other} is not an interleaved branch"))),
    })
}

/// Transfer matrix of one averaged step,
/// `(C Lambda_C Lambda_G +- C' Lambda_C' Lambda_G) / 2`.
pub fn ibrb_transfer(noise: &NoiseModel, minus: bool) -> Result<DMatrix<f64>> {
    if noise.n_qubits != IBRB_QUBITS {
        return Err(Error::DimensionMismatch { expected: IBRB_QUBITS, found: noise.n_qubits });
    }
    let (l, lp) = noise.composite()?;
    let c = Superoperator::from_unitary(&CnotDihedralElement::cx(2, 0, 1).to_unitary())?;
    let cp = Superoperator::from_unitary(&CnotDihedralElement::c_prime(2, 0, 1).to_unitary())?;
    let a = c.compose(&l)?.ptm();
    let b = cp.compose(&lp)?.ptm();
    let s = if minus { -1.0 } else { 1.0 };
    Ok((a + b * s) * 0.5)
}

/// `M_b` restricted to its `4 x 4` sector block.
fn step_block(noise: &NoiseModel, branch: Branch) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let (outer, inner) = sectors(branch)?;
    let t = ibrb_transfer(noise, branch.is_minus())?;
    let o = sector(outer);
    let pick = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| t[(rows[i], cols[j])]);
    let block = if outer == inner { pick(&o, &o) } else { pick(&o, &sector(inner)) * pick(&sector(inner), &o) };
    Ok((o, block))
}

/// Leading decay constants of one interleaved branch and the two
/// eigenvalues the fit neglects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrbDecay {
    pub lambda: C64,
    pub kappa: C64,
    pub neglected: [C64; 2],
}

fn by_magnitude(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)));
    v
}

/// Eigen-structure of every `M_b`. For `0+` the eigenvalue fixed at 1 by
/// trace preservation is `kappa`; elsewhere the two largest-magnitude
/// eigenvalues are ordered so that `Re(lambda) >= Re(kappa)`.
pub fn ibrb_exact_decays(noise: &NoiseModel) -> Result<BTreeMap<Branch, IbrbDecay>> {
    let mut out = BTreeMap::new();
    for b in Branch::IBRB {
        let (_, block) = step_block(noise, b)?;
        let decay = if b == Branch::ZeroPlus {
            let rest = block.view((1, 1), (3, 3)).into_owned();
            let ev = by_magnitude(rest.complex_eigenvalues().iter().cloned().collect());
            IbrbDecay { lambda: ev[0], kappa: C64::new(1.0, 0.0), neglected: [ev[1], ev[2]] }
        } else {
            let ev = by_magnitude(block.complex_eigenvalues().iter().cloned().collect());
            let (lambda, kappa) = if ev[0].re >= ev[1].re { (ev[0], ev[1]) } else { (ev[1], ev[0]) };
            IbrbDecay { lambda, kappa, neglected: [ev[2], ev[3]] }
        };
        out.insert(b, decay);
    }
    Ok(out)
}

/// Weighted-average left and right boundary vectors restricted to the
/// branch sector, one pair per preparation.
fn boundaries(noise: &NoiseModel, branch: Branch, idx: &[usize]) -> Vec<(f64, DVector<f64>, DVector<f64>)> {
    let n = IBRB_QUBITS;
    let left_map = ptm(&noise.meas) * ptm(&noise.z_gate);
    let prep_map = ptm(&noise.prep);
    branch
        .preparations(n)
        .iter()
        .map(|p: &Preparation| {
            let l = left_map.transpose() * pauli_vector(n, &p.observable_matrix());
            let r = &prep_map * pauli_vector(n, &p.density_matrix());
            let pick = |v: &DVector<f64>| DVector::from_iterator(idx.len(), idx.iter().map(|&k| v[k]));
            (p.weight as f64, pick(&l), pick(&r))
        })
        .collect()
}

/// Infinite-shot survival `<<E| Lambda_M Lambda_G M_b^n Lambda_P |rho>>`
/// averaged over the branch's preparations.
pub fn ibrb_exact_survival(noise: &NoiseModel, branch: Branch, n: usize) -> Result<f64> {
    let (idx, block) = step_block(noise, branch)?;
    let power = block.pow(n as u32);
    let ends = boundaries(noise, branch, &idx);
    let total: f64 = ends.iter().map(|(w, l, r)| w * l.dot(&(&power * r))).sum();
    Ok(total / ends.len() as f64)
}

/// One exponential in `S_b(n) = sum_j c_j mu_j^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTerm {
    pub mu: C64,
    pub coefficient: C64,
}

/// Right eigenvector for eigenvalue `mu`: the right singular vector of
/// `B - mu` with the smallest singular value.
fn eigenvector(b: &DMatrix<C64>, mu: C64) -> DVector<C64> {
    let m = b - DMatrix::identity(b.nrows(), b.ncols()) * mu;
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (k, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    vt.row(k).adjoint()
}

/// Spectral decomposition of the exact survival of one branch.
pub fn ibrb_decay_terms(noise: &NoiseModel, branch: Branch) -> Result<Vec<DecayTerm>> {
    let (idx, block) = step_block(noise, branch)?;
    let bc = block.map(|x| C64::new(x, 0.0));
    let mus: Vec<C64> = block.complex_eigenvalues().iter().cloned().collect();
    let cols: Vec<DVector<C64>> = mus.iter().map(|&mu| eigenvector(&bc, mu)).collect();
    let v = DMatrix::from_columns(&cols);
    let vinv = v.clone().try_inverse().ok_or_else(|| Error::Numerical("step operator is not diagonalizable".into()))?;
    if crate::pauli::operator::max_abs(&(&v * &vinv - DMatrix::identity(4, 4))) > 1e-8 {
        return Err(Error::Numerical("eigenvector matrix is ill-conditioned".into()));
    }
    let ends = boundaries(noise, branch, &idx);
    let mut coeffs = vec![C64::new(0.0, 0.0); mus.len()];
    for (w, l, r) in &ends {
        let lc = l.map(|x| C64::new(x, 0.0)).transpose() * &v;
        let rc = &vinv * r.map(|x| C64::new(x, 0.0));
        for j in 0..mus.len() {
            coeffs[j] += lc[j] * rc[j] * *w / ends.len() as f64;
        }
    }
    Ok(mus.into_iter().zip(coeffs).map(|(mu, coefficient)| DecayTerm { mu, coefficient }).collect())
}

/// Survival from a decomposition.
pub fn evaluate_terms(terms: &[DecayTerm], n: usize) -> f64 {
    terms.iter().map(|t| t.coefficient * t.mu.powu(n as u32)).sum::<C64>().re
}

/// Exact survival for either protocol.
pub fn exact_survival(noise: &NoiseModel, branch: Branch, n: usize) -> Result<f64> {
    match branch.protocol() {
        Protocol::Brb => brb_exact_survival(noise, branch, n),
        Protocol::Ibrb => ibrb_exact_survival(noise, branch, n),
    }
}
