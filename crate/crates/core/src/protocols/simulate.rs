use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::groups::CnotDihedralElement;
use crate::pauli::superop::expectation;
use crate::pauli::{Superoperator, C64};

use super::noise::NoiseModel;
use super::records::SequenceResult;
use super::sequence::{GateKind, RBSequence};

/// Noise model lowered to column-stacking matrices; `None` marks an
/// identity channel.
#[derive(Clone, Debug)]
pub struct CompiledNoise {
    n_qubits: usize,
    gate: Option<DMatrix<C64>>,
    z_gate: Option<DMatrix<C64>>,
    cx: Option<DMatrix<C64>>,
    cx_prime: Option<DMatrix<C64>>,
    prep: Option<DMatrix<C64>>,
    meas: Option<DMatrix<C64>>,
    c: DMatrix<C64>,
    c_prime: DMatrix<C64>,
}

fn lower(ch: &KrausChannel) -> Option<DMatrix<C64>> {
    let d = 1usize << ch.n_qubits();
    let id = DMatrix::<C64>::identity(d, d);
    if ch.len() == 1 && crate::pauli::operator::phase_equal(&ch.ops()[0], &id, 0.0) {
        return None;
    }
    let s = Superoperator::from_kraus_column_stacking(ch.n_qubits(), ch.ops()).expect("validated channel");
    Some(s.into_matrix())
}

fn apply(s: &Option<DMatrix<C64>>, rho: DMatrix<C64>) -> DMatrix<C64> {
    match s {
        None => rho,
        Some(m) => {
            let d = rho.nrows();
            let v = m * DVector::from_column_slice(rho.as_slice());
            DMatrix::from_column_slice(d, d, v.as_slice())
        }
    }
}

fn conjugate(u: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    u * rho * u.adjoint()
}

impl CompiledNoise {
    pub fn new(noise: &NoiseModel) -> Result<Self> {
        noise.validate()?;
        let n = noise.n_qubits;
        let (c, c_prime) = if n >= 2 {
            (
                CnotDihedralElement::cx(n, 0, 1).to_unitary().into_matrix(),
                CnotDihedralElement::c_prime(n, 0, 1).to_unitary().into_matrix(),
            )
        } else {
            let d = 1usize << n;
            (DMatrix::identity(d, d), DMatrix::identity(d, d))
        };
        Ok(Self {
            n_qubits: n,
            gate: lower(&noise.gate),
            z_gate: lower(&noise.z_gate),
            cx: lower(&noise.cx),
            cx_prime: lower(&noise.cx_prime),
            prep: lower(&noise.prep),
            meas: lower(&noise.meas),
            c,
            c_prime,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

/// Noisy final state of a sequence, just before measurement noise.
fn evolve(seq: &RBSequence, noise: &CompiledNoise) -> Result<DMatrix<C64>> {
    if seq.n_qubits != noise.n_qubits {
        return Err(Error::DimensionMismatch { expected: noise.n_qubits, found: seq.n_qubits });
    }
    let mut rho = apply(&noise.prep, seq.preparation.density_matrix());
    for g in &seq.gates {
        rho = match g {
            GateKind::Dihedral(u) => apply(&noise.gate, conjugate(u.to_unitary().matrix(), &rho)),
            GateKind::ZGroup(beta) => {
                // Z(beta) rho Z(beta) flips the sign of entries with odd
                // parity difference
                let mut r = rho;
                for c in 0..r.ncols() {
                    for row in 0..r.nrows() {
                        if ((row ^ c) & beta).count_ones() % 2 == 1 {
                            r[(row, c)] = -r[(row, c)];
                        }
                    }
                }
                apply(&noise.z_gate, r)
            }
            GateKind::Cx => {
                if seq.n_qubits < 2 {
                    return Err(Error::InvalidArgument("CX needs two qubits".into()));
                }
                conjugate(&noise.c, &apply(&noise.cx, rho))
            }
            GateKind::CxPrime => {
                if seq.n_qubits < 2 {
                    return Err(Error::InvalidArgument("CX needs two qubits".into()));
                }
                conjugate(&noise.c_prime, &apply(&noise.cx_prime, rho))
            }
        };
    }
    Ok(apply(&noise.meas, rho))
}

/// Exact expectation of the sequence's observable, before weighting.
pub fn sequence_expectation(seq: &RBSequence, noise: &CompiledNoise) -> Result<f64> {
    let rho = evolve(seq, noise)?;
    expectation(&seq.preparation.observable_matrix(), &rho)
}

/// Samples `shots` `+-1` outcomes with `P(+1) = (1 + <E>) / 2`.
pub fn simulate_sequence<R: Rng + ?Sized>(
    seq: &RBSequence,
    noise: &CompiledNoise,
    shots: u32,
    sequence_id: u64,
    rng: &mut R,
) -> Result<SequenceResult> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let e = sequence_expectation(seq, noise)?;
    if e.abs() > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("expectation {e} outside [-1, 1]")));
    }
    let p = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots as u64, p).map_err(|err| Error::Numerical(err.to_string()))?.sample(rng);
    Ok(SequenceResult { sequence_id, weight: seq.weight, shots, outcome_sum: 2 * k as i64 - shots as i64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ChannelSpec;
    use crate::pauli::{pauli_to_matrix, PauliOperator};
    use crate::protocols::sequence::{brb_generate_sequence, ibrb_generate_sequence};
    use crate::protocols::Branch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent route: full Kraus evolution in the Schrodinger picture.
    fn kraus_expectation(seq: &RBSequence, noise: &NoiseModel) -> f64 {
        let apply_kraus = |ch: &KrausChannel, rho: &DMatrix<C64>| -> DMatrix<C64> {
            ch.ops().iter().fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| acc + k * rho * k.adjoint())
        };
        let n = seq.n_qubits;
        let mut rho = apply_kraus(&noise.prep, &seq.preparation.density_matrix());
        for g in &seq.gates {
            rho = match g {
                GateKind::Dihedral(u) => apply_kraus(&noise.gate, &conjugate(u.to_unitary().matrix(), &rho)),
                GateKind::ZGroup(beta) => {
                    let z = pauli_to_matrix(&PauliOperator::hermitian(n, 0, *beta).unwrap()).into_matrix();
                    apply_kraus(&noise.z_gate, &conjugate(&z, &rho))
                }
                GateKind::Cx => {
                    let c = CnotDihedralElement::cx(n, 0, 1).to_unitary().into_matrix();
                    conjugate(&c, &apply_kraus(&noise.cx, &rho))
                }
                GateKind::CxPrime => {
                    let c = CnotDihedralElement::c_prime(n, 0, 1).to_unitary().into_matrix();
                    conjugate(&c, &apply_kraus(&noise.cx_prime, &rho))
                }
            };
        }
        let rho = apply_kraus(&noise.meas, &rho);
        (seq.preparation.observable_matrix() * rho).trace().re
    }

    fn random_ibrb_noise(seed: u64) -> NoiseModel {
        let ch = |s: u64, pd, pnd| ChannelSpec::new(2, pd, pnd, 5, seed * 10 + s).unwrap().generate().unwrap();
        NoiseModel::ibrb(ch(1, 0.002, 1e-4), ch(2, 0.02, 1e-3), ch(3, 0.02, 2e-3), ch(4, 0.01, 0.005), ch(5, 0.01, 0.005))
            .unwrap()
    }

    #[test]
    fn noiseless_brb_survives() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = CompiledNoise::new(&NoiseModel::noiseless(2).unwrap()).unwrap();
        for b in Branch::BRB {
            for n in [1, 3, 8] {
                let seq = brb_generate_sequence(b, n, 2, &mut rng).unwrap();
                let e = sequence_expectation(&seq, &noise).unwrap();
                // the product is U_0, so the observable returns its character
                assert!((e * seq.weight as f64 - 1.0).abs() < 1e-12);
                let r = simulate_sequence(&seq, &noise, 50, 0, &mut rng).unwrap();
                assert_eq!(r.weighted_sum(), 50);
            }
        }
    }

    #[test]
    fn superoperator_route_matches_kraus_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = random_ibrb_noise(1);
        let compiled = CompiledNoise::new(&noise).unwrap();
        for b in Branch::IBRB {
            let seq = ibrb_generate_sequence(b, 3, &mut rng).unwrap();
            let a = sequence_expectation(&seq, &compiled).unwrap();
            assert!((a - kraus_expectation(&seq, &noise)).abs() < 1e-12);
        }
        let ch = ChannelSpec::new(2, 0.03, 0.003, 7, 2).unwrap().generate().unwrap();
        let id = KrausChannel::identity(2).unwrap();
        let noise = NoiseModel::brb(ch.clone(), ch, id).unwrap();
        let compiled = CompiledNoise::new(&noise).unwrap();
        for b in Branch::BRB {
            let seq = brb_generate_sequence(b, 4, 2, &mut rng).unwrap();
            let a = sequence_expectation(&seq, &compiled).unwrap();
            assert!((a - kraus_expectation(&seq, &noise)).abs() < 1e-12);
        }
    }

    #[test]
    fn shot_mean_converges_at_root_n_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let noise = random_ibrb_noise(2);
        let compiled = CompiledNoise::new(&noise).unwrap();
        let seq = ibrb_generate_sequence(Branch::OnePlus, 4, &mut rng).unwrap();
        let e = sequence_expectation(&seq, &compiled).unwrap();
        let sigma = (1.0 - e * e).sqrt();
        for shots in [100u32, 1600] {
            let reps = 100;
            let mut sq = 0.0;
            for id in 0..reps {
                let r = simulate_sequence(&seq, &compiled, shots, id, &mut rng).unwrap();
                let m = r.outcome_sum as f64 / shots as f64;
                sq += (m - e) * (m - e);
            }
            let rms = (sq / reps as f64).sqrt();
            let expect = sigma / (shots as f64).sqrt();
            assert!(rms > 0.7 * expect && rms < 1.3 * expect, "{shots}: {rms} vs {expect}");
        }
    }

    #[test]
    fn weighted_outcomes_have_unit_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let compiled = CompiledNoise::new(&random_ibrb_noise(3)).unwrap();
        let seq = ibrb_generate_sequence(Branch::TwoMinus, 2, &mut rng).unwrap();
        let r = simulate_sequence(&seq, &compiled, 1, 0, &mut rng).unwrap();
        assert_eq!(r.weighted_sum().abs(), 1);
        assert!(simulate_sequence(&seq, &compiled, 0, 0, &mut rng).is_err());
    }
}
