use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::pauli::superop::check_qubits;
use crate::pauli::{pauli_to_matrix, PauliOperator, Sign, C64};

/// Number of fresh attempts when the completion is not positive definite.
pub const MAX_RETRIES: usize = 100;

/// Inflation applied to the target probabilities of the random operators.
const SCALE: f64 = 10.0;

/// Targets for a random biased channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub n_qubits: usize,
    pub target_p_dephasing: f64,
    pub target_p_nondephasing: f64,
    /// Total number of Kraus operators, `1..=4^N`.
    pub d: usize,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn new(n_qubits: usize, target_p_dephasing: f64, target_p_nondephasing: f64, d: usize, seed: u64) -> Result<Self> {
        let spec = Self { n_qubits, target_p_dephasing, target_p_nondephasing, d, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n_qubits)?;
        let (pd, pnd) = (self.target_p_dephasing, self.target_p_nondephasing);
        if !(0.0..=1.0).contains(&pd) || !(0.0..=1.0).contains(&pnd) || pd + pnd >= 1.0 {
            return Err(Error::InvalidArgument(format!("targets ({pd}, {pnd}) must lie in [0, 1] with sum below 1")));
        }
        let max_d = 1usize << (2 * self.n_qubits);
        if self.d == 0 || self.d > max_d {
            return Err(Error::InvalidArgument(format!("d = {} outside 1..={max_d}", self.d)));
        }
        Ok(())
    }

    /// Mean measured `(p_D, p_ND)` of the recipe to first order: each of the
    /// `d - 1` random operators is dephasing with probability 1/2 and puts
    /// `10 p / d * E[r^2] = 10 p / (3 d)` on every Pauli it spans. The
    /// completion only adds second-order terms.
    pub fn expected_probabilities(&self) -> (f64, f64) {
        let q = (1usize << self.n_qubits) as f64;
        let per = (self.d - 1) as f64 * 0.5 * SCALE / (3.0 * self.d as f64);
        (per * self.target_p_dephasing * (q - 1.0), per * self.target_p_nondephasing * (q * q - q))
    }

    /// Generates the channel from the spec's own seed.
    pub fn generate(&self) -> Result<KrausChannel> {
        random_biased_channel(self, &mut ChaCha8Rng::seed_from_u64(self.seed))
    }
}

fn coefficient<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let r: f64 = rng.random();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    C64::from_polar(r, theta)
}

fn random_operator<R: Rng + ?Sized>(spec: &ChannelSpec, paulis: &[(usize, DMatrix<C64>)], rng: &mut R) -> DMatrix<C64> {
    let n = spec.n_qubits;
    let d = 1usize << n;
    let dephasing = rng.random_bool(0.5);
    let (p, keep): (f64, fn(usize, usize) -> bool) = if dephasing {
        (spec.target_p_dephasing, |k, n| k >> n == 0)
    } else {
        (spec.target_p_nondephasing, |k, n| k >> n != 0)
    };
    let mut k = DMatrix::zeros(d, d);
    for (idx, m) in paulis {
        if keep(*idx, n) {
            k += m * coefficient(rng);
        }
    }
    k * C64::new((SCALE * p / spec.d as f64).sqrt(), 0.0)
}

/// Random biased channel: `d - 1` random dephasing or non-dephasing
/// operators, completed by the Cholesky factor of `1 - sum K^dagger K`.
pub fn random_biased_channel<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> Result<KrausChannel> {
    spec.validate()?;
    let n = spec.n_qubits;
    let d = 1usize << n;
    let paulis: Vec<(usize, DMatrix<C64>)> = (0..d * d)
        .map(|k| {
            let p = PauliOperator::from_masks(n, k >> n, k & (d - 1), Sign::PlusOne).expect("index in range");
            (k, pauli_to_matrix(&p).into_matrix())
        })
        .collect();
    let mut min_eigenvalue = f64::NAN;
    for _ in 0..=MAX_RETRIES {
        let mut ops: Vec<DMatrix<C64>> = (1..spec.d).map(|_| random_operator(spec, &paulis, rng)).collect();
        let mut rest = DMatrix::<C64>::identity(d, d);
        for k in &ops {
            rest -= k.adjoint() * k;
        }
        let rest = (&rest + rest.adjoint()) * C64::new(0.5, 0.0);
        // complex Cholesky takes square roots of negative pivots without
        // failing, so definiteness is checked on the spectrum first
        min_eigenvalue = rest.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eigenvalue <= 0.0 {
            continue;
        }
        match rest.cholesky() {
            Some(chol) => {
                ops.push(chol.l().adjoint());
                let ch = KrausChannel::new_unchecked(n, ops);
                let violation = ch.trace_violation();
                if violation > 1e-12 {
                    return Err(Error::NotTracePreserving { violation });
                }
                return Ok(ch);
            }
            None => continue,
        }
    }
    Err(Error::ChannelGeneration { retries: MAX_RETRIES, min_eigenvalue })
}
