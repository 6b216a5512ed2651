//! Kraus channels, random biased channels, Z twirling, composition bounds
//! and the channel file format.

pub mod bounds;
pub mod io;
pub mod random;
pub mod twirl;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::operator::max_abs;
use crate::pauli::superop::check_qubits;
use crate::pauli::{pauli_to_matrix, DenseUnitary, PauliOperator, Superoperator, C64, TRACE_TOLERANCE};

pub use bounds::{composition_nd_bound, interleaved_estimate, ErrorProbabilities};
pub use io::{read_channel, write_channel};
pub use random::{random_biased_channel, ChannelSpec};
pub use twirl::z_twirl;

/// Eigenvalues of the Choi matrix below this fraction of its trace are
/// dropped when extracting Kraus operators.
const CHOI_CUTOFF: f64 = 1e-14;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    n_qubits: usize,
    ops: Vec<DMatrix<C64>>,
}

impl KrausChannel {
    pub fn new(n_qubits: usize, ops: Vec<DMatrix<C64>>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1usize << n_qubits;
        if ops.is_empty() || ops.len() > d * d {
            return Err(Error::InvalidArgument(format!("{} Kraus operators; expected 1..={}", ops.len(), d * d)));
        }
        for k in &ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
        }
        let ch = Self { n_qubits, ops };
        let violation = ch.trace_violation();
        if violation > TRACE_TOLERANCE {
            return Err(Error::NotTracePreserving { violation });
        }
        Ok(ch)
    }

    /// No validation; used to exercise diagnostics downstream.
    pub fn new_unchecked(n_qubits: usize, ops: Vec<DMatrix<C64>>) -> Self {
        Self { n_qubits, ops }
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1usize << n_qubits;
        Ok(Self { n_qubits, ops: vec![DMatrix::identity(d, d)] })
    }

    pub fn unitary(u: &DenseUnitary) -> Self {
        Self { n_qubits: u.n_qubits(), ops: vec![u.matrix().clone()] }
    }

    /// Pauli channel from `(label, probability)` terms, e.g. `("XZ", 0.01)`.
    pub fn from_pauli_probabilities(n_qubits: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let mut ops = Vec::with_capacity(terms.len());
        for &(label, p) in terms {
            let op = PauliOperator::from_label(label)?;
            if op.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch { expected: n_qubits, found: op.n_qubits() });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
            }
            if p > 0.0 {
                ops.push(pauli_to_matrix(&op).into_matrix() * C64::new(p.sqrt(), 0.0));
            }
        }
        Self::new(n_qubits, ops)
    }

    /// Pauli channel from a full probability vector indexed by
    /// `(alpha << n) | beta`.
    pub fn from_pauli_distribution(n_qubits: usize, probs: &[f64]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1usize << n_qubits;
        if probs.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: probs.len() });
        }
        let ops = probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| {
                let op = PauliOperator::hermitian(n_qubits, k >> n_qubits, k & (d - 1)).expect("index in range");
                pauli_to_matrix(&op).into_matrix() * C64::new(p.sqrt(), 0.0)
            })
            .collect();
        Self::new(n_qubits, ops)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[DMatrix<C64>] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Max-abs entry of `sum K^dagger K - 1`.
    pub fn trace_violation(&self) -> f64 {
        let d = 1usize << self.n_qubits;
        let mut acc = -DMatrix::<C64>::identity(d, d);
        for k in &self.ops {
            acc += k.adjoint() * k;
        }
        max_abs(&acc)
    }

    /// Transfer matrix.
    pub fn superoperator(&self) -> Superoperator {
        Superoperator::from_kraus(self.n_qubits, &self.ops).expect("validated dimensions")
    }

    /// `self o other`: `other` acts first. Kraus products are compressed back
    /// to at most `4^N` operators.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(a * b);
            }
        }
        let d = 1usize << self.n_qubits;
        if ops.len() <= d * d {
            return Self::new(self.n_qubits, ops);
        }
        Self::from_superoperator(&Superoperator::from_kraus_column_stacking(self.n_qubits, &ops)?)
    }

    /// Convex mixture `w self + (1 - w) other`.
    pub fn mixture(&self, other: &Self, w: f64) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixture weight {w} outside [0, 1]")));
        }
        let s = self.superoperator().into_matrix() * C64::new(w, 0.0)
            + other.superoperator().into_matrix() * C64::new(1.0 - w, 0.0);
        Self::from_superoperator(&Superoperator::new(self.n_qubits, crate::pauli::Basis::PauliBasis, s)?)
    }

    /// Canonical Kraus operators from the eigendecomposition of the Choi
    /// matrix.
    pub fn from_superoperator(s: &Superoperator) -> Result<Self> {
        let n = s.n_qubits();
        let d = 1usize << n;
        let cs = s.to_column_stacking();
        let m = cs.matrix();
        // J[(r + c d), (r' + c' d)] = S[(r' d + r), (c' d + c)]
        let choi = DMatrix::from_fn(d * d, d * d, |i, j| {
            let (r, c) = (i % d, i / d);
            let (rp, cp) = (j % d, j / d);
            m[(rp * d + r, cp * d + c)]
        });
        let choi = (&choi + choi.adjoint()) * C64::new(0.5, 0.0);
        let eig = choi.symmetric_eigen();
        let scale = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-9 * scale {
            return Err(Error::Numerical(format!("map is not completely positive (Choi eigenvalue {min:.3e})")));
        }
        let mut ops = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > CHOI_CUTOFF * scale {
                let v = eig.eigenvectors.column(k);
                ops.push(DMatrix::from_fn(d, d, |r, c| v[r + c * d] * lam.sqrt()));
            }
        }
        if ops.is_empty() {
            return Err(Error::Numerical("Choi matrix has no positive eigenvalues".into()));
        }
        Self::new(n, ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::chi_diagonal;
    use crate::pauli::random_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_trace_preserving_sets() {
        let ops = vec![DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0)];
        assert!(matches!(KrausChannel::new(1, ops), Err(Error::NotTracePreserving { .. })));
        assert!(KrausChannel::new(1, vec![]).is_err());
    }

    #[test]
    fn composition_is_trace_preserving_and_matches_superoperators() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for i in 0..20 {
            let a = ChannelSpec::new(2, 0.05, 0.01, 1 + i % 16, i as u64).unwrap();
            let b = ChannelSpec::new(2, 0.02, 0.002, 16 - i % 16, 100 + i as u64).unwrap();
            let ca = random_biased_channel(&a, &mut rng).unwrap();
            let cb = random_biased_channel(&b, &mut rng).unwrap();
            let ab = ca.compose(&cb).unwrap();
            assert!(ab.trace_violation() < 1e-10);
            assert!(ab.len() <= 16);
            let expect = ca.superoperator().compose(&cb.superoperator()).unwrap();
            assert!(max_abs(&(ab.superoperator().into_matrix() - expect.into_matrix())) < 1e-10);
        }
    }

    #[test]
    fn choi_round_trip_preserves_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(2, &mut rng);
        let ch = KrausChannel::unitary(&u).mixture(&KrausChannel::identity(2).unwrap(), 0.3).unwrap();
        let back = KrausChannel::from_superoperator(&ch.superoperator()).unwrap();
        let a = chi_diagonal(&ch).unwrap();
        let b = chi_diagonal(&back).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_distribution_constructor() {
        let mut probs = vec![0.0; 16];
        probs[0] = 0.9;
        probs[(0b11 << 2) | 0b01] = 0.1;
        let ch = KrausChannel::from_pauli_distribution(2, &probs).unwrap();
        let chi = chi_diagonal(&ch).unwrap();
        assert!((chi.values()[13] - 0.1).abs() < 1e-15);
    }
}
