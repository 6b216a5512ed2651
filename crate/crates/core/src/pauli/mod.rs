//! Pauli strings, dense unitaries, superoperators and chi-matrix diagnostics.
//!
//! Qubit `i` (0-based, leftmost factor of a tensor product) corresponds to
//! bit `n - 1 - i` of a computational-basis index and of every bit mask.

pub mod chi;
pub mod operator;
pub mod superop;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub use chi::{bias_report, chi_diagonal, chi_matrix, Bias, BiasReport, ChiDiagonal};
pub use operator::{pauli_to_matrix, symplectic, DenseUnitary, PauliOperator, Sign, C64};
pub use superop::{
    apply, compose, expectation, pauli_basis_matrix, probabilities_from_traces, subspace_traces, Basis,
    Superoperator,
};

/// Largest qubit count supported by dense superoperators.
pub const MAX_QUBITS: usize = 3;
/// Entrywise tolerance for `U^dagger U = 1`.
pub const UNITARY_TOLERANCE: f64 = 1e-12;
/// Entrywise tolerance for `sum K^dagger K = 1`.
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Most negative chi entry accepted as round-off.
pub const CHI_NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// Mask bit of qubit `i`.
pub fn qubit_bit(n_qubits: usize, i: usize) -> usize {
    1 << (n_qubits - 1 - i)
}

/// Bit of qubit `i` in `mask`.
pub fn bit_of(mask: usize, n_qubits: usize, i: usize) -> u8 {
    ((mask >> (n_qubits - 1 - i)) & 1) as u8
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DenseUnitary {
    let d = 1usize << n_qubits;
    let g = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    DenseUnitary::new_unchecked(n_qubits, q)
}
