use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::dihedral::CnotDihedralElement;
use crate::pauli::{PauliOperator, Sign};

/// Phase-free Pauli `X(alpha) Z(beta)`; the group is `Z_2^{2N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliGroupElement {
    pub n_qubits: usize,
    pub alpha: usize,
    pub beta: usize,
}

impl PauliGroupElement {
    pub fn new(n_qubits: usize, alpha: usize, beta: usize) -> Result<Self> {
        let size = 1usize << n_qubits;
        if alpha >= size || beta >= size {
            return Err(Error::InvalidArgument("mask exceeds qubit count".into()));
        }
        Ok(Self { n_qubits, alpha, beta })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, alpha: 0, beta: 0 }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { n_qubits: self.n_qubits, alpha: self.alpha ^ other.alpha, beta: self.beta ^ other.beta }
    }

    pub fn to_operator(&self) -> PauliOperator {
        PauliOperator::from_masks(self.n_qubits, self.alpha, self.beta, Sign::PlusOne).expect("masks in range")
    }

    pub fn from_operator(p: &PauliOperator) -> Self {
        Self { n_qubits: p.n_qubits(), alpha: p.alpha_mask(), beta: p.beta_mask() }
    }

    pub fn embed(&self) -> CnotDihedralElement {
        pauli_embed(self)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let size = 1usize << n_qubits;
        Self { n_qubits, alpha: rng.random_range(0..size), beta: rng.random_range(0..size) }
    }

    pub fn all(n_qubits: usize) -> Vec<Self> {
        let size = 1usize << n_qubits;
        (0..size * size).map(|k| Self { n_qubits, alpha: k >> n_qubits, beta: k & (size - 1) }).collect()
    }
}

/// Element `Z(beta)` of the Z group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZGroupElement {
    pub n_qubits: usize,
    pub beta: usize,
}

impl ZGroupElement {
    pub fn new(n_qubits: usize, beta: usize) -> Result<Self> {
        if beta >= 1usize << n_qubits {
            return Err(Error::InvalidArgument("mask exceeds qubit count".into()));
        }
        Ok(Self { n_qubits, beta })
    }

    pub fn to_pauli(&self) -> PauliGroupElement {
        PauliGroupElement { n_qubits: self.n_qubits, alpha: 0, beta: self.beta }
    }

    pub fn embed(&self) -> CnotDihedralElement {
        pauli_embed(&self.to_pauli())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        Self { n_qubits, beta: rng.random_range(0..1usize << n_qubits) }
    }

    pub fn all(n_qubits: usize) -> Vec<Self> {
        (0..1usize << n_qubits).map(|beta| Self { n_qubits, beta }).collect()
    }
}

/// Canonical form of `X(alpha) Z(beta)`: coefficient 4 on the singletons of
/// `beta`, affine part `alpha`.
pub fn pauli_embed(p: &PauliGroupElement) -> CnotDihedralElement {
    CnotDihedralElement::from_pauli_masks(p.n_qubits, p.alpha, p.beta)
}
