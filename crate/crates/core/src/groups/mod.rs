//! Pauli group, Z group and CX-dihedral group: exact algebra, sampling,
//! characters, irreducible projectors and group averages.

pub mod average;
pub mod characters;
pub mod dihedral;
pub mod elements;
pub mod irreps;

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::superop::check_qubits;

pub use average::{group_average_projector, schur_average, Averaging};
pub use characters::{character, CharacterRow};
pub use dihedral::{closure, dihedral_order, gl_order, standard_generators, CnotDihedralElement};
pub use elements::{pauli_embed, PauliGroupElement, ZGroupElement};
pub use irreps::{Irrep, IrrepCharacter, IrrepTable};

/// Groups whose Liouville representations the protocols average over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Pauli(usize),
    Z(usize),
    CnotDihedral(usize),
}

impl Group {
    pub fn n_qubits(&self) -> usize {
        match *self {
            Group::Pauli(n) | Group::Z(n) | Group::CnotDihedral(n) => n,
        }
    }

    pub fn order(&self) -> u128 {
        match *self {
            Group::Pauli(n) => 1u128 << (2 * n),
            Group::Z(n) => 1u128 << n,
            Group::CnotDihedral(n) => dihedral_order(n),
        }
    }

    pub fn is_enumerable(&self) -> bool {
        !matches!(self, Group::CnotDihedral(n) if *n > 2)
    }

    /// All elements as canonical forms.
    pub fn elements(&self) -> Result<Vec<CnotDihedralElement>> {
        check_qubits(self.n_qubits())?;
        Ok(match *self {
            Group::Pauli(n) => PauliGroupElement::all(n).iter().map(pauli_embed).collect(),
            Group::Z(n) => ZGroupElement::all(n).iter().map(|z| z.embed()).collect(),
            Group::CnotDihedral(n) => dihedral_elements(n)?.to_vec(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CnotDihedralElement {
        match *self {
            Group::Pauli(n) => PauliGroupElement::sample_uniform(n, rng).embed(),
            Group::Z(n) => ZGroupElement::sample_uniform(n, rng).embed(),
            Group::CnotDihedral(n) => CnotDihedralElement::sample_uniform(n, rng),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Pauli(n) => write!(f, "P_{n}"),
            Group::Z(n) => write!(f, "Z_{n}"),
            Group::CnotDihedral(n) => write!(f, "D_{n}"),
        }
    }
}

/// Cached enumeration of `D_1` or `D_2`.
pub fn dihedral_elements(n_qubits: usize) -> Result<&'static [CnotDihedralElement]> {
    static D1: OnceLock<Vec<CnotDihedralElement>> = OnceLock::new();
    static D2: OnceLock<Vec<CnotDihedralElement>> = OnceLock::new();
    let cell = match n_qubits {
        1 => &D1,
        2 => &D2,
        n => {
            return Err(Error::GroupTooLarge { group: format!("D_{n}"), order: dihedral_order(n) });
        }
    };
    Ok(cell.get_or_init(|| CnotDihedralElement::enumerate(n_qubits).expect("small group")))
}
