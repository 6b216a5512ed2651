use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::dihedral::CnotDihedralElement;
use crate::groups::elements::PauliGroupElement;
use crate::pauli::qubit_bit;

/// One-dimensional characters of the Pauli group and its Z subgroup.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharacterRow {
    Trivial,
    /// `(-1)^{|alpha|}`.
    XWeight,
    /// `(-1)^{|beta|}`.
    ZWeight,
    /// Tensor product of single-qubit rows: 0 trivial, 1 `(-1)^alpha`,
    /// 2 `(-1)^{alpha+beta}`, 3 `(-1)^beta`.
    Pauli(Vec<u8>),
    /// Z-group character `(-1)^{mask . beta}`.
    ZSector(usize),
}

impl CharacterRow {
    /// `(-1)^{beta_2}` on two qubits.
    pub fn z_second() -> Self {
        CharacterRow::ZSector(qubit_bit(2, 1))
    }

    /// `(-1)^{beta_1}` on two qubits.
    pub fn z_first() -> Self {
        CharacterRow::ZSector(qubit_bit(2, 0))
    }

    /// `(-1)^{beta_1 + beta_2}` on two qubits.
    pub fn z_both() -> Self {
        CharacterRow::ZSector(qubit_bit(2, 0) | qubit_bit(2, 1))
    }

    pub fn value(&self, p: &PauliGroupElement) -> i8 {
        let odd = match self {
            CharacterRow::Trivial => 0,
            CharacterRow::XWeight => p.alpha.count_ones(),
            CharacterRow::ZWeight => p.beta.count_ones(),
            CharacterRow::Pauli(labels) => labels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let b = qubit_bit(p.n_qubits, i);
                    let a = (p.alpha & b != 0) as u32;
                    let z = (p.beta & b != 0) as u32;
                    match l {
                        1 => a,
                        2 => a + z,
                        3 => z,
                        _ => 0,
                    }
                })
                .sum(),
            CharacterRow::ZSector(mask) => (mask & p.beta).count_ones(),
        };
        if odd % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Value on a group element, which must be a Pauli operator (and lie
    /// in the Z group for `ZSector`).
    pub fn value_on(&self, g: &CnotDihedralElement) -> Result<i8> {
        let (alpha, beta) = g
            .as_pauli_masks()
            .ok_or_else(|| Error::InvalidArgument("element is not in the Pauli group".into()))?;
        if matches!(self, CharacterRow::ZSector(_)) && alpha != 0 {
            return Err(Error::InvalidArgument("element is not in the Z group".into()));
        }
        Ok(self.value(&PauliGroupElement { n_qubits: g.n_qubits(), alpha, beta }))
    }
}

pub fn character(row: &CharacterRow, element: &PauliGroupElement) -> i8 {
    row.value(element)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let x1 = PauliGroupElement::new(2, 0b10, 0).unwrap();
        assert_eq!(CharacterRow::XWeight.value(&x1), -1);
        let zz = PauliGroupElement::new(2, 0, 0b11).unwrap();
        assert_eq!(CharacterRow::z_both().value(&zz), 1);
        assert_eq!(CharacterRow::z_first().value(&zz), -1);
        assert_eq!(CharacterRow::z_second().value(&PauliGroupElement::new(2, 0, 0b01).unwrap()), -1);
        let id = PauliGroupElement::identity(2);
        for row in [
            CharacterRow::Trivial,
            CharacterRow::XWeight,
            CharacterRow::ZWeight,
            CharacterRow::Pauli(vec![2, 3]),
            CharacterRow::z_both(),
        ] {
            assert_eq!(row.value(&id), 1);
        }
    }

    #[test]
    fn value_on_rejects_non_pauli() {
        let t = CnotDihedralElement::t(1, 0);
        assert!(CharacterRow::XWeight.value_on(&t).is_err());
        let x = CnotDihedralElement::x(1, 0);
        assert!(CharacterRow::ZSector(1).value_on(&x).is_err());
        assert_eq!(CharacterRow::XWeight.value_on(&x).unwrap(), -1);
    }
}
