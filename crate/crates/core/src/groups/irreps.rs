use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::groups::characters::CharacterRow;
use crate::groups::dihedral::CnotDihedralElement;
use crate::groups::Group;
use crate::pauli::superop::check_qubits;
use crate::pauli::{Basis, Superoperator, C64};

/// How an irrep's character is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum IrrepCharacter {
    /// Closed-form one-dimensional character.
    Row(CharacterRow),
    /// `Tr(Pi g_hat)`, valid for multiplicity-free representations.
    ProjectedTrace,
}

#[derive(Clone, Debug)]
pub struct Irrep {
    pub label: String,
    /// Orthogonal projector in the normalized Pauli basis.
    pub projector: Superoperator,
    pub character: IrrepCharacter,
    /// Dimension of one copy of the irrep.
    pub dim: usize,
}

/// Irreducible (isotypic, for the Z group) decomposition of the Liouville
/// representation.
#[derive(Clone, Debug)]
pub struct IrrepTable {
    pub group: Group,
    pub irreps: Vec<Irrep>,
}

/// Projector onto the span of the listed Pauli-basis indices.
pub fn diagonal_projector(n_qubits: usize, indices: impl IntoIterator<Item = usize>) -> Superoperator {
    let dd = 1usize << (2 * n_qubits);
    let mut m = DMatrix::zeros(dd, dd);
    for k in indices {
        m[(k, k)] = C64::new(1.0, 0.0);
    }
    Superoperator::new(n_qubits, Basis::PauliBasis, m).expect("dimensions consistent")
}

/// Single-qubit label to `(alpha, beta)`: 0 I, 1 Z, 2 Y, 3 X.
fn label_bits(label: u8) -> (usize, usize) {
    match label {
        1 => (0, 1),
        2 => (1, 1),
        3 => (1, 0),
        _ => (0, 0),
    }
}

impl IrrepTable {
    pub fn for_group(group: Group) -> Result<Self> {
        let n = group.n_qubits();
        check_qubits(n)?;
        let d = 1usize << n;
        let irreps = match group {
            Group::Pauli(_) => (0..d * d)
                .map(|code| {
                    let labels: Vec<u8> = (0..n).map(|i| ((code >> (2 * (n - 1 - i))) & 3) as u8).collect();
                    let (mut alpha, mut beta) = (0, 0);
                    for &l in &labels {
                        let (a, b) = label_bits(l);
                        alpha = (alpha << 1) | a;
                        beta = (beta << 1) | b;
                    }
                    Irrep {
                        label: labels.iter().map(|l| l.to_string()).collect(),
                        projector: diagonal_projector(n, [(alpha << n) | beta]),
                        character: IrrepCharacter::Row(CharacterRow::Pauli(labels)),
                        dim: 1,
                    }
                })
                .collect(),
            Group::Z(_) => (0..d)
                .map(|alpha| Irrep {
                    label: format!("x{alpha:0n$b}"),
                    projector: diagonal_projector(n, (0..d).map(|beta| (alpha << n) | beta)),
                    character: IrrepCharacter::Row(CharacterRow::ZSector(alpha)),
                    dim: 1,
                })
                .collect(),
            Group::CnotDihedral(_) => vec![
                Irrep {
                    label: "0".into(),
                    projector: diagonal_projector(n, [0]),
                    character: IrrepCharacter::ProjectedTrace,
                    dim: 1,
                },
                Irrep {
                    label: "1".into(),
                    projector: diagonal_projector(n, 1..d),
                    character: IrrepCharacter::ProjectedTrace,
                    dim: d - 1,
                },
                Irrep {
                    label: "2".into(),
                    projector: diagonal_projector(n, d..d * d),
                    character: IrrepCharacter::ProjectedTrace,
                    dim: d * d - d,
                },
            ],
        };
        Ok(Self { group, irreps })
    }

    /// Character of irrep `i` at `g`.
    pub fn character(&self, i: usize, g: &CnotDihedralElement) -> Result<C64> {
        let irrep = self
            .irreps
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("irrep index {i} out of range")))?;
        match &irrep.character {
            IrrepCharacter::Row(row) => Ok(C64::new(row.value_on(g)? as f64, 0.0)),
            IrrepCharacter::ProjectedTrace => {
                let gh = Superoperator::from_unitary(&g.to_unitary())?;
                Ok((irrep.projector.matrix() * gh.matrix()).trace())
            }
        }
    }

    /// `sum_i Tr(Pi_i s) / Tr(Pi_i) Pi_i`, the group average of a
    /// multiplicity-free representation.
    pub fn schur_formula(&self, s: &Superoperator) -> Superoperator {
        let m = s.to_pauli_basis().into_matrix();
        let dd = m.nrows();
        let mut out = DMatrix::zeros(dd, dd);
        for irrep in &self.irreps {
            let p = irrep.projector.matrix();
            let w = (p * &m).trace() / p.trace();
            out += p * w;
        }
        Superoperator::new(s.n_qubits(), Basis::PauliBasis, out).expect("dimensions consistent")
    }
}
