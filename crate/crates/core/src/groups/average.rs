use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::dihedral::CnotDihedralElement;
use crate::groups::Group;
use crate::pauli::{Basis, Superoperator, C64};

/// How a group sum is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Averaging {
    /// Literal sum over every element.
    Exhaustive,
    /// Monte Carlo estimate from uniform samples.
    Sampled { samples: usize, seed: u64 },
}

fn elements(group: &Group, averaging: Averaging) -> Result<Vec<CnotDihedralElement>> {
    match averaging {
        Averaging::Exhaustive => {
            if !group.is_enumerable() {
                return Err(Error::GroupTooLarge { group: group.to_string(), order: group.order() });
            }
            group.elements()
        }
        Averaging::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("sample budget must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..samples).map(|_| group.sample(&mut rng)).collect())
        }
    }
}

fn liouville(g: &CnotDihedralElement) -> nalgebra::DMatrix<C64> {
    Superoperator::from_unitary(&g.to_unitary()).expect("qubit count checked").into_matrix()
}

/// `dim / |G| sum_g conj(chi(g)) g_hat` in the normalized Pauli basis.
pub fn group_average_projector<F>(group: &Group, character: F, dim: usize, averaging: Averaging) -> Result<Superoperator>
where
    F: Fn(&CnotDihedralElement) -> C64 + Sync,
{
    let els = elements(group, averaging)?;
    let dd = 1usize << (2 * group.n_qubits());
    let sum = els
        .par_iter()
        .map(|g| liouville(g) * character(g).conj())
        .reduce(|| nalgebra::DMatrix::zeros(dd, dd), |a, b| a + b);
    Superoperator::new(group.n_qubits(), Basis::PauliBasis, sum * C64::new(dim as f64 / els.len() as f64, 0.0))
}

/// `1/|G| sum_g g_hat^dagger s g_hat`, returned in the basis of `s`.
pub fn schur_average(group: &Group, s: &Superoperator, averaging: Averaging) -> Result<Superoperator> {
    if s.n_qubits() != group.n_qubits() {
        return Err(Error::DimensionMismatch { expected: group.n_qubits(), found: s.n_qubits() });
    }
    let els = elements(group, averaging)?;
    let m = s.to_pauli_basis().into_matrix();
    let dd = m.nrows();
    let sum = els
        .par_iter()
        .map(|g| {
            let u = liouville(g);
            u.adjoint() * &m * u
        })
        .reduce(|| nalgebra::DMatrix::zeros(dd, dd), |a, b| a + b);
    let avg = Superoperator::new(s.n_qubits(), Basis::PauliBasis, sum / C64::new(els.len() as f64, 0.0))?;
    Ok(avg.to_basis(s.basis()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::characters::CharacterRow;
    use crate::groups::irreps::IrrepTable;
    use crate::pauli::operator::max_abs;
    use crate::pauli::random_unitary;

    #[test]
    fn pauli_average_gives_table_projector() {
        let row = CharacterRow::XWeight;
        let proj = group_average_projector(
            &Group::Pauli(2),
            |g| C64::new(row.value_on(g).unwrap() as f64, 0.0),
            1,
            Averaging::Exhaustive,
        )
        .unwrap();
        // only ZZ survives in the normalized basis
        let mut expect = nalgebra::DMatrix::<C64>::zeros(16, 16);
        expect[(3, 3)] = C64::new(1.0, 0.0);
        assert!(max_abs(&(proj.matrix() - expect)) < 1e-12);
    }

    #[test]
    fn schur_average_of_identity() {
        for group in [Group::Pauli(2), Group::Z(2), Group::CnotDihedral(1)] {
            let id = Superoperator::identity(group.n_qubits()).unwrap();
            let avg = schur_average(&group, &id, Averaging::Exhaustive).unwrap();
            assert!(max_abs(&(avg.matrix() - id.matrix())) < 1e-12);
        }
    }

    #[test]
    fn schur_average_on_d1_matches_projector_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(1, &mut rng);
        let s = Superoperator::from_unitary(&u).unwrap();
        let avg = schur_average(&Group::CnotDihedral(1), &s, Averaging::Exhaustive).unwrap();
        let table = IrrepTable::for_group(Group::CnotDihedral(1)).unwrap();
        let expect = table.schur_formula(&s);
        assert!(max_abs(&(avg.matrix() - expect.matrix())) < 1e-10);
    }

    #[test]
    fn exhaustive_d3_is_rejected() {
        let id = Superoperator::identity(3).unwrap();
        assert!(matches!(
            schur_average(&Group::CnotDihedral(3), &id, Averaging::Exhaustive),
            Err(Error::GroupTooLarge { .. })
        ));
        let sampled = schur_average(&Group::CnotDihedral(3), &id, Averaging::Sampled { samples: 4, seed: 1 }).unwrap();
        assert!(max_abs(&(sampled.matrix() - id.matrix())) < 1e-12);
    }
}
