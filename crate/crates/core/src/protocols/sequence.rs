use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{CnotDihedralElement, PauliGroupElement};

use super::{Branch, Preparation, Protocol, IBRB_QUBITS};

/// One applied gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// CX-dihedral element, followed by the gate noise.
    Dihedral(CnotDihedralElement),
    /// `Z(beta)` on the interleaved pair, followed by the Z-gate noise.
    ZGroup(usize),
    /// `CX_{1,2}`, preceded by its noise.
    Cx,
    /// `X_1 CX_{1,2} X_1`, preceded by its noise.
    CxPrime,
}

/// Random sequence with its preparation and the `+-1` weight applied to
/// every measurement outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RBSequence {
    pub protocol: Protocol,
    pub branch: Branch,
    pub n: usize,
    pub n_qubits: usize,
    pub gates: Vec<GateKind>,
    pub preparation: Preparation,
    pub weight: i8,
}

fn check_length(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
    }
    Ok(())
}

impl RBSequence {
    /// CX-dihedral sequence from the Pauli `u0` and `U_1..U_n`: applies
    /// `U_1 U_0, U_2, ..., U_n` and the canonical inverse of `U_n ... U_1`.
    pub fn brb_from_elements(branch: Branch, u0: PauliGroupElement, us: &[CnotDihedralElement]) -> Result<Self> {
        if branch.protocol() != Protocol::Brb {
            return Err(Error::InvalidArgument(format!("branch {branch} is not a CX-dihedral branch")));
        }
        check_length(us.len())?;
        let n_qubits = u0.n_qubits;
        if us.iter().any(|u| u.n_qubits() != n_qubits) {
            return Err(Error::DimensionMismatch { expected: n_qubits, found: us[0].n_qubits() });
        }
        let mut gates = Vec::with_capacity(us.len() + 1);
        gates.push(GateKind::Dihedral(us[0].mul(&u0.embed())));
        let mut acc = us[0].clone();
        for u in &us[1..] {
            gates.push(GateKind::Dihedral(u.clone()));
            acc = u.mul(&acc);
        }
        gates.push(GateKind::Dihedral(acc.inverse()));
        let preparation = branch.preparations(n_qubits).remove(0);
        let weight = branch.z_character().value(&u0) * preparation.weight;
        Ok(Self { protocol: Protocol::Brb, branch, n: us.len(), n_qubits, gates, preparation, weight })
    }

    /// Interleaved sequence from explicit choices: `betas` are the Z-group
    /// gates `U_1..U_{m+1}`, `primes[i]` selects `C'` for `C_{i+1}`, and
    /// `prep` indexes the branch's preparation list.
    pub fn ibrb_from_choices(branch: Branch, n: usize, betas: &[usize], primes: &[bool], prep: usize) -> Result<Self> {
        if branch.protocol() != Protocol::Ibrb {
            return Err(Error::InvalidArgument(format!("branch {branch} is not an interleaved branch")));
        }
        check_length(n)?;
        let m = branch.cx_count(n);
        if primes.len() != m || betas.len() != m + 1 {
            return Err(Error::InvalidArgument(format!(
                "branch {branch} at n = {n} needs {} Z-group gates and {m} CX gates",
                m + 1
            )));
        }
        if betas.iter().any(|&b| b >= 1 << IBRB_QUBITS) {
            return Err(Error::InvalidArgument("Z-group mask exceeds two qubits".into()));
        }
        let mut preps = branch.preparations(IBRB_QUBITS);
        if prep >= preps.len() {
            return Err(Error::InvalidArgument(format!("preparation index {prep} out of range")));
        }
        let preparation = preps.swap_remove(prep);

        let mut gates = Vec::with_capacity(2 * m + 1);
        let mut weight = preparation.weight;
        let (odd, even) = (branch.z_character(), branch.even_character());
        for (i, &beta) in betas.iter().enumerate() {
            gates.push(GateKind::ZGroup(beta));
            // U_1 sits at index 0, an odd position
            let row = if i % 2 == 0 { &odd } else { &even };
            weight *= row.value(&PauliGroupElement { n_qubits: IBRB_QUBITS, alpha: 0, beta });
            if let Some(&prime) = primes.get(i) {
                gates.push(if prime { GateKind::CxPrime } else { GateKind::Cx });
                if prime && branch.is_minus() {
                    weight = -weight;
                }
            }
        }
        Ok(Self { protocol: Protocol::Ibrb, branch, n, n_qubits: IBRB_QUBITS, gates, preparation, weight })
    }

    /// Product of the applied gates in application order; `None` for
    /// interleaved sequences.
    pub fn dihedral_product(&self) -> Option<CnotDihedralElement> {
        let mut acc = CnotDihedralElement::identity(self.n_qubits);
        for g in &self.gates {
            match g {
                GateKind::Dihedral(u) => acc = u.mul(&acc),
                _ => return None,
            }
        }
        Some(acc)
    }
}

/// Random CX-dihedral sequence: `U_0` uniform over the Pauli group and
/// `U_1..U_n` uniform over `D_N`.
pub fn brb_generate_sequence<R: Rng + ?Sized>(branch: Branch, n: usize, n_qubits: usize, rng: &mut R) -> Result<RBSequence> {
    check_length(n)?;
    crate::pauli::superop::check_qubits(n_qubits)?;
    let u0 = PauliGroupElement::sample_uniform(n_qubits, rng);
    let us: Vec<CnotDihedralElement> = (0..n).map(|_| CnotDihedralElement::sample_uniform(n_qubits, rng)).collect();
    RBSequence::brb_from_elements(branch, u0, &us)
}

/// Random interleaved sequence with uniform Z-group gates, uniform `C`/`C'`
/// choices and a uniform preparation.
pub fn ibrb_generate_sequence<R: Rng + ?Sized>(branch: Branch, n: usize, rng: &mut R) -> Result<RBSequence> {
    check_length(n)?;
    let m = branch.cx_count(n);
    let betas: Vec<usize> = (0..=m).map(|_| rng.random_range(0..1usize << IBRB_QUBITS)).collect();
    let primes: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
    let prep = rng.random_range(0..branch.preparations(IBRB_QUBITS).len());
    RBSequence::ibrb_from_choices(branch, n, &betas, &primes, prep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::DenseUnitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_product(seq: &RBSequence) -> DenseUnitary {
        let mut acc = DenseUnitary::identity(seq.n_qubits);
        for g in &seq.gates {
            if let GateKind::Dihedral(u) = g {
                acc = u.to_unitary().try_mul(&acc).unwrap();
            }
        }
        acc
    }

    #[test]
    fn brb_product_is_the_pauli_u0() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n_qubits in 1..=3 {
            for n in [1, 2, 7] {
                let u0 = PauliGroupElement::sample_uniform(n_qubits, &mut rng);
                let us: Vec<_> = (0..n).map(|_| CnotDihedralElement::sample_uniform(n_qubits, &mut rng)).collect();
                let seq = RBSequence::brb_from_elements(Branch::Brb1, u0, &us).unwrap();
                assert_eq!(seq.gates.len(), n + 1);
                // dense oracle: the applied gates multiply to U_0
                let expect = u0.to_operator().to_matrix();
                assert!(dense_product(&seq).equal_up_to_phase(&expect, 1e-10));
                assert_eq!(seq.dihedral_product().unwrap(), u0.embed());
            }
        }
    }

    #[test]
    fn single_step_sequence_draws_three_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = brb_generate_sequence(Branch::Brb2, 1, 1, &mut rng).unwrap();
        // U_0, U_1 and U_2 = U_1^dagger; U_1 U_0 and U_2 are applied
        assert_eq!(seq.gates.len(), 2);
        let (GateKind::Dihedral(first), GateKind::Dihedral(last)) = (&seq.gates[0], &seq.gates[1]) else {
            panic!("dihedral gates expected")
        };
        let u0 = last.mul(first);
        assert!(u0.as_pauli_masks().is_some());
        let m = last.to_unitary().try_mul(&first.to_unitary()).unwrap();
        assert!(m.equal_up_to_phase(&u0.to_unitary(), 1e-12));
    }

    #[test]
    fn brb_weight_is_x_weight_character() {
        let id = CnotDihedralElement::identity(2);
        for alpha in 0..4 {
            for beta in 0..4 {
                let u0 = PauliGroupElement { n_qubits: 2, alpha, beta };
                let s1 = RBSequence::brb_from_elements(Branch::Brb1, u0, std::slice::from_ref(&id)).unwrap();
                let s2 = RBSequence::brb_from_elements(Branch::Brb2, u0, std::slice::from_ref(&id)).unwrap();
                assert_eq!(s1.weight, if alpha.count_ones() % 2 == 0 { 1 } else { -1 });
                assert_eq!(s2.weight, if beta.count_ones() % 2 == 0 { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn ibrb_weights() {
        let s = RBSequence::ibrb_from_choices(Branch::ZeroPlus, 3, &[0; 4], &[false; 3], 0).unwrap();
        assert_eq!(s.weight, 1);
        let s = RBSequence::ibrb_from_choices(Branch::ZeroMinus, 3, &[0; 4], &[true, false, true], 0).unwrap();
        assert_eq!(s.weight, 1);
        let s = RBSequence::ibrb_from_choices(Branch::ZeroMinus, 3, &[0; 4], &[true, false, false], 1).unwrap();
        // one C' and the |10> preparation
        assert_eq!(s.weight, 1);
        let s = RBSequence::ibrb_from_choices(Branch::OneMinus, 1, &[0b01, 0b00], &[false], 0).unwrap();
        assert_eq!(s.weight, -1);
        // 2+: odd positions weighted by (-1)^{beta_1}, even by (-1)^{beta_1 + beta_2}
        let s = RBSequence::ibrb_from_choices(Branch::TwoPlus, 1, &[0b10, 0b01, 0b00], &[true, true], 0).unwrap();
        assert_eq!(s.weight, 1);
        let s = RBSequence::ibrb_from_choices(Branch::TwoPlus, 1, &[0b00, 0b10, 0b00], &[false, false], 0).unwrap();
        assert_eq!(s.weight, -1);
    }

    #[test]
    fn doubled_rows_interleave_two_cx_per_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for b in [Branch::TwoPlus, Branch::TwoMinus] {
            let s = ibrb_generate_sequence(b, 1, &mut rng).unwrap();
            let cx = s.gates.iter().filter(|g| matches!(g, GateKind::Cx | GateKind::CxPrime)).count();
            let z = s.gates.iter().filter(|g| matches!(g, GateKind::ZGroup(_))).count();
            assert_eq!((cx, z), (2, 3));
        }
        let s = ibrb_generate_sequence(Branch::OnePlus, 4, &mut rng).unwrap();
        assert_eq!(s.gates.len(), 9);
        assert!(matches!(s.gates[0], GateKind::ZGroup(_)));
        assert!(matches!(s.gates[8], GateKind::ZGroup(_)));
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(brb_generate_sequence(Branch::Brb1, 0, 2, &mut rng).is_err());
        assert!(brb_generate_sequence(Branch::ZeroPlus, 2, 2, &mut rng).is_err());
        assert!(ibrb_generate_sequence(Branch::Brb1, 2, &mut rng).is_err());
        assert!(RBSequence::ibrb_from_choices(Branch::ZeroPlus, 2, &[0; 2], &[false; 2], 0).is_err());
    }
}
