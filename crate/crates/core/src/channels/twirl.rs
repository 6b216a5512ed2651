use crate::error::{Error, Result};
use crate::groups::{schur_average, Averaging, Group};
use crate::pauli::Superoperator;

/// `(1/2^N) sum_{V in Z_N} V_hat^dagger s V_hat`, in the basis of `s`.
pub fn z_twirl(channel_superop: &Superoperator, n_qubits: usize) -> Result<Superoperator> {
    if channel_superop.n_qubits() != n_qubits {
        return Err(Error::DimensionMismatch { expected: n_qubits, found: channel_superop.n_qubits() });
    }
    schur_average(&Group::Z(n_qubits), channel_superop, Averaging::Exhaustive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{ChannelSpec, KrausChannel};
    use crate::pauli::operator::max_abs;
    use crate::pauli::{chi_diagonal, chi_matrix};

    #[test]
    fn pauli_channel_is_unchanged() {
        let ch = KrausChannel::from_pauli_probabilities(2, &[("II", 0.9), ("XY", 0.06), ("ZI", 0.04)]).unwrap();
        let s = ch.superoperator();
        assert!(max_abs(&(z_twirl(&s, 2).unwrap().into_matrix() - s.into_matrix())) < 1e-12);
    }

    #[test]
    fn identity_is_unchanged() {
        let s = Superoperator::identity(2).unwrap();
        assert!(max_abs(&(z_twirl(&s, 2).unwrap().into_matrix() - s.into_matrix())) < 1e-12);
    }

    #[test]
    fn twirl_removes_cross_sector_coherences() {
        for seed in 0..10 {
            let ch = ChannelSpec::new(2, 0.05, 0.02, 6 + seed as usize, seed).unwrap().generate().unwrap();
            let s = ch.superoperator();
            let tw = z_twirl(&s, 2).unwrap();
            let chi = chi_matrix(&tw);
            let before = chi_diagonal(&ch).unwrap();
            let mut cross = 0.0f64;
            for k in 0..16 {
                assert!((chi[(k, k)].re - before.values()[k]).abs() < 1e-12);
                for l in 0..16 {
                    if k >> 2 != l >> 2 {
                        cross = cross.max(chi[(k, l)].norm());
                    }
                }
            }
            assert!(cross < 1e-12);
            let twice = z_twirl(&tw, 2).unwrap();
            assert!(max_abs(&(twice.into_matrix() - tw.into_matrix())) < 1e-12);
        }
    }
}
