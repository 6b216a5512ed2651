use serde::{Deserialize, Serialize};

/// Dephasing and non-dephasing probabilities of one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorProbabilities {
    pub p_dephasing: f64,
    pub p_nondephasing: f64,
}

impl ErrorProbabilities {
    pub fn new(p_dephasing: f64, p_nondephasing: f64) -> Self {
        Self { p_dephasing, p_nondephasing }
    }
}

/// Bound on `|p_ND(A o B) - p_ND^A - p_ND^B|`.
///
/// The general bound holds for arbitrary channels; `twirled` selects the
/// shorter bound valid when both channels are Z-twirled.
pub fn composition_nd_bound(a: ErrorProbabilities, b: ErrorProbabilities, n_qubits: usize, twirled: bool) -> f64 {
    let (da, na) = (a.p_dephasing.max(0.0), a.p_nondephasing.max(0.0));
    let (db, nb) = (b.p_dephasing.max(0.0), b.p_nondephasing.max(0.0));
    let n = n_qubits as f64;
    let half = 2f64.powf(n / 2.0 + 1.0);
    let full = 2f64.powf(n);
    if twirled {
        return half * (da.sqrt() * nb + na * db.sqrt()) + full * (na * db + da * nb + na * nb);
    }
    2.0 * (na * nb).sqrt()
        + half * (da.sqrt() * nb + na * db.sqrt() + (da * na * nb).sqrt() + (na * db * nb).sqrt())
        + full
            * (da * nb + na * db + 2.0 * (da * na * db * nb).sqrt() + 2.0 * na * db.sqrt() + 2.0 * da.sqrt() * nb)
        + 2f64.powf(1.5 * n + 1.0) * (na * (db * nb).sqrt() + (da * na).sqrt() * nb)
        + 2f64.powf(2.0 * n) * na * nb
}

/// Estimate of an interleaved gate's probability from the composite value
/// `p` and the interleaving group's value `p_b`, with the leading error
/// bound `2 sqrt(p p_b)`.
pub fn interleaved_estimate(p: f64, p_b: f64) -> (f64, f64) {
    (p - p_b, 2.0 * (p.max(0.0) * p_b.max(0.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{z_twirl, ChannelSpec, KrausChannel};
    use crate::pauli::{bias_report, chi_diagonal};

    fn probs(ch: &KrausChannel) -> ErrorProbabilities {
        let r = bias_report(&chi_diagonal(ch).unwrap());
        ErrorProbabilities::new(r.p_dephasing, r.p_nondephasing)
    }

    #[test]
    fn identity_a_gives_zero_bound_terms() {
        let b = ErrorProbabilities::new(0.03, 0.002);
        let zero = ErrorProbabilities::new(0.0, 0.0);
        assert_eq!(composition_nd_bound(zero, b, 2, false), 0.0);
        assert_eq!(composition_nd_bound(zero, b, 2, true), 0.0);
        let ch = ChannelSpec::new(2, 0.03, 0.002, 7, 4).unwrap().generate().unwrap();
        let id = KrausChannel::identity(2).unwrap();
        let ab = id.compose(&ch).unwrap();
        assert!((probs(&ab).p_nondephasing - probs(&ch).p_nondephasing).abs() < 1e-12);
    }

    #[test]
    fn random_pairs_respect_bounds() {
        for i in 0..40u64 {
            let a = ChannelSpec::new(2, 0.02, 5e-4, 2 + (i as usize % 15), i).unwrap().generate().unwrap();
            let b = ChannelSpec::new(2, 0.03, 1e-3, 2 + (i as usize * 5 % 15), 1000 + i).unwrap().generate().unwrap();
            let (pa, pb) = (probs(&a), probs(&b));
            let eps = probs(&a.compose(&b).unwrap()).p_nondephasing - pa.p_nondephasing - pb.p_nondephasing;
            assert!(eps.abs() <= composition_nd_bound(pa, pb, 2, false));

            let ta = KrausChannel::from_superoperator(&z_twirl(&a.superoperator(), 2).unwrap()).unwrap();
            let tb = KrausChannel::from_superoperator(&z_twirl(&b.superoperator(), 2).unwrap()).unwrap();
            let (qa, qb) = (probs(&ta), probs(&tb));
            let eps = probs(&ta.compose(&tb).unwrap()).p_nondephasing - qa.p_nondephasing - qb.p_nondephasing;
            assert!(eps.abs() <= composition_nd_bound(qa, qb, 2, true) + 1e-12);
        }
    }

    #[test]
    fn twirled_bound_is_tighter() {
        let a = ErrorProbabilities::new(0.02, 1e-4);
        let b = ErrorProbabilities::new(0.01, 2e-4);
        assert!(composition_nd_bound(a, b, 2, true) < composition_nd_bound(a, b, 2, false));
    }

    #[test]
    fn interleaved_rearrangement() {
        let (est, bound) = interleaved_estimate(0.05, 0.01);
        assert!((est - 0.04).abs() < 1e-15);
        assert!((bound - 2.0 * (0.0005f64).sqrt()).abs() < 1e-15);
    }
}
