use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::pauli::operator::{pauli_to_matrix, PauliOperator, Sign, C64};
use crate::pauli::superop::Superoperator;
use crate::pauli::{CHI_NEGATIVITY_TOLERANCE, TRACE_TOLERANCE};

/// Probabilities at or below this are treated as zero when forming a ratio.
pub const ZERO_PROBABILITY: f64 = 1e-15;

/// Diagonal of the chi matrix, indexed by `(alpha << n) | beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiDiagonal {
    n_qubits: usize,
    values: Vec<f64>,
}

impl ChiDiagonal {
    pub fn new(n_qubits: usize, values: Vec<f64>) -> Result<Self> {
        let dd = 1usize << (2 * n_qubits);
        if values.len() != dd {
            return Err(Error::DimensionMismatch { expected: dd, found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| **v < -CHI_NEGATIVITY_TOLERANCE || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("chi entry {v:.3e} is negative")));
        }
        Ok(Self { n_qubits, values })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, alpha: usize, beta: usize) -> f64 {
        self.values[(alpha << self.n_qubits) | beta]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `sum_{beta != 0} chi_{0 beta}`.
    pub fn p_dephasing(&self) -> f64 {
        let d = 1usize << self.n_qubits;
        self.values[1..d].iter().sum()
    }

    /// `sum_{alpha != 0, beta} chi_{alpha beta}`.
    pub fn p_nondephasing(&self) -> f64 {
        let d = 1usize << self.n_qubits;
        self.values[d..].iter().sum()
    }
}

/// Ratio `p_D / p_ND` with an explicit infinite value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bias {
    Finite(f64),
    Infinite,
}

impl Bias {
    /// `p_D / p_ND`; infinite when `p_ND` vanishes and `p_D` does not, zero
    /// when both vanish.
    pub fn ratio(p_dephasing: f64, p_nondephasing: f64) -> Self {
        if p_nondephasing.abs() <= ZERO_PROBABILITY {
            if p_dephasing.abs() <= ZERO_PROBABILITY {
                Bias::Finite(0.0)
            } else {
                Bias::Infinite
            }
        } else {
            Bias::Finite(p_dephasing / p_nondephasing)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Bias::Infinite)
    }

    /// Finite value, or `f64::INFINITY` for the sentinel.
    pub fn value(&self) -> f64 {
        match self {
            Bias::Finite(v) => *v,
            Bias::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bias::Finite(v) => write!(f, "{v}"),
            Bias::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for Bias {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bias::Finite(v) => s.serialize_f64(*v),
            Bias::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bias {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bias::Finite(v)),
            Raw::Text(t) if t == "+inf" || t == "inf" => Ok(Bias::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid bias value {t:?}"))),
        }
    }
}

/// Dephasing and non-dephasing probabilities, bias and average fidelity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub p_dephasing: f64,
    pub p_nondephasing: f64,
    pub bias: Bias,
    pub avg_fidelity: f64,
}

/// `chi_{kk} = sum_a |tr(P_k^dagger K_a)|^2 / 4^N`.
pub fn chi_diagonal(channel: &KrausChannel) -> Result<ChiDiagonal> {
    let violation = channel.trace_violation();
    if violation > TRACE_TOLERANCE {
        return Err(Error::NotTracePreserving { violation });
    }
    let n = channel.n_qubits();
    let d = 1usize << n;
    let norm = (d * d) as f64;
    let mut values = vec![0.0; d * d];
    for k in channel.ops() {
        for (alpha, row) in values.chunks_mut(d).enumerate() {
            for (beta, v) in row.iter_mut().enumerate() {
                // tr(Z(b) X(a) K) = sum_x (-1)^{b.x} K[x ^ a, x]
                let mut t = C64::new(0.0, 0.0);
                for x in 0..d {
                    let kv = k[(x ^ alpha, x)];
                    if (beta & x).count_ones() % 2 == 0 {
                        t += kv;
                    } else {
                        t -= kv;
                    }
                }
                *v += t.norm_sqr() / norm;
            }
        }
    }
    ChiDiagonal::new(n, values)
}

pub fn bias_report(chi: &ChiDiagonal) -> BiasReport {
    let p_dephasing = chi.p_dephasing();
    let p_nondephasing = chi.p_nondephasing();
    let d = (1u64 << chi.n_qubits) as f64;
    BiasReport {
        p_dephasing,
        p_nondephasing,
        bias: Bias::ratio(p_dephasing, p_nondephasing),
        avg_fidelity: (d * chi.values[0] + 1.0) / (d + 1.0),
    }
}

/// Full chi matrix in the convention `Lambda(rho) = sum chi_{kl} P_k rho P_l^dagger`
/// with `P_k = X(alpha) Z(beta)` (no Hermitian phase), obtained by expanding
/// the column-stacking superoperator in the basis `conj(P_l) (x) P_k`.
pub fn chi_matrix(s: &Superoperator) -> DMatrix<C64> {
    let n = s.n_qubits();
    let d = 1usize << n;
    let cs = s.to_column_stacking();
    let m = cs.matrix();
    let paulis: Vec<DMatrix<C64>> = (0..d * d)
        .map(|k| {
            pauli_to_matrix(&PauliOperator::from_masks(n, k >> n, k & (d - 1), Sign::PlusOne).expect("valid masks"))
                .into_matrix()
        })
        .collect();
    let norm = (d * d) as f64;
    let mut chi = DMatrix::zeros(d * d, d * d);
    for l in 0..d * d {
        let pl = paulis[l].conjugate();
        for k in 0..d * d {
            // <conj(P_l) (x) P_k, S> with both factors monomial: sum over their support
            let pk = &paulis[k];
            let mut t = C64::new(0.0, 0.0);
            for c2 in 0..d {
                let (r2, a) = support(&pl, c2);
                for c1 in 0..d {
                    let (r1, b) = support(pk, c1);
                    t += (a * b).conj() * m[(r2 * d + r1, c2 * d + c1)];
                }
            }
            chi[(k, l)] = t / norm;
        }
    }
    chi
}

fn support(p: &DMatrix<C64>, col: usize) -> (usize, C64) {
    (0..p.nrows())
        .find(|&r| p[(r, col)].norm() > 0.5)
        .map(|r| (r, p[(r, col)]))
        .expect("Pauli columns have one nonzero entry")
}
