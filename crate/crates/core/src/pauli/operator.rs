use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{bit_of, qubit_bit, UNITARY_TOLERANCE};

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Phase i^k attached to a Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Sign {
    pub fn from_power(k: u32) -> Self {
        match k % 4 {
            0 => Sign::PlusOne,
            1 => Sign::PlusI,
            2 => Sign::MinusOne,
            _ => Sign::MinusI,
        }
    }

    /// Exponent k with sign = i^k.
    pub fn power(self) -> u32 {
        match self {
            Sign::PlusOne => 0,
            Sign::PlusI => 1,
            Sign::MinusOne => 2,
            Sign::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> C64 {
        match self {
            Sign::PlusOne => C64::new(1.0, 0.0),
            Sign::PlusI => C64::new(0.0, 1.0),
            Sign::MinusOne => C64::new(-1.0, 0.0),
            Sign::MinusI => C64::new(0.0, -1.0),
        }
    }
}

/// Signed Pauli string `sign * X(alpha) Z(beta)`.
///
/// Bit-vectors are stored as masks where qubit `i` (0-based, leftmost in
/// tensor products) occupies bit `n - 1 - i`, so the mask of a computational
/// basis state equals its matrix index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliOperator {
    n_qubits: usize,
    alpha: usize,
    beta: usize,
    sign: Sign,
}

impl PauliOperator {
    pub fn new(alpha: &[u8], beta: &[u8], sign: Sign) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("a Pauli string needs at least one qubit".into()));
        }
        let n = alpha.len();
        let pack = |bits: &[u8]| -> Result<usize> {
            bits.iter().enumerate().try_fold(0usize, |acc, (i, &b)| match b {
                0 => Ok(acc),
                1 => Ok(acc | qubit_bit(n, i)),
                _ => Err(Error::InvalidArgument(format!("bit value {b} is not 0 or 1"))),
            })
        };
        Ok(Self { n_qubits: n, alpha: pack(alpha)?, beta: pack(beta)?, sign })
    }

    pub fn from_masks(n_qubits: usize, alpha: usize, beta: usize, sign: Sign) -> Result<Self> {
        if n_qubits == 0 || n_qubits >= usize::BITS as usize / 2 {
            return Err(Error::InvalidArgument(format!("unsupported qubit count {n_qubits}")));
        }
        let limit = 1usize << n_qubits;
        if alpha >= limit || beta >= limit {
            return Err(Error::InvalidArgument("mask exceeds qubit count".into()));
        }
        Ok(Self { n_qubits, alpha, beta, sign })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, alpha: 0, beta: 0, sign: Sign::PlusOne }
    }

    /// Hermitian Pauli `i^{|alpha & beta|} X(alpha) Z(beta)`, so that a
    /// qubit with both bits set carries Y.
    pub fn hermitian(n_qubits: usize, alpha: usize, beta: usize) -> Result<Self> {
        let k = (alpha & beta).count_ones();
        Self::from_masks(n_qubits, alpha, beta, Sign::from_power(k))
    }

    /// Parses labels such as `"XZ"`, `"-IY"` or `"iZ"` into a Pauli string.
    pub fn from_label(label: &str) -> Result<Self> {
        let (mut power, body) = if let Some(rest) = label.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = label.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = label.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = label.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = label.strip_prefix('+') {
            (0, rest)
        } else {
            (0, label)
        };
        let n = body.chars().count();
        if n == 0 {
            return Err(Error::InvalidArgument(format!("empty Pauli label {label:?}")));
        }
        let mut alpha = 0;
        let mut beta = 0;
        for (i, c) in body.chars().enumerate() {
            let bit = qubit_bit(n, i);
            match c {
                'I' => {}
                'X' => alpha |= bit,
                'Z' => beta |= bit,
                'Y' => {
                    alpha |= bit;
                    beta |= bit;
                    power += 1;
                }
                _ => return Err(Error::InvalidArgument(format!("bad Pauli label {label:?}"))),
            }
        }
        Self::from_masks(n, alpha, beta, Sign::from_power(power))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn alpha_mask(&self) -> usize {
        self.alpha
    }

    pub fn beta_mask(&self) -> usize {
        self.beta
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn alpha_bits(&self) -> Vec<u8> {
        (0..self.n_qubits).map(|i| bit_of(self.alpha, self.n_qubits, i)).collect()
    }

    pub fn beta_bits(&self) -> Vec<u8> {
        (0..self.n_qubits).map(|i| bit_of(self.beta, self.n_qubits, i)).collect()
    }

    /// Index `(alpha << n) | beta` used for Pauli-basis vectors.
    pub fn index(&self) -> usize {
        (self.alpha << self.n_qubits) | self.beta
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        (self.sign.power() + (self.alpha & self.beta).count_ones()).is_multiple_of(2)
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        symplectic(self.alpha, self.beta, other.alpha, other.beta) == 0
    }

    /// Exact product `self * other`.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        // Z(b1) X(a2) = (-1)^{b1.a2} X(a2) Z(b1)
        let swap = (self.beta & other.alpha).count_ones() % 2;
        let power = self.sign.power() + other.sign.power() + 2 * swap;
        Ok(Self {
            n_qubits: self.n_qubits,
            alpha: self.alpha ^ other.alpha,
            beta: self.beta ^ other.beta,
            sign: Sign::from_power(power),
        })
    }

    pub fn to_matrix(&self) -> DenseUnitary {
        pauli_to_matrix(self)
    }
}

impl Mul for PauliOperator {
    type Output = PauliOperator;

    /// Panics on a qubit-count mismatch; use [`PauliOperator::try_mul`] otherwise.
    fn mul(self, rhs: Self) -> Self::Output {
        self.try_mul(&rhs).expect("Pauli product with mismatched qubit counts")
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let y_count = (self.alpha & self.beta).count_ones();
        let prefix = match Sign::from_power(self.sign.power() + 3 * y_count) {
            Sign::PlusOne => "",
            Sign::PlusI => "i",
            Sign::MinusOne => "-",
            Sign::MinusI => "-i",
        };
        write!(f, "{prefix}")?;
        for i in 0..self.n_qubits {
            let c = match (bit_of(self.alpha, self.n_qubits, i), bit_of(self.beta, self.n_qubits, i)) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Symplectic form: 1 when X(a1)Z(b1) and X(a2)Z(b2) anticommute.
pub fn symplectic(a1: usize, b1: usize, a2: usize, b2: usize) -> u32 {
    ((a1 & b2).count_ones() + (b1 & a2).count_ones()) % 2
}

/// Dense `2^N x 2^N` unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseUnitary {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DenseUnitary {
    pub fn new(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let d = 1usize << n_qubits;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        let deviation = max_abs(&(matrix.adjoint() * &matrix - DMatrix::identity(d, d)));
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { n_qubits, matrix })
    }

    pub(crate) fn new_unchecked(n_qubits: usize, matrix: DMatrix<C64>) -> Self {
        Self { n_qubits, matrix }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { n_qubits, matrix: DMatrix::identity(d, d) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { n_qubits: self.n_qubits, matrix: self.matrix.adjoint() }
    }

    /// `self * other`, i.e. `other` acts first.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        Ok(Self { n_qubits: self.n_qubits, matrix: &self.matrix * &other.matrix })
    }

    /// Equality up to a global phase, entrywise within `tol`.
    pub fn equal_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        phase_equal(&self.matrix, &other.matrix, tol)
    }
}

/// Maximum absolute entry.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// True when `a = e^{i phi} b` entrywise within `tol` for some phase.
pub fn phase_equal(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let (k, pivot) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(k, z)| (k, *z))
        .unwrap_or((0, C64::new(0.0, 0.0)));
    if pivot.norm() == 0.0 {
        return max_abs(a) <= tol;
    }
    let ratio = a.as_slice()[k] / pivot;
    if (ratio.norm() - 1.0).abs() > tol {
        return false;
    }
    let phase = ratio / ratio.norm();
    a.iter().zip(b.iter()).all(|(x, y)| (x - phase * y).norm() <= tol)
}

/// Matrix of `sign * X^{a_1}Z^{b_1} (x) ... (x) X^{a_N}Z^{b_N}`.
pub fn pauli_to_matrix(p: &PauliOperator) -> DenseUnitary {
    let d = 1usize << p.n_qubits;
    let phase = p.sign.to_complex();
    let mut m = DMatrix::zeros(d, d);
    for x in 0..d {
        let s = if (p.beta & x).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        m[(x ^ p.alpha, x)] = phase * s;
    }
    DenseUnitary::new_unchecked(p.n_qubits, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a.kronecker(b)
    }

    fn single(label: char) -> DMatrix<C64> {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match label {
            'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            _ => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    #[test]
    fn identity_single_qubit() {
        let p = PauliOperator::new(&[0], &[0], Sign::PlusOne).unwrap();
        assert_eq!(p.to_matrix().matrix(), &DMatrix::<C64>::identity(2, 2));
    }

    #[test]
    fn xz_product_matrix() {
        let p = PauliOperator::new(&[1], &[1], Sign::PlusOne).unwrap();
        let m = p.to_matrix();
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        assert_eq!(m.matrix(), &expect);
    }

    #[test]
    fn x_tensor_z_matches_kronecker() {
        let p = PauliOperator::new(&[1, 0], &[0, 1], Sign::PlusOne).unwrap();
        assert_eq!(p.to_matrix().matrix(), &kron(&single('X'), &single('Z')));
    }

    #[test]
    fn labels_match_kronecker_products() {
        for label in ["XY", "YZ", "ZZ", "IY", "XYZ", "YYI"] {
            let p = PauliOperator::from_label(label).unwrap();
            let mut expect = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
            for c in label.chars() {
                expect = kron(&expect, &single(c));
            }
            assert!(max_abs(&(p.to_matrix().into_matrix() - expect)) < 1e-15, "{label}");
            assert!(p.is_hermitian());
            assert_eq!(p.to_string(), label);
        }
    }

    #[test]
    fn product_tracks_sign() {
        let x = PauliOperator::from_label("X").unwrap();
        let z = PauliOperator::from_label("Z").unwrap();
        let y = PauliOperator::from_label("Y").unwrap();
        // XZ = -iY, ZX = iY
        assert_eq!((x * z).sign(), Sign::PlusOne);
        let xz = (x * z).to_matrix();
        assert!(phase_equal(xz.matrix(), y.to_matrix().matrix(), 1e-15));
        let lhs = (x * z).to_matrix().into_matrix();
        let rhs = x.to_matrix().into_matrix() * z.to_matrix().into_matrix();
        assert_eq!(lhs, rhs);
        assert!(!x.commutes_with(&z));
        assert!(x.commutes_with(&x));
    }

    #[test]
    fn phase_equality_detects_difference() {
        let x = PauliOperator::from_label("X").unwrap().to_matrix();
        let ix = x.matrix() * C64::new(0.0, 1.0);
        assert!(phase_equal(&ix, x.matrix(), 1e-14));
        let z = PauliOperator::from_label("Z").unwrap().to_matrix();
        assert!(!phase_equal(z.matrix(), x.matrix(), 1e-14));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn product_matches_dense(n in 1usize..4, a1 in 0usize..8, b1 in 0usize..8, a2 in 0usize..8, b2 in 0usize..8, s1 in 0u32..4, s2 in 0u32..4) {
                let m = (1usize << n) - 1;
                let p = PauliOperator::from_masks(n, a1 & m, b1 & m, Sign::from_power(s1)).unwrap();
                let q = PauliOperator::from_masks(n, a2 & m, b2 & m, Sign::from_power(s2)).unwrap();
                let lhs = (p * q).to_matrix().into_matrix();
                let rhs = p.to_matrix().into_matrix() * q.to_matrix().into_matrix();
                prop_assert!(max_abs(&(lhs - rhs)) < 1e-14);
            }
        }
    }
}
