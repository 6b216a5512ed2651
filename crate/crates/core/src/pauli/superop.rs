use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::operator::{max_abs, DenseUnitary, PauliOperator, C64};
use crate::pauli::MAX_QUBITS;

/// Vectorization convention for a superoperator matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// `vec(rho)[r + c*d] = rho[r, c]`; `vec(A rho B) = (B^T (x) A) vec(rho)`.
    ColumnStacking,
    /// Normalized Hermitian Pauli basis `P_k / sqrt(d)` (transfer matrix).
    PauliBasis,
}

/// `4^N x 4^N` matrix acting on vectorized density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    n_qubits: usize,
    basis: Basis,
    matrix: DMatrix<C64>,
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("qubit count must be positive".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { n, cap: MAX_QUBITS });
    }
    Ok(())
}

/// Change-of-basis matrix whose column `k` is `vec(P_k) / sqrt(d)`, with
/// `P_k` the Hermitian Pauli of index `(alpha << n) | beta`. Unitary.
pub fn pauli_basis_matrix(n_qubits: usize) -> &'static DMatrix<C64> {
    static CACHE: [OnceLock<DMatrix<C64>>; MAX_QUBITS + 1] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=MAX_QUBITS).contains(&n_qubits), "qubit count outside 1..={MAX_QUBITS}");
    CACHE[n_qubits].get_or_init(|| {
        let d = 1usize << n_qubits;
        let scale = 1.0 / (d as f64).sqrt();
        let mut b = DMatrix::zeros(d * d, d * d);
        for k in 0..d * d {
            let p = PauliOperator::hermitian(n_qubits, k >> n_qubits, k & (d - 1))
                .expect("index within range")
                .to_matrix();
            for c in 0..d {
                for r in 0..d {
                    b[(r + c * d, k)] = p.matrix()[(r, c)] * scale;
                }
            }
        }
        b
    })
}

impl Superoperator {
    pub fn new(n_qubits: usize, basis: Basis, matrix: DMatrix<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dd = 1usize << (2 * n_qubits);
        if matrix.nrows() != dd || matrix.ncols() != dd {
            return Err(Error::DimensionMismatch { expected: dd, found: matrix.nrows() });
        }
        Ok(Self { n_qubits, basis, matrix })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dd = 1usize << (2 * n_qubits);
        Ok(Self { n_qubits, basis: Basis::PauliBasis, matrix: DMatrix::identity(dd, dd) })
    }

    /// Column-stacking superoperator `sum_a conj(K_a) (x) K_a`.
    pub fn from_kraus_column_stacking(n_qubits: usize, ops: &[DMatrix<C64>]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1usize << n_qubits;
        let mut s = DMatrix::zeros(d * d, d * d);
        for k in ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
            s += k.conjugate().kronecker(k);
        }
        Ok(Self { n_qubits, basis: Basis::ColumnStacking, matrix: s })
    }

    /// Transfer matrix of a Kraus set.
    pub fn from_kraus(n_qubits: usize, ops: &[DMatrix<C64>]) -> Result<Self> {
        Ok(Self::from_kraus_column_stacking(n_qubits, ops)?.to_pauli_basis())
    }

    /// Transfer matrix of `rho -> U rho U^dagger`.
    pub fn from_unitary(u: &DenseUnitary) -> Result<Self> {
        Self::from_kraus(u.n_qubits(), std::slice::from_ref(u.matrix()))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn to_basis(&self, basis: Basis) -> Self {
        if basis == self.basis {
            return self.clone();
        }
        let b = pauli_basis_matrix(self.n_qubits);
        let matrix = match basis {
            Basis::PauliBasis => b.adjoint() * &self.matrix * b,
            Basis::ColumnStacking => b * &self.matrix * b.adjoint(),
        };
        Self { n_qubits: self.n_qubits, basis, matrix }
    }

    pub fn to_pauli_basis(&self) -> Self {
        self.to_basis(Basis::PauliBasis)
    }

    pub fn to_column_stacking(&self) -> Self {
        self.to_basis(Basis::ColumnStacking)
    }

    /// Real part of the transfer matrix. Exact for Hermiticity-preserving maps.
    pub fn ptm(&self) -> DMatrix<f64> {
        self.to_pauli_basis().matrix.map(|z| z.re)
    }

    /// `self * other`: `other` acts first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { n_qubits: self.n_qubits, basis: self.basis, matrix: &self.matrix * &other.matrix })
    }

    pub fn adjoint(&self) -> Self {
        Self { n_qubits: self.n_qubits, basis: self.basis, matrix: self.matrix.adjoint() }
    }

    /// Maximum deviation of the first transfer-matrix row from `(1, 0, ..., 0)`.
    pub fn trace_preservation_violation(&self) -> f64 {
        let r = self.to_pauli_basis();
        let mut row = r.matrix.row(0).clone_owned();
        row[0] -= C64::new(1.0, 0.0);
        row.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Applies the map to a density matrix.
    pub fn apply(&self, state: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let d = 1usize << self.n_qubits;
        if state.nrows() != d || state.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: state.nrows() });
        }
        let s = self.to_column_stacking();
        let v = DVector::from_column_slice(state.as_slice());
        let out = &s.matrix * v;
        Ok(DMatrix::from_column_slice(d, d, out.as_slice()))
    }

    /// Transfer-matrix element `<<P_j| S |P_k>>` in the normalized basis.
    pub fn ptm_element(&self, j: usize, k: usize) -> f64 {
        match self.basis {
            Basis::PauliBasis => self.matrix[(j, k)].re,
            Basis::ColumnStacking => self.to_pauli_basis().matrix[(j, k)].re,
        }
    }
}

/// `compose(a, b) = a * b`.
pub fn compose(a: &Superoperator, b: &Superoperator) -> Result<Superoperator> {
    a.compose(b)
}

pub fn apply(s: &Superoperator, state: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    s.apply(state)
}

/// `tr(E rho)` for a Hermitian observable; rejects a complex result.
pub fn expectation(observable: &DMatrix<C64>, state: &DMatrix<C64>) -> Result<f64> {
    if observable.shape() != state.shape() {
        return Err(Error::DimensionMismatch { expected: observable.nrows(), found: state.nrows() });
    }
    let v = (observable * state).trace();
    if v.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!("expectation has imaginary part {:.3e}", v.im)));
    }
    Ok(v.re)
}

/// `(Tr_Z, Tr_{P\Z})`: sums of diagonal transfer-matrix entries over the
/// Paulis without and with an X component.
pub fn subspace_traces(s: &Superoperator) -> (f64, f64) {
    let r = s.to_pauli_basis();
    let n = s.n_qubits;
    let d = 1usize << n;
    let mut tz = 0.0;
    let mut tpz = 0.0;
    for k in 0..d * d {
        let v = r.matrix[(k, k)].re;
        if k >> n == 0 {
            tz += v;
        } else {
            tpz += v;
        }
    }
    (tz, tpz)
}

/// `(p_D, p_ND)` recovered from the subspace traces.
pub fn probabilities_from_traces(n_qubits: usize, trace_z: f64, trace_pz: f64) -> (f64, f64) {
    let d = (1u64 << n_qubits) as f64;
    let p_d = ((d - 1.0) * trace_z - trace_pz) / (d * d);
    let p_nd = 1.0 - trace_z / d;
    (p_d, p_nd)
}

/// True when the matrix is diagonal within `tol`.
pub fn is_diagonal(m: &DMatrix<C64>, tol: f64) -> bool {
    let mut off = m.clone();
    off.fill_diagonal(C64::new(0.0, 0.0));
    max_abs(&off) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::operator::pauli_to_matrix;
    use crate::pauli::random_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis_state(d: usize, x: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(d, d);
        m[(x, x)] = C64::new(1.0, 0.0);
        m
    }

    #[test]
    fn basis_matrix_is_unitary() {
        for n in 1..=3 {
            let b = pauli_basis_matrix(n);
            let dd = b.nrows();
            assert!(max_abs(&(b.adjoint() * b - DMatrix::identity(dd, dd))) < 1e-12);
        }
    }

    #[test]
    fn compose_identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(2, &mut rng);
        let s = Superoperator::from_unitary(&u).unwrap();
        let id = Superoperator::identity(2).unwrap();
        assert!(max_abs(&(id.compose(&s).unwrap().matrix - &s.matrix)) < 1e-15);
    }

    #[test]
    fn expectation_of_z_on_ground_state() {
        let z1 = PauliOperator::from_label("ZI").unwrap().to_matrix();
        let rho = basis_state(4, 0);
        assert!((expectation(z1.matrix(), &rho).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_superoperator_matches_dense_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..(100 / n) {
                let u = random_unitary(n, &mut rng);
                let v = random_unitary(n, &mut rng);
                let d = 1 << n;
                // pure state from a second random unitary
                let psi = v.matrix().column(0).clone_owned();
                let rho = &psi * psi.adjoint();
                let s = Superoperator::from_unitary(&u).unwrap();
                let out = s.apply(&rho).unwrap();
                let expect = u.matrix() * &rho * u.matrix().adjoint();
                assert!(max_abs(&(out - expect)) < 1e-12);
                assert!(s.trace_preservation_violation() < 1e-12);
                assert_eq!(rho.nrows(), d);
            }
        }
    }

    #[test]
    fn basis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(2, &mut rng);
        let s = Superoperator::from_kraus_column_stacking(2, &[u.matrix().clone()]).unwrap();
        let back = s.to_pauli_basis().to_column_stacking();
        assert!(max_abs(&(back.matrix - &s.matrix)) < 1e-12);
    }

    #[test]
    fn compose_matches_kraus_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a: Vec<_> = (0..2).map(|_| random_unitary(2, &mut rng).into_matrix() * C64::new(0.5f64.sqrt(), 0.0)).collect();
        let b: Vec<_> = (0..3).map(|_| random_unitary(2, &mut rng).into_matrix() * C64::new((1.0f64 / 3.0).sqrt(), 0.0)).collect();
        let mut ab = Vec::new();
        for ka in &a {
            for kb in &b {
                ab.push(ka * kb);
            }
        }
        let sa = Superoperator::from_kraus(2, &a).unwrap();
        let sb = Superoperator::from_kraus(2, &b).unwrap();
        let sab = Superoperator::from_kraus(2, &ab).unwrap();
        assert!(max_abs(&(sa.compose(&sb).unwrap().matrix - sab.matrix)) < 1e-12);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let a = Superoperator::identity(1).unwrap();
        let b = Superoperator::identity(2).unwrap();
        assert!(a.compose(&b).is_err());
        let c = Superoperator::identity(1).unwrap().to_column_stacking();
        assert!(matches!(a.compose(&c), Err(Error::BasisMismatch)));
    }

    #[test]
    fn identity_traces() {
        for n in 1..=3 {
            let (tz, tpz) = subspace_traces(&Superoperator::identity(n).unwrap());
            let d = (1usize << n) as f64;
            assert!((tz - d).abs() < 1e-12);
            assert!((tpz - (d * d - d)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_nondephasing_pauli_traces() {
        let y = pauli_to_matrix(&PauliOperator::from_label("YZ").unwrap()).into_matrix();
        let ops = vec![
            DMatrix::<C64>::identity(4, 4) * C64::new(0.98f64.sqrt(), 0.0),
            y * C64::new(0.02f64.sqrt(), 0.0),
        ];
        let s = Superoperator::from_kraus(2, &ops).unwrap();
        assert!(is_diagonal(s.matrix(), 1e-12));
        let (tz, tpz) = subspace_traces(&s);
        let (pd, pnd) = probabilities_from_traces(2, tz, tpz);
        assert!((pnd - 0.02).abs() < 1e-12);
        assert!(pd.abs() < 1e-12);
    }
}
