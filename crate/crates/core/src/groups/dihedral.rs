//! Canonical form of CX-dihedral elements.
//!
//! An element acts as `|x> -> w^{p(x)} |M x + a>` with `w = e^{i pi/4}`, `p` a
//! multilinear polynomial over `Z_8` without constant term, `M` invertible
//! over `Z_2` and `a` a bit vector. Monomials are keyed by bit masks in the
//! same convention as basis indices. Group elements carry weighted
//! polynomials: a degree-`k` coefficient is a multiple of `2^{k-1}` and
//! degree four and higher vanish.

use std::collections::{BTreeMap, HashSet, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::superop::check_qubits;
use crate::pauli::{qubit_bit, DenseUnitary, C64};

/// Multilinear polynomial over `Z_8`, indexed by monomial mask (index 0 is
/// the constant term).
pub(crate) type Poly = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CnotDihedralElement {
    n_qubits: usize,
    phase: Poly,
    linear: Vec<usize>,
    affine: usize,
}

fn parity(x: usize) -> usize {
    (x.count_ones() & 1) as usize
}

/// Smallest coefficient step a degree-`k` monomial may carry, or `None`
/// when the degree is not allowed.
pub fn coefficient_step(degree: u32) -> Option<u8> {
    match degree {
        1 => Some(1),
        2 => Some(2),
        3 => Some(4),
        _ => None,
    }
}

fn poly_mul(a: &[u8], b: &[u8]) -> Poly {
    let mut out = vec![0u8; a.len()];
    for (m1, &c1) in a.iter().enumerate() {
        if c1 == 0 {
            continue;
        }
        for (m2, &c2) in b.iter().enumerate() {
            if c2 != 0 {
                out[m1 | m2] = (out[m1 | m2] + c1 * c2) % 8;
            }
        }
    }
    out
}

fn poly_add_assign(a: &mut [u8], b: &[u8]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = (*x + *y) % 8;
    }
}

/// Linear map over `Z_2` stored as output rows.
fn apply_rows(rows: &[usize], x: usize) -> usize {
    let n = rows.len();
    rows.iter().enumerate().fold(0, |y, (i, &r)| y | (parity(r & x) << (n - 1 - i)))
}

/// `p(L x + a)` expanded with `u XOR v = u + v - 2uv` and `x^2 = x`.
fn substitute(p: &[u8], rows: &[usize], affine: usize) -> Poly {
    let n = rows.len();
    let size = 1usize << n;
    let variable = |i: usize| -> Poly {
        let mut q = vec![0u8; size];
        for j in 0..n {
            if rows[i] & qubit_bit(n, j) != 0 {
                // q <- q + x_j - 2 q x_j
                let mut xj = vec![0u8; size];
                xj[qubit_bit(n, j)] = 1;
                let cross = poly_mul(&q, &xj);
                poly_add_assign(&mut q, &xj);
                for (t, c) in q.iter_mut().zip(&cross) {
                    *t = (*t + 16 - 2 * c) % 8;
                }
            }
        }
        if affine & qubit_bit(n, i) != 0 {
            for t in q.iter_mut() {
                *t = (8 - *t) % 8;
            }
            q[0] = (q[0] + 1) % 8;
        }
        q
    };
    let vars: Vec<Poly> = (0..n).map(variable).collect();
    let mut out = vec![0u8; size];
    for (m, &c) in p.iter().enumerate().skip(1) {
        if c == 0 {
            continue;
        }
        let mut term = vec![0u8; size];
        term[0] = c;
        for (i, v) in vars.iter().enumerate() {
            if m & qubit_bit(n, i) != 0 {
                term = poly_mul(&term, v);
            }
        }
        poly_add_assign(&mut out, &term);
    }
    out[0] = 0;
    out
}

/// Rank over `Z_2` of a set of row masks.
pub fn gf2_rank(rows: &[usize]) -> usize {
    let mut basis: Vec<usize> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// `|GL(n, 2)|`.
pub fn gl_order(n: usize) -> u128 {
    let q = 1u128 << n;
    (0..n).map(|k| q - (1u128 << k)).product()
}

/// Number of canonical forms with weighted phase polynomials.
pub fn dihedral_order(n: usize) -> u128 {
    let phases: u128 = (1usize..1 << n)
        .filter_map(|m| coefficient_step(m.count_ones()).map(|s| (8 / s) as u128))
        .product();
    phases * (1u128 << n) * gl_order(n)
}

impl CnotDihedralElement {
    /// Builds an element from phase coefficients keyed by qubit subsets,
    /// linear rows and an affine mask.
    pub fn from_parts(
        n_qubits: usize,
        phase: &BTreeMap<Vec<usize>, u8>,
        linear: Vec<usize>,
        affine: usize,
    ) -> Result<Self> {
        check_qubits(n_qubits)?;
        let size = 1usize << n_qubits;
        if linear.len() != n_qubits {
            return Err(Error::DimensionMismatch { expected: n_qubits, found: linear.len() });
        }
        if linear.iter().any(|&r| r >= size) || affine >= size {
            return Err(Error::InvalidArgument("mask exceeds qubit count".into()));
        }
        if gf2_rank(&linear) != n_qubits {
            return Err(Error::InvalidArgument("linear part is not invertible".into()));
        }
        let mut poly = vec![0u8; size];
        for (subset, &c) in phase {
            let mut m = 0;
            for &q in subset {
                if q >= n_qubits {
                    return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
                }
                m |= qubit_bit(n_qubits, q);
            }
            if m == 0 {
                continue;
            }
            poly[m] = (poly[m] + c) % 8;
        }
        for (m, &c) in poly.iter().enumerate().skip(1) {
            let ok = match coefficient_step(m.count_ones()) {
                Some(s) => c % s == 0,
                None => c == 0,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {c} on a degree-{} monomial is outside the group",
                    m.count_ones()
                )));
            }
        }
        Ok(Self { n_qubits, phase: poly, linear, affine })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            phase: vec![0; 1 << n_qubits],
            linear: (0..n_qubits).map(|i| qubit_bit(n_qubits, i)).collect(),
            affine: 0,
        }
    }

    fn diagonal(n_qubits: usize, mask: usize, coefficient: u8) -> Self {
        let mut g = Self::identity(n_qubits);
        g.phase[mask] = coefficient % 8;
        g
    }

    pub fn x(n_qubits: usize, q: usize) -> Self {
        let mut g = Self::identity(n_qubits);
        g.affine = qubit_bit(n_qubits, q);
        g
    }

    /// `diag(1, w)` on qubit `q`.
    pub fn t(n_qubits: usize, q: usize) -> Self {
        Self::diagonal(n_qubits, qubit_bit(n_qubits, q), 1)
    }

    pub fn t_dagger(n_qubits: usize, q: usize) -> Self {
        Self::diagonal(n_qubits, qubit_bit(n_qubits, q), 7)
    }

    pub fn s(n_qubits: usize, q: usize) -> Self {
        Self::diagonal(n_qubits, qubit_bit(n_qubits, q), 2)
    }

    pub fn s_dagger(n_qubits: usize, q: usize) -> Self {
        Self::diagonal(n_qubits, qubit_bit(n_qubits, q), 6)
    }

    pub fn z(n_qubits: usize, q: usize) -> Self {
        Self::diagonal(n_qubits, qubit_bit(n_qubits, q), 4)
    }

    pub fn cz(n_qubits: usize, a: usize, b: usize) -> Self {
        Self::diagonal(n_qubits, qubit_bit(n_qubits, a) | qubit_bit(n_qubits, b), 4)
    }

    /// CX with control `c` and target `t`.
    pub fn cx(n_qubits: usize, c: usize, t: usize) -> Self {
        let mut g = Self::identity(n_qubits);
        g.linear[t] |= qubit_bit(n_qubits, c);
        g
    }

    /// `X_c CX_{c,t} X_c`: flips the target when the control is 0.
    pub fn c_prime(n_qubits: usize, c: usize, t: usize) -> Self {
        let xc = Self::x(n_qubits, c);
        xc.mul(&Self::cx(n_qubits, c, t)).mul(&xc)
    }

    /// `X(alpha) Z(beta)` as a group element.
    pub fn from_pauli_masks(n_qubits: usize, alpha: usize, beta: usize) -> Self {
        let mut g = Self::identity(n_qubits);
        g.affine = alpha;
        for i in 0..n_qubits {
            let b = qubit_bit(n_qubits, i);
            if beta & b != 0 {
                g.phase[b] = 4;
            }
        }
        g
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn linear_rows(&self) -> &[usize] {
        &self.linear
    }

    pub fn affine(&self) -> usize {
        self.affine
    }

    /// Coefficient of the monomial with the given mask.
    pub fn phase_coefficient(&self, mask: usize) -> u8 {
        self.phase[mask]
    }

    /// Nonzero phase coefficients keyed by qubit subsets.
    pub fn phase_poly(&self) -> BTreeMap<Vec<usize>, u8> {
        self.phase
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(m, &c)| ((0..self.n_qubits).filter(|&q| m & qubit_bit(self.n_qubits, q) != 0).collect(), c))
            .collect()
    }

    /// `M x + a`.
    pub fn map_basis(&self, x: usize) -> usize {
        apply_rows(&self.linear, x) ^ self.affine
    }

    /// `p(x) mod 8`.
    pub fn phase_at(&self, x: usize) -> u8 {
        let mut acc = 0u32;
        for (m, &c) in self.phase.iter().enumerate().skip(1) {
            if c != 0 && m & x == m {
                acc += c as u32;
            }
        }
        (acc % 8) as u8
    }

    /// Permutation and phase exponents: column `x` maps to row `perm[x]`
    /// with amplitude `w^{phases[x]}`.
    pub fn action(&self) -> (Vec<usize>, Vec<u8>) {
        let d = 1usize << self.n_qubits;
        ((0..d).map(|x| self.map_basis(x)).collect(), (0..d).map(|x| self.phase_at(x)).collect())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n_qubits)
    }

    /// `(alpha, beta)` when the element is a Pauli operator.
    pub fn as_pauli_masks(&self) -> Option<(usize, usize)> {
        if self.linear != Self::identity(self.n_qubits).linear {
            return None;
        }
        let mut beta = 0;
        for (m, &c) in self.phase.iter().enumerate().skip(1) {
            match (m.count_ones(), c) {
                (_, 0) => {}
                (1, 4) => beta |= m,
                _ => return None,
            }
        }
        Some((self.affine, beta))
    }

    /// Product `self * other`; `other` acts first.
    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("dihedral product with mismatched qubit counts")
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let mut phase = substitute(&self.phase, &other.linear, other.affine);
        poly_add_assign(&mut phase, &other.phase);
        phase[0] = 0;
        let n = self.n_qubits;
        let linear = self
            .linear
            .iter()
            .map(|&row| (0..n).filter(|&j| row & qubit_bit(n, j) != 0).fold(0, |acc, j| acc ^ other.linear[j]))
            .collect();
        let affine = apply_rows(&self.linear, other.affine) ^ self.affine;
        Ok(Self { n_qubits: n, phase, linear, affine })
    }

    pub fn inverse(&self) -> Self {
        let n = self.n_qubits;
        let d = 1usize << n;
        let mut preimage = vec![0usize; d];
        for x in 0..d {
            preimage[apply_rows(&self.linear, x)] = x;
        }
        // row i of M^{-1} collects bit i of the preimages of the unit vectors
        let inv_rows: Vec<usize> = (0..n)
            .map(|i| {
                (0..n).fold(0, |row, j| {
                    let col = preimage[qubit_bit(n, j)];
                    if col & qubit_bit(n, i) != 0 {
                        row | qubit_bit(n, j)
                    } else {
                        row
                    }
                })
            })
            .collect();
        let inv_affine = apply_rows(&inv_rows, self.affine);
        let mut phase = substitute(&self.phase, &inv_rows, inv_affine);
        for c in phase.iter_mut() {
            *c = (8 - *c) % 8;
        }
        Self { n_qubits: n, phase, linear: inv_rows, affine: inv_affine }
    }

    pub fn to_unitary(&self) -> DenseUnitary {
        let d = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(d, d);
        for x in 0..d {
            m[(self.map_basis(x), x)] = omega_power(self.phase_at(x));
        }
        DenseUnitary::new_unchecked(self.n_qubits, m)
    }

    /// Uniform sample: uniform invertible matrix by rejection, uniform
    /// affine vector, and each allowed monomial coefficient uniform over its
    /// admissible multiples.
    pub fn sample_uniform<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let size = 1usize << n_qubits;
        let linear = loop {
            let rows: Vec<usize> = (0..n_qubits).map(|_| rng.random_range(0..size)).collect();
            if gf2_rank(&rows) == n_qubits {
                break rows;
            }
        };
        let affine = rng.random_range(0..size);
        let mut phase = vec![0u8; size];
        for (m, c) in phase.iter_mut().enumerate().skip(1) {
            if let Some(step) = coefficient_step(m.count_ones()) {
                *c = rng.random_range(0..8 / step) * step;
            }
        }
        Self { n_qubits, phase, linear, affine }
    }

    /// All elements, for `n_qubits <= 2`.
    pub fn enumerate(n_qubits: usize) -> Result<Vec<Self>> {
        if n_qubits > 2 {
            return Err(Error::GroupTooLarge { group: format!("D_{n_qubits}"), order: dihedral_order(n_qubits) });
        }
        check_qubits(n_qubits)?;
        let size = 1usize << n_qubits;
        let mut matrices = Vec::new();
        let mut rows = vec![0usize; n_qubits];
        for code in 0..size.pow(n_qubits as u32) {
            let mut c = code;
            for r in rows.iter_mut() {
                *r = c % size;
                c /= size;
            }
            if gf2_rank(&rows) == n_qubits {
                matrices.push(rows.clone());
            }
        }
        let monomials: Vec<(usize, u8)> =
            (1..size).filter_map(|m| coefficient_step(m.count_ones()).map(|s| (m, s))).collect();
        let mut phases = vec![vec![0u8; size]];
        for &(m, step) in &monomials {
            let mut next = Vec::with_capacity(phases.len() * (8 / step) as usize);
            for p in &phases {
                for k in 0..8 / step {
                    let mut q = p.clone();
                    q[m] = k * step;
                    next.push(q);
                }
            }
            phases = next;
        }
        let mut out = Vec::with_capacity(phases.len() * size * matrices.len());
        for linear in &matrices {
            for affine in 0..size {
                for phase in &phases {
                    out.push(Self { n_qubits, phase: phase.clone(), linear: linear.clone(), affine });
                }
            }
        }
        Ok(out)
    }
}

/// Closure of `generators` under multiplication, by breadth-first search
/// from the identity.
pub fn closure(n_qubits: usize, generators: &[CnotDihedralElement]) -> Vec<CnotDihedralElement> {
    let id = CnotDihedralElement::identity(n_qubits);
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    let mut out = Vec::new();
    while let Some(g) = queue.pop_front() {
        for s in generators {
            let h = g.mul(s);
            if seen.insert(h.clone()) {
                queue.push_back(h);
            }
        }
        out.push(g);
    }
    out
}

/// `X`, `T` on every qubit and `CX` on every ordered pair.
pub fn standard_generators(n_qubits: usize) -> Vec<CnotDihedralElement> {
    let mut g = Vec::new();
    for q in 0..n_qubits {
        g.push(CnotDihedralElement::x(n_qubits, q));
        g.push(CnotDihedralElement::t(n_qubits, q));
    }
    for c in 0..n_qubits {
        for t in 0..n_qubits {
            if c != t {
                g.push(CnotDihedralElement::cx(n_qubits, c, t));
            }
        }
    }
    g
}

/// `e^{i pi k / 4}`.
pub fn omega_power(k: u8) -> C64 {
    match k % 8 {
        0 => C64::new(1.0, 0.0),
        2 => C64::new(0.0, 1.0),
        4 => C64::new(-1.0, 0.0),
        6 => C64::new(0.0, -1.0),
        k => C64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * k as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{pauli_to_matrix, PauliOperator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Coefficients recovered from the truth table by Moebius inversion.
    fn moebius_phase(g: &CnotDihedralElement, outer: &CnotDihedralElement) -> Poly {
        let d = 1usize << g.n_qubits;
        let f: Vec<i32> = (0..d)
            .map(|x| outer.phase_at(g.map_basis(x)) as i32 + g.phase_at(x) as i32)
            .collect();
        let mut c = vec![0u8; d];
        for m in 0..d {
            let mut acc = 0i32;
            let mut s = m;
            loop {
                let sign = if (m.count_ones() - s.count_ones()) % 2 == 0 { 1 } else { -1 };
                acc += sign * f[s];
                if s == 0 {
                    break;
                }
                s = (s - 1) & m;
            }
            c[m] = acc.rem_euclid(8) as u8;
        }
        c[0] = 0;
        c
    }

    #[test]
    fn x_is_an_involution() {
        let x = CnotDihedralElement::x(2, 0);
        assert!(x.mul(&x).is_identity());
    }

    #[test]
    fn four_t_gates_give_z() {
        let t = CnotDihedralElement::t(2, 0);
        let t4 = t.mul(&t).mul(&t).mul(&t);
        assert_eq!(t4, CnotDihedralElement::z(2, 0));
        assert_eq!(t4.phase_poly(), BTreeMap::from([(vec![0], 4)]));
        let z = pauli_to_matrix(&PauliOperator::from_label("ZI").unwrap());
        assert!(t4.to_unitary().equal_up_to_phase(&z, 1e-12));
    }

    #[test]
    fn c_prime_flips_on_zero_control() {
        let cp = CnotDihedralElement::c_prime(2, 0, 1);
        let u = cp.to_unitary();
        assert!((u.matrix()[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((u.matrix()[(3, 3)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let x = CnotDihedralElement::x(2, 0).to_unitary();
        let cx = CnotDihedralElement::cx(2, 0, 1).to_unitary();
        let dense = x.matrix() * cx.matrix() * x.matrix();
        assert!(crate::pauli::operator::phase_equal(u.matrix(), &dense, 1e-12));
    }

    #[test]
    fn cx_matrix_is_standard() {
        let u = CnotDihedralElement::cx(2, 0, 1).to_unitary();
        let perm = [0, 1, 3, 2];
        for (x, &y) in perm.iter().enumerate() {
            assert_eq!(u.matrix()[(y, x)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn inverse_of_t_is_t7() {
        let t = CnotDihedralElement::t(1, 0);
        assert_eq!(t.inverse().phase_poly(), BTreeMap::from([(vec![0], 7)]));
        assert!(CnotDihedralElement::identity(2).inverse().is_identity());
    }

    #[test]
    fn pauli_embedding_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let n = rng.random_range(1..=3);
            let a = rng.random_range(0..1 << n);
            let b = rng.random_range(0..1 << n);
            let g = CnotDihedralElement::from_pauli_masks(n, a, b);
            let p = pauli_to_matrix(&PauliOperator::from_masks(n, a, b, crate::pauli::Sign::PlusOne).unwrap());
            assert!(g.to_unitary().equal_up_to_phase(&p, 1e-12));
            assert_eq!(g.as_pauli_masks(), Some((a, b)));
        }
        assert_eq!(CnotDihedralElement::from_pauli_masks(1, 0, 1), CnotDihedralElement::t(1, 0).mul(&CnotDihedralElement::z(1, 0)).mul(&CnotDihedralElement::t_dagger(1, 0)));
    }

    #[test]
    fn orders_from_formula() {
        assert_eq!(dihedral_order(1), 16);
        assert_eq!(dihedral_order(2), 6144);
        assert_eq!(gl_order(3), 168);
        assert_eq!(CnotDihedralElement::enumerate(1).unwrap().len(), 16);
        assert_eq!(CnotDihedralElement::enumerate(2).unwrap().len(), 6144);
    }

    #[test]
    fn generated_group_matches_enumeration() {
        for n in [1usize, 2] {
            let mut bfs = closure(n, &standard_generators(n));
            let mut all = CnotDihedralElement::enumerate(n).unwrap();
            bfs.sort();
            all.sort();
            assert_eq!(bfs, all);
        }
    }

    #[test]
    fn from_parts_rejects_outside_group() {
        let bad = BTreeMap::from([(vec![0, 1], 1u8)]);
        assert!(CnotDihedralElement::from_parts(2, &bad, vec![2, 1], 0).is_err());
        let good = BTreeMap::from([(vec![0, 1], 2u8), (vec![1], 3)]);
        let g = CnotDihedralElement::from_parts(2, &good, vec![2, 3], 1).unwrap();
        assert_eq!(g.phase_poly(), good);
        assert!(CnotDihedralElement::from_parts(2, &good, vec![3, 3], 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn element() -> impl Strategy<Value = CnotDihedralElement> {
            (1usize..=3, any::<u64>()).prop_map(|(n, s)| {
                CnotDihedralElement::sample_uniform(n, &mut ChaCha8Rng::seed_from_u64(s))
            })
        }

        fn triple() -> impl Strategy<Value = [CnotDihedralElement; 3]> {
            (1usize..=3, any::<u64>()).prop_map(|(n, s)| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                [0, 1, 2].map(|_| CnotDihedralElement::sample_uniform(n, &mut rng))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(300))]

            #[test]
            fn inverse_is_exact(g in element()) {
                prop_assert!(g.mul(&g.inverse()).is_identity());
                prop_assert!(g.inverse().mul(&g).is_identity());
            }

            #[test]
            fn product_is_associative(t in triple()) {
                let [a, b, c] = t;
                prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            }

            #[test]
            fn unitary_is_homomorphic(t in triple()) {
                let [a, b, _] = t;
                let dense = a.to_unitary().try_mul(&b.to_unitary()).unwrap();
                prop_assert!(a.mul(&b).to_unitary().equal_up_to_phase(&dense, 1e-10));
            }

            #[test]
            fn substitution_matches_truth_table(t in triple()) {
                let [a, b, _] = t;
                let ab = a.mul(&b);
                prop_assert_eq!(&ab.phase, &moebius_phase(&b, &a));
            }
        }
    }
}
