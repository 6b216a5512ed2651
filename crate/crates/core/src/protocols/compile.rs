use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{pauli_to_matrix, qubit_bit, PauliOperator, Sign, C64};

/// Largest register `Circuit::to_unitary` will densify.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Circuit gates. `T` and `H` are representable but cannot be compiled:
/// `T` does not map Paulis to Paulis and `H` does not preserve bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    X(usize),
    Z(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    H(usize),
    CZ(usize, usize),
    CX(usize, usize),
    /// `X_c CX_{c,t} X_c`.
    CXPrime(usize, usize),
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::Z(q) | Gate::S(q) | Gate::Sdg(q) | Gate::T(q) | Gate::H(q) => vec![q],
            Gate::CZ(a, b) | Gate::CX(a, b) | Gate::CXPrime(a, b) => vec![a, b],
        }
    }

    /// Local matrix on `qubits()` in their listed order, first qubit most
    /// significant.
    fn local_matrix(&self) -> DMatrix<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Gate::X(_) => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Gate::Z(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
            Gate::S(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, i]),
            Gate::Sdg(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, -i]),
            Gate::T(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, C64::new(h, h)]),
            Gate::H(_) => DMatrix::from_row_slice(2, 2, &[l * h, l * h, l * h, -l * h]),
            Gate::CZ(..) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[l, l, l, -l])),
            Gate::CX(..) => DMatrix::from_row_slice(4, 4, &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o]),
            Gate::CXPrime(..) => DMatrix::from_row_slice(4, 4, &[o, l, o, o, l, o, o, o, o, o, l, o, o, o, o, l]),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X(q) => write!(f, "X({q})"),
            Gate::Z(q) => write!(f, "Z({q})"),
            Gate::S(q) => write!(f, "S({q})"),
            Gate::Sdg(q) => write!(f, "Sdg({q})"),
            Gate::T(q) => write!(f, "T({q})"),
            Gate::H(q) => write!(f, "H({q})"),
            Gate::CZ(a, b) => write!(f, "CZ({a},{b})"),
            Gate::CX(c, t) => write!(f, "CX({c},{t})"),
            Gate::CXPrime(c, t) => write!(f, "CX'({c},{t})"),
        }
    }
}

/// Gates in time order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self { n_qubits, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        for g in &self.gates {
            let qs = g.qubits();
            if qs.iter().any(|&q| q >= self.n_qubits) || (qs.len() == 2 && qs[0] == qs[1]) {
                return Err(Error::InvalidArgument(format!("gate {g} invalid on {} qubits", self.n_qubits)));
            }
        }
        Ok(())
    }

    pub fn cx_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::CX(..))).count()
    }

    /// Dense unitary of the whole circuit.
    pub fn to_unitary(&self) -> Result<DMatrix<C64>> {
        self.validate()?;
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits { n: self.n_qubits, cap: MAX_DENSE_QUBITS });
        }
        let d = 1usize << self.n_qubits;
        let mut u = DMatrix::<C64>::identity(d, d);
        for g in &self.gates {
            u = embed(self.n_qubits, g) * u;
        }
        Ok(u)
    }
}

/// Full-register matrix of one gate.
fn embed(n: usize, g: &Gate) -> DMatrix<C64> {
    let qs = g.qubits();
    let local = g.local_matrix();
    let d = 1usize << n;
    let support: usize = qs.iter().map(|&q| qubit_bit(n, q)).sum();
    let local_index = |x: usize| qs.iter().fold(0usize, |acc, &q| (acc << 1) | usize::from(x & qubit_bit(n, q) != 0));
    let mut m = DMatrix::zeros(d, d);
    for x in 0..d {
        for y in 0..d {
            if x & !support == y & !support {
                m[(y, x)] = local[(local_index(y), local_index(x))];
            }
        }
    }
    m
}

/// Pauli frame tracked as `X(alpha) Z(beta)` masks, phase discarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
struct Frame {
    alpha: usize,
    beta: usize,
}

impl Frame {
    /// `F <- G F G^dagger` for a gate that normalizes the Pauli group.
    fn conjugate(&mut self, n: usize, g: &Gate) -> Result<()> {
        let bit = |q| qubit_bit(n, q);
        let has = |mask: usize, q| mask & bit(q) != 0;
        match *g {
            Gate::X(_) | Gate::Z(_) => {}
            Gate::S(q) | Gate::Sdg(q) => {
                if has(self.alpha, q) {
                    self.beta ^= bit(q);
                }
            }
            Gate::CZ(a, b) => {
                if has(self.alpha, a) {
                    self.beta ^= bit(b);
                }
                if has(self.alpha, b) {
                    self.beta ^= bit(a);
                }
            }
            Gate::CX(c, t) | Gate::CXPrime(c, t) => {
                if has(self.alpha, c) {
                    self.alpha ^= bit(t);
                }
                if has(self.beta, t) {
                    self.beta ^= bit(c);
                }
            }
            Gate::T(_) | Gate::H(_) => return Err(Error::UnsupportedGate(g.to_string())),
        }
        Ok(())
    }

    fn operator(&self, n: usize) -> Result<PauliOperator> {
        PauliOperator::from_masks(n, self.alpha, self.beta, Sign::PlusOne)
    }
}

/// Random choices for one CX: the inserted Z on (control, target) and
/// whether the CX is swapped for `C'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CxChoice {
    pub z_control: bool,
    pub z_target: bool,
    pub swap: bool,
}

impl CxChoice {
    pub const NONE: CxChoice = CxChoice { z_control: false, z_target: false, swap: false };

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { z_control: rng.random(), z_target: rng.random(), swap: rng.random() }
    }
}

/// Compiles with given choices, one per CX in order. Returns the compiled
/// circuit and the frame `F` with `original = F * compiled` up to phase.
pub fn compile_with_choices(circuit: &Circuit, choices: &[CxChoice]) -> Result<(Circuit, PauliOperator)> {
    circuit.validate()?;
    if choices.len() != circuit.cx_count() {
        return Err(Error::InvalidArgument(format!(
            "{} choices for {} CX gates",
            choices.len(),
            circuit.cx_count()
        )));
    }
    let n = circuit.n_qubits;
    let mut frame = Frame::default();
    let mut out = Vec::with_capacity(circuit.gates.len() + 2 * choices.len());
    let mut next = choices.iter();
    for g in &circuit.gates {
        match *g {
            Gate::CX(c, t) => {
                let ch = next.next().expect("count checked");
                // F' = CX F Z(beta) C_s, with C_s = X_c CX X_c when swapped
                if ch.z_control {
                    out.push(Gate::Z(c));
                    frame.beta ^= qubit_bit(n, c);
                }
                if ch.z_target {
                    out.push(Gate::Z(t));
                    frame.beta ^= qubit_bit(n, t);
                }
                if ch.swap {
                    out.push(Gate::CXPrime(c, t));
                    frame.alpha ^= qubit_bit(n, c);
                    frame.conjugate(n, g)?;
                    frame.alpha ^= qubit_bit(n, c);
                } else {
                    out.push(*g);
                    frame.conjugate(n, g)?;
                }
            }
            _ => {
                frame.conjugate(n, g)?;
                out.push(*g);
            }
        }
    }
    Ok((Circuit { n_qubits: n, gates: out }, frame.operator(n)?))
}

/// Inserts a uniform Z-group element on both qubits of every CX and swaps
/// it for `C'` with probability 1/2.
pub fn randomized_compile<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Result<(Circuit, PauliOperator)> {
    let choices: Vec<CxChoice> = (0..circuit.cx_count()).map(|_| CxChoice::sample(rng)).collect();
    compile_with_choices(circuit, &choices)
}

/// Checks `original = frame * compiled` on dense unitaries.
pub fn frame_consistent(original: &Circuit, compiled: &Circuit, frame: &PauliOperator, tol: f64) -> Result<bool> {
    let f = pauli_to_matrix(frame).into_matrix();
    Ok(crate::pauli::operator::phase_equal(&original.to_unitary()?, &(f * compiled.to_unitary()?), tol))
}
