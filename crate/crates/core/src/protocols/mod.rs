//! Sequence generation, shot-level simulation, exact decay oracles and
//! randomized compiling for the CX-dihedral and interleaved protocols.

pub mod compile;
pub mod exact;
pub mod noise;
pub mod records;
pub mod sequence;
pub mod simulate;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::CharacterRow;
use crate::pauli::{pauli_to_matrix, PauliOperator, C64};

pub use compile::{compile_with_choices, randomized_compile, Circuit, Gate};
pub use exact::{
    brb_exact_decay, brb_exact_survival, brb_prefactor, ibrb_decay_terms, ibrb_exact_decays, ibrb_exact_survival,
    ibrb_transfer, DecayTerm, IbrbDecay,
};
pub use noise::NoiseModel;
pub use records::{SequenceResult, SurvivalRecord};
pub use sequence::{brb_generate_sequence, ibrb_generate_sequence, GateKind, RBSequence};
pub use simulate::{sequence_expectation, simulate_sequence, CompiledNoise};

/// Number of qubits the interleaved protocol acts on.
pub const IBRB_QUBITS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Brb,
    Ibrb,
}

impl Protocol {
    pub fn branches(self) -> &'static [Branch] {
        match self {
            Protocol::Brb => &Branch::BRB,
            Protocol::Ibrb => &Branch::IBRB,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Brb => "brb",
            Protocol::Ibrb => "ibrb",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "brb" => Ok(Protocol::Brb),
            "ibrb" => Ok(Protocol::Ibrb),
            other => Err(Error::InvalidArgument(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Measurement branch `b`: the two CX-dihedral rows and the six
/// interleaved rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Brb1,
    Brb2,
    ZeroPlus,
    ZeroMinus,
    OnePlus,
    OneMinus,
    TwoPlus,
    TwoMinus,
}

impl Branch {
    pub const BRB: [Branch; 2] = [Branch::Brb1, Branch::Brb2];
    pub const IBRB: [Branch; 6] = [
        Branch::ZeroPlus,
        Branch::ZeroMinus,
        Branch::OnePlus,
        Branch::OneMinus,
        Branch::TwoPlus,
        Branch::TwoMinus,
    ];

    pub fn protocol(self) -> Protocol {
        match self {
            Branch::Brb1 | Branch::Brb2 => Protocol::Brb,
            _ => Protocol::Ibrb,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Brb1 => "1",
            Branch::Brb2 => "2",
            Branch::ZeroPlus => "0+",
            Branch::ZeroMinus => "0-",
            Branch::OnePlus => "1+",
            Branch::OneMinus => "1-",
            Branch::TwoPlus => "2+",
            Branch::TwoMinus => "2-",
        }
    }

    pub fn parse(protocol: Protocol, label: &str) -> Result<Self> {
        protocol
            .branches()
            .iter()
            .copied()
            .find(|b| b.label() == label)
            .ok_or_else(|| Error::InvalidArgument(format!("no branch {label:?} in {protocol}")))
    }

    /// `sigma_-` flips the sign for every `C'`.
    pub fn is_minus(self) -> bool {
        matches!(self, Branch::ZeroMinus | Branch::OneMinus | Branch::TwoMinus)
    }

    /// The `2+` and `2-` rows interleave `2n` CX gates.
    pub fn is_doubled(self) -> bool {
        matches!(self, Branch::TwoPlus | Branch::TwoMinus)
    }

    /// Number of CX-type gates in an interleaved sequence of length `n`.
    pub fn cx_count(self, n: usize) -> usize {
        if self.is_doubled() {
            2 * n
        } else {
            n
        }
    }

    /// Character weighting the Z-group gates; for the doubled rows this is
    /// the odd-position character.
    pub fn z_character(self) -> CharacterRow {
        match self {
            Branch::ZeroPlus | Branch::ZeroMinus => CharacterRow::Trivial,
            Branch::OnePlus | Branch::OneMinus => CharacterRow::z_second(),
            Branch::TwoPlus | Branch::TwoMinus => CharacterRow::z_first(),
            Branch::Brb1 => CharacterRow::XWeight,
            Branch::Brb2 => CharacterRow::ZWeight,
        }
    }

    /// Character applied to the even-position gates of the doubled rows.
    pub fn even_character(self) -> CharacterRow {
        if self.is_doubled() {
            CharacterRow::z_both()
        } else {
            self.z_character()
        }
    }

    /// Equiprobable preparations, each with its observable and `+-1`
    /// weight.
    pub fn preparations(self, n_qubits: usize) -> Vec<Preparation> {
        use QubitState::*;
        let p = |state: Vec<QubitState>, obs: &str, weight: i8| Preparation {
            state,
            observable: PauliOperator::from_label(obs).expect("valid label"),
            weight,
        };
        match self {
            Branch::Brb1 => vec![p(vec![Zero; n_qubits], &"Z".repeat(n_qubits), 1)],
            Branch::Brb2 => vec![p(vec![Plus; n_qubits], &"X".repeat(n_qubits), 1)],
            Branch::ZeroPlus => vec![p(vec![Zero, Zero], "ZI", 1), p(vec![One, Zero], "ZI", -1)],
            Branch::ZeroMinus => vec![p(vec![Zero, Zero], "ZZ", 1), p(vec![One, Zero], "ZZ", -1)],
            Branch::OnePlus => vec![
                p(vec![Zero, Plus], "IX", 1),
                p(vec![One, Plus], "IX", 1),
                p(vec![Zero, Plus], "ZX", 1),
                p(vec![One, Plus], "ZX", -1),
            ],
            Branch::OneMinus => vec![p(vec![PlusI, PlusI], "IY", 1)],
            Branch::TwoPlus => vec![p(vec![Plus, Zero], "XI", 1), p(vec![PlusI, Zero], "YI", 1)],
            Branch::TwoMinus => vec![p(vec![Plus, Zero], "XZ", 1), p(vec![PlusI, Zero], "YZ", 1)],
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Branch {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Branch {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        [Protocol::Brb, Protocol::Ibrb]
            .iter()
            .find_map(|p| Branch::parse(*p, &s).ok())
            .ok_or_else(|| serde::de::Error::custom(format!("unknown branch {s:?}")))
    }
}

/// Single-qubit pure states used for preparation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    Zero,
    One,
    Plus,
    /// `+1` eigenstate of Y.
    PlusI,
}

impl QubitState {
    fn amplitudes(self) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            QubitState::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            QubitState::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            QubitState::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            QubitState::PlusI => [C64::new(h, 0.0), C64::new(0.0, h)],
        }
    }
}

/// Prepared product state, measured Pauli observable and the sign folded
/// into the sequence weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preparation {
    pub state: Vec<QubitState>,
    pub observable: PauliOperator,
    pub weight: i8,
}

impl Preparation {
    pub fn density_matrix(&self) -> DMatrix<C64> {
        let mut psi = nalgebra::DVector::from_element(1, C64::new(1.0, 0.0));
        for q in &self.state {
            let a = q.amplitudes();
            psi = psi.kronecker(&nalgebra::DVector::from_column_slice(&a));
        }
        &psi * psi.adjoint()
    }

    pub fn observable_matrix(&self) -> DMatrix<C64> {
        pauli_to_matrix(&self.observable).into_matrix()
    }
}
