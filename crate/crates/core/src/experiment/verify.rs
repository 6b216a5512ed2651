//! Quick invariant suite run by `biasrb verify`.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{brb_estimates, fit_decay, ibrb_estimates, DecayModel, DecayPair, FitPoint, KappaHint};
use crate::channels::{composition_nd_bound, z_twirl, ChannelSpec, ErrorProbabilities, KrausChannel};
use crate::error::Result;
use crate::groups::{closure, dihedral_order, standard_generators, CnotDihedralElement, Group, IrrepTable};
use crate::pauli::operator::max_abs;
use crate::pauli::{bias_report, chi_diagonal, chi_matrix};
use crate::protocols::compile::{frame_consistent, randomized_compile};
use crate::protocols::{brb_exact_decay, ibrb_exact_decays, Branch, Circuit, Gate, NoiseModel};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn random_channel(seed: u64) -> Result<KrausChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=16);
    ChannelSpec::new(2, 0.02, 1e-3, d, seed)?.generate()
}

fn random_pauli(n: usize, rng: &mut ChaCha8Rng) -> Result<KrausChannel> {
    let mut p: Vec<f64> = (0..1 << (2 * n)).map(|_| rng.random::<f64>() * 0.01).collect();
    p[0] = 0.0;
    p[0] = 1.0 - p.iter().sum::<f64>();
    KrausChannel::from_pauli_distribution(n, &p)
}

fn chi_is_distribution() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let chi = chi_diagonal(&random_channel(seed)?)?;
        let neg = chi.values().iter().cloned().fold(0.0f64, f64::min);
        worst = worst.max((chi.sum() - 1.0).abs()).max(-neg);
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
}

fn twirl() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let ch = random_channel(100 + seed)?;
        let tw = z_twirl(&ch.superoperator(), 2)?;
        let chi = chi_matrix(&tw);
        let before = chi_diagonal(&ch)?;
        for k in 0..16 {
            worst = worst.max((chi[(k, k)].re - before.values()[k]).abs());
            for l in 0..16 {
                if k >> 2 != l >> 2 {
                    worst = worst.max(chi[(k, l)].norm());
                }
            }
        }
        let twice = z_twirl(&tw, 2)?;
        worst = worst.max(max_abs(&(twice.into_matrix() - tw.into_matrix())));
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn composition_bound() -> Result<(bool, String)> {
    let probs = |c: &KrausChannel| -> Result<ErrorProbabilities> {
        let r = bias_report(&chi_diagonal(c)?);
        Ok(ErrorProbabilities::new(r.p_dephasing, r.p_nondephasing))
    };
    let mut violations = 0;
    for seed in 0..20 {
        let a = random_channel(200 + 2 * seed)?;
        let b = random_channel(201 + 2 * seed)?;
        let (pa, pb, pab) = (probs(&a)?, probs(&b)?, probs(&a.compose(&b)?)?);
        let gap = (pab.p_nondephasing - pa.p_nondephasing - pb.p_nondephasing).abs();
        if gap > composition_nd_bound(pa, pb, 2, false) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} of 20 pairs violate")))
}

fn brb_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for n in [1usize, 2] {
        for _ in 0..5 {
            let ch = random_pauli(n, &mut rng)?;
            let (l1, l2) = brb_exact_decay(&ch);
            let est = brb_estimates(l1, l2, n);
            let r = bias_report(&chi_diagonal(&ch)?);
            worst = worst
                .max((est.p_dephasing - r.p_dephasing).abs())
                .max((est.p_nondephasing - r.p_nondephasing).abs());
        }
    }
    Ok((worst < 1e-10, format!("max error {worst:.2e}")))
}

fn scaled_pauli(p: &[f64], s: f64) -> Result<KrausChannel> {
    let mut q: Vec<f64> = p.iter().map(|x| x * s).collect();
    q[0] = 0.0;
    q[0] = 1.0 - q.iter().sum::<f64>();
    KrausChannel::from_pauli_distribution(2, &q)
}

/// Error of the interleaved estimator against the averaged channel at
/// noise scale `s`.
fn ibrb_error(ps: &[Vec<f64>], s: f64) -> Result<f64> {
    let id = KrausChannel::identity(2)?;
    let noise = NoiseModel::ibrb(scaled_pauli(&ps[0], s)?, scaled_pauli(&ps[1], s)?, scaled_pauli(&ps[2], s)?, id.clone(), id)?;
    let pairs: BTreeMap<Branch, DecayPair> = ibrb_exact_decays(&noise)?
        .into_iter()
        .map(|(b, d)| (b, DecayPair { lambda: d.lambda.re, kappa: (b != Branch::ZeroPlus).then_some(d.kappa.re) }))
        .collect();
    let est = ibrb_estimates(&pairs)?;
    let t = bias_report(&chi_diagonal(&noise.averaged_composite()?)?);
    Ok((est.p_dephasing - t.p_dephasing).abs().max((est.p_nondephasing - t.p_nondephasing).abs()))
}

fn ibrb_second_order() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let ps: Vec<Vec<f64>> = (0..3).map(|_| (0..16).map(|_| rng.random::<f64>() * 0.01).collect()).collect();
        let (big, small) = (ibrb_error(&ps, 1.0)?, ibrb_error(&ps, 0.1)?);
        worst = worst.max(small / big.max(1e-300));
    }
    Ok((worst < 0.02, format!("error ratio at 10x less noise {worst:.2e}")))
}

fn group_orders() -> Result<(bool, String)> {
    let d1 = closure(1, &standard_generators(1)).len();
    let d2 = closure(2, &standard_generators(2)).len();
    let ok = d1 as u128 == dihedral_order(1) && d2 as u128 == dihedral_order(2);
    Ok((ok, format!("|D_1| = {d1}, |D_2| = {d2}")))
}

fn products_match_unitaries() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = 0;
    for _ in 0..200 {
        let a = CnotDihedralElement::sample_uniform(2, &mut rng);
        let b = CnotDihedralElement::sample_uniform(2, &mut rng);
        let dense = a.to_unitary().into_matrix() * b.to_unitary().into_matrix();
        let prod = a.mul(&b).to_unitary();
        if !prod.equal_up_to_phase(&crate::pauli::DenseUnitary::new_unchecked(2, dense), 1e-10) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} of 200 products disagree")))
}

fn projectors() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for g in [Group::Pauli(2), Group::Z(2), Group::CnotDihedral(1), Group::CnotDihedral(2)] {
        let table = IrrepTable::for_group(g)?;
        for (i, a) in table.irreps.iter().enumerate() {
            let pa = a.projector.matrix();
            worst = worst.max(max_abs(&(pa * pa - pa)));
            for b in &table.irreps[i + 1..] {
                worst = worst.max(max_abs(&(pa * b.projector.matrix())));
            }
        }
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
}

fn compiling() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let gates: [fn(usize) -> Gate; 5] = [Gate::X, Gate::Z, Gate::S, Gate::Sdg, |q| Gate::CZ(q, (q + 1) % 3)];
    let mut bad = 0;
    for _ in 0..20 {
        let mut c = Vec::new();
        for _ in 0..8 {
            if rng.random_bool(0.4) {
                let a = rng.random_range(0..3);
                c.push(Gate::CX(a, (a + 1 + rng.random_range(0..2)) % 3));
            } else {
                c.push(gates[rng.random_range(0..gates.len())](rng.random_range(0..3)));
            }
        }
        let circuit = Circuit::new(3, c)?;
        let (compiled, frame) = randomized_compile(&circuit, &mut rng)?;
        if !frame_consistent(&circuit, &compiled, &frame, 1e-10)? {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} of 20 circuits inconsistent")))
}

fn noiseless_fits() -> Result<(bool, String)> {
    let grid = [1usize, 2, 5, 6, 11, 12, 21, 22];
    let cases = [
        (DecayModel::SingleExp, KappaHint::Positive, [0.7f64, 0.97, 0.0, 0.0]),
        (DecayModel::ExpPlusConst, KappaHint::Positive, [0.5, 0.95, 0.3, 1.0]),
        (DecayModel::DoubleExp, KappaHint::Negative, [0.6, 0.96, 0.3, -0.98]),
        (DecayModel::DoubleExp, KappaHint::Positive, [0.6, 0.97, 0.3, 0.8]),
    ];
    let mut worst = 0.0f64;
    for (model, hint, [a, l, b, k]) in cases {
        let pts: Vec<FitPoint> = grid
            .iter()
            .map(|&n| FitPoint { n, s: a * l.powi(n as i32) + b * k.powi(n as i32), weight: 1.0 })
            .collect();
        let f = fit_decay(&pts, model, hint)?;
        worst = worst.max((f.lambda - l).abs()).max((f.a - a).abs());
        if let Some(fb) = f.b {
            worst = worst.max((fb - b).abs());
        }
        if let (Some(fk), DecayModel::DoubleExp) = (f.kappa, model) {
            worst = worst.max((fk - k).abs());
        }
    }
    Ok((worst < 1e-8, format!("max parameter error {worst:.2e}")))
}

type CheckFn = fn() -> Result<(bool, String)>;

/// Runs every check; never fails early.
pub fn run_verify() -> Vec<Check> {
    let suite: [(&'static str, CheckFn); 10] = [
        ("chi diagonal of generated channels is a distribution", chi_is_distribution),
        ("z-twirl is idempotent and keeps the chi diagonal", twirl),
        ("composition respects the non-dephasing bound", composition_bound),
        ("CX-dihedral decays reproduce Pauli-channel probabilities", brb_oracle),
        ("interleaved estimator error is second order in the noise", ibrb_second_order),
        ("generator closure matches the canonical-form count", group_orders),
        ("canonical-form products match dense unitaries", products_match_unitaries),
        ("irrep projectors are idempotent and orthogonal", projectors),
        ("randomized compiling preserves the circuit", compiling),
        ("noiseless fits recover parameters", noiseless_fits),
    ];
    suite
        .iter()
        .map(|&(name, f)| {
            let t = Instant::now();
            let (passed, detail) = match f() {
                Ok(r) => r,
                Err(e) => (false, e.to_string()),
            };
            Check { name, passed, detail, seconds: t.elapsed().as_secs_f64() }
        })
        .collect()
}
