use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-10;
/// Decay constants are confined to `[-1 - slack, 1 + slack]`.
pub const DECAY_SLACK: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecayModel {
    /// `A lambda^n`
    SingleExp,
    /// `A lambda^n + B`
    ExpPlusConst,
    /// `A lambda^n + B kappa^n`
    DoubleExp,
    /// `A (lambda^n + kappa^n)` with `lambda, kappa = mu +- sqrt(q)`, fitted
    /// as `[A, mu, q]`; `q < 0` is a complex-conjugate pair.
    EqualPair,
}

impl DecayModel {
    pub fn n_params(self) -> usize {
        match self {
            DecayModel::SingleExp => 2,
            DecayModel::ExpPlusConst | DecayModel::EqualPair => 3,
            DecayModel::DoubleExp => 4,
        }
    }

    pub fn min_points(self) -> usize {
        match self {
            DecayModel::SingleExp => 2,
            DecayModel::EqualPair => 3,
            _ => 4,
        }
    }
}

/// Expected sign of the second decay constant, used to seed the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KappaHint {
    Positive,
    Negative,
}

/// One averaged point of a decay curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: usize,
    pub s: f64,
    pub weight: f64,
}

/// Parameters in the order `[A, lambda, B, kappa]`, truncated per model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub a: f64,
    pub lambda: f64,
    pub b: Option<f64>,
    pub kappa: Option<f64>,
    /// `q` of an equal-weight pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_sq: Option<f64>,
    /// `sum w (S - f)^2`.
    pub residual_sum: f64,
    pub n_points: usize,
    pub iterations: usize,
    /// Standard errors in parameter order, from `s^2 (J^T W J)^-1`; empty
    /// when there are no residual degrees of freedom.
    pub stderr: Vec<f64>,
}

impl DecayFit {
    pub fn params(&self) -> Vec<f64> {
        if let (DecayModel::EqualPair, Some(k), Some(q)) = (self.model, self.kappa, self.spread_sq) {
            return vec![self.a, (self.lambda + k) / 2.0, q];
        }
        let mut p = vec![self.a, self.lambda];
        if let Some(b) = self.b {
            p.push(b);
        }
        if let Some(k) = self.kappa {
            p.push(k);
        }
        p
    }

    pub fn evaluate(&self, n: usize) -> f64 {
        eval(self.model, &self.params(), n)
    }

    pub fn lambda_stderr(&self) -> Option<f64> {
        match self.model {
            // the two decays share the error of their mean
            DecayModel::EqualPair => None,
            _ => self.stderr.get(1).copied(),
        }
    }

    pub fn kappa_stderr(&self) -> Option<f64> {
        (self.model == DecayModel::DoubleExp).then(|| self.stderr.get(3).copied()).flatten()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(mu + d)^n + (mu - d)^n` with `q = d^2` and its partial derivatives in
/// `mu` and `q`.
fn pair_sum(mu: f64, q: f64, n: usize) -> (f64, f64, f64) {
    let (mut v, mut dmu, mut dq) = (0.0, 0.0, 0.0);
    for j in 0..=n / 2 {
        let c = 2.0 * binomial(n, 2 * j);
        let e = (n - 2 * j) as i32;
        v += c * mu.powi(e) * q.powi(j as i32);
        if e > 0 {
            dmu += c * e as f64 * mu.powi(e - 1) * q.powi(j as i32);
        }
        if j > 0 {
            dq += c * j as f64 * mu.powi(e) * q.powi(j as i32 - 1);
        }
    }
    (v, dmu, dq)
}

fn eval(model: DecayModel, p: &[f64], n: usize) -> f64 {
    let k = n as i32;
    match model {
        DecayModel::SingleExp => p[0] * p[1].powi(k),
        DecayModel::ExpPlusConst => p[0] * p[1].powi(k) + p[2],
        DecayModel::DoubleExp => p[0] * p[1].powi(k) + p[2] * p[3].powi(k),
        DecayModel::EqualPair => p[0] * pair_sum(p[1], p[2], n).0,
    }
}

/// `d lambda^n / d lambda`.
fn dpow(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * x.powi(n as i32 - 1)
    }
}

fn jacobian_row(model: DecayModel, p: &[f64], n: usize) -> Vec<f64> {
    let k = n as i32;
    if model == DecayModel::EqualPair {
        let (v, dmu, dq) = pair_sum(p[1], p[2], n);
        return vec![v, p[0] * dmu, p[0] * dq];
    }
    let mut row = vec![p[1].powi(k), p[0] * dpow(p[1], n)];
    match model {
        DecayModel::SingleExp | DecayModel::EqualPair => {}
        DecayModel::ExpPlusConst => row.push(1.0),
        DecayModel::DoubleExp => {
            row.push(p[3].powi(k));
            row.push(p[2] * dpow(p[3], n));
        }
    }
    row
}

fn cost(model: DecayModel, p: &[f64], pts: &[FitPoint]) -> f64 {
    pts.iter().map(|q| q.weight * (q.s - eval(model, p, q.n)).powi(2)).sum()
}

fn clamp_decays(model: DecayModel, p: &mut [f64]) {
    let lim = 1.0 + DECAY_SLACK;
    p[1] = p[1].clamp(-lim, lim);
    if model == DecayModel::DoubleExp {
        p[3] = p[3].clamp(-lim, lim);
    }
    if model == DecayModel::EqualPair {
        // both decays inside the same window
        p[2] = p[2].clamp(-lim * lim, (lim - p[1].abs()).max(0.0).powi(2));
    }
}

/// Weighted linear least squares for the amplitudes at fixed decays; for
/// an equal-weight pair `kappa` carries `q`.
fn linear_amplitudes(model: DecayModel, lambda: f64, kappa: f64, pts: &[FitPoint]) -> Vec<f64> {
    let basis = |n: usize| -> Vec<f64> {
        let k = n as i32;
        match model {
            DecayModel::SingleExp => vec![lambda.powi(k)],
            DecayModel::ExpPlusConst => vec![lambda.powi(k), 1.0],
            DecayModel::DoubleExp => vec![lambda.powi(k), kappa.powi(k)],
            DecayModel::EqualPair => vec![pair_sum(lambda, kappa, n).0],
        }
    };
    let m = if matches!(model, DecayModel::SingleExp | DecayModel::EqualPair) { 1 } else { 2 };
    let mut ata = DMatrix::<f64>::zeros(m, m);
    let mut atb = DVector::<f64>::zeros(m);
    for q in pts {
        let row = basis(q.n);
        for i in 0..m {
            atb[i] += q.weight * row[i] * q.s;
            for j in 0..m {
                ata[(i, j)] += q.weight * row[i] * row[j];
            }
        }
    }
    let sol = ata
        .clone()
        .cholesky()
        .map(|c| c.solve(&atb))
        .unwrap_or_else(|| DVector::from_element(m, 1.0 / m as f64));
    let mut p = vec![sol[0], lambda];
    match model {
        DecayModel::SingleExp => {}
        DecayModel::EqualPair => p.push(kappa),
        DecayModel::ExpPlusConst => p.push(sol[1]),
        DecayModel::DoubleExp => {
            p.push(sol[1]);
            p.push(kappa);
        }
    }
    p
}

struct Outcome {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
}

/// Levenberg-Marquardt with multiplicative diagonal damping. Converges on
/// a small relative step, a vanishing cost, or when no damped step can
/// lower the cost further.
fn levenberg_marquardt(model: DecayModel, mut p: Vec<f64>, pts: &[FitPoint]) -> Option<Outcome> {
    let np = p.len();
    let scale: f64 = pts.iter().map(|q| q.weight * q.s * q.s).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut c = cost(model, &p, pts);
    let mut mu = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        if c <= 1e-30 * scale {
            return Some(Outcome { params: p, cost: c, iterations: it - 1 });
        }
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for q in pts {
            let row = jacobian_row(model, &p, q.n);
            let r = q.s - eval(model, &p, q.n);
            for i in 0..np {
                jtr[i] += q.weight * row[i] * r;
                for j in 0..np {
                    jtj[(i, j)] += q.weight * row[i] * row[j];
                }
            }
        }
        let mut accepted = false;
        while mu < 1e20 {
            let mut damped = jtj.clone();
            for i in 0..np {
                damped[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            clamp_decays(model, &mut trial);
            let tc = cost(model, &trial, pts);
            if tc.is_finite() && tc <= c {
                let moved: f64 = trial.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let size: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt();
                let small = moved <= STEP_TOLERANCE * (size + STEP_TOLERANCE);
                let flat = c - tc <= 1e-15 * c;
                p = trial;
                c = tc;
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                if small || flat {
                    return Some(Outcome { params: p, cost: c, iterations: it });
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            // no descent direction left at working precision
            return Some(Outcome { params: p, cost: c, iterations: it });
        }
    }
    None
}

/// Spacing of the decay grid scanned before the local fits.
const PROFILE_STEP: f64 = 0.025;

/// Weighted cost with the amplitudes eliminated by linear least squares.
fn profile_cost(model: DecayModel, lambda: f64, kappa: f64, pts: &[FitPoint]) -> f64 {
    cost(model, &linear_amplitudes(model, lambda, kappa, pts), pts)
}

/// Best point of a grid over the decay constants, with the amplitudes
/// profiled out; a start that does not depend on the data's scale.
fn profile_start(model: DecayModel, pts: &[FitPoint]) -> (f64, f64) {
    let lim = 1.0 + DECAY_SLACK;
    let steps = (2.0 * lim / PROFILE_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| -lim + i as f64 * PROFILE_STEP).collect();
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for (i, &l) in grid.iter().enumerate() {
        if model == DecayModel::DoubleExp {
            // kappa below lambda; equal decays make the basis singular
            for &k in &grid[..i] {
                let c = profile_cost(model, l, k, pts);
                if c < best.0 {
                    best = (c, l, k);
                }
            }
        } else {
            let c = profile_cost(model, l, 0.0, pts);
            if c < best.0 {
                best = (c, l, 0.0);
            }
        }
    }
    (best.1, best.2)
}

fn starts(model: DecayModel, hint: KappaHint) -> Vec<(f64, f64)> {
    match (model, hint) {
        (DecayModel::DoubleExp, KappaHint::Negative) => vec![(1.0, -1.0), (0.99, -0.99), (0.95, -0.9)],
        (DecayModel::DoubleExp, KappaHint::Positive) => {
            vec![(1.0, 1.0), (0.999, 0.99), (0.99, 0.9), (0.98, 0.5)]
        }
        (DecayModel::EqualPair, _) => vec![(1.0, 0.0), (0.99, 1e-4), (0.99, -1e-4), (0.9, 0.0)],
        _ => vec![(1.0, 0.0), (0.99, 0.0), (0.9, 0.0), (0.5, 0.0)],
    }
}

/// Weighted least-squares fit of a decay curve. Double exponentials are
/// returned with `lambda >= kappa`; an equal-weight pair reports
/// `mu +- sqrt(q)`, or `mu` twice for a complex pair.
pub fn fit_decay(points: &[FitPoint], model: DecayModel, hint: KappaHint) -> Result<DecayFit> {
    let pts: Vec<FitPoint> = points.iter().copied().filter(|q| q.weight > 0.0).collect();
    if pts.iter().any(|q| !q.s.is_finite() || !q.weight.is_finite()) {
        return Err(Error::InvalidArgument("non-finite fit input".into()));
    }
    let mut lengths: Vec<usize> = pts.iter().map(|q| q.n).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < model.min_points() {
        return Err(Error::InsufficientData(format!(
            "{model:?} needs {} distinct lengths, got {}",
            model.min_points(),
            lengths.len()
        )));
    }
    if model == DecayModel::DoubleExp && hint == KappaHint::Negative {
        let odd = lengths.iter().any(|n| n % 2 == 1);
        let even = lengths.iter().any(|n| n % 2 == 0);
        if !(odd && even) {
            return Err(Error::InsufficientData("a negative decay needs both even and odd lengths".into()));
        }
    }
    let mut best: Option<Outcome> = None;
    let mut last_cost = f64::NAN;
    let mut seeds = vec![profile_start(model, &pts)];
    seeds.extend(starts(model, hint));
    for (l0, k0) in seeds {
        let p0 = linear_amplitudes(model, l0, k0, &pts);
        match levenberg_marquardt(model, p0.clone(), &pts) {
            Some(o) => {
                if best.as_ref().is_none_or(|b| o.cost < b.cost) {
                    best = Some(o);
                }
            }
            None => last_cost = cost(model, &p0, &pts),
        }
    }
    let Some(o) = best else {
        return Err(Error::FitNotConverged { iterations: MAX_ITERATIONS, cost: last_cost });
    };
    let mut p = o.params;
    if model == DecayModel::DoubleExp && p[3] > p[1] {
        p.swap(0, 2);
        p.swap(1, 3);
    }
    let stderr = parameter_stderr(model, &p, &pts, o.cost);
    if model == DecayModel::EqualPair {
        let d = p[2].max(0.0).sqrt();
        return Ok(DecayFit {
            model,
            a: p[0],
            lambda: p[1] + d,
            b: Some(p[0]),
            kappa: Some(p[1] - d),
            spread_sq: Some(p[2]),
            residual_sum: o.cost,
            n_points: pts.len(),
            iterations: o.iterations,
            stderr,
        });
    }
    Ok(DecayFit {
        model,
        a: p[0],
        lambda: p[1],
        b: (model != DecayModel::SingleExp).then(|| p[2]),
        kappa: (model == DecayModel::DoubleExp).then(|| p[3]),
        spread_sq: None,
        residual_sum: o.cost,
        n_points: pts.len(),
        iterations: o.iterations,
        stderr,
    })
}

fn parameter_stderr(model: DecayModel, p: &[f64], pts: &[FitPoint], cost: f64) -> Vec<f64> {
    let np = p.len();
    if pts.len() <= np {
        return Vec::new();
    }
    let mut jtj = DMatrix::<f64>::zeros(np, np);
    for q in pts {
        let row = jacobian_row(model, p, q.n);
        for i in 0..np {
            for j in 0..np {
                jtj[(i, j)] += q.weight * row[i] * row[j];
            }
        }
    }
    // residual variance per unit weight
    let total_w: f64 = pts.iter().map(|q| q.weight).sum();
    let mean_w = total_w / pts.len() as f64;
    let s2 = cost / (pts.len() - np) as f64;
    let inv = jtj.clone().try_inverse().unwrap_or_else(|| {
        jtj.pseudo_inverse(1e-14 * mean_w).unwrap_or_else(|_| DMatrix::from_element(np, np, f64::NAN))
    });
    (0..np).map(|i| (s2 * inv[(i, i)]).max(0.0).sqrt()).collect()
}
