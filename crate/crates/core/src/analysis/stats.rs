use crate::error::{Error, Result};

/// `(1/K) sum ((est - truth) / stderr)^2` over the `K` entries.
pub fn reduced_chi2(estimates: &[f64], truths: &[f64], stderrs: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() || estimates.len() != stderrs.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no entries".into()));
    }
    let mut sum = 0.0;
    for (i, ((e, t), s)) in estimates.iter().zip(truths).zip(stderrs).enumerate() {
        // also rejects NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(*s > 0.0) {
            return Err(Error::ZeroStderr(i));
        }
        sum += ((e - t) / s).powi(2);
    }
    Ok(sum / estimates.len() as f64)
}

/// Fraction of entries with `|est - truth| <= k * stderr`.
pub fn fraction_within(estimates: &[f64], truths: &[f64], stderrs: &[f64], k: f64) -> f64 {
    let n = estimates.len().min(truths.len()).min(stderrs.len());
    if n == 0 {
        return 0.0;
    }
    let hits = (0..n).filter(|&i| (estimates[i] - truths[i]).abs() <= k * stderrs[i]).count();
    hits as f64 / n as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().all(|x| *x == xs[0]) {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
