use serde::{Deserialize, Serialize};

use super::Branch;

/// Outcome of one random sequence: the raw sum of `+-1` measurement
/// outcomes over `shots` repetitions, before weighting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SequenceResult {
    pub sequence_id: u64,
    pub weight: i8,
    pub shots: u32,
    pub outcome_sum: i64,
}

impl SequenceResult {
    pub fn weighted_sum(&self) -> i64 {
        self.weight as i64 * self.outcome_sum
    }

    pub fn weighted_mean(&self) -> f64 {
        self.weighted_sum() as f64 / self.shots as f64
    }
}

/// All sequences measured at one `(b, n)` point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub branch: Branch,
    pub n: usize,
    pub sequences: Vec<SequenceResult>,
}

impl SurvivalRecord {
    pub fn new(branch: Branch, n: usize) -> Self {
        Self { branch, n, sequences: Vec::new() }
    }

    pub fn shots(&self) -> u64 {
        self.sequences.iter().map(|s| s.shots as u64).sum()
    }

    /// Character-weighted survival estimate `S_b(n)`: the mean of all
    /// weighted single-shot outcomes.
    pub fn weighted_mean(&self) -> f64 {
        let shots = self.shots();
        if shots == 0 {
            return 0.0;
        }
        self.sequences.iter().map(|s| s.weighted_sum()).sum::<i64>() as f64 / shots as f64
    }

    /// Merges another record of the same point; the mean is independent
    /// of merge order.
    pub fn merge(&mut self, other: SurvivalRecord) {
        debug_assert!(self.branch == other.branch && self.n == other.n);
        self.sequences.extend(other.sequences);
    }
}
