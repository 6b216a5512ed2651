use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{bootstrap, estimate_from_records, BiasEstimate, BootstrapConfig, DecayFit};
use crate::channels::{read_channel, write_channel, KrausChannel};
use crate::error::{Error, Result};
use crate::pauli::{bias_report, chi_diagonal, BiasReport};
use crate::protocols::exact::IbrbDecay;
use crate::protocols::noise::SLOTS;
use crate::protocols::{
    brb_exact_decay, brb_generate_sequence, ibrb_exact_decays, ibrb_generate_sequence, simulate_sequence, Branch,
    CompiledNoise, NoiseModel, Protocol, SequenceResult, SurvivalRecord,
};
use crate::seeds::{child_rng, derive_seed, tag};

use super::config::ExperimentConfig;

pub const RECORDS_FILE: &str = "records.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const REPORT_FILE: &str = "report.json";
pub const NOISE_DIR: &str = "noise";
pub const FORMAT_VERSION: u32 = 1;

/// Everything a simulation needs besides the noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub protocol: Protocol,
    pub n_qubits: usize,
    pub grid: Vec<usize>,
    pub sequences: usize,
    pub shots_per_sequence: u32,
    pub seed: u64,
}

impl RunPlan {
    pub fn from_config(c: &ExperimentConfig) -> Self {
        Self {
            protocol: c.protocol,
            n_qubits: c.n_qubits,
            grid: c.grid.clone(),
            sequences: c.sequences,
            shots_per_sequence: c.shots_per_sequence(),
            seed: c.seed,
        }
    }
}

/// Simulates every `(b, n, sequence)` item. Each item draws from its own
/// child seed, so the output does not depend on scheduling.
pub fn simulate_records(plan: &RunPlan, noise: &NoiseModel) -> Result<Vec<SurvivalRecord>> {
    if noise.n_qubits != plan.n_qubits {
        return Err(Error::DimensionMismatch { expected: plan.n_qubits, found: noise.n_qubits });
    }
    let compiled = CompiledNoise::new(noise)?;
    let mut out = Vec::new();
    for &b in plan.protocol.branches() {
        for &n in &plan.grid {
            let sequences: Vec<SequenceResult> = (0..plan.sequences as u64)
                .into_par_iter()
                .map(|s| {
                    let mut rng = child_rng(plan.seed, &[tag(b.label()), n as u64, s]);
                    let seq = match plan.protocol {
                        Protocol::Brb => brb_generate_sequence(b, n, plan.n_qubits, &mut rng)?,
                        Protocol::Ibrb => ibrb_generate_sequence(b, n, &mut rng)?,
                    };
                    simulate_sequence(&seq, &compiled, plan.shots_per_sequence, s, &mut rng)
                })
                .collect::<Result<_>>()?;
            out.push(SurvivalRecord { branch: b, n, sequences });
        }
    }
    Ok(out)
}

/// Channel whose probabilities the protocol estimates.
pub fn target_channel(protocol: Protocol, noise: &NoiseModel) -> Result<KrausChannel> {
    match protocol {
        Protocol::Brb => Ok(noise.gate.clone()),
        Protocol::Ibrb => noise.averaged_composite(),
    }
}

pub fn truth(protocol: Protocol, noise: &NoiseModel) -> Result<BiasReport> {
    Ok(bias_report(&chi_diagonal(&target_channel(protocol, noise)?)?))
}

/// Infinite-shot decay constants of the noise model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExactDecays {
    Brb { lambda_1: f64, lambda_2: f64 },
    Ibrb { branches: BTreeMap<Branch, IbrbDecay> },
}

pub fn exact_decays(protocol: Protocol, noise: &NoiseModel) -> Result<ExactDecays> {
    Ok(match protocol {
        Protocol::Brb => {
            let (lambda_1, lambda_2) = brb_exact_decay(&noise.gate);
            ExactDecays::Brb { lambda_1, lambda_2 }
        }
        Protocol::Ibrb => ExactDecays::Ibrb { branches: ibrb_exact_decays(noise)? },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    protocol: Protocol,
    b: String,
    n: usize,
    sequence_id: u64,
    weight: i8,
    shots: u32,
    outcome_sum: i64,
    weighted_mean: f64,
}

pub fn write_records(path: &Path, protocol: Protocol, records: &[SurvivalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        for s in &r.sequences {
            w.serialize(CsvRow {
                protocol,
                b: r.branch.label().to_string(),
                n: r.n,
                sequence_id: s.sequence_id,
                weight: s.weight,
                shots: s.shots,
                outcome_sum: s.outcome_sum,
                weighted_mean: s.weighted_mean(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<(Option<Protocol>, Vec<SurvivalRecord>)> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut grouped: BTreeMap<(Branch, usize), SurvivalRecord> = BTreeMap::new();
    let mut protocol = None;
    for row in rd.deserialize() {
        let row: CsvRow = row?;
        if protocol.is_some_and(|p| p != row.protocol) {
            return Err(Error::Config("records mix protocols".into()));
        }
        protocol = Some(row.protocol);
        let b = Branch::parse(row.protocol, &row.b)?;
        if row.weight.abs() != 1 || row.outcome_sum.unsigned_abs() > row.shots as u64 {
            return Err(Error::Config(format!("malformed record for b={} n={}", row.b, row.n)));
        }
        grouped.entry((b, row.n)).or_insert_with(|| SurvivalRecord::new(b, row.n)).sequences.push(SequenceResult {
            sequence_id: row.sequence_id,
            weight: row.weight,
            shots: row.shots,
            outcome_sum: row.outcome_sum,
        });
    }
    Ok((protocol, grouped.into_values().collect()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format_version: u32,
    pub plan: RunPlan,
    pub shots_per_point: u64,
    pub resamples: usize,
    /// SHA-256 of each file in the noise directory, by slot.
    pub noise_files: BTreeMap<String, String>,
    pub records_sha256: String,
    pub truth: BiasReport,
    pub exact: ExactDecays,
}

/// Writes records, the noise model and metadata into `dir`. Analysis
/// needs nothing outside it.
pub fn write_results(dir: &Path, plan: &RunPlan, resamples: usize, noise: &NoiseModel, records: &[SurvivalRecord]) -> Result<Metadata> {
    fs::create_dir_all(dir.join(NOISE_DIR))?;
    let mut noise_files = BTreeMap::new();
    for (name, ch) in noise.channels() {
        let path = dir.join(NOISE_DIR).join(format!("{name}.json"));
        write_channel(&path, ch, None)?;
        noise_files.insert(name.to_string(), sha256_file(&path)?);
    }
    let rec_path = dir.join(RECORDS_FILE);
    write_records(&rec_path, plan.protocol, records)?;
    let meta = Metadata {
        format_version: FORMAT_VERSION,
        plan: plan.clone(),
        shots_per_point: plan.sequences as u64 * plan.shots_per_sequence as u64,
        resamples,
        noise_files,
        records_sha256: sha256_file(&rec_path)?,
        truth: truth(plan.protocol, noise)?,
        exact: exact_decays(plan.protocol, noise)?,
    };
    fs::write(dir.join(METADATA_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(meta)
}

pub fn read_noise(dir: &Path, n_qubits: usize) -> Result<NoiseModel> {
    let mut m = NoiseModel::noiseless(n_qubits)?;
    for name in SLOTS {
        *m.slot_mut(name)? = read_channel(&dir.join(NOISE_DIR).join(format!("{name}.json")))?;
    }
    m.validate()?;
    Ok(m)
}

/// Runs a configured simulation and writes its results directory.
pub fn simulate_to_dir(config: &ExperimentConfig, config_dir: &Path, out: &Path) -> Result<Metadata> {
    config.validate()?;
    let noise = config.noise_model(config_dir)?;
    let plan = RunPlan::from_config(config);
    let records = simulate_records(&plan, &noise)?;
    write_results(out, &plan, config.resamples, &noise, &records)
}

/// Survival points of one branch, as fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub survival: f64,
    pub shots: u64,
    pub exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub protocol: Protocol,
    pub n_qubits: usize,
    pub seed: u64,
    pub bootstrap_seed: u64,
    /// SHA-256 of every input read, by file name relative to the results
    /// directory.
    pub inputs: BTreeMap<String, String>,
    pub estimate: BiasEstimate,
    pub truth: BiasReport,
    pub exact: ExactDecays,
    pub fits: BTreeMap<Branch, DecayFit>,
    pub curves: BTreeMap<Branch, Vec<CurvePoint>>,
}

/// Fits and bootstraps a results directory and writes `report.json` into
/// it. Reads nothing outside `dir`.
pub fn analyze_dir(dir: &Path) -> Result<Report> {
    let meta: Metadata = serde_json::from_str(&fs::read_to_string(dir.join(METADATA_FILE))?)?;
    let rec_path = dir.join(RECORDS_FILE);
    let (protocol, records) = read_records(&rec_path)?;
    if protocol.is_some_and(|p| p != meta.plan.protocol) {
        return Err(Error::Config("records and metadata disagree on the protocol".into()));
    }
    let mut inputs = BTreeMap::new();
    inputs.insert(METADATA_FILE.to_string(), sha256_file(&dir.join(METADATA_FILE))?);
    inputs.insert(RECORDS_FILE.to_string(), sha256_file(&rec_path)?);
    for name in SLOTS {
        let rel = format!("{NOISE_DIR}/{name}.json");
        inputs.insert(rel.clone(), sha256_file(&dir.join(&rel))?);
    }
    let noise = read_noise(dir, meta.plan.n_qubits)?;
    let report = analyze_records(&meta.plan, meta.resamples, &noise, &records, inputs)?;
    fs::write(dir.join(REPORT_FILE), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

/// Fits, bootstrap and comparison against the exact oracles.
pub fn analyze_records(
    plan: &RunPlan,
    resamples: usize,
    noise: &NoiseModel,
    records: &[SurvivalRecord],
    inputs: BTreeMap<String, String>,
) -> Result<Report> {
    let bootstrap_seed = derive_seed(plan.seed, &[tag("bootstrap")]);
    let fit = estimate_from_records(plan.protocol, plan.n_qubits, records)?;
    let estimate =
        bootstrap(plan.protocol, plan.n_qubits, records, BootstrapConfig { resamples, seed: bootstrap_seed })?;
    let mut curves: BTreeMap<Branch, Vec<CurvePoint>> = BTreeMap::new();
    for r in records {
        curves.entry(r.branch).or_default().push(CurvePoint {
            n: r.n,
            survival: r.weighted_mean(),
            shots: r.shots(),
            exact: crate::protocols::exact::exact_survival(noise, r.branch, r.n)?,
        });
    }
    for c in curves.values_mut() {
        c.sort_by_key(|p| p.n);
    }
    Ok(Report {
        protocol: plan.protocol,
        n_qubits: plan.n_qubits,
        seed: plan.seed,
        bootstrap_seed,
        inputs,
        estimate,
        truth: truth(plan.protocol, noise)?,
        exact: exact_decays(plan.protocol, noise)?,
        fits: fit.fits,
        curves,
    })
}
