use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use biasrb::channels::{read_channel, write_channel, ChannelSpec};
use biasrb::error::{Error, Result};
use biasrb::experiment::{analyze_dir, run_sweep, run_verify, simulate_to_dir, write_sweep, ExperimentConfig, SweepConfig};
use biasrb::pauli::{bias_report, chi_diagonal, BiasReport};
use biasrb::protocols::Protocol;

#[derive(Parser)]
#[command(name = "biasrb", version, about = "Bias randomized benchmarking simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Brb,
    Ibrb,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Brb => Protocol::Brb,
            ProtocolArg::Ibrb => Protocol::Ibrb,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measurements per (b, n) point.
    #[arg(long)]
    shots: Option<u32>,
    /// Results directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random biased channel and print its error probabilities.
    GenChannel {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        pd: f64,
        #[arg(long)]
        pnd: f64,
        /// Number of Kraus operators.
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "channel.json")]
        out: PathBuf,
    },
    /// Simulate a CX-dihedral bias RB experiment.
    SimulateBrb(RunArgs),
    /// Simulate an interleaved bias RB experiment.
    SimulateIbrb(RunArgs),
    /// Fit a results directory and write report.json into it.
    Analyze { dir: PathBuf },
    /// Estimate many random channels and compare with the truth.
    Sweep {
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
        /// TOML sweep configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u32>,
        #[arg(long)]
        channels: Option<usize>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Run the invariant suite.
    Verify,
}

enum Failure {
    Usage(String),
    Run(Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn print_report(r: &BiasReport) {
    println!("p_D      {:.6e}", r.p_dephasing);
    println!("p_ND     {:.6e}", r.p_nondephasing);
    if r.bias.is_infinite() {
        println!("bias     inf");
    } else {
        println!("bias     {:.6e}", r.bias.value());
    }
    println!("fidelity {:.9}", r.avg_fidelity);
}

fn gen_channel(n: usize, pd: f64, pnd: f64, d: usize, seed: u64, out: &Path) -> Result<()> {
    let spec = ChannelSpec::new(n, pd, pnd, d, seed)?;
    write_channel(out, &spec.generate()?, Some(spec))?;
    // report what was written, not what was held in memory
    print_report(&bias_report(&chi_diagonal(&read_channel(out)?)?));
    Ok(())
}

fn simulate(protocol: Protocol, args: RunArgs) -> std::result::Result<(), Failure> {
    let (mut config, base) = match &args.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (c, base)
        }
        None => {
            let seed = args.seed.ok_or_else(|| Failure::Usage("--seed is required without --config".into()))?;
            let mut c = ExperimentConfig::new(protocol, 2, seed);
            c.fill_defaults();
            (c, PathBuf::from("."))
        }
    };
    if config.protocol != protocol {
        return Err(Failure::Usage(format!("configuration is for {:?}, not {protocol:?}", config.protocol)));
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(s) = args.shots {
        config.shots = s;
    }
    if let Some(o) = args.out {
        config.out = o;
    }
    config.validate()?;
    let meta = simulate_to_dir(&config, &base, &config.out)?;
    println!("wrote {}", config.out.display());
    println!("records sha256 {}", meta.records_sha256);
    print_report(&meta.truth);
    Ok(())
}

fn analyze(dir: &Path) -> Result<()> {
    let r = analyze_dir(dir)?;
    let e = &r.estimate;
    println!("            estimate      stderr        truth");
    println!("p_D    {:>13.6e} {:>13.6e} {:>13.6e}", e.p_dephasing, e.stderr_pd, r.truth.p_dephasing);
    println!("p_ND   {:>13.6e} {:>13.6e} {:>13.6e}", e.p_nondephasing, e.stderr_pnd, r.truth.p_nondephasing);
    println!("bias   {:>13.6e} {:>13.6e} {:>13.6e}", e.bias.value(), e.stderr_bias, r.truth.bias.value());
    println!("resamples {} ({} failed)", e.n_resamples, e.failed_resamples);
    println!("wrote {}", dir.join("report.json").display());
    Ok(())
}

fn sweep(
    protocol: Option<ProtocolArg>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    shots: Option<u32>,
    channels: Option<usize>,
    out: &Path,
) -> std::result::Result<(), Failure> {
    let mut cfg = match (config, protocol) {
        (Some(path), p) => {
            let c = SweepConfig::from_toml(&std::fs::read_to_string(&path).map_err(Error::from)?)?;
            if p.is_some_and(|p| Protocol::from(p) != c.protocol) {
                return Err(Failure::Usage("--protocol disagrees with the configuration".into()));
            }
            c
        }
        (None, Some(p)) => {
            let seed = seed.ok_or_else(|| Failure::Usage("--seed is required without --config".into()))?;
            SweepConfig::new(p.into(), seed)
        }
        (None, None) => return Err(Failure::Usage("give --protocol or --config".into())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = shots {
        cfg.shots = s;
    }
    if let Some(c) = channels {
        cfg.channels = c;
    }
    let (rows, s) = run_sweep(&cfg)?;
    write_sweep(out, &cfg, &rows, &s)?;
    println!("channels {} ({} failed)", s.channels, s.failed);
    println!("          chi2   within 3 sigma");
    println!("p_D   {:>8.3} {:>8.3}", s.chi2_pd, s.within3_pd);
    println!("p_ND  {:>8.3} {:>8.3}", s.chi2_pnd, s.within3_pnd);
    println!("bias  {:>8.3} {:>8.3}", s.chi2_bias, s.within3_bias);
    println!("wrote {}", out.display());
    Ok(())
}

fn verify() -> std::result::Result<(), Failure> {
    let checks = run_verify();
    for c in &checks {
        println!("{} {} ({}, {:.2}s)", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail, c.seconds);
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::GenChannel { n, pd, pnd, d, seed, out } => Ok(gen_channel(n, pd, pnd, d, seed, &out)?),
        Command::SimulateBrb(a) => simulate(Protocol::Brb, a),
        Command::SimulateIbrb(a) => simulate(Protocol::Ibrb, a),
        Command::Analyze { dir } => Ok(analyze(&dir)?),
        Command::Sweep { protocol, config, seed, shots, channels, out } => {
            sweep(protocol, config, seed, shots, channels, &out)
        }
        Command::Verify => verify(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
    }
}
