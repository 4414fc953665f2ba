//! `qumvn`: run `.qudot` programs, factor integers, check the layer engine against the dense oracle.
//!
//! Exit codes: 0 ok, 1 no factors found, 2 usage, 3 I/O, 4 parse, 5 runtime, 6 verification threshold breached.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::ConfigFile;
use qudot_vm::{execute, parse_program, RunConfig};
use qumvn_core::circuit::oracle_equivalence;
use qumvn_core::{Precision, SamplingMode};
use qumvn_shor::{factor, FactorError, FactorOptions, Factored, PeriodPolicy, SizingPolicy};

#[derive(Parser)]
#[command(name = "qumvn", version, about = "Quantum multiverse-network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a .qudot program and write its frequency table.
    Run(RunArgs),
    /// Factor an odd composite by period finding.
    Factor(FactorArgs),
    /// Compare random circuits on the layer engine and the dense oracle.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling mode: auto, layer-select, interference, spectrum.
    #[arg(long)]
    mode: Option<SamplingMode>,
    /// Edge precision: single or double.
    #[arg(long)]
    precision: Option<Precision>,
    /// Re-draw each `mon` outcome per sample instead of collapsing once.
    #[arg(long)]
    resample_collapse: bool,
    /// key=value file supplying defaults for any long option.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Overrides the ensemble size in the program header.
    #[arg(long)]
    samples: Option<u64>,
    /// Frequency table destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FactorArgs {
    n: u64,
    /// Witness a; drawn from 2..N with the seed if omitted.
    #[arg(long)]
    witness: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Per-reading report: value,frequency,success.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Aggregate summary lines.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Control-register sizing: twice-lower or square-bound.
    #[arg(long)]
    upper_sizing: Option<SizingPolicy>,
    /// Period recovery: best-approx or order-checked[:T].
    #[arg(long)]
    period_check: Option<PeriodPolicy>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    circuits: Option<u64>,
    /// Largest register; circuits draw their width from 1..=QUBITS.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=20))]
    qubits: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest acceptable total-variation distance.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Parse(String),
    Runtime(String),
    Threshold(String),
    NoFactors,
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::NoFactors => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Parse(_) => 4,
            Failure::Runtime(_) => 5,
            Failure::Threshold(_) => 6,
        }
    }
}

const COMMON_KEYS: [&str; 4] = ["seed", "mode", "precision", "resample-collapse"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    COMMON_KEYS.iter().chain(extra).copied().collect()
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

struct Resolved {
    seed: u64,
    mode: SamplingMode,
    precision: Precision,
    resample_collapse: bool,
}

fn resolve(common: &Common, cfg: &ConfigFile) -> Result<Resolved, Failure> {
    Ok(Resolved {
        seed: cfg.pick(common.seed, "seed")?.unwrap_or(0),
        mode: cfg.pick(common.mode, "mode")?.unwrap_or_default(),
        precision: cfg.pick(common.precision, "precision")?.unwrap_or_default(),
        resample_collapse: cfg.flag(common.resample_collapse, "resample-collapse")?,
    })
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let cfg = ConfigFile::load(args.common.config.as_deref(), &keys(&["samples", "out"]))?;
    let common = resolve(&args.common, &cfg)?;
    let samples = cfg.pick(args.samples, "samples")?;
    let out: Option<PathBuf> = cfg.pick(args.out, "out")?;

    let src = std::fs::read_to_string(&args.file).map_err(|e| Failure::io(&args.file, e))?;
    let program = parse_program(&src).map_err(|e| Failure::Parse(format!("{}: {e}", args.file.display())))?;
    let run_cfg = RunConfig {
        samples,
        seed: common.seed,
        mode: common.mode,
        precision: common.precision,
        resample_collapse: common.resample_collapse,
        ..RunConfig::default()
    };
    let res = execute(&program, &run_cfg).map_err(|e| Failure::Runtime(format!("{}: {e}", args.file.display())))?;
    eprint!("{}", res.diagnostics);
    let table = res.table.to_string();
    match out {
        Some(path) => {
            write_out(&path, &table)?;
            println!("samples: {}", res.table.total());
            println!("distinct: {}", res.table.len());
            println!("peak layers: {}", res.peak_layers);
            println!("time (sec): {:.3}", res.elapsed.as_secs_f64());
        }
        None => {
            print!("{table}");
            eprintln!("time (sec): {:.3}", res.elapsed.as_secs_f64());
        }
    }
    Ok(())
}

fn cmd_factor(args: FactorArgs) -> Result<(), Failure> {
    let cfg = ConfigFile::load(
        args.common.config.as_deref(),
        &keys(&["witness", "samples", "csv", "summary", "upper-sizing", "period-check"]),
    )?;
    let common = resolve(&args.common, &cfg)?;
    let opts = FactorOptions {
        witness: cfg.pick(args.witness, "witness")?,
        samples: cfg.pick(args.samples, "samples")?.unwrap_or(500_000),
        seed: common.seed,
        sizing: cfg.pick(args.upper_sizing, "upper-sizing")?.unwrap_or_default(),
        policy: cfg.pick(args.period_check, "period-check")?.unwrap_or_default(),
        mode: common.mode,
        precision: common.precision,
        resample_collapse: common.resample_collapse,
    };
    let csv: Option<PathBuf> = cfg.pick(args.csv, "csv")?;
    let summary: Option<PathBuf> = cfg.pick(args.summary, "summary")?;

    let out = factor(args.n, &opts).map_err(|e| match e {
        FactorError::Shor(e) => Failure::Usage(e.to_string()),
        FactorError::Parse(e) => Failure::Parse(e.to_string()),
        FactorError::Runtime(e) => Failure::Runtime(e.to_string()),
    })?;
    match &out {
        Factored::Classical { a, p, q } => {
            println!("witness {a} shares a factor with {}", args.n);
            println!("p,q: {p},{q}");
        }
        Factored::Quantum { report, .. } => {
            if let Some(path) = &csv {
                write_out(path, &report.to_csv())?;
            }
            if let Some(path) = &summary {
                write_out(path, &report.summary())?;
            }
            let mut text = report.summary();
            let _ = writeln!(text, "{}", report.time_line());
            print!("{text}");
        }
    }
    match out.factors() {
        Some(_) => Ok(()),
        None => Err(Failure::NoFactors),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let cfg = ConfigFile::load(
        args.config.as_deref(),
        &["circuits", "qubits", "depth", "seed", "threshold", "precision"],
    )?;
    let circuits = cfg.pick(args.circuits, "circuits")?.unwrap_or(1000);
    let qubits = cfg.pick(args.qubits, "qubits")?.unwrap_or(8);
    if circuits == 0 || !(1..=20).contains(&qubits) {
        return Err(Failure::Usage("need circuits >= 1 and 1 <= qubits <= 20".into()));
    }
    let depth = cfg.pick(args.depth, "depth")?.unwrap_or(30);
    let seed = cfg.pick(args.seed, "seed")?.unwrap_or(0);
    let threshold = cfg.pick(args.threshold, "threshold")?.unwrap_or(1e-3);
    let precision = cfg.pick(args.precision, "precision")?.unwrap_or_default();

    let rep = match precision {
        Precision::Single => oracle_equivalence::<f32>(circuits as usize, qubits as usize, depth, seed),
        Precision::Double => oracle_equivalence::<f64>(circuits as usize, qubits as usize, depth, seed),
    };
    println!("circuits: {}", rep.circuits);
    println!("max tv: {:.3e}", rep.max_tv);
    println!("worst circuit: {}", rep.worst);
    println!("max layers: {}", rep.max_layers);
    println!("failures: {}", rep.failures.len());
    for (i, e) in &rep.failures {
        eprintln!("circuit {i}: {e}");
    }
    if !rep.failures.is_empty() || rep.max_tv >= threshold {
        return Err(Failure::Threshold(format!("max tv {:.3e} vs threshold {threshold:.1e}", rep.max_tv)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Factor(a) => cmd_factor(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::NoFactors => eprintln!("no factors found"),
                Failure::Usage(m) | Failure::Io(m) | Failure::Parse(m) | Failure::Runtime(m) | Failure::Threshold(m) => {
                    eprintln!("error: {m}")
                }
            }
            ExitCode::from(f.code())
        }
    }
}
