//! Command-line front end: flag parsing, optional TOML config defaults, and
//! exit-code mapping (0 ok, 1 usage, 2 i/o, 3 verification failure,
//! 4 censoring advisory).

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use maxlink::harness::{run, Command, DegreeMode, ExperimentConfig, HarnessError};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CmdArg {
    Degree,
    Coalesce,
    Scan,
    LimitWalk,
    Verify,
}

impl From<CmdArg> for Command {
    fn from(c: CmdArg) -> Command {
        match c {
            CmdArg::Degree => Command::Degree,
            CmdArg::Coalesce => Command::Coalesce,
            CmdArg::Scan => Command::Scan,
            CmdArg::LimitWalk => Command::LimitWalk,
            CmdArg::Verify => Command::Verify,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Torus,
    LimitExact,
    LimitPaper,
}

impl From<VariantArg> for DegreeMode {
    fn from(v: VariantArg) -> DegreeMode {
        match v {
            VariantArg::Torus => DegreeMode::Torus,
            VariantArg::LimitExact => DegreeMode::LimitExact,
            VariantArg::LimitPaper => DegreeMode::LimitPaper,
        }
    }
}

/// Simulator and statistical test harness for layered max-linkage networks.
#[derive(Parser, Debug)]
#[command(name = "maxlink", version)]
struct Cli {
    /// Experiment to run.
    #[arg(long = "cmd", value_enum)]
    cmd: Option<CmdArg>,

    /// Tail index of the Fréchet fitness law.
    #[arg(long)]
    delta: Option<f64>,

    /// Torus size; repeat the flag to sweep several sizes.
    #[arg(long = "n")]
    n: Vec<u64>,

    /// Replications per configuration.
    #[arg(long)]
    reps: Option<u64>,

    /// Master seed; every statistic is reproducible from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Censoring-cap override (coalescence) or layer budget (limit walks).
    #[arg(long)]
    cap: Option<u64>,

    /// Output directory for CSV/JSON files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses the machine default.
    #[arg(long)]
    workers: Option<usize>,

    /// Also write per-layer trace files.
    #[arg(long)]
    trace: bool,

    /// Degree sampler variant (defaults to torus when --n is given,
    /// limit-exact otherwise).
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,

    /// TOML file with default values for the flags above; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    cmd: Option<String>,
    delta: Option<f64>,
    n: Option<Vec<u64>>,
    reps: Option<u64>,
    seed: Option<u64>,
    cap: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    trace: Option<bool>,
    variant: Option<String>,
}

fn parse_cmd_name(name: &str) -> Result<CmdArg, String> {
    match name.replace('_', "-").as_str() {
        "degree" => Ok(CmdArg::Degree),
        "coalesce" => Ok(CmdArg::Coalesce),
        "scan" => Ok(CmdArg::Scan),
        "limit-walk" => Ok(CmdArg::LimitWalk),
        "verify" => Ok(CmdArg::Verify),
        other => Err(format!("unknown command '{other}'")),
    }
}

fn parse_variant_name(name: &str) -> Result<VariantArg, String> {
    match name.replace('_', "-").as_str() {
        "torus" => Ok(VariantArg::Torus),
        "limit-exact" => Ok(VariantArg::LimitExact),
        "limit-paper" => Ok(VariantArg::LimitPaper),
        other => Err(format!("unknown degree variant '{other}'")),
    }
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, String> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("config file {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("config file {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let cmd = match (cli.cmd, file.cmd) {
        (Some(c), _) => c,
        (None, Some(name)) => parse_cmd_name(&name)?,
        (None, None) => return Err("missing --cmd (degree|coalesce|scan|limit-walk|verify)".into()),
    };
    let n_values = if !cli.n.is_empty() { cli.n } else { file.n.unwrap_or_default() };
    let variant = match (cli.variant, file.variant) {
        (Some(v), _) => v.into(),
        (None, Some(name)) => parse_variant_name(&name)?.into(),
        (None, None) => {
            if n_values.is_empty() {
                DegreeMode::LimitExact
            } else {
                DegreeMode::Torus
            }
        }
    };
    Ok(ExperimentConfig {
        command: cmd.into(),
        delta: cli.delta.or(file.delta).unwrap_or(1.0),
        n_values,
        reps: cli.reps.or(file.reps).unwrap_or(100),
        seed: cli.seed.or(file.seed).unwrap_or(1),
        cap: cli.cap.or(file.cap),
        out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        workers: cli.workers.or(file.workers).unwrap_or(0),
        trace: cli.trace || file.trace.unwrap_or(false),
        variant,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match build_config(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("usage: {msg}");
            return ExitCode::from(1);
        }
    };
    match run(&config) {
        Ok(manifest) => {
            println!(
                "{:?} done in {:.2}s; outputs in {}",
                config.command,
                manifest.wall_clock_secs,
                config.out.display()
            );
            if manifest.failed_checks > 0 {
                eprintln!("{} verification check(s) failed", manifest.failed_checks);
                return ExitCode::from(3);
            }
            let censor = manifest.max_censor_rate();
            if censor > 0.05 {
                eprintln!("advisory: censoring rate {censor:.3} exceeds 5%");
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(HarnessError::Usage(msg)) => {
            eprintln!("usage: {msg}");
            ExitCode::from(1)
        }
        Err(HarnessError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(2)
        }
    }
}
