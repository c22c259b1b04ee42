//! Command-line front end: parses a TOML run configuration, dispatches
//! the library drivers, and writes deterministic artifacts (CSV tables,
//! JSON summaries, optional gnuplot scripts).
//!
//! Exit codes: 0 success, 2 when a run-level check fails (the summary
//! is still written), 1 for input errors (bad flags, bad config, IO).

mod drivers;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use magduct::config::RunConfig;
use magduct::report::Reporter;
use magduct::Error;

#[derive(Parser, Debug)]
#[command(
    name = "magduct",
    version,
    about = "Spectral experiments on magnetic waveguides: Hardy constants, \
             deformation/bending thresholds, and weak-coupling scans on the planar strip"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; omitted means the reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the randomized pieces (solver start block, random states).
    #[arg(long, global = true, default_value_t = 0xC0FFEE)]
    seed: u64,
    /// Worker cap recorded for the run; current drivers are serial.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Comma-separated artifact formats (overrides `output.formats`).
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Discrete spectrum below the threshold for the configured geometry and field
    Spectrum,
    /// Hardy-constant chain of a bounded compactly supported field
    HardyConstant,
    /// Hardy-constant chain of a point flux
    AbHardy,
    /// Certified widening and bending thresholds for the configured field
    Certify,
    /// Coupling scan: widening threshold as a function of the field strength
    ThresholdScan,
    /// Closed-form trial-state norms and Rayleigh quotients
    TrialFunction,
    /// Weak-widening quadratic binding law
    Bgrs,
    /// Reconstruct the bent strip axis from its curvature profile
    Curve,
    /// Truncation convergence toward the essential-spectrum edge
    EssProbe,
    /// Cellwise diamagnetic comparison on random states
    Diamagnetic,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Spectrum => "spectrum",
            Cmd::HardyConstant => "hardy-constant",
            Cmd::AbHardy => "ab-hardy",
            Cmd::Certify => "certify",
            Cmd::ThresholdScan => "threshold-scan",
            Cmd::TrialFunction => "trial-function",
            Cmd::Bgrs => "bgrs",
            Cmd::Curve => "curve",
            Cmd::EssProbe => "ess-probe",
            Cmd::Diamagnetic => "diamagnetic",
        }
    }
}

/// Input errors exit 1; failures of the computation itself exit 2 with
/// a summary on disk.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::Io(_)
            | Error::Toml(_)
            | Error::Json(_)
            | Error::NonMonotoneGrid(_)
            | Error::IntegerFlux(_)
            | Error::ValidityWindow(_)
            | Error::RegionContainsSingularity(..)
            | Error::TrivialFlux(_)
            | Error::PunctureNearNode { .. }
            | Error::JacobianNonPositive { .. }
            | Error::EvalAtSingularity { .. }
            | Error::BoundViolated { .. }
            | Error::MissingNorm(_)
    )
}

fn epoch_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    if let Some(formats) = &cli.format {
        cfg.output.formats = formats.clone();
    }
    cfg.validate(name).map_err(|e| e.to_string())?;

    let reporter = Reporter::new(cfg.output.directory.clone(), cfg.format_set())
        .map_err(|e| e.to_string())?;
    let _ = reporter.log(&format!(
        "{} start command={name} seed={} threads={}",
        epoch_seconds(),
        cli.seed,
        cli.threads
    ));

    let outcome = drivers::dispatch(name, &cfg, &reporter, cli.seed, cli.threads);
    match outcome {
        Ok(out) => {
            reporter.summary(&out.summary).map_err(|e| e.to_string())?;
            let _ = reporter.log(&format!(
                "{} finish command={name} ok={}",
                epoch_seconds(),
                out.ok
            ));
            if out.ok {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("magduct {name}: one or more run checks failed; see summary.json");
                Ok(ExitCode::from(2))
            }
        }
        Err(e) if !is_input_error(&e) => {
            // the computation itself failed an assertion; record it
            let summary = serde_json::json!({
                "command": name,
                "ok": false,
                "error": e.to_string(),
            });
            reporter.summary(&summary).map_err(|e| e.to_string())?;
            let _ = reporter.log(&format!("{} abort command={name}", epoch_seconds()));
            eprintln!("magduct {name}: {e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // unknown commands and malformed flags are input errors
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("magduct: {msg}");
            ExitCode::from(1)
        }
    }
}
