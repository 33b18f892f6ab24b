#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weaklink::config::OutputFormat;
use weaklink::Error;

mod commands;
mod context;

use context::Context;

/// Weak-link RF-SQUID simulation and data reduction.
///
/// Every flag can also be set through the environment variable shown in
/// its help text. Outputs are written below the output directory and
/// carry the SHA-256 of the configuration file in a header line.
#[derive(Debug, Parser)]
#[command(name = "weaklink", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, env = "WEAKLINK_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory [default: output.dir of the config, else ./out].
    #[arg(long, global = true, env = "WEAKLINK_OUT")]
    pub out: Option<PathBuf>,
    /// Seed for randomised commands [default: seed of the config, else 0].
    #[arg(long, global = true, env = "WEAKLINK_SEED")]
    pub seed: Option<u64>,
    /// Output formats [default: output.format of the config, else csv].
    #[arg(long, global = true, value_enum, env = "WEAKLINK_FORMAT")]
    pub format: Option<Format>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "WEAKLINK_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Svg => OutputFormat::Svg,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy, current and curvature of the weak link against phase.
    Cpr {
        #[arg(long, allow_hyphen_values = true)]
        phi_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Resonance curve along a flux sweep, dressed by the cavity if given.
    Sweep,
    /// Spectra of the simplified Josephson and phase-slip circuits.
    Spectrum,
    /// Fit model parameters to an observed resonance curve.
    Fit {
        /// CSV with `flux_phi0` and `f_ghz` (or `f_hyb_ghz`) columns.
        #[arg(long)]
        data: PathBuf,
    },
    /// Coil-voltage calibration from jump voltages (JSON inputs).
    Calibrate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Decay detection and lifetime histogram for trace CSV files.
    Lifetimes {
        /// Files or glob patterns.
        #[arg(required = true)]
        traces: Vec<String>,
    },
    /// Potential energy map and local minima at one flux.
    Landscape,
    /// Inter-well couplings and critical flux of the phase-slip model.
    QpsCouplings,
    /// Synthetic single-shot traces with exponential decay times.
    SynthTraces,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report("usage", &e.to_string(), 2);
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(summary) => {
            // a closed pipe is not an error worth reporting
            let _ = writeln!(
                std::io::stdout(),
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serialises")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (kind, code) = classify(&e);
            report(kind, &e.to_string(), code);
            ExitCode::from(code)
        }
    }
}

fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Io(_) => ("io", 4),
        e if e.is_numerical() => ("numerical", 3),
        _ => ("config", 2),
    }
}

fn report(kind: &str, message: &str, code: u8) {
    let body = serde_json::json!({
        "error": kind,
        "message": message.trim_end(),
        "exit_code": code,
    });
    eprintln!("{body}");
}

fn run(cli: Cli) -> weaklink::Result<serde_json::Value> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let ctx = Context::new(&cli.global)?;
    match cli.command {
        Command::Cpr {
            phi_min,
            phi_max,
            points,
        } => commands::cpr(&ctx, phi_min, phi_max, points),
        Command::Sweep => commands::sweep(&ctx),
        Command::Spectrum => commands::spectrum(&ctx),
        Command::Fit { data } => commands::fit(&ctx, &data),
        Command::Calibrate { files } => commands::calibrate(&ctx, &files),
        Command::Lifetimes { traces } => commands::lifetimes(&ctx, &traces),
        Command::Landscape => commands::landscape(&ctx),
        Command::QpsCouplings => commands::qps_couplings(&ctx),
        Command::SynthTraces => commands::synth_traces(&ctx),
    }
}
