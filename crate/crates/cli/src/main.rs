use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rhs_spectra::commands::{cmd_eval, cmd_evolve, cmd_transform, spectrum_report, CommandOutput};
use rhs_spectra::config::{Format, RunConfig};
use rhs_spectra::error::{exit, CliError};
use rhs_spectra::output::{render_json, Sink};
use rhs_spectra::verify::cmd_verify;

/// Spectral analysis of the radial square barrier.
#[derive(Debug, Parser)]
#[command(name = "rhs-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output file; defaults to `<command>.<format>`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write to standard output instead of a file.
    #[arg(long)]
    stdout: bool,
    /// Override `output.format`.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate eigenfunctions, Green functions or the spectral density.
    Eval(Common),
    /// Energy transform, round trip or dispersion of a configured function.
    Transform(Common),
    /// Time evolution of a configured function.
    Evolve(Common),
    /// Run the verification suites and write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Seed of the random test family.
        #[arg(long)]
        seed: Option<u64>,
        /// Highest power of h in the ket checks.
        #[arg(long)]
        max_order: Option<u32>,
        /// Comma separated suite names.
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<String>>,
    },
    /// Describe the spectrum as JSON.
    ReportSpectrum(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match common.format.as_deref() {
        Some("csv") => config.output.format = Format::Csv,
        Some("json") => config.output.format = Format::Json,
        _ => {}
    }
    Ok(config)
}

fn sink(common: &Common, config: &RunConfig, name: &str, ext: &str) -> Sink {
    let path = match (&common.out, &config.output.path, common.stdout) {
        (Some(p), _, _) => Some(p.clone()),
        (None, _, true) => None,
        (None, Some(p), false) => Some(p.clone()),
        (None, None, false) => Some(PathBuf::from(format!("{name}.{ext}"))),
    };
    Sink {
        path,
        stdout: common.stdout,
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn table_command(
    common: &Common,
    name: &str,
    run: fn(&RunConfig) -> Result<CommandOutput, CliError>,
) -> Result<(), CliError> {
    let config = load(common)?;
    let format = config.output.format;
    let out = run(&config)?;
    let sink = sink(common, &config, name, ext(format));
    sink.write(&out.table.render(format))?;
    if let Some(meta) = &out.meta {
        match sink.write_sidecar(meta)? {
            Some(p) => eprintln!("{name}: metadata written to {}", p.display()),
            None => eprint!("{}", render_json(meta)),
        }
    }
    if let Some(p) = &sink.path {
        eprintln!("{name}: {} rows written to {}", out.table.rows.len(), p.display());
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RHS_SPECTRA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("RHS_SPECTRA_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Eval(c) => table_command(&c, "eval", cmd_eval),
        Command::Transform(c) => table_command(&c, "transform", cmd_transform),
        Command::Evolve(c) => table_command(&c, "evolve", cmd_evolve),
        Command::ReportSpectrum(c) => {
            let config = load(&c)?;
            let report = spectrum_report(&config)?;
            sink(&c, &config, "spectrum", "json").write(&render_json(&report))
        }
        Command::Verify {
            common,
            seed,
            max_order,
            suites,
        } => {
            let mut config = load(&common)?;
            if let Some(s) = seed {
                config.verify.seed = s;
            }
            if let Some(m) = max_order {
                config.verify.max_order = m;
            }
            if suites.is_some() {
                config.verify.suites = suites;
            }
            let report = cmd_verify(&config)?;
            let sink = sink(&common, &config, "verify", "json");
            sink.write(&render_json(&report))?;
            let failed = report["failed"].as_u64().unwrap_or(0) as usize;
            let total = report["checks"].as_u64().unwrap_or(0) as usize;
            if failed > 0 {
                return Err(CliError::VerifyFailed { failed, total });
            }
            eprintln!("verify: all {total} checks passed");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
