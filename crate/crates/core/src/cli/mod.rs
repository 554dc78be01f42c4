//! Command-line experiment runner: `run`, `gains` and `codebook export`.

mod experiment;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use experiment::{
    default_snr_grid, parse_config, parse_grid, preset, ExperimentSpec, FeedbackMode, FigureId, Overrides,
    DEFAULT_DROPS, THEORY_CURVES,
};
pub use output::{feedback_losses, gains_table, rate_table, read_csv, report_rows, theory_rows, write_csv, CsvRow, CSV_HEADER};

use crate::error::Error;
use crate::eval::monte_carlo;
use crate::feedback::{build_codebook, build_dft_codebook, Construction};
use crate::model::ScenarioConfig;
use crate::theory::gain_table;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::Incompatible { .. }
            | Error::Infeasible(_)
            | Error::Codebook(_)
            | Error::EmptyInput(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cbsim", version, about = "Downlink coordinated beamforming link-level simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo sweep and write a CSV of rates.
    Run(RunArgs),
    /// Print percentage gains over a baseline scheme from a CSV.
    Gains(GainsArgs),
    /// Codebook utilities.
    #[command(subcommand)]
    Codebook(CodebookCommand),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Figure preset: fig2, fig3, fig4, fig5 or fig6.
    #[arg(long)]
    pub preset: Option<FigureId>,
    /// TOML config file; may name a preset to inherit from.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Intra-cluster interference levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Out-of-cluster interference level.
    #[arg(long)]
    pub beta: Option<f64>,
    /// SNR grid in dB: `a,b,c` or `start:stop:step`.
    // fully qualified so clap takes the parsed grid as one value
    #[arg(long, value_parser = parse_grid)]
    pub snr: Option<::std::vec::Vec<f64>>,
    #[arg(long)]
    pub drops: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scheme identifiers, comma separated (e.g. `ia,wmmse,downlink_ia@lte_dual_stage`).
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// `ideal`, or a codebook construction adding quantized broadcast runs.
    #[arg(long)]
    pub feedback: Option<FeedbackMode>,
    /// Output CSV path; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Scheme every other scheme is compared against.
    #[arg(long)]
    pub baseline: String,
}

#[derive(Debug, Subcommand)]
pub enum CodebookCommand {
    /// Write a codebook in the `re+imj` text format.
    Export {
        #[arg(long, default_value = "lte_dual_stage")]
        construction: Construction,
        #[arg(long, default_value_t = 4)]
        antennas: usize,
        /// Number of entries (dft_grid only).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Resolves presets, config file and flags into one spec.
pub fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, CliError> {
    let mut spec = match (&args.config, args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text, path)?
        }
        (None, Some(p)) => preset(p),
        (None, None) => return Err(CliError::Config("either --preset or --config is required".into())),
    };
    Overrides {
        alpha: args.alpha.clone(),
        beta: args.beta,
        snr: args.snr.clone(),
        drops: args.drops,
        seed: args.seed,
        schemes: args.schemes.clone(),
        feedback: args.feedback,
        out: args.out.clone(),
    }
    .apply(&mut spec);
    spec.validate()?;
    Ok(spec)
}

/// Evaluates every scenario of the spec; rows in scenario, scheme, SNR order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CsvRow>, CliError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &alpha in &spec.alpha_sweep {
        let beta = spec.scenario.beta;
        if spec.is_theory() {
            let table = gain_table(&spec.scenario.snr_db_grid, alpha, beta);
            rows.extend(
                theory_rows(alpha, beta, &table)
                    .into_iter()
                    .filter(|r| spec.schemes.contains(&r.scheme)),
            );
            continue;
        }
        let cfg = ScenarioConfig {
            alpha,
            ..spec.scenario.clone()
        };
        let schemes = spec.resolve_schemes()?;
        for (name, points) in monte_carlo(&cfg, &schemes)? {
            for (snr, report) in points {
                rows.extend(report_rows(&name, snr, alpha, beta, &report));
            }
        }
    }
    Ok(rows)
}

/// Reference scheme of the printed gain table.
fn default_baseline(spec: &ExperimentSpec) -> Option<&'static str> {
    let schemes = spec.expanded_schemes();
    ["orthogonal", "ia", "eigenbeams"]
        .into_iter()
        .find(|b| schemes.iter().any(|s| s == b))
}

fn summary(spec: &ExperimentSpec, rows: &[CsvRow]) -> Result<String, CliError> {
    let mut out = rate_table(rows);
    if let Some(baseline) = default_baseline(spec) {
        out.push('\n');
        out.push_str(&gains_table(rows, baseline)?);
    }
    let losses = feedback_losses(rows);
    if !losses.is_empty() {
        out.push('\n');
        for (alpha, beta, scheme, loss) in losses {
            out.push_str(&format!(
                "alpha={alpha} beta={beta} {scheme}: mean loss vs ideal feedback {loss:.1}%\n"
            ));
        }
    }
    Ok(out)
}

fn writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let spec = build_spec(&args)?;
    let rows = run_experiment(&spec)?;
    write_csv(&rows, writer(&spec.output_path)?)?;
    if spec.output_path.is_some() {
        print!("{}", summary(&spec, &rows)?);
    } else {
        eprint!("{}", summary(&spec, &rows)?);
    }
    Ok(())
}

fn gains(args: GainsArgs) -> Result<(), CliError> {
    let file = File::open(&args.csv).map_err(|e| CliError::Io(format!("{}: {e}", args.csv.display())))?;
    let rows = read_csv(file)?;
    print!("{}", gains_table(&rows, &args.baseline)?);
    Ok(())
}

fn codebook(cmd: CodebookCommand) -> Result<(), CliError> {
    let CodebookCommand::Export {
        construction,
        antennas,
        size,
        out,
    } = cmd;
    let cb = match (construction, size) {
        (Construction::DftGrid, Some(n)) => build_dft_codebook(antennas, n)?,
        (Construction::LteDualStage, Some(_)) => {
            return Err(CliError::Config("--size applies to dft_grid only".into()))
        }
        (c, None) => build_codebook(antennas, c)?,
    };
    writer(&out)?
        .write_all(cb.to_text().as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Gains(a) => gains(a),
        Command::Codebook(c) => codebook(c),
    }
}

/// Entry point of the `cbsim` binary.
pub fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cbsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
