mod commands;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

pub use output::CliError;

#[derive(Parser, Debug)]
#[command(name = "loggas", version, about = "Equilibrium, transport, sampling and statistics pipelines for multi-cut log-gases")]
struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 4 when a statistical comparison falls outside its band.
    #[arg(long, global = true)]
    assert: bool,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum LogLevel {
    Error,
    Warn,
    Info,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Free filling fractions.
    Free,
    /// Particle counts fixed per cut, two-body potential T_t.
    Fixed,
    /// Independent per-cut factors of T_1.
    ProductT1,
    /// Gaussian β-ensemble from its tridiagonal model.
    GaussianTridiagonal,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Command {
    /// Solve for the equilibrium measure of a potential.
    Equilibrium(EquilibriumArgs),
    /// Invert the master operator on a polynomial.
    XiInvert(XiArgs),
    /// Monotone maps from the semicircle, or the first-order flow of a batch.
    Transport(TransportArgs),
    /// Draw a batch of configurations.
    Sample(SampleArgs),
    /// Rescaled bulk gaps against a transported Gaussian reference.
    Gaps(GapsArgs),
    /// Rescaled edge particles against a transported Gaussian reference.
    Edge(EdgeArgs),
    /// Filling-fraction counts and boundary classification.
    Filling(FillingArgs),
    /// Monte Carlo residual of a loop equation.
    Loopcheck(LoopArgs),
    /// Run a JSON-described DAG of the other subcommands.
    Pipeline(PipelineArgs),
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumArgs {
    /// Potential JSON file.
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long)]
    pub cuts: usize,
    /// Fixed filling fractions, comma separated; free when absent.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Initial cuts as lo:hi, comma separated; guessed when absent.
    #[arg(long, value_delimiter = ',')]
    pub init: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long)]
    pub cheb_degree: Option<usize>,
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    #[arg(long)]
    pub contour_nodes: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct XiArgs {
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Coefficients of the polynomial k, lowest degree first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub k: Vec<f64>,
    /// Evaluation points per cut on B^δ.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct TransportArgs {
    #[arg(long)]
    pub measure: PathBuf,
    /// Map to this cut only; every cut when absent.
    #[arg(long)]
    pub cut: Option<usize>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Integrate the first-order flow on every config of this batch instead.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Equilibrium measure; not needed for the tridiagonal model.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 2000)]
    pub sweeps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// β of the tridiagonal model; the measure's β otherwise.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long)]
    pub jump_probability: Option<f64>,
    /// Binary batch file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also export the configurations as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceArgs {
    /// Gaussian reference batch; drawn (and cached) when absent.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 4000)]
    pub reference_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub reference_seed: u64,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct GapsArgs {
    #[arg(long)]
    pub batch: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub h: usize,
    /// Global 1-based index of the first gap; mid-cut when absent.
    #[arg(long)]
    pub i: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Bulk window width.
    #[arg(long, default_value_t = 0.1)]
    pub window: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct EdgeArgs {
    #[arg(long)]
    pub batch: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub h: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct FillingArgs {
    #[arg(long)]
    pub batch: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct LoopArgs {
    #[arg(long)]
    pub batch: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long)]
    pub order: usize,
    /// Coefficients of the polynomial f, multiplied by the plateau window.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub f: Vec<f64>,
    /// Coefficients of one polynomial k; repeat for k₁, k₂, k₃.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Vec<String>,
    /// Band on |residual / SE|.
    #[arg(long, default_value_t = 3.0)]
    pub z_max: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct PipelineArgs {
    /// Pipeline JSON file.
    #[arg(long)]
    pub file: PathBuf,
}

pub struct Context {
    pub assert: bool,
    pub log_level: LogLevel,
}

impl Context {
    pub fn log(&self, level: LogLevel, value: serde_json::Value) {
        if level <= self.log_level {
            eprintln!("{value}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return CliError::validation("usage", e.to_string()).report();
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            return CliError::validation("argument", "--threads must be at least 1").report();
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return CliError::validation("argument", e.to_string()).report();
        }
    }
    let ctx = Context { assert: cli.assert, log_level: cli.log_level };
    match commands::run(&ctx, cli.command) {
        Ok(status) => ExitCode::from(status),
        Err(e) => e.report(),
    }
}
