/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod curve;
mod demands;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maclfr::SchemeKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    BadArguments(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Cap(String),
    /// Decoding, integrity or verification failure.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Failed(_) => 1,
            Self::Io(_) => 2,
            Self::Cap(_) => 3,
            Self::BadArguments(_) => 4,
        }
    }
}

impl From<maclfr::Error> for CliError {
    fn from(e: maclfr::Error) -> Self {
        use maclfr::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) | E::Domain(_) => Self::BadArguments(msg),
            E::Integrity(_) => Self::Failed(msg),
            E::ResourceCap { .. } => Self::Cap(msg),
            E::Format(_) | E::Io(_) => Self::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "maclfr", version, about = "Secure and private linear function retrieval on multi-access coded caching networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Memory-rate points and lower convex envelopes.
    Curve(CurveArgs),
    /// Place, deliver and decode once; write the transcript.
    Simulate(SimulateArgs),
    /// Run exhaustive correctness, security, privacy or share-placement checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Topology {
    /// Number of caches.
    #[arg(long = "C")]
    pub caches: Option<usize>,
    /// Caches per user.
    #[arg(long = "r")]
    pub access: Option<usize>,
    /// Placement parameter.
    #[arg(long = "t")]
    pub t: Option<usize>,
    /// Number of files.
    #[arg(long = "N")]
    pub n_files: Option<usize>,
    /// File size in bits.
    #[arg(long = "F")]
    pub file_bits: Option<usize>,
}

fn required(value: Option<usize>, flag: &str) -> CliResult<usize> {
    value.ok_or_else(|| CliError::BadArguments(format!("--{flag} is required")))
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub topology: Topology,
    /// One scheme; all five when omitted.
    #[arg(long)]
    pub scheme: Option<SchemeKind>,
    /// Figure preset: 2-4 compare all schemes at C=15 with r=1,2,3; 5 compares s-lfr and is-lfr at r=2.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5), conflicts_with_all = ["caches", "access", "n_files", "scheme"])]
    pub figure: Option<u8>,
    /// Directory for curves.csv and curves.json; CSV goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Preset {
    Example2,
    Example3,
    Example4,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub topology: Topology,
    #[arg(long, default_value = "sp-lfr")]
    pub scheme: SchemeKind,
    #[arg(long, env = "MACLFR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// A demand file, `random`, or `exhaustive`.
    #[arg(long, default_value = "random")]
    pub demands: String,
    /// A small reference configuration with fixed demands.
    #[arg(long, value_enum, conflicts_with_all = ["caches", "access", "t", "n_files"])]
    pub preset: Option<Preset>,
    /// Serve the zero-memory point by broadcasting the whole library.
    #[arg(long)]
    pub library_broadcast: bool,
    /// Directory for transcript.bin, transcript.json and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = maclfr::verify::DEFAULT_CAP)]
    pub cap: u128,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Suite {
    Correctness,
    Security,
    Privacy,
    Shares,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub topology: Topology,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// One scheme; all five when omitted.
    #[arg(long)]
    pub scheme: Option<SchemeKind>,
    #[arg(long, env = "MACLFR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Placement seeds `seed..seed+seeds` for the correctness suite.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// A demand file, `random`, or `exhaustive`. Correctness defaults to
    /// exhaustive, security to a seeded random assignment.
    #[arg(long)]
    pub demands: Option<String>,
    /// Privacy observers as comma-separated cache lists, e.g. `1-2,2-3`.
    #[arg(long)]
    pub observers: Option<String>,
    #[arg(long, default_value_t = maclfr::verify::DEFAULT_CAP)]
    pub cap: u128,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Directory for report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Curve(a) => curve::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Verify(a) => verify::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
