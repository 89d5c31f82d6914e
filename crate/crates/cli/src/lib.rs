//! Subcommands of the `metacust` binary.
//!
//! Exit codes: 0 success, 1 domain failure (invalid model, invalid
//! operation under `--strict`, failed benchmark), 2 unreadable or malformed
//! input.

pub mod bench;
pub mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, CliError};

#[derive(Debug, Parser)]
#[command(name = "metacust", version, about = "Multi-tenant customization models: validate, inspect, replay, benchmark, serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model document and print its well-formedness report.
    Check { model: PathBuf },
    /// Print the adjacency matrix (or closure) of a concern.
    Matrix(MatrixArgs),
    /// Apply a JSON array of operations to an empty customization.
    Replay(ReplayArgs),
    /// Write a seeded random model.
    Generate(GenerateArgs),
    /// Measure operation latency over model sizes or client concurrency.
    Bench(BenchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    pub model: PathBuf,
    /// Concern to inspect; the whole application metagraph when omitted.
    #[arg(long)]
    pub concern: Option<String>,
    /// Print every simple path instead of single edges.
    #[arg(long)]
    pub closure: bool,
    /// Keep only the column of this element.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub model: PathBuf,
    pub ops: PathBuf,
    /// Stop with exit code 1 at the first invalid operation.
    #[arg(long)]
    pub strict: bool,
    /// Write the final customization document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = metacust_service::DEFAULT_TENANT)]
    pub tenant: String,
    /// Replay through a running service instead of in-process.
    #[arg(long)]
    pub server: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    pub components: usize,
    /// Defaults to a tenth of the components.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub dimensions: usize,
    #[arg(long, default_value_t = 4)]
    pub concerns_per_dimension: usize,
    #[arg(long, default_value_t = 0.5)]
    pub edge_density: f64,
    #[arg(long, default_value_t = 0.5)]
    pub and_ratio: f64,
    #[arg(long, default_value_t = 2)]
    pub max_invertex: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated model sizes for in-process runs.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Client counts for HTTP runs: a list `1,2,4` or a range `1..16`
    /// (powers of two up to the bound).
    #[arg(long)]
    pub concurrency: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub ops: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = metacust_service::DEFAULT_LISTEN)]
    pub listen: SocketAddr,
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    #[arg(long, default_value_t = metacust_service::DEFAULT_MAX_SESSIONS)]
    pub max_sessions: usize,
}

/// Parses `1,2,4` or `a..b`; a range yields the powers of two from `a`
/// up to and including `b`, plus `b` itself.
pub fn parse_levels(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("invalid concurrency list `{s}`");
    let levels = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || a > b {
            return Err(bad());
        }
        let mut v = Vec::new();
        let mut c = a;
        while c < b {
            v.push(c);
            c *= 2;
        }
        v.push(b);
        v
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if levels.is_empty() || levels.contains(&0) {
        return Err(bad());
    }
    Ok(levels)
}
