use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "apdist",
    version,
    about = "Kloosterman-sum identities and coefficient distribution in arithmetic progressions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file; defaults to $APDIST_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for sampled classes and pairs.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override the asserted tolerance.
    #[arg(long = "tol", global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identity checks with a pass/fail exit status.
    #[command(subcommand)]
    Verify(Verify),
    /// Coefficient series as CSV.
    #[command(subcommand)]
    Coeffs(Coeffs),
    /// Discrepancy of a coefficient series in the classes modulo q.
    Delta(DeltaArgs),
    /// Parameter scans.
    #[command(subcommand)]
    Scan(Scan),
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Fourier transform of x ↦ Kl4(alx) against Kl3 at random (a, l).
    Kl4hat {
        #[arg(long)]
        q: u64,
        /// Number of random (a, l) pairs.
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// Fourth moments of Gauss sums against Kl4.
    GaussSpectral {
        #[arg(long)]
        q: u64,
    },
    /// λ_f(n)² against the Möbius-twisted 1 ⊞ sym² coefficients.
    Convolution {
        #[arg(long = "N", visible_alias = "n", default_value_t = 100_000)]
        n: usize,
    },
    /// Twisted dual-sum identity for every unit class.
    FunctionalEq {
        #[arg(long)]
        q: u64,
        #[arg(long = "X", visible_alias = "x")]
        x: f64,
    },
    /// Poisson summation in l.
    Poisson(CellArgs),
    /// Cauchy–Schwarz split into diagonal and correlation-sum parts.
    CsSplit(CellArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CellArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long = "L", visible_alias = "l")]
    pub l: f64,
    #[arg(long = "M", visible_alias = "m")]
    pub m: f64,
    #[arg(long, default_value_t = 1)]
    pub a: i64,
}

#[derive(Debug, Subcommand)]
pub enum Coeffs {
    /// Ramanujan τ(n), exact.
    Tau {
        #[arg(long = "N", visible_alias = "n")]
        n: usize,
    },
    /// Normalized symmetric-square coefficients.
    Sym2 {
        #[arg(long = "N", visible_alias = "n")]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesKind {
    /// λ_f(n)².
    RankinSelberg,
    /// Coefficients of 1 ⊞ sym²f.
    OneSym2,
}

#[derive(Debug, Clone, Args)]
pub struct DeltaArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long = "X", visible_alias = "x")]
    pub x: f64,
    /// Single class; all unit classes when absent.
    #[arg(long)]
    pub a: Option<i64>,
    #[arg(long, value_enum, default_value_t = SeriesKind::RankinSelberg)]
    pub series: SeriesKind,
}

#[derive(Debug, Subcommand)]
pub enum Scan {
    /// |Δ|/(X/q) for q near X^θ.
    Level {
        #[arg(long = "X", visible_alias = "x", value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        /// Random classes per modulus.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Bilinear sums over power-of-two (L, M) cells.
    Regimes {
        #[arg(long)]
        q: u64,
        #[arg(long = "X", visible_alias = "x")]
        x: f64,
        #[arg(long, default_value_t = 1)]
        a: i64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
    },
}
