use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Build and verify small cubature designs from orthogonal arrays.
///
/// Exit codes: 0 success, 1 usage or input error, 2 verification failure,
/// 3 refusal (resource budget, infeasible parameters). Budgets can be raised
/// with the OADESIGN_MAX_ROWS, OADESIGN_MAX_SUBSETS, OADESIGN_MAX_HISTOGRAM,
/// OADESIGN_MAX_MONOMIALS and OADESIGN_MAX_GROUP_ORDER environment variables.
#[derive(Debug, Parser)]
#[command(name = "oadesign", version)]
pub struct Cli {
    /// Worker threads for certification and verification (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a certified orthogonal array from a trace code.
    OaBuild(OaBuildArgs),
    /// Build a product or array-reduced design.
    DesignBuild(DesignBuildArgs),
    /// Check a design against exact moments.
    Verify(VerifyArgs),
    /// Map a Gaussian 2r-design to an isometric embedding of l2 into l_2r.
    Embed(EmbedArgs),
    /// Compare group-orbit averages with symmetric averages.
    GroupCheck(GroupCheckArgs),
    /// Run the d=7 Gaussian and d=9 equilibrium pipelines end to end.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
pub struct OaBuildArgs {
    /// Number of levels (a prime power).
    #[arg(long)]
    pub q: u64,
    /// Extension degree of GF(q^m) over GF(q).
    #[arg(long)]
    pub m: u32,
    /// Target strength.
    #[arg(long)]
    pub t: usize,
    /// Keep only these columns (comma separated, 0-based).
    #[arg(long, value_delimiter = ',', conflicts_with = "d")]
    pub columns: Option<Vec<usize>>,
    /// Keep only the first d columns.
    #[arg(long)]
    pub d: Option<usize>,
    /// Store the runs explicitly instead of the generator rows.
    #[arg(long)]
    pub explicit: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Gaussian,
    Chebyshev,
}

#[derive(Debug, Args)]
pub struct DesignBuildArgs {
    #[arg(long, value_enum)]
    pub measure: MeasureArg,
    /// Hilbert-Kamke rule with 2M+1 nodes (Gaussian).
    #[arg(long = "M", id = "hk_m")]
    pub hk_m: Option<usize>,
    /// Chebyshev-Gauss rule with n nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Degree of a rational-weight Gaussian rule (with --q).
    #[arg(long, requires = "q")]
    pub t: Option<usize>,
    /// Weight denominator of a rational-weight rule (with --t).
    #[arg(long, requires = "t")]
    pub q: Option<u64>,
    /// Dimension; defaults to the array's column count when --oa is given.
    #[arg(long)]
    pub d: Option<usize>,
    /// Certified orthogonal array replacing the product grid.
    #[arg(long)]
    pub oa: Option<PathBuf>,
    /// Reference the array file by path instead of embedding it.
    #[arg(long, requires = "oa")]
    pub link_oa: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Relative tolerance against nonzero exact moments.
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    /// Absolute tolerance against zero exact moments.
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// Check all monomials of total degree <= t.
    #[arg(long)]
    pub t: usize,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Check only this many seeded random monomials (non-exhaustive).
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// Half the target exponent: the embedding lands in l_{2r}.
    #[arg(long)]
    pub r: u32,
    /// Embedding matrix as CSV, one row per point.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Random test vectors for the identity and norm checks.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0xe3b)]
    pub seed: u64,
    /// Relative tolerance of the Hilbert identity and norm checks.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Psl28,
    Sym,
    File,
}

#[derive(Debug, Args)]
pub struct GroupCheckArgs {
    #[arg(long, value_enum)]
    pub group: GroupArg,
    /// Degree of the symmetric group.
    #[arg(long)]
    pub d: Option<usize>,
    /// Permutation file: {"degree": d, "perms": [[...], ...], "closure": bool}.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Highest monomial degree compared.
    #[arg(long)]
    pub degree: usize,
    /// Orbit base point (comma separated); default (1, ..., d) normalized.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Largest discrepancy still counted as equality.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Directory receiving all generated files.
    #[arg(long)]
    pub out_dir: PathBuf,
}
