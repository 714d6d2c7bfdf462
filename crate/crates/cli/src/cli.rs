use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use famsearch::genetics::Relationship;
use famsearch::simulation::Experiment;
use serde::Serialize;

pub fn relationship(s: &str) -> Result<Relationship, String> {
    s.parse().map_err(|e: famsearch::Error| e.to_string())
}

fn experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: famsearch::Error| e.to_string())
}

fn alpha_part(s: &str) -> Result<(String, f64), String> {
    let (panel, value) = s.split_once('=').ok_or_else(|| format!("`{s}` is not of the form panel=alpha"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((panel.trim().to_string(), value))
}

#[derive(Debug, Parser)]
#[command(name = "famsearch", version, about = "Familial DNA database search")]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for the subcommand's
    /// flags; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Allele frequency tables.
    Freqs {
        #[command(subcommand)]
        action: FreqsCommand,
    },
    /// Profile databases.
    Db {
        #[command(subcommand)]
        action: DbCommand,
    },
    /// Scan a database for relatives of a target profile.
    Search(SearchArgs),
    /// Estimate thresholds, subset sizes and ranks from the target alone.
    Preassess(PreassessArgs),
    /// Run a simulation experiment.
    Simulate(SimulateArgs),
    /// Simulation report utilities.
    Report {
        #[command(subcommand)]
        action: ReportCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum FreqsCommand {
    /// Check a frequency table and print a summary.
    Validate(FreqArgs),
}

#[derive(Debug, Subcommand)]
pub enum DbCommand {
    /// Write a database of random population members, optionally with planted relatives.
    Sample(DbSampleArgs),
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Concatenate per-row report CSVs with identical columns.
    Merge(MergeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FreqArgs {
    /// Frequency table (`locus,allele,frequency`); the bundled synthetic table when omitted.
    #[arg(long)]
    pub freqs: Option<PathBuf>,
    /// Rescale loci whose frequencies sum to within 0.01 of one.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetArgs {
    /// File holding the target profile (database format).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Id of the target when the file holds several profiles.
    #[arg(long)]
    pub target_id: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DbSampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub freq: FreqArgs,
    /// Number of unrelated profiles.
    #[arg(long)]
    pub size: Option<usize>,
    /// Comma-separated loci to type; all loci when omitted.
    #[arg(long, value_delimiter = ',')]
    pub loci: Vec<String>,
    #[arg(long, default_value = "full")]
    pub panel: String,
    /// Prefix of generated ids.
    #[arg(long, default_value = "P")]
    pub prefix: String,
    /// Plant relatives of the profile in this file.
    #[arg(long)]
    pub relative_of: Option<PathBuf>,
    #[arg(long)]
    pub target_id: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub relatives: usize,
    #[arg(long, default_value = "sibling", value_parser = relationship)]
    pub relationship: Relationship,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; `.jsonl` writes JSON lines, anything else CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Conditional,
    TargetCentered,
    SBeta,
    IbsLr,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub freq: FreqArgs,
    /// Database file (CSV or JSON lines).
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value = "sibling", value_parser = relationship)]
    pub relationship: Relationship,
    /// Priors file (`id,prior`); members not listed share what is left of `--pi-d`.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    /// Prior probability that the relative is in the database.
    #[arg(long, default_value_t = 0.5)]
    pub pi_d: f64,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Minimum number of alleles shared with the target.
    #[arg(long, allow_negative_numbers = true)]
    pub ibs: Option<i64>,
    /// Minimum kinship index, used with `--ibs`.
    #[arg(long)]
    pub lr_min: Option<f64>,
    /// Per-panel α for heterogeneous databases, e.g. `--alpha-part sgm=0.9`.
    #[arg(long, value_parser = alpha_part)]
    pub alpha_part: Vec<(String, f64)>,
    /// Monte Carlo sample size for thresholds.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compute thresholds by exhaustive enumeration.
    #[arg(long)]
    pub exact: bool,
    /// Largest number of genotype combinations `--exact` may enumerate.
    #[arg(long, default_value_t = famsearch::genetics::DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreassessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value = "sibling", value_parser = relationship)]
    pub relationship: Relationship,
    #[arg(long)]
    pub database_size: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.7, 0.8, 0.9, 0.95])]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = famsearch::genetics::DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    /// Write the estimates as CSV here as well as printing them.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// total-lr, pod, resampled, rank-cdf, subset-sizes, half-sibling or efficiency.
    #[arg(value_parser = experiment)]
    pub experiment: Experiment,
    #[command(flatten)]
    #[serde(flatten)]
    pub freq: FreqArgs,
    #[arg(long)]
    pub database_size: Option<usize>,
    /// Targets (trials for `efficiency`).
    #[arg(long)]
    pub targets: Option<usize>,
    #[arg(long)]
    pub relatives: Option<usize>,
    /// How planted relatives are drawn.
    #[arg(long, value_parser = relationship)]
    pub relationship: Option<Relationship>,
    /// Relationship of the kinship index used for scoring.
    #[arg(long, value_parser = relationship)]
    pub score: Option<Relationship>,
    #[arg(long, value_delimiter = ',')]
    pub loci: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rank_grid: Vec<usize>,
    #[arg(long)]
    pub threshold_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MergeArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}
