//! Desk-scale simulation experiments.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`] and the
//! frequency table. Targets, databases and relatives are drawn from
//! independent named seed streams, trials run in parallel, and per-target
//! rows are merged in target order, so a report is bit-identical for any
//! worker count.

mod experiments;
mod preassess;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::genetics::{AlleleFrequencyTable, Panel, Relationship};

pub use experiments::{
    detection_statistic, run, run_efficiency, run_half_sibling, run_pod, run_rank_cdf,
    run_resampled_efficiency, run_subset_sizes, run_total_lr, sample_database, SortedScores,
};
pub use preassess::{preassess, PreassessRow, Preassessment};
pub use report::{Curve, ExperimentReport, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TotalLr,
    Pod,
    Resampled,
    RankCdf,
    SubsetSizes,
    HalfSibling,
    Efficiency,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::TotalLr,
        Experiment::Pod,
        Experiment::Resampled,
        Experiment::RankCdf,
        Experiment::SubsetSizes,
        Experiment::HalfSibling,
        Experiment::Efficiency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TotalLr => "total-lr",
            Experiment::Pod => "pod",
            Experiment::Resampled => "resampled",
            Experiment::RankCdf => "rank-cdf",
            Experiment::SubsetSizes => "subset-sizes",
            Experiment::HalfSibling => "half-sibling",
            Experiment::Efficiency => "efficiency",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::invalid(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// The default grid of α values: 25 points in `[0.01, 1]`, denser near both ends.
pub fn default_alpha_grid() -> Vec<f64> {
    let mut grid = vec![0.01, 0.02, 0.03];
    grid.extend((1..=19).map(|k| k as f64 * 0.05));
    grid.extend([0.97, 0.99, 1.0]);
    grid
}

pub const DEFAULT_RANK_GRID: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Number of unrelated profiles in the database.
    pub database_size: usize,
    /// Number of targets, or of independent trials for [`Experiment::Efficiency`].
    pub targets: usize,
    /// Relatives planted per target.
    pub relatives: usize,
    /// How planted relatives are drawn.
    pub relationship: Relationship,
    /// Relationship whose kinship index scores candidates; defaults to `relationship`.
    pub score: Option<Relationship>,
    /// Loci typed on every profile; all loci of the table when absent.
    pub loci: Option<Vec<String>>,
    /// Label of the frequency table, echoed in reports.
    pub frequencies: String,
    pub alpha_grid: Vec<f64>,
    pub rank_grid: Vec<usize>,
    /// Monte Carlo sample size for `t_α` estimates.
    pub threshold_samples: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `experiment`.
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        let (targets, relatives, relationship) = match experiment {
            Experiment::TotalLr => (100, 1, Relationship::FULL_SIBLING),
            Experiment::HalfSibling => (20, 200, Relationship::HALF_SIBLING),
            Experiment::Efficiency => (2000, 1, Relationship::FULL_SIBLING),
            _ => (50, 100, Relationship::FULL_SIBLING),
        };
        Self {
            experiment,
            database_size: 10_000,
            targets,
            relatives,
            relationship,
            score: None,
            loci: None,
            frequencies: "synthetic-sgmplus".into(),
            alpha_grid: default_alpha_grid(),
            rank_grid: DEFAULT_RANK_GRID.to_vec(),
            threshold_samples: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.database_size == 0 || self.targets == 0 || self.relatives == 0 {
            return Err(Error::invalid("database size, targets and relatives must all be at least 1"));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("the α-grid must be a non-empty subset of [0, 1]"));
        }
        if self.rank_grid.is_empty() || self.rank_grid.contains(&0) {
            return Err(Error::invalid("the rank grid must be non-empty and positive"));
        }
        if self.threshold_samples < crate::strategies::MIN_SAMPLES {
            return Err(Error::invalid(format!(
                "threshold samples must be at least {}",
                crate::strategies::MIN_SAMPLES
            )));
        }
        Ok(())
    }

    pub fn scoring(&self) -> Relationship {
        self.score.unwrap_or(self.relationship)
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn panel(&self, freqs: &AlleleFrequencyTable) -> Result<Panel> {
        match &self.loci {
            None => Ok(Panel::full(freqs, "sim")),
            Some(names) => {
                let loci = names
                    .iter()
                    .map(|n| freqs.locus_index(n).ok_or_else(|| Error::UnknownLocus(n.clone())))
                    .collect::<Result<Vec<_>>>()?;
                Panel::new("sim", loci)
            }
        }
    }
}

/// Column label for a grid value, e.g. `beta@0.05`.
pub(crate) fn col(prefix: &str, x: impl fmt::Display) -> String {
    format!("{prefix}@{x}")
}
