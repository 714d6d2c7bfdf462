use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::CurveSpec;
use super::{col, Experiment, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::genetics::{
    rmp, sample_relative_with, sample_unrelated_with, AlleleFrequencyTable, Hypothesis, KinshipScorer,
    LrDistribution, LrSampler, Panel, Profile, Relationship,
};
use crate::inference::{LrVector, PriorVector};
use crate::rng::{derive_seed, stream, task_rng, BLOCK};
use crate::stats::{mean, spearman, std_error};
use crate::strategies::{conditional_subset, simulate_lrs};

/// Database kinship indices sorted in descending order.
#[derive(Debug, Clone)]
pub struct SortedScores {
    desc: Vec<f64>,
}

impl SortedScores {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { desc: values }
    }

    pub fn len(&self) -> usize {
        self.desc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.desc.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.desc
    }

    /// Members with kinship index strictly above `x`.
    pub fn count_greater(&self, x: f64) -> usize {
        self.desc.partition_point(|&v| v > x)
    }

    pub fn count_at_least(&self, x: f64) -> usize {
        self.desc.partition_point(|&v| v >= x)
    }

    /// Rank of a candidate with kinship index `x`: one plus the members strictly above it.
    pub fn rank(&self, x: f64) -> usize {
        1 + self.count_greater(x)
    }

    /// The database extended by one relative with kinship index `x`:
    /// returns `(Σ_{v > x} v, total including x)`, summed in descending
    /// order with the relative placed before members it ties with.
    pub fn extension(&self, x: f64) -> (f64, f64) {
        let c = self.count_greater(x);
        let mut acc = 0.0;
        for &v in &self.desc[..c] {
            acc += v;
        }
        let above = acc;
        acc += x;
        for &v in &self.desc[c..] {
            acc += v;
        }
        (above, acc)
    }
}

/// `(above, total)` turned into the statistic `t = above / total`; the
/// relative lies in `D^α` (uniform priors) exactly when `above < α · total`.
pub fn detection_statistic(above: f64, total: f64) -> f64 {
    above / total
}

fn detected(above: f64, total: f64, alpha: f64) -> bool {
    above < alpha * total
}

/// `n` random population members typed on `panel`, with ids `{prefix}0000000`,
/// `{prefix}0000001`, ...; deterministic in `seed` for any worker count.
pub fn sample_database(
    freqs: &AlleleFrequencyTable,
    panel: &Panel,
    n: usize,
    prefix: &str,
    seed: u64,
) -> Result<Vec<Profile>> {
    let chunks = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, stream::DATABASE, b as u64);
            (b * BLOCK..n.min((b + 1) * BLOCK))
                .map(|k| sample_unrelated_with(freqs, panel, format!("{prefix}{k:07}"), &mut rng))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.concat())
}

fn target(freqs: &AlleleFrequencyTable, panel: &Panel, seed: u64, i: usize) -> Result<Profile> {
    let mut rng = task_rng(seed, stream::TARGETS, i as u64);
    sample_unrelated_with(freqs, panel, format!("target{i}"), &mut rng)
}

fn relatives(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    count: usize,
    seed: u64,
    i: usize,
) -> Result<Vec<Profile>> {
    let mut rng = task_rng(seed, stream::RELATIVES, i as u64);
    (0..count)
        .map(|j| sample_relative_with(target, rel, freqs, format!("R{j}"), &mut rng))
        .collect()
}

fn scan(scorer: &KinshipScorer, db: &[Profile]) -> Result<SortedScores> {
    let values = db
        .iter()
        .map(|m| scorer.score(m).map_err(|e| e.for_member(m.id())))
        .collect::<Result<Vec<_>>>()?;
    Ok(SortedScores::new(values))
}

fn prepared(config: &ExperimentConfig, experiment: Experiment, freqs: &AlleleFrequencyTable) -> Result<(ExperimentConfig, Panel)> {
    let mut config = config.clone();
    config.experiment = experiment;
    config.validate()?;
    let panel = config.panel(freqs)?;
    Ok((config, panel))
}

fn grid_curve(name: &'static str, x_label: &'static str, y_label: &'static str, xs: &[f64], prefix: &str) -> CurveSpec {
    CurveSpec {
        name,
        x_label,
        y_label,
        points: xs.iter().map(|&x| (x, col(prefix, x))).collect(),
    }
}

fn rank_curve(name: &'static str, ranks: &[usize], prefix: &str) -> CurveSpec {
    CurveSpec {
        name,
        x_label: "rank",
        y_label: "fraction of relatives within rank",
        points: ranks.iter().map(|&n| (n as f64, col(prefix, n))).collect(),
    }
}

fn log10_rmp(target: &Profile, freqs: &AlleleFrequencyTable) -> Result<f64> {
    Ok(rmp(target, freqs)?.log10())
}

/// Runs the experiment named in the configuration.
pub fn run(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    match config.experiment {
        Experiment::TotalLr => run_total_lr(config, freqs),
        Experiment::Pod => run_pod(config, freqs),
        Experiment::Resampled => run_resampled_efficiency(config, freqs),
        Experiment::RankCdf => run_rank_cdf(config, freqs),
        Experiment::SubsetSizes => run_subset_sizes(config, freqs),
        Experiment::HalfSibling => run_half_sibling(config, freqs),
        Experiment::Efficiency => run_efficiency(config, freqs),
    }
}

/// Total kinship index of random targets with a relative-free database; its
/// expectation is the database size.
pub fn run_total_lr(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::TotalLr, freqs)?;
    let db = sample_database(freqs, &panel, config.database_size, "db", config.seed)?;
    let n = config.database_size as f64;
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|i| {
            let t = target(freqs, &panel, config.seed, i)?;
            let scorer = KinshipScorer::new(&t, config.scoring(), freqs)?;
            let mut sum = 0.0;
            for m in &db {
                sum += scorer.score(m).map_err(|e| e.for_member(m.id()))?;
            }
            Ok(vec![i as f64, log10_rmp(&t, freqs)?, sum, sum / n])
        })
        .collect::<Result<Vec<_>>>()?;
    let columns = ["target", "log10_rmp", "sum_ki", "ratio"].map(String::from).to_vec();
    Ok(ExperimentReport::build(config, columns, rows, Vec::new(), BTreeMap::new()))
}

/// Probability of detection with a fixed database: relatives of each target
/// are added one at a time and `t_{i,j}` is computed on the extended database.
pub fn run_pod(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::Pod, freqs)?;
    let db = sample_database(freqs, &panel, config.database_size, "db", config.seed)?;
    let alphas = config.alpha_grid.clone();
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|i| {
            let t = target(freqs, &panel, config.seed, i)?;
            let scorer = KinshipScorer::new(&t, config.scoring(), freqs)?;
            let scores = scan(&scorer, &db)?;
            let rels = relatives(&t, config.relationship, freqs, config.relatives, config.seed, i)?;
            let mut hits = vec![0usize; alphas.len()];
            let mut ranks = Vec::with_capacity(rels.len());
            for r in &rels {
                let x = scorer.score(r)?;
                let (above, total) = scores.extension(x);
                for (h, &a) in hits.iter_mut().zip(&alphas) {
                    *h += usize::from(detected(above, total, a));
                }
                ranks.push(scores.rank(x) as f64);
            }
            let mut row = vec![i as f64, log10_rmp(&t, freqs)?, mean(&ranks)];
            row.extend(hits.iter().map(|&h| h as f64 / rels.len() as f64));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<String> = ["target", "log10_rmp", "mean_rank"].map(String::from).to_vec();
    columns.extend(alphas.iter().map(|&a| col("beta", a)));
    let curves = vec![grid_curve("pod", "alpha", "beta", &alphas, "beta")];
    Ok(ExperimentReport::build(config, columns, rows, curves, BTreeMap::new()))
}

/// Efficiency when the database is resampled for every relative, paired
/// target-by-target with the fixed-database probability of detection.
pub fn run_resampled_efficiency(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::Resampled, freqs)?;
    let db = sample_database(freqs, &panel, config.database_size, "db", config.seed)?;
    let alphas = config.alpha_grid.clone();
    let k = alphas.len();
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|i| {
            let t = target(freqs, &panel, config.seed, i)?;
            let scorer = KinshipScorer::new(&t, config.scoring(), freqs)?;
            let sampler = LrSampler::new(&t, config.scoring(), config.relationship, freqs)?;
            let scores = scan(&scorer, &db)?;
            let rels = relatives(&t, config.relationship, freqs, config.relatives, config.seed, i)?;
            let mut fixed = vec![0usize; k];
            let mut resampled = vec![0usize; k];
            for (j, r) in rels.iter().enumerate() {
                let x = scorer.score(r)?;
                let (above, total) = scores.extension(x);
                for (h, &a) in fixed.iter_mut().zip(&alphas) {
                    *h += usize::from(detected(above, total, a));
                }
                let index = (i * config.relatives + j) as u64;
                let mut rng = task_rng(config.seed, stream::RESAMPLED_DB, index);
                let mut above = 0.0;
                let mut total = x;
                for _ in 0..config.database_size {
                    let v = sampler.unrelated(&mut rng);
                    if v > x {
                        above += v;
                    }
                    total += v;
                }
                for (h, &a) in resampled.iter_mut().zip(&alphas) {
                    *h += usize::from(detected(above, total, a));
                }
            }
            let m = rels.len() as f64;
            let mut row = vec![i as f64, log10_rmp(&t, freqs)?];
            row.extend(fixed.iter().map(|&h| h as f64 / m));
            row.extend(resampled.iter().map(|&h| h as f64 / m));
            row.extend((0..k).map(|a| (resampled[a] as f64 - fixed[a] as f64) / m));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<String> = ["target", "log10_rmp"].map(String::from).to_vec();
    columns.extend(alphas.iter().map(|&a| col("beta", a)));
    columns.extend(alphas.iter().map(|&a| col("beta_resampled", a)));
    columns.extend(alphas.iter().map(|&a| col("difference", a)));

    let diffs: Vec<Vec<f64>> = (0..k).map(|a| rows.iter().map(|r| r[2 + 2 * k + a]).collect()).collect();
    let means: Vec<f64> = diffs.iter().map(|d| mean(d)).collect();
    let ses: Vec<f64> = diffs.iter().map(|d| std_error(d)).collect();
    let mut derived = BTreeMap::new();
    derived.insert("mean_difference".into(), mean(&means));
    derived.insert("max_abs_mean_difference".into(), means.iter().fold(0.0, |m: f64, d| m.max(d.abs())));
    derived.insert("max_se_difference".into(), ses.iter().fold(0.0, |m: f64, s| m.max(*s)));

    let curves = vec![
        grid_curve("pod", "alpha", "beta", &alphas, "beta"),
        grid_curve("resampled", "alpha", "beta'", &alphas, "beta_resampled"),
        grid_curve("difference", "alpha", "beta' - beta", &alphas, "difference"),
    ];
    Ok(ExperimentReport::build(config, columns, rows, curves, derived))
}

/// Distribution of planted relatives' ranks in a fixed database.
pub fn run_rank_cdf(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::RankCdf, freqs)?;
    let db = sample_database(freqs, &panel, config.database_size, "db", config.seed)?;
    let grid = config.rank_grid.clone();
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|i| {
            let t = target(freqs, &panel, config.seed, i)?;
            let scorer = KinshipScorer::new(&t, config.scoring(), freqs)?;
            let scores = scan(&scorer, &db)?;
            let rels = relatives(&t, config.relationship, freqs, config.relatives, config.seed, i)?;
            let ranks = rels
                .iter()
                .map(|r| Ok(scores.rank(scorer.score(r)?)))
                .collect::<Result<Vec<_>>>()?;
            let rank_values: Vec<f64> = ranks.iter().map(|&r| r as f64).collect();
            let mut row = vec![i as f64, log10_rmp(&t, freqs)?, mean(&rank_values)];
            row.extend(grid.iter().map(|&n| ranks.iter().filter(|&&r| r <= n).count() as f64 / ranks.len() as f64));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<String> = ["target", "log10_rmp", "mean_rank"].map(String::from).to_vec();
    columns.extend(grid.iter().map(|&n| col("cdf", n)));
    let curves = vec![rank_curve("rank_cdf", &grid, "cdf")];
    Ok(ExperimentReport::build(config, columns, rows, curves, BTreeMap::new()))
}

/// Sizes of the target-centered subsets `D_α` in a fixed database, paired
/// with the target's random match probability.
pub fn run_subset_sizes(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::SubsetSizes, freqs)?;
    let db = sample_database(freqs, &panel, config.database_size, "db", config.seed)?;
    let alphas: Vec<f64> = config.alpha_grid.iter().copied().filter(|&a| a > 0.0).collect();
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|i| {
            let t = target(freqs, &panel, config.seed, i)?;
            let scorer = KinshipScorer::new(&t, config.scoring(), freqs)?;
            let scores = scan(&scorer, &db)?;
            let seed = derive_seed(config.seed, stream::THRESHOLD, i as u64);
            let samples = simulate_lrs(&t, config.scoring(), freqs, Hypothesis::Related, config.threshold_samples, seed)?;
            let law = LrDistribution::empirical(samples)?;
            let thresholds = alphas.iter().map(|&a| law.upper_quantile(a)).collect::<Result<Vec<_>>>()?;
            let mut row = vec![i as f64, log10_rmp(&t, freqs)?];
            row.extend(&thresholds);
            row.extend(thresholds.iter().map(|&x| scores.count_at_least(x) as f64));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<String> = ["target", "log10_rmp"].map(String::from).to_vec();
    columns.extend(alphas.iter().map(|&a| col("threshold", a)));
    columns.extend(alphas.iter().map(|&a| col("size", a)));

    let neg_log_rmp: Vec<f64> = rows.iter().map(|r| -r[1]).collect();
    let mut derived = BTreeMap::new();
    for (k, &a) in alphas.iter().enumerate() {
        let sizes: Vec<f64> = rows.iter().map(|r| r[2 + alphas.len() + k]).collect();
        derived.insert(col("spearman", a), spearman(&neg_log_rmp, &sizes));
    }
    let curves = vec![grid_curve("subset_size", "alpha", "mean |D_alpha|", &alphas, "size")];
    Ok(ExperimentReport::build(config, columns, rows, curves, derived))
}

/// Ranks of planted relatives under sibling-index and half-sibling-index
/// orderings of the same fixed database.
pub fn run_half_sibling(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::HalfSibling, freqs)?;
    let db = sample_database(freqs, &panel, config.database_size, "db", config.seed)?;
    let grid = config.rank_grid.clone();
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|i| {
            let t = target(freqs, &panel, config.seed, i)?;
            let si = KinshipScorer::new(&t, Relationship::FULL_SIBLING, freqs)?;
            let hsi = KinshipScorer::new(&t, Relationship::HALF_SIBLING, freqs)?;
            let si_scores = scan(&si, &db)?;
            let hsi_scores = scan(&hsi, &db)?;
            let rels = relatives(&t, config.relationship, freqs, config.relatives, config.seed, i)?;
            let mut si_ranks = Vec::with_capacity(rels.len());
            let mut hsi_ranks = Vec::with_capacity(rels.len());
            for r in &rels {
                si_ranks.push(si_scores.rank(si.score(r)?));
                hsi_ranks.push(hsi_scores.rank(hsi.score(r)?));
            }
            let cdf = |ranks: &[usize], n: usize| ranks.iter().filter(|&&r| r <= n).count() as f64 / ranks.len() as f64;
            let mut row = vec![i as f64, log10_rmp(&t, freqs)?];
            row.extend(grid.iter().map(|&n| cdf(&si_ranks, n)));
            row.extend(grid.iter().map(|&n| cdf(&hsi_ranks, n)));
            row.extend(grid.iter().map(|&n| cdf(&hsi_ranks, n) - cdf(&si_ranks, n)));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<String> = ["target", "log10_rmp"].map(String::from).to_vec();
    columns.extend(grid.iter().map(|&n| col("cdf_si", n)));
    columns.extend(grid.iter().map(|&n| col("cdf_hsi", n)));
    columns.extend(grid.iter().map(|&n| col("difference", n)));
    let curves = vec![
        rank_curve("si_rank_cdf", &grid, "cdf_si"),
        rank_curve("hsi_rank_cdf", &grid, "cdf_hsi"),
    ];
    Ok(ExperimentReport::build(config, columns, rows, curves, BTreeMap::new()))
}

/// Independent trials, each with a fresh target and a database of
/// `database_size` members one of which is the target's relative. Records
/// whether the relative lies in `D^α` (uniform priors) and whether its
/// kinship index reaches a `t_α` estimated from held-out relatives.
pub fn run_efficiency(config: &ExperimentConfig, freqs: &AlleleFrequencyTable) -> Result<ExperimentReport> {
    let (config, panel) = prepared(config, Experiment::Efficiency, freqs)?;
    let alphas: Vec<f64> = config.alpha_grid.iter().copied().filter(|&a| a > 0.0).collect();
    let n = config.database_size;
    let ids: Vec<String> = std::iter::once("R".to_string())
        .chain((1..n).map(|k| format!("m{k:07}")))
        .collect();
    let rows = (0..config.targets)
        .into_par_iter()
        .map(|trial| {
            let t = target(freqs, &panel, config.seed, trial)?;
            let sampler = LrSampler::new(&t, config.scoring(), config.relationship, freqs)?;
            let mut rng = task_rng(config.seed, stream::TRIALS, trial as u64);
            let mut values = Vec::with_capacity(n);
            values.push(sampler.related(&mut rng));
            values.extend((1..n).map(|_| sampler.unrelated(&mut rng)));
            let x = values[0];

            let mut held_out_rng = task_rng(config.seed, stream::HELD_OUT, trial as u64);
            let held_out = (0..config.threshold_samples).map(|_| sampler.related(&mut held_out_rng)).collect();
            let law = LrDistribution::empirical(held_out)?;

            let lr = LrVector::new(ids.clone(), values)?;
            let priors = PriorVector::uniform(lr.ids(), 1.0)?;
            let mut in_conditional = Vec::with_capacity(alphas.len());
            let mut conditional_size = Vec::with_capacity(alphas.len());
            let mut covered = Vec::with_capacity(alphas.len());
            let mut target_size = Vec::with_capacity(alphas.len());
            for &a in &alphas {
                let selection = conditional_subset(&lr, &priors, a)?;
                in_conditional.push(f64::from(u8::from(selection.contains("R"))));
                conditional_size.push(selection.len() as f64);
                let t_alpha = law.upper_quantile(a)?;
                covered.push(f64::from(u8::from(x >= t_alpha)));
                target_size.push(lr.values().iter().filter(|&&v| v >= t_alpha).count() as f64);
            }
            let mut row = vec![trial as f64];
            row.extend(in_conditional);
            row.extend(covered);
            row.extend(conditional_size);
            row.extend(target_size);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec!["trial".to_string()];
    columns.extend(alphas.iter().map(|&a| col("in_conditional", a)));
    columns.extend(alphas.iter().map(|&a| col("covered", a)));
    columns.extend(alphas.iter().map(|&a| col("size_conditional", a)));
    columns.extend(alphas.iter().map(|&a| col("size_target_centered", a)));
    let curves = vec![
        grid_curve("conditional_efficiency", "alpha", "P(R in D^alpha)", &alphas, "in_conditional"),
        grid_curve("target_centered_coverage", "alpha", "P(KI(R) >= t_alpha)", &alphas, "covered"),
    ];
    Ok(ExperimentReport::build(config, columns, rows, curves, BTreeMap::new()))
}
