use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genetics::{
    enumerate_lr_distribution, sample_relative_with, sample_unrelated_with, AlleleFrequencyTable,
    Hypothesis, KinshipScorer, LrDistribution, Panel, Profile, Relationship,
};
use crate::rng::{stream, task_rng, BLOCK};

/// Minimum Monte Carlo sample size accepted for threshold estimation.
pub const MIN_SAMPLES: usize = 1000;

/// How a threshold is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimation {
    MonteCarlo { samples: usize, seed: u64 },
    Exact { cap: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub value: f64,
    /// α for `t_α`, β for `s_β`.
    pub level: f64,
    /// Monte Carlo sample count; `None` in exact mode.
    pub samples: Option<usize>,
    pub exact: bool,
    /// `P(X ≥ value)` under the estimating law (sample fraction or exact mass).
    pub coverage: f64,
    /// Set when a Monte Carlo run at level 1 returned the sample minimum.
    pub lower_confidence_bound: bool,
    /// `E[LR(G) | LR(G) ≥ s_β]`, reported by [`estimate_s_beta`].
    pub conditional_mean: Option<f64>,
}

/// Kinship indices of `n` simulated candidates against `target`; candidates
/// are relatives under `rel` (`Related`) or random population members.
/// Deterministic in `seed` for any worker count.
pub fn simulate_lrs(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    hypothesis: Hypothesis,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let scorer = KinshipScorer::new(target, rel, freqs)?;
    let panel = Panel::new(target.panel(), target.loci().collect())?;
    let stream = match hypothesis {
        Hypothesis::Related => stream::THRESHOLD,
        Hypothesis::Unrelated => stream::UNRELATED_LR,
    };
    let blocks = n.div_ceil(BLOCK);
    let chunks = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, stream, b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let candidate = match hypothesis {
                    Hypothesis::Related => sample_relative_with(target, rel, freqs, "", &mut rng)?,
                    Hypothesis::Unrelated => sample_unrelated_with(freqs, &panel, "", &mut rng)?,
                };
                out.push(scorer.score(&candidate)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.concat())
}

fn law(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    hypothesis: Hypothesis,
    estimation: Estimation,
) -> Result<LrDistribution> {
    match estimation {
        Estimation::MonteCarlo { samples, seed } => {
            if samples < MIN_SAMPLES {
                return Err(Error::invalid(format!(
                    "Monte Carlo estimation needs at least {MIN_SAMPLES} samples, got {samples}"
                )));
            }
            LrDistribution::empirical(simulate_lrs(target, rel, freqs, hypothesis, samples, seed)?)
        }
        Estimation::Exact { cap } => enumerate_lr_distribution(target, rel, freqs, hypothesis, cap),
    }
}

fn quantile(dist: &LrDistribution, level: f64) -> Result<ThresholdEstimate> {
    let value = dist.upper_quantile(level)?;
    Ok(ThresholdEstimate {
        value,
        level,
        samples: (!dist.is_exact()).then(|| dist.len()),
        exact: dist.is_exact(),
        coverage: dist.tail_probability(value),
        lower_confidence_bound: !dist.is_exact() && level >= 1.0,
        conditional_mean: None,
    })
}

fn check_level(name: &str, level: f64) -> Result<()> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::invalid(format!("{name} must lie in (0, 1], got {level}")));
    }
    Ok(())
}

/// `t_α`: the largest `t` with `P(LR(S) ≥ t) ≥ α`.
pub fn estimate_t_alpha(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    alpha: f64,
    estimation: Estimation,
) -> Result<ThresholdEstimate> {
    check_level("α", alpha)?;
    quantile(&law(target, rel, freqs, Hypothesis::Related, estimation)?, alpha)
}

/// `s_β`: the largest `s` with `P(LR(G) ≥ s) ≥ β`, together with
/// `E[LR(G) | LR(G) ≥ s]`.
pub fn estimate_s_beta(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    beta: f64,
    estimation: Estimation,
) -> Result<ThresholdEstimate> {
    check_level("β", beta)?;
    let dist = law(target, rel, freqs, Hypothesis::Unrelated, estimation)?;
    let mut est = quantile(&dist, beta)?;
    est.conditional_mean = Some(dist.conditional_mean_at_least(est.value));
    Ok(est)
}
