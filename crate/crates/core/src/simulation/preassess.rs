//! Feasibility estimates for a search from the target profile and database
//! size alone.
//!
//! Only relatives' kinship indices are sampled. Probabilities under the
//! population law are recovered by importance weighting, using
//! `P(LR(G) = x) = P(LR(S) = x) / x`: `P(LR(G) ≥ t) = E[1{LR(S) ≥ t} / LR(S)]`.

use serde::Serialize;

use crate::error::Result;
use crate::genetics::{lr_at_least, lr_greater, rmp, AlleleFrequencyTable, Hypothesis, JointLrLaw, LrDistribution, Profile, Relationship};
use crate::stats::{compensated_sum, mean, std_error};
use crate::strategies::{simulate_lrs, Estimation, MIN_SAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreassessRow {
    pub alpha: f64,
    pub threshold: f64,
    /// `P(LR(G) ≥ t_α)`.
    pub unrelated_exceedance: f64,
    pub unrelated_exceedance_se: f64,
    /// `1 + (N − 1) P(LR(G) ≥ t_α)`: the relative plus the unrelated members expected above `t_α`.
    pub expected_subset_size: f64,
    pub expected_subset_size_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preassessment {
    pub target: String,
    pub relationship: Relationship,
    pub database_size: usize,
    pub exact: bool,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub log10_rmp: f64,
    pub rows: Vec<PreassessRow>,
    /// Expected rank of a relative among `N − 1` unrelated members.
    pub expected_rank: f64,
    pub expected_rank_se: f64,
    /// `(level, rank)`: rank quantiles of `1 + (N − 1) P(LR(G) > LR(S))`.
    pub rank_quantiles: Vec<(f64, f64)>,
}

const RANK_LEVELS: [f64; 4] = [0.1, 0.5, 0.9, 0.99];

/// Expected `t_α`, subset sizes and ranks for a relative of `target` in a
/// database of `database_size` members.
pub fn preassess(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    database_size: usize,
    alphas: &[f64],
    estimation: Estimation,
) -> Result<Preassessment> {
    if database_size == 0 {
        return Err(crate::error::Error::EmptyDatabase);
    }
    for &a in alphas {
        if !(a > 0.0 && a <= 1.0) {
            return Err(crate::error::Error::invalid(format!("α must lie in (0, 1], got {a}")));
        }
    }
    let others = (database_size - 1) as f64;
    let mut out = Preassessment {
        target: target.id().to_string(),
        relationship: rel,
        database_size,
        exact: false,
        samples: None,
        seed: None,
        log10_rmp: rmp(target, freqs)?.log10(),
        rows: Vec::new(),
        expected_rank: 0.0,
        expected_rank_se: 0.0,
        rank_quantiles: Vec::new(),
    };
    match estimation {
        Estimation::Exact { cap } => {
            let law = JointLrLaw::enumerate(target, rel, freqs, cap)?;
            let s = law.under(Hypothesis::Related);
            let g = law.under(Hypothesis::Unrelated);
            out.exact = true;
            for &a in alphas {
                let t = s.upper_quantile(a)?;
                let p = g.tail_probability(t);
                out.rows.push(PreassessRow {
                    alpha: a,
                    threshold: t,
                    unrelated_exceedance: p,
                    unrelated_exceedance_se: 0.0,
                    expected_subset_size: 1.0 + others * p,
                    expected_subset_size_se: 0.0,
                });
            }
            // P(LR(G) > x) for every support point x of LR(S)
            let LrDistribution::Exact(points) = &s else { unreachable!() };
            let mut rank_law: Vec<(f64, f64)> = points
                .iter()
                .map(|&(x, q)| (1.0 + others * strictly_above(&g, x), q))
                .collect();
            out.expected_rank = compensated_sum(rank_law.iter().map(|(r, q)| r * q));
            rank_law.sort_by(|a, b| a.0.total_cmp(&b.0));
            out.rank_quantiles = RANK_LEVELS
                .iter()
                .map(|&level| {
                    let mut cum = 0.0;
                    let r = rank_law
                        .iter()
                        .find(|(_, q)| {
                            cum += q;
                            cum >= level - crate::genetics::COVERAGE_EPS
                        })
                        .map_or(rank_law.last().map_or(1.0, |p| p.0), |p| p.0);
                    (level, r)
                })
                .collect();
        }
        Estimation::MonteCarlo { samples, seed } => {
            if samples < MIN_SAMPLES {
                return Err(crate::error::Error::invalid(format!(
                    "Monte Carlo estimation needs at least {MIN_SAMPLES} samples, got {samples}"
                )));
            }
            out.samples = Some(samples);
            out.seed = Some(seed);
            let law = LrDistribution::empirical(simulate_lrs(target, rel, freqs, Hypothesis::Related, samples, seed)?)?;
            let LrDistribution::Empirical(desc) = &law else { unreachable!() };
            let inverse = |x: f64| if x > 0.0 { 1.0 / x } else { 0.0 };
            for &a in alphas {
                let t = law.upper_quantile(a)?;
                let w: Vec<f64> = desc.iter().map(|&x| if lr_at_least(x, t) { inverse(x) } else { 0.0 }).collect();
                let p = mean(&w);
                let se = std_error(&w);
                out.rows.push(PreassessRow {
                    alpha: a,
                    threshold: t,
                    unrelated_exceedance: p,
                    unrelated_exceedance_se: se,
                    expected_subset_size: 1.0 + others * p,
                    expected_subset_size_se: others * se,
                });
            }
            // running sums of 1/y over the descending sample give P(LR(G) > x)
            let n = desc.len() as f64;
            let mut prefix = Vec::with_capacity(desc.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &y in desc {
                acc += inverse(y);
                prefix.push(acc);
            }
            let mut ranks: Vec<f64> = desc
                .iter()
                .map(|&x| {
                    let c = desc.partition_point(|&y| lr_greater(y, x));
                    1.0 + others * prefix[c] / n
                })
                .collect();
            out.expected_rank = mean(&ranks);
            out.expected_rank_se = std_error(&ranks);
            ranks.sort_by(f64::total_cmp);
            out.rank_quantiles = RANK_LEVELS
                .iter()
                .map(|&level| {
                    let k = ((level * n).ceil() as usize).clamp(1, ranks.len()) - 1;
                    (level, ranks[k])
                })
                .collect();
        }
    }
    Ok(out)
}

fn strictly_above(g: &LrDistribution, x: f64) -> f64 {
    match g {
        LrDistribution::Exact(points) => compensated_sum(points.iter().filter(|(v, _)| lr_greater(*v, x)).map(|(_, q)| *q)),
        LrDistribution::Empirical(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetics::{sample_unrelated, Panel, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn unrelated_expects_whole_database() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let target = sample_unrelated(&t, &Panel::full(&t, "sgm"), "t", 1).unwrap();
        let p = preassess(&target, Relationship::UNRELATED, &t, 5000, &[0.5, 0.9], Estimation::MonteCarlo { samples: 2000, seed: 3 })
            .unwrap();
        for row in &p.rows {
            assert_eq!(row.threshold, 1.0);
            assert_eq!(row.expected_subset_size, 5000.0);
        }
        assert_eq!(p.seed, Some(3));
    }

    #[test]
    fn identity_expects_rmp_mass() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let target = sample_unrelated(&t, &Panel::full(&t, "sgm"), "t", 2).unwrap();
        let r = rmp(&target, &t).unwrap();
        let p = preassess(&target, Relationship::IDENTITY, &t, 1_000_000, &[0.9], Estimation::MonteCarlo { samples: 1000, seed: 1 })
            .unwrap();
        let expected = 1.0 + 999_999.0 * r;
        assert!((p.rows[0].expected_subset_size - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let t = AlleleFrequencyTable::from_entries(
            vec![("L", "a", 0.2), ("L", "b", 0.3), ("L", "c", 0.5), ("M", "x", 0.4), ("M", "y", 0.6)],
            false,
        )
        .unwrap();
        let target = Profile::from_labels("t", "p", &[("L", "a", "b"), ("M", "x", "x")], &t).unwrap();
        let rel = Relationship::FULL_SIBLING;
        let exact = preassess(&target, rel, &t, 1000, &[0.5, 0.8], Estimation::Exact { cap: DEFAULT_ENUMERATION_CAP }).unwrap();
        let mc = preassess(&target, rel, &t, 1000, &[0.5, 0.8], Estimation::MonteCarlo { samples: 50_000, seed: 5 }).unwrap();
        for (e, m) in exact.rows.iter().zip(&mc.rows) {
            assert!((e.threshold - m.threshold).abs() <= 1e-12 * e.threshold);
            assert!((e.unrelated_exceedance - m.unrelated_exceedance).abs() <= 4.0 * m.unrelated_exceedance_se, "{e:?} {m:?}");
        }
        assert!((exact.expected_rank - mc.expected_rank).abs() <= 4.0 * mc.expected_rank_se);
    }
}
