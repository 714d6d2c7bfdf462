use crate::error::{Error, Result};
use crate::genetics::kinship::{locus_kinship, related_probability};
use crate::genetics::{AlleleFrequencyTable, Genotype, Profile, Relationship};
use crate::stats::compensated_sum;

/// Default bound on the number of multi-locus genotype combinations enumerated.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Relative tolerance under which two enumerated LR values are the same support point.
const MERGE_TOLERANCE: f64 = 1e-12;

/// Slack applied when comparing cumulative exact probabilities with a level.
pub const COVERAGE_EPS: f64 = 1e-12;

/// Which law a candidate profile follows: `Related` is the relative's law (S),
/// `Unrelated` the population law (G).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Related,
    Unrelated,
}

/// The law of a kinship index, exact or as a Monte Carlo sample.
#[derive(Debug, Clone, PartialEq)]
pub enum LrDistribution {
    /// Distinct support points in ascending order with their probabilities.
    Exact(Vec<(f64, f64)>),
    /// Sampled values in descending order.
    Empirical(Vec<f64>),
}

impl LrDistribution {
    pub fn exact(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|&(x, p)| !(x >= 0.0 && x.is_finite() && p >= 0.0)) {
            return Err(Error::invalid("exact law needs finite non-negative values and probabilities"));
        }
        let total = compensated_sum(points.iter().map(|p| p.1));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("exact law sums to {total}")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::Exact(points))
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empirical law needs at least one sample"));
        }
        if samples.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::invalid("likelihood ratios must be finite and non-negative"));
        }
        samples.sort_by(|a, b| b.total_cmp(a));
        Ok(Self::Empirical(samples))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }

    /// Support size (exact) or sample count (empirical).
    pub fn len(&self) -> usize {
        match self {
            Self::Exact(p) => p.len(),
            Self::Empirical(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `P(X ≥ t)`.
    pub fn tail_probability(&self, t: f64) -> f64 {
        match self {
            Self::Exact(p) => compensated_sum(p.iter().filter(|(x, _)| lr_at_least(*x, t)).map(|(_, q)| *q)),
            Self::Empirical(s) => s.partition_point(|x| lr_at_least(*x, t)) as f64 / s.len() as f64,
        }
    }

    /// Largest `t` with `P(X ≥ t) ≥ level`. For samples this is the order
    /// statistic `L(⌈level·n⌉)` of the descending sample.
    pub fn upper_quantile(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::invalid(format!("level must lie in (0, 1], got {level}")));
        }
        Ok(match self {
            Self::Exact(p) => {
                let mut cum = 0.0;
                for &(x, q) in p.iter().rev() {
                    cum += q;
                    if cum >= level - COVERAGE_EPS {
                        return Ok(x);
                    }
                }
                p[0].0
            }
            Self::Empirical(s) => s[order_statistic_index(level, s.len())],
        })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exact(p) => compensated_sum(p.iter().map(|(x, q)| x * q)),
            Self::Empirical(s) => crate::stats::mean(s),
        }
    }

    /// `E[X | X ≥ t]`, or NaN when `P(X ≥ t) = 0`.
    pub fn conditional_mean_at_least(&self, t: f64) -> f64 {
        match self {
            Self::Exact(p) => {
                let mass = self.tail_probability(t);
                let m = compensated_sum(p.iter().filter(|(x, _)| lr_at_least(*x, t)).map(|(x, q)| x * q));
                m / mass
            }
            Self::Empirical(s) => {
                let k = s.partition_point(|x| lr_at_least(*x, t));
                if k == 0 {
                    f64::NAN
                } else {
                    crate::stats::mean(&s[..k])
                }
            }
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Self::Exact(p) => p[0].0,
            Self::Empirical(s) => *s.last().unwrap(),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Self::Exact(p) => p.last().unwrap().0,
            Self::Empirical(s) => s[0],
        }
    }

    pub fn probability_of(&self, x: f64) -> f64 {
        match self {
            Self::Exact(p) => p
                .iter()
                .filter(|(v, _)| same_value(*v, x))
                .map(|(_, q)| q)
                .sum(),
            Self::Empirical(s) => {
                s.iter().filter(|v| same_value(**v, x)).count() as f64 / s.len() as f64
            }
        }
    }
}

/// Zero-based index of `L(⌈level·n⌉)` in a descending sample of size `n`.
pub(crate) fn order_statistic_index(level: f64, n: usize) -> usize {
    let k = (level * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n) - 1
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= MERGE_TOLERANCE * a.abs().max(b.abs())
}

/// `x ≥ t`, treating values within the merge tolerance as equal: products of
/// the same per-locus factors in a different order may differ in the last bit.
pub fn lr_at_least(x: f64, t: f64) -> bool {
    x >= t || same_value(x, t)
}

/// `x > t` with the same tie rule as [`lr_at_least`].
pub fn lr_greater(x: f64, t: f64) -> bool {
    !lr_at_least(t, x)
}

/// One candidate genotype combination with its kinship index and probabilities.
#[derive(Debug, Clone)]
pub struct CandidateOutcome {
    /// Genotypes aligned with the target's loci.
    pub genotypes: Vec<Genotype>,
    pub lr: f64,
    /// Probability under the relative's law, from the IBD mixture.
    pub p_related: f64,
    /// Hardy-Weinberg probability.
    pub p_unrelated: f64,
    /// Identity-by-state allele count with the target.
    pub ibs: u32,
}

fn locus_genotypes(n: usize) -> Vec<Genotype> {
    let n = n as u16;
    (0..n).flat_map(|a| (a..n).map(move |b| Genotype::new(a, b))).collect()
}

/// Number of candidate genotype combinations over the target's loci.
pub fn combination_count(target: &Profile, freqs: &AlleleFrequencyTable) -> f64 {
    target
        .loci()
        .map(|l| {
            let n = freqs.locus(l).len() as f64;
            n * (n + 1.0) / 2.0
        })
        .product()
}

/// Every candidate genotype combination on the target's loci.
pub fn enumerate_candidates(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    cap: u64,
) -> Result<Vec<CandidateOutcome>> {
    target.validate(freqs)?;
    let combinations = combination_count(target, freqs);
    if combinations > cap as f64 {
        return Err(Error::EnumerationCap { combinations, cap });
    }
    let mut out = vec![CandidateOutcome {
        genotypes: Vec::new(),
        lr: 1.0,
        p_related: 1.0,
        p_unrelated: 1.0,
        ibs: 0,
    }];
    for lg in target.genotypes() {
        let f = freqs.frequencies(lg.locus);
        let per_locus: Vec<(Genotype, f64, f64, f64, u32)> = locus_genotypes(f.len())
            .into_iter()
            .map(|c| {
                (
                    c,
                    locus_kinship(lg.genotype, c, rel, f),
                    related_probability(lg.genotype, c, rel, f),
                    c.frequency(f),
                    lg.genotype.shared_alleles(c),
                )
            })
            .collect();
        out = out
            .into_iter()
            .flat_map(|o| {
                per_locus.iter().map(move |&(c, lr, ps, pg, ibs)| {
                    let mut genotypes = o.genotypes.clone();
                    genotypes.push(c);
                    CandidateOutcome {
                        genotypes,
                        lr: o.lr * lr,
                        p_related: o.p_related * ps,
                        p_unrelated: o.p_unrelated * pg,
                        ibs: o.ibs + ibs,
                    }
                })
            })
            .collect();
    }
    Ok(out)
}

/// A support point of the joint law of `LR(S)` and `LR(G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawPoint {
    pub lr: f64,
    pub p_related: f64,
    pub p_unrelated: f64,
}

/// Exact laws of the kinship index under both hypotheses, on a shared support.
#[derive(Debug, Clone)]
pub struct JointLrLaw {
    points: Vec<LawPoint>,
}

impl JointLrLaw {
    pub fn enumerate(
        target: &Profile,
        rel: Relationship,
        freqs: &AlleleFrequencyTable,
        cap: u64,
    ) -> Result<Self> {
        Ok(Self::from_outcomes(&enumerate_candidates(target, rel, freqs, cap)?))
    }

    pub fn from_outcomes(outcomes: &[CandidateOutcome]) -> Self {
        let mut sorted: Vec<&CandidateOutcome> = outcomes.iter().collect();
        sorted.sort_by(|a, b| a.lr.total_cmp(&b.lr));
        let mut points: Vec<LawPoint> = Vec::new();
        let mut related: Vec<f64> = Vec::new();
        let mut unrelated: Vec<f64> = Vec::new();
        for o in sorted {
            match points.last() {
                Some(p) if same_value(p.lr, o.lr) => {}
                _ => {
                    flush(&mut points, &mut related, &mut unrelated);
                    points.push(LawPoint {
                        lr: o.lr,
                        p_related: 0.0,
                        p_unrelated: 0.0,
                    });
                }
            }
            related.push(o.p_related);
            unrelated.push(o.p_unrelated);
        }
        flush(&mut points, &mut related, &mut unrelated);
        Self { points }
    }

    /// Support points in ascending LR order.
    pub fn points(&self) -> &[LawPoint] {
        &self.points
    }

    pub fn under(&self, hypothesis: Hypothesis) -> LrDistribution {
        LrDistribution::Exact(
            self.points
                .iter()
                .map(|p| {
                    let q = match hypothesis {
                        Hypothesis::Related => p.p_related,
                        Hypothesis::Unrelated => p.p_unrelated,
                    };
                    (p.lr, q)
                })
                .filter(|(_, q)| *q > 0.0)
                .collect(),
        )
    }
}

fn flush(points: &mut [LawPoint], related: &mut Vec<f64>, unrelated: &mut Vec<f64>) {
    if let Some(p) = points.last_mut() {
        p.p_related = compensated_sum(related.drain(..));
        p.p_unrelated = compensated_sum(unrelated.drain(..));
    }
}

/// Exact law of `KI(target, X)` with `X` drawn from the relative's or the
/// population law.
pub fn enumerate_lr_distribution(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    under: Hypothesis,
    cap: u64,
) -> Result<LrDistribution> {
    Ok(JointLrLaw::enumerate(target, rel, freqs, cap)?.under(under))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetics::rmp;

    fn table() -> AlleleFrequencyTable {
        AlleleFrequencyTable::from_entries(
            vec![
                ("L1", "a", 0.3),
                ("L1", "b", 0.7),
                ("L2", "a", 0.2),
                ("L2", "b", 0.3),
                ("L2", "c", 0.5),
            ],
            false,
        )
        .unwrap()
    }

    fn target(t: &AlleleFrequencyTable) -> Profile {
        Profile::from_labels("t", "p", &[("L1", "a", "b"), ("L2", "c", "a")], t).unwrap()
    }

    #[test]
    fn unrelated_is_point_mass_at_one() {
        let t = table();
        for h in [Hypothesis::Related, Hypothesis::Unrelated] {
            let d = enumerate_lr_distribution(&target(&t), Relationship::UNRELATED, &t, h, 1000)
                .unwrap();
            let LrDistribution::Exact(p) = d else { panic!() };
            assert_eq!(p.len(), 1);
            assert_eq!(p[0].0, 1.0);
            assert!((p[0].1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_under_population_law() {
        let t = table();
        let tg = target(&t);
        let r = rmp(&tg, &t).unwrap();
        let d = enumerate_lr_distribution(&tg, Relationship::IDENTITY, &t, Hypothesis::Unrelated, 1000)
            .unwrap();
        let LrDistribution::Exact(p) = d else { panic!() };
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].0, 0.0);
        assert!((p[0].1 - (1.0 - r)).abs() < 1e-12);
        assert!((p[1].0 - 1.0 / r).abs() < 1e-12 / r);
        assert!((p[1].1 - r).abs() < 1e-15);
    }

    #[test]
    fn rmp_equals_mass_of_target_genotype() {
        let t = table();
        let tg = target(&t);
        let outcomes = enumerate_candidates(&tg, Relationship::FULL_SIBLING, &t, 1000).unwrap();
        let own: Vec<Genotype> = tg.genotypes().iter().map(|g| g.genotype).collect();
        let hit = outcomes.iter().find(|o| o.genotypes == own).unwrap();
        assert_eq!(hit.p_unrelated, rmp(&tg, &t).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let tg = crate::genetics::sample_unrelated(&t, &crate::genetics::Panel::full(&t, "s"), "t", 1)
            .unwrap();
        assert!(matches!(
            enumerate_candidates(&tg, Relationship::FULL_SIBLING, &t, DEFAULT_ENUMERATION_CAP),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn sibling_single_locus_reciprocity() {
        let t = AlleleFrequencyTable::from_entries(vec![("L", "a", 0.3), ("L", "b", 0.7)], false)
            .unwrap();
        for labels in [("a", "a"), ("a", "b"), ("b", "b")] {
            let tg = Profile::from_labels("t", "p", &[("L", labels.0, labels.1)], &t).unwrap();
            let law = JointLrLaw::enumerate(&tg, Relationship::FULL_SIBLING, &t, 100).unwrap();
            for p in law.points() {
                assert!((p.p_related - p.lr * p.p_unrelated).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_quantiles_and_tails() {
        let d = LrDistribution::exact(vec![(0.5, 0.25), (2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert_eq!(d.upper_quantile(0.25).unwrap(), 4.0);
        assert_eq!(d.upper_quantile(0.5).unwrap(), 2.0);
        assert_eq!(d.upper_quantile(0.75).unwrap(), 2.0);
        assert_eq!(d.upper_quantile(1.0).unwrap(), 0.5);
        assert_eq!(d.tail_probability(2.0), 0.75);
        assert!((d.conditional_mean_at_least(2.0) - (1.0 + 1.0) / 0.75).abs() < 1e-15);
        assert!(d.upper_quantile(0.0).is_err());
    }

    #[test]
    fn empirical_order_statistic() {
        let d = LrDistribution::empirical(vec![1.0, 5.0, 3.0, 2.0, 4.0]).unwrap();
        // descending 5,4,3,2,1; ⌈0.5·5⌉ = 3 -> 3
        assert_eq!(d.upper_quantile(0.5).unwrap(), 3.0);
        assert_eq!(d.upper_quantile(0.2).unwrap(), 5.0);
        assert_eq!(d.upper_quantile(1.0).unwrap(), 1.0);
        assert_eq!(d.tail_probability(3.0), 0.6);
        assert_eq!(d.min(), 1.0);
    }
}
