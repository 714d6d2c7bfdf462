//! Candidate selection strategies.
//!
//! * conditional: the smallest prefix of members ordered by `r_i π_i` that
//!   carries a fraction α of the total weight;
//! * target-centered: members whose kinship index reaches `t_α`, the largest
//!   threshold a true relative reaches with probability at least α;
//! * s-β: the same rule with a threshold taken from the unrelated law;
//! * IBS + LR: a minimum shared-allele count combined with an LR threshold.

mod neyman_pearson;
mod threshold;

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genetics::{ibs_count, AlleleFrequencyTable, KinshipScorer, Profile, Relationship};
use crate::inference::{weights, LrVector, PriorVector};
use crate::stats::compensated_sum;

pub use neyman_pearson::{ibs_lr_rates, matched_lr_test, MatchedLrTest, TestRates};
pub use threshold::{estimate_s_beta, estimate_t_alpha, simulate_lrs, Estimation, ThresholdEstimate, MIN_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Conditional,
    TargetCentered,
    SBeta,
    IbsLr,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Conditional => "conditional",
            Method::TargetCentered => "target-centered",
            Method::SBeta => "s-beta",
            Method::IbsLr => "ibs-lr",
        })
    }
}

/// Per-part parameters of a heterogeneous selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartSelection {
    pub part: String,
    pub level: Option<f64>,
    pub threshold: f64,
    pub selected: usize,
}

/// A selected subset of the database.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSelection {
    pub method: Method,
    /// Selected member ids. Conditional selections list members in weight order.
    pub selected: Vec<String>,
    /// The realised threshold: the smallest selected weight `r_i π_i` for the
    /// conditional method, the LR threshold otherwise. `+∞` when nothing is selected
    /// by the conditional method.
    pub threshold: f64,
    /// α (or β) that produced the selection.
    pub level: Option<f64>,
    /// Minimum IBS count for [`Method::IbsLr`].
    pub min_shared: Option<u32>,
    pub parts: Vec<PartSelection>,
    /// Lower bound on `P(R ∈ selection | R ∈ D)` for heterogeneous selections.
    pub guaranteed_efficiency: Option<f64>,
}

impl SubsetSelection {
    fn new(method: Method, selected: Vec<String>, threshold: f64, level: Option<f64>) -> Self {
        Self {
            method,
            selected,
            threshold,
            level,
            min_shared: None,
            parts: Vec::new(),
            guaranteed_efficiency: None,
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.selected.iter().any(|s| s == id)
    }

    pub fn id_set(&self) -> HashSet<&str> {
        self.selected.iter().map(String::as_str).collect()
    }
}

fn check_level(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

/// Member indices ordered by descending weight, ties by ascending id.
pub fn weight_order(ids: &[String], weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then_with(|| ids[a].cmp(&ids[b])));
    order
}

/// The conditional method: the smallest `k` such that the `k` largest
/// products `r_i π_i` sum to at least `α Σ r_k π_k`.
pub fn conditional_subset(lr: &LrVector, priors: &PriorVector, alpha: f64) -> Result<SubsetSelection> {
    check_level("α", alpha)?;
    let w = weights(lr, priors)?;
    let order = weight_order(lr.ids(), &w);
    let mut prefix = Vec::with_capacity(order.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &i in &order {
        acc += w[i];
        prefix.push(acc);
    }
    let goal = alpha * acc;
    let k = prefix.iter().position(|&p| p >= goal).unwrap_or(order.len());
    let selected: Vec<String> = order[..k].iter().map(|&i| lr.ids()[i].clone()).collect();
    let threshold = if k == 0 { f64::INFINITY } else { w[order[k - 1]] };
    Ok(SubsetSelection::new(Method::Conditional, selected, threshold, Some(alpha)))
}

/// Members with `r_i ≥ t`, in database order.
pub fn target_centered_subset(lr: &LrVector, t: f64) -> Result<SubsetSelection> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("threshold must be non-negative, got {t}")));
    }
    let selected = lr.iter().filter(|(_, r)| *r >= t).map(|(id, _)| id.to_string()).collect();
    Ok(SubsetSelection::new(Method::TargetCentered, selected, t, None))
}

/// Members sharing at least `min_shared` alleles with the target and with
/// kinship index at least `t`.
pub fn ibs_lr_subset(
    target: &Profile,
    db: &[Profile],
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    min_shared: i64,
    t: f64,
) -> Result<SubsetSelection> {
    if min_shared < 0 {
        return Err(Error::invalid(format!("IBS count must be non-negative, got {min_shared}")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("threshold must be non-negative, got {t}")));
    }
    let scorer = KinshipScorer::new(target, rel, freqs)?;
    let mut selected = Vec::new();
    for m in db {
        let ki = scorer.score(m).map_err(|e| e.for_member(m.id()))?;
        if i64::from(ibs_count(target, m)) >= min_shared && ki >= t {
            selected.push(m.id().to_string());
        }
    }
    let mut s = SubsetSelection::new(Method::IbsLr, selected, t, None);
    s.min_shared = Some(min_shared as u32);
    Ok(s)
}

/// `1 + #{members with r strictly greater than candidate_lr}`.
pub fn rank(candidate_lr: f64, lr: &LrVector) -> usize {
    1 + lr.values().iter().filter(|&&r| r > candidate_lr).count()
}

fn check_partition<'a>(ids: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::invalid(format!("member `{id}` appears in two database parts")));
        }
    }
    Ok(())
}

/// One part of a heterogeneous database.
#[derive(Debug, Clone, Copy)]
pub struct DatabasePart<'a> {
    pub name: &'a str,
    pub lr: &'a LrVector,
    pub priors: Option<&'a PriorVector>,
}

/// Conditional method run on each part with its own α; also reports the
/// guaranteed efficiency `Σ_j α_j P(R ∈ D_j | R ∈ D)`.
pub fn heterogeneous_conditional(parts: &[DatabasePart<'_>], alphas: &[f64]) -> Result<SubsetSelection> {
    if parts.len() != alphas.len() || parts.is_empty() {
        return Err(Error::invalid("need exactly one α per database part"));
    }
    check_partition(parts.iter().flat_map(|p| p.lr.ids()))?;
    let mut selected = Vec::new();
    let mut summary = Vec::new();
    let mut masses = Vec::new();
    for (part, &alpha) in parts.iter().zip(alphas) {
        let priors = part
            .priors
            .ok_or_else(|| Error::invalid(format!("part `{}` has no priors", part.name)))?;
        let s = conditional_subset(part.lr, priors, alpha)?;
        masses.push(priors.pi_d());
        summary.push(PartSelection {
            part: part.name.to_string(),
            level: Some(alpha),
            threshold: s.threshold,
            selected: s.len(),
        });
        selected.extend(s.selected);
    }
    let pi_d = compensated_sum(masses.iter().copied());
    if pi_d <= 0.0 {
        return Err(Error::Degenerate("π_D is zero".into()));
    }
    let efficiency = compensated_sum(masses.iter().zip(alphas).map(|(m, a)| a * m / pi_d));
    let mut s = SubsetSelection::new(Method::Conditional, selected, f64::NAN, None);
    s.parts = summary;
    s.guaranteed_efficiency = Some(efficiency);
    Ok(s)
}

/// Target-centered method with one LR threshold per part.
pub fn heterogeneous_target_centered(
    parts: &[DatabasePart<'_>],
    thresholds: &[f64],
) -> Result<SubsetSelection> {
    if parts.len() != thresholds.len() || parts.is_empty() {
        return Err(Error::invalid("need exactly one threshold per database part"));
    }
    check_partition(parts.iter().flat_map(|p| p.lr.ids()))?;
    let mut selected = Vec::new();
    let mut summary = Vec::new();
    for (part, &t) in parts.iter().zip(thresholds) {
        let s = target_centered_subset(part.lr, t)?;
        summary.push(PartSelection {
            part: part.name.to_string(),
            level: None,
            threshold: t,
            selected: s.len(),
        });
        selected.extend(s.selected);
    }
    let mut s = SubsetSelection::new(Method::TargetCentered, selected, f64::NAN, None);
    s.parts = summary;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("m{i}")).collect()
    }

    fn lrv(values: &[f64]) -> LrVector {
        LrVector::new(ids(values.len()), values.to_vec()).unwrap()
    }

    #[test]
    fn conditional_examples() {
        let lr = lrv(&[4.0, 3.0, 2.0, 1.0]);
        let pr = PriorVector::uniform(lr.ids(), 1.0).unwrap();
        assert!(conditional_subset(&lr, &pr, 0.0).unwrap().is_empty());
        assert_eq!(conditional_subset(&lr, &pr, 0.6).unwrap().selected, ["m1", "m2"]);
        assert_eq!(conditional_subset(&lr, &pr, 1.0).unwrap().len(), 4);
        assert!(conditional_subset(&lr, &pr, 1.5).is_err());
    }

    #[test]
    fn conditional_full_level_skips_zero_weights() {
        let lr = lrv(&[0.0, 3.0, 0.0, 1e-9]);
        let pr = PriorVector::uniform(lr.ids(), 0.5).unwrap();
        assert_eq!(conditional_subset(&lr, &pr, 1.0).unwrap().selected, ["m2", "m4"]);
        let zero = lrv(&[0.0, 0.0]);
        let pr = PriorVector::uniform(zero.ids(), 0.5).unwrap();
        assert!(conditional_subset(&zero, &pr, 0.9).unwrap().is_empty());
    }

    #[test]
    fn conditional_ties_break_by_id() {
        let lr = LrVector::new(vec!["b".into(), "a".into(), "c".into()], vec![1.0, 1.0, 1.0]).unwrap();
        let pr = PriorVector::uniform(lr.ids(), 1.0).unwrap();
        assert_eq!(conditional_subset(&lr, &pr, 0.5).unwrap().selected, ["a", "b"]);
    }

    #[test]
    fn conditional_membership_depends_on_other_members() {
        let pr2 = PriorVector::uniform(&ids(2), 1.0).unwrap();
        let a = conditional_subset(&lrv(&[2.0, 1.0]), &pr2, 0.7).unwrap();
        assert!(a.contains("m2"));
        let b = conditional_subset(&lrv(&[20.0, 1.0]), &pr2, 0.7).unwrap();
        assert!(!b.contains("m2"));
        // the target-centered rule for m2 only looks at r_2
        for lr in [lrv(&[2.0, 1.0]), lrv(&[20.0, 1.0])] {
            assert!(target_centered_subset(&lr, 1.0).unwrap().contains("m2"));
        }
    }

    #[test]
    fn target_centered_examples() {
        let lr = lrv(&[0.5, 1.0, 2.0]);
        assert_eq!(target_centered_subset(&lr, 0.0).unwrap().len(), 3);
        assert!(target_centered_subset(&lr, f64::INFINITY).unwrap().is_empty());
        assert_eq!(target_centered_subset(&lr, 1.0).unwrap().selected, ["m2", "m3"]);
        assert!(target_centered_subset(&lr, -1.0).is_err());
    }

    #[test]
    fn rank_examples() {
        let lr = lrv(&[5.0, 3.0, 3.0, 1.0]);
        assert_eq!(rank(10.0, &lr), 1);
        assert_eq!(rank(5.0, &lr), 1);
        assert_eq!(rank(3.0, &lr), 2);
        assert_eq!(rank(0.0, &lr), 5);
    }

    #[test]
    fn heterogeneous_conditional_examples() {
        let a = lrv(&[4.0, 1.0]);
        let b = LrVector::new(vec!["x".into(), "y".into()], vec![2.0, 2.0]).unwrap();
        let pa = PriorVector::uniform(a.ids(), 0.25).unwrap();
        let pb = PriorVector::uniform(b.ids(), 0.25).unwrap();
        let parts = [
            DatabasePart { name: "A", lr: &a, priors: Some(&pa) },
            DatabasePart { name: "B", lr: &b, priors: Some(&pb) },
        ];
        let s = heterogeneous_conditional(&parts, &[1.0, 0.0]).unwrap();
        assert!((s.guaranteed_efficiency.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(s.selected, ["m1", "m2"]);
        let s = heterogeneous_conditional(&parts, &[0.8, 0.8]).unwrap();
        assert!((s.guaranteed_efficiency.unwrap() - 0.8).abs() < 1e-15);

        let single = heterogeneous_conditional(&parts[..1], &[0.7]).unwrap();
        assert_eq!(single.selected, conditional_subset(&a, &pa, 0.7).unwrap().selected);

        let dup = [parts[0], parts[0]];
        assert!(heterogeneous_conditional(&dup, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn heterogeneous_target_centered_examples() {
        let a = lrv(&[4.0, 1.0]);
        let b = LrVector::new(vec!["x".into(), "y".into()], vec![2.0, 0.5]).unwrap();
        let parts = [
            DatabasePart { name: "A", lr: &a, priors: None },
            DatabasePart { name: "B", lr: &b, priors: None },
        ];
        assert_eq!(heterogeneous_target_centered(&parts, &[0.0, 0.0]).unwrap().len(), 4);
        assert!(heterogeneous_target_centered(&parts, &[f64::INFINITY; 2]).unwrap().is_empty());
        assert_eq!(
            heterogeneous_target_centered(&parts, &[2.0, 1.0]).unwrap().selected,
            ["m1", "x"]
        );
        assert_eq!(
            heterogeneous_target_centered(&parts[..1], &[2.0]).unwrap().selected,
            target_centered_subset(&a, 2.0).unwrap().selected
        );
    }

    #[test]
    fn ibs_lr_examples() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let panel = crate::genetics::Panel::full(&t, "sgm");
        let target = crate::genetics::sample_unrelated(&t, &panel, "t", 1).unwrap();
        let db: Vec<Profile> = (0..50)
            .map(|i| crate::genetics::sample_unrelated(&t, &panel, format!("d{i}"), 100 + i).unwrap())
            .chain(std::iter::once(target.clone().with_id("twin")))
            .collect();
        let rel = Relationship::FULL_SIBLING;
        assert_eq!(ibs_lr_subset(&target, &db, rel, &t, 0, 0.0).unwrap().len(), db.len());
        let twin_ki = crate::genetics::kinship_index(&target, &target, rel, &t).unwrap();
        for n in [0, 5, 20] {
            for thr in [0.0, 1.0, twin_ki] {
                assert!(ibs_lr_subset(&target, &db, rel, &t, n, thr).unwrap().contains("twin"));
            }
        }
        assert!(ibs_lr_subset(&target, &db, rel, &t, -1, 0.0).is_err());
    }
}
