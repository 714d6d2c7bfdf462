//! Comparing `(n, t)` selection rules (IBS count plus LR threshold) with a
//! likelihood-ratio test of equal power on an enumerable instance.
//!
//! On a discrete law a deterministic LR threshold usually cannot hit a
//! prescribed detection rate exactly, so the matched test is the randomised
//! LR test: accept when `LR > t`, and with probability `γ` when `LR = t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genetics::{CandidateOutcome, JointLrLaw};
use crate::stats::compensated_sum;

/// Operating characteristics of a selection rule for one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestRates {
    /// Probability a true relative is selected (`1 −` false-negative rate).
    pub detection: f64,
    /// Probability a random population member is selected.
    pub false_positive: f64,
}

/// Exact rates of the `(n, t)` rule: IBS count `≥ n` and kinship index `≥ t`.
pub fn ibs_lr_rates(outcomes: &[CandidateOutcome], min_shared: u32, t: f64) -> TestRates {
    let accepted = || outcomes.iter().filter(|o| o.ibs >= min_shared && o.lr >= t);
    TestRates {
        detection: compensated_sum(accepted().map(|o| o.p_related)),
        false_positive: compensated_sum(accepted().map(|o| o.p_unrelated)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedLrTest {
    pub threshold: f64,
    /// Acceptance probability at `LR = threshold`.
    pub randomization: f64,
    pub rates: TestRates,
}

/// The likelihood-ratio test whose detection rate equals `detection` exactly.
pub fn matched_lr_test(law: &JointLrLaw, detection: f64) -> Result<MatchedLrTest> {
    if !(0.0..=1.0).contains(&detection) {
        return Err(Error::invalid(format!("detection rate must lie in [0, 1], got {detection}")));
    }
    let mut above_s = 0.0;
    let mut above_g = 0.0;
    let mut last = None;
    for p in law.points().iter().rev().filter(|p| p.p_related > 0.0) {
        if above_s + p.p_related >= detection {
            let gamma = ((detection - above_s) / p.p_related).clamp(0.0, 1.0);
            return Ok(MatchedLrTest {
                threshold: p.lr,
                randomization: gamma,
                rates: TestRates {
                    detection,
                    false_positive: above_g + gamma * p.p_unrelated,
                },
            });
        }
        above_s += p.p_related;
        above_g += p.p_unrelated;
        last = Some(p);
    }
    // detection within rounding of 1: accept every point with positive mass
    let p = last.ok_or_else(|| Error::Degenerate("relative's law has no support".into()))?;
    Ok(MatchedLrTest {
        threshold: p.lr,
        randomization: 1.0,
        rates: TestRates {
            detection,
            false_positive: above_g,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetics::{enumerate_candidates, AlleleFrequencyTable, Profile, Relationship, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn matched_test_dominates_ibs_rules() {
        let t = AlleleFrequencyTable::from_entries(
            vec![("L", "a", 0.1), ("L", "b", 0.3), ("L", "c", 0.6), ("M", "x", 0.25), ("M", "y", 0.75)],
            false,
        )
        .unwrap();
        let target = Profile::from_labels("t", "p", &[("L", "a", "b"), ("M", "x", "y")], &t).unwrap();
        for rel in [Relationship::FULL_SIBLING, Relationship::HALF_SIBLING, Relationship::PARENT_CHILD] {
            let outcomes = enumerate_candidates(&target, rel, &t, DEFAULT_ENUMERATION_CAP).unwrap();
            let law = JointLrLaw::from_outcomes(&outcomes);
            for n in 0..=4 {
                for thr in [0.0, 0.5, 1.0, 3.0] {
                    let rule = ibs_lr_rates(&outcomes, n, thr);
                    let lr = matched_lr_test(&law, rule.detection).unwrap();
                    assert!(lr.rates.false_positive <= rule.false_positive + 1e-12);
                }
            }
        }
    }

    #[test]
    fn extreme_detection_rates() {
        let t = AlleleFrequencyTable::from_entries(vec![("L", "a", 0.3), ("L", "b", 0.7)], false).unwrap();
        let target = Profile::from_labels("t", "p", &[("L", "a", "b")], &t).unwrap();
        let law = JointLrLaw::enumerate(&target, Relationship::FULL_SIBLING, &t, 100).unwrap();
        let none = matched_lr_test(&law, 0.0).unwrap();
        assert_eq!(none.rates.false_positive, 0.0);
        let all = matched_lr_test(&law, 1.0).unwrap();
        assert!((all.rates.false_positive - 1.0).abs() < 1e-12);
        assert!(matched_lr_test(&law, 1.5).is_err());
    }
}
