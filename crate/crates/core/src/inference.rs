//! Posterior probabilities and likelihood ratios from a database scan.
//!
//! Given the kinship indices `r_i` of every member and prior probabilities
//! `π_i` that member `i` is the sought relative (with `π_0 = 1 - Σπ_i` for
//! "not in the database"), the posterior of member `i` is
//! `r_i π_i / (π_0 + Σ_k r_k π_k)`. Everything here depends on `(r, π)` only.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genetics::{AlleleFrequencyTable, KinshipScorer, Profile, Relationship};
use crate::stats::compensated_sum;

/// Kinship indices of database members with the target, in database order.
#[derive(Debug, Clone, PartialEq)]
pub struct LrVector {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl LrVector {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(Error::invalid("ids and likelihood ratios differ in length"));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for (id, r) in ids.iter().zip(&values) {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
            if !(r.is_finite() && *r >= 0.0) {
                return Err(Error::invalid(format!("likelihood ratio of `{id}` is {r}")));
            }
        }
        Ok(Self { ids, values })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let (ids, values) = pairs.into_iter().map(|(i, r)| (i.into(), r)).unzip();
        Self::new(ids, values)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ids.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// `Σ r_i`, the total kinship index with the database.
    pub fn total(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }
}

/// Kinship index of every database member with `target`.
///
/// The scan runs in parallel; the output keeps database order.
pub fn compute_lr_vector(
    target: &Profile,
    db: &[Profile],
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
) -> Result<LrVector> {
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let scorer = KinshipScorer::new(target, rel, freqs)?;
    let values = db
        .par_iter()
        .map(|m| scorer.score(m).map_err(|e| e.for_member(m.id())))
        .collect::<Result<Vec<f64>>>()?;
    let ids = db.iter().map(|m| m.id().to_string()).collect();
    LrVector::new(ids, values)
}

/// Prior probabilities `π_i`; `π_0` is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorVector {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl PriorVector {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(Error::invalid("ids and priors differ in length"));
        }
        if let Some((id, p)) = ids.iter().zip(&values).find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::invalid(format!("prior of `{id}` is {p}")));
        }
        let pi_d = compensated_sum(values.iter().copied());
        if pi_d > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("priors sum to {pi_d} > 1")));
        }
        Ok(Self { ids, values })
    }

    /// `π_i = π_D / N` for every member.
    pub fn uniform(ids: &[String], pi_d: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_d) {
            return Err(Error::invalid(format!("π_D must lie in [0, 1], got {pi_d}")));
        }
        let share = pi_d / ids.len().max(1) as f64;
        Self::new(ids.to_vec(), vec![share; ids.len()])
    }

    /// Explicit priors for some members; the rest share `pi_d - Σ explicit` uniformly.
    pub fn with_defaults(ids: &[String], explicit: &HashMap<String, f64>, pi_d: f64) -> Result<Self> {
        let known: HashSet<&str> = ids.iter().map(String::as_str).collect();
        if let Some(extra) = explicit.keys().find(|k| !known.contains(k.as_str())) {
            return Err(Error::IdMismatch(extra.clone()));
        }
        let given = compensated_sum(explicit.values().copied());
        let omitted = ids.iter().filter(|i| !explicit.contains_key(*i)).count();
        let share = if omitted == 0 {
            0.0
        } else {
            if given > pi_d + 1e-12 {
                return Err(Error::invalid(format!(
                    "explicit priors sum to {given}, more than π_D = {pi_d}"
                )));
            }
            (pi_d - given).max(0.0) / omitted as f64
        };
        let values = ids
            .iter()
            .map(|i| explicit.get(i).copied().unwrap_or(share))
            .collect();
        Self::new(ids.to_vec(), values)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `π_D = Σ π_i`.
    pub fn pi_d(&self) -> f64 {
        compensated_sum(self.values.iter().copied()).min(1.0)
    }

    /// `π_0 = 1 - π_D`.
    pub fn pi_0(&self) -> f64 {
        (1.0 - self.pi_d()).max(0.0)
    }
}

/// Posterior probabilities of each member being the relative, and of absence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorResult {
    pub ids: Vec<String>,
    pub members: Vec<f64>,
    pub not_in_database: f64,
}

impl PosteriorResult {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|i| i == id).map(|k| self.members[k])
    }
}

fn check_ids(lr: &LrVector, priors: &PriorVector) -> Result<()> {
    if lr.len() != priors.ids.len() {
        return Err(Error::IdMismatch(format!(
            "{} likelihood ratios vs {} priors",
            lr.len(),
            priors.ids.len()
        )));
    }
    match lr.ids.iter().zip(&priors.ids).find(|(a, b)| a != b) {
        Some((a, _)) => Err(Error::IdMismatch(a.clone())),
        None => Ok(()),
    }
}

/// The products `r_i π_i`.
pub fn weights(lr: &LrVector, priors: &PriorVector) -> Result<Vec<f64>> {
    check_ids(lr, priors)?;
    Ok(lr.values.iter().zip(&priors.values).map(|(r, p)| r * p).collect())
}

/// `P(R = i | r)` for every member and `P(R ∉ D | r)`.
pub fn posterior(lr: &LrVector, priors: &PriorVector) -> Result<PosteriorResult> {
    let w = weights(lr, priors)?;
    let pi_0 = priors.pi_0();
    let denom = compensated_sum(w.iter().copied().chain(std::iter::once(pi_0)));
    if denom <= 0.0 {
        return Err(Error::Degenerate(
            "every r_i π_i is zero and the relative is certainly in the database".into(),
        ));
    }
    Ok(PosteriorResult {
        ids: lr.ids.clone(),
        members: w.iter().map(|x| x / denom).collect(),
        not_in_database: pi_0 / denom,
    })
}

/// `P(R = i | r, R ∈ D)`.
pub fn posterior_given_in_db(lr: &LrVector, priors: &PriorVector) -> Result<PosteriorResult> {
    let w = weights(lr, priors)?;
    let denom = compensated_sum(w.iter().copied());
    if denom <= 0.0 {
        return Err(Error::Degenerate("every r_i π_i is zero".into()));
    }
    Ok(PosteriorResult {
        ids: lr.ids.clone(),
        members: w.iter().map(|x| x / denom).collect(),
        not_in_database: 0.0,
    })
}

/// `P(R ∈ subset | r)`.
pub fn subset_posterior<'a>(
    lr: &LrVector,
    priors: &PriorVector,
    subset: impl IntoIterator<Item = &'a str>,
) -> Result<f64> {
    let w = weights(lr, priors)?;
    let index: HashMap<&str, usize> = lr.ids.iter().enumerate().map(|(k, i)| (i.as_str(), k)).collect();
    let mut picked = HashSet::new();
    for id in subset {
        let k = *index.get(id).ok_or_else(|| Error::IdMismatch(id.to_string()))?;
        picked.insert(k);
    }
    let denom = compensated_sum(w.iter().copied().chain(std::iter::once(priors.pi_0())));
    if denom <= 0.0 {
        return Err(Error::Degenerate("posterior denominator is zero".into()));
    }
    let mut picked: Vec<usize> = picked.into_iter().collect();
    picked.sort_unstable();
    Ok(compensated_sum(picked.iter().map(|&k| w[k])) / denom)
}

/// Likelihood ratio for "the relative is in the database": `Σ r_i π_i / π_D`.
pub fn db_lr(lr: &LrVector, priors: &PriorVector) -> Result<f64> {
    let w = weights(lr, priors)?;
    let pi_d = priors.pi_d();
    if pi_d <= 0.0 {
        return Err(Error::Degenerate("π_D is zero".into()));
    }
    Ok(compensated_sum(w) / pi_d)
}

/// Uniform-prior database likelihood ratio: the average kinship index.
pub fn db_lr_uniform(lr: &LrVector) -> Result<f64> {
    if lr.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    Ok(lr.total() / lr.len() as f64)
}

/// Likelihood ratio for `R = i` against `R ≠ i`:
/// `r_i (1 - π_i) / (Σ_{k≠i} r_k π_k + π_0)`.
pub fn member_lr(lr: &LrVector, priors: &PriorVector, i: usize) -> Result<f64> {
    let w = weights(lr, priors)?;
    if i >= w.len() {
        return Err(Error::invalid(format!("member index {i} out of range")));
    }
    let others = compensated_sum(
        w.iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, x)| *x)
            .chain(std::iter::once(priors.pi_0())),
    );
    if others <= 0.0 {
        return Err(Error::Degenerate(format!(
            "no alternative to member `{}` has positive weight",
            lr.ids[i]
        )));
    }
    Ok(lr.values[i] * (1.0 - priors.values[i]) / others)
}

/// The uniform-prior closed form of [`member_lr`] with `π_i = π_D / N`.
pub fn member_lr_uniform(lr: &LrVector, pi_d: f64, i: usize) -> Result<f64> {
    let n = lr.len() as f64;
    if i >= lr.len() {
        return Err(Error::invalid(format!("member index {i} out of range")));
    }
    let rest = compensated_sum(
        lr.values
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, r)| *r),
    );
    let denom = pi_d / (n - pi_d) * rest + n * (1.0 - pi_d) / (n - pi_d);
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("member likelihood ratio denominator is zero".into()));
    }
    Ok(lr.values[i] / denom)
}
