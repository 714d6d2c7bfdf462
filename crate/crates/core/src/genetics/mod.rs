//! STR profiles, population sampling and kinship indices.
//!
//! Loci are independent and in Hardy-Weinberg equilibrium; mutation is not
//! modelled. A relationship is described by its IBD coefficients, so the
//! same code path computes paternity, sibling and half-sibling indices.

mod enumerate;
mod frequencies;
mod kinship;
mod profile;
mod relationship;
mod sampling;

pub use enumerate::{
    combination_count, enumerate_candidates, enumerate_lr_distribution, CandidateOutcome,
    Hypothesis, JointLrLaw, LawPoint, LrDistribution, lr_at_least, lr_greater, COVERAGE_EPS, DEFAULT_ENUMERATION_CAP,
};
pub use frequencies::{AlleleFrequencyTable, Locus, SUM_TOLERANCE, SUM_WINDOW};
pub use kinship::{ibs_count, kinship_index, locus_kinship, KinshipScorer};
pub use profile::{rmp, Genotype, LocusGenotype, Panel, Profile, ProfileDisplay};
pub use relationship::Relationship;
pub use sampling::{
    sample_relative, sample_relative_with, sample_unrelated, sample_unrelated_with, LrSampler,
};
