use rand::Rng;
use rand_distr::{Distribution, WeightedAliasIndex};

use crate::error::{Error, Result};
use crate::genetics::kinship::{locus_kinship, related_probability};
use crate::genetics::{AlleleFrequencyTable, Genotype, LocusGenotype, Panel, Profile, Relationship};
use crate::rng::rng_from_seed;

/// A random population member typed on `panel` (Hardy-Weinberg, independent loci).
pub fn sample_unrelated(
    freqs: &AlleleFrequencyTable,
    panel: &Panel,
    id: impl Into<String>,
    seed: u64,
) -> Result<Profile> {
    sample_unrelated_with(freqs, panel, id, &mut rng_from_seed(seed))
}

pub fn sample_unrelated_with<R: Rng + ?Sized>(
    freqs: &AlleleFrequencyTable,
    panel: &Panel,
    id: impl Into<String>,
    rng: &mut R,
) -> Result<Profile> {
    let id = id.into();
    if panel.loci.is_empty() {
        return Err(Error::EmptyPanel(id));
    }
    let mut genotypes = Vec::with_capacity(panel.loci.len());
    for &locus in &panel.loci {
        if locus >= freqs.num_loci() {
            return Err(Error::UnknownLocus(format!("#{locus}")));
        }
        let a = freqs.draw_allele(locus, rng);
        let b = freqs.draw_allele(locus, rng);
        genotypes.push(LocusGenotype {
            locus,
            genotype: Genotype::new(a, b),
        });
    }
    Profile::new(id, panel.name.clone(), genotypes)
}

/// A relative of `target` under the IBD mixture `rel`, typed on the target's loci.
pub fn sample_relative(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    id: impl Into<String>,
    seed: u64,
) -> Result<Profile> {
    sample_relative_with(target, rel, freqs, id, &mut rng_from_seed(seed))
}

pub fn sample_relative_with<R: Rng + ?Sized>(
    target: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
    id: impl Into<String>,
    rng: &mut R,
) -> Result<Profile> {
    target.validate(freqs)?;
    let genotypes = target
        .genotypes()
        .iter()
        .map(|lg| {
            let u: f64 = rng.gen();
            let genotype = if u < rel.k2 {
                lg.genotype
            } else if u < rel.k2 + rel.k1 {
                let ibd = lg.genotype.alleles()[rng.gen_range(0..2)];
                Genotype::new(ibd, freqs.draw_allele(lg.locus, rng))
            } else {
                let a = freqs.draw_allele(lg.locus, rng);
                Genotype::new(a, freqs.draw_allele(lg.locus, rng))
            };
            LocusGenotype {
                locus: lg.locus,
                genotype,
            }
        })
        .collect();
    Profile::new(id, target.panel(), genotypes)
}

/// Samples kinship-index values with one target directly, without building
/// profiles: each locus draws a candidate genotype from an alias table of
/// either the population law or the relative's law.
#[derive(Debug, Clone)]
pub struct LrSampler {
    loci: Vec<LocusLaw>,
}

#[derive(Debug, Clone)]
struct LocusLaw {
    lr: Vec<f64>,
    unrelated: WeightedAliasIndex<f64>,
    related: WeightedAliasIndex<f64>,
}

impl LrSampler {
    /// `rel` defines the kinship index; `relative` defines how relatives are
    /// drawn (usually the same relationship).
    pub fn new(
        target: &Profile,
        rel: Relationship,
        relative: Relationship,
        freqs: &AlleleFrequencyTable,
    ) -> Result<Self> {
        target.validate(freqs)?;
        let loci = target
            .genotypes()
            .iter()
            .map(|lg| {
                let f = freqs.frequencies(lg.locus);
                let n = f.len() as u16;
                let mut lr = Vec::new();
                let mut pg = Vec::new();
                let mut ps = Vec::new();
                for a in 0..n {
                    for b in a..n {
                        let c = Genotype::new(a, b);
                        lr.push(locus_kinship(lg.genotype, c, rel, f));
                        pg.push(c.frequency(f));
                        ps.push(related_probability(lg.genotype, c, relative, f));
                    }
                }
                let alias = |w: Vec<f64>| {
                    WeightedAliasIndex::new(w).map_err(|e| Error::invalid(e.to_string()))
                };
                Ok(LocusLaw {
                    lr,
                    unrelated: alias(pg)?,
                    related: alias(ps)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { loci })
    }

    #[inline]
    pub fn unrelated<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.loci
            .iter()
            .map(|l| l.lr[l.unrelated.sample(rng)])
            .product()
    }

    #[inline]
    pub fn related<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.loci.iter().map(|l| l.lr[l.related.sample(rng)]).product()
    }
}
