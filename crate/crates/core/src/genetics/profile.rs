use std::fmt;

use crate::error::{Error, Result};
use crate::genetics::AlleleFrequencyTable;

/// An unordered allele pair, stored with the lower ladder index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype {
    first: u16,
    second: u16,
}

impl Genotype {
    pub fn new(a: u16, b: u16) -> Self {
        if a <= b {
            Self { first: a, second: b }
        } else {
            Self { first: b, second: a }
        }
    }

    pub fn first(self) -> u16 {
        self.first
    }

    pub fn second(self) -> u16 {
        self.second
    }

    pub fn alleles(self) -> [u16; 2] {
        [self.first, self.second]
    }

    pub fn is_homozygous(self) -> bool {
        self.first == self.second
    }

    pub fn contains(self, allele: u16) -> bool {
        self.first == allele || self.second == allele
    }

    /// Size of the multiset intersection of the two allele pairs (0, 1 or 2).
    pub fn shared_alleles(self, other: Genotype) -> u32 {
        let mut theirs = [Some(other.first), Some(other.second)];
        let mut n = 0;
        for a in self.alleles() {
            if let Some(slot) = theirs.iter_mut().find(|s| **s == Some(a)) {
                *slot = None;
                n += 1;
            }
        }
        n
    }

    /// Hardy-Weinberg genotype frequency `p_a p_b (2 - δ_ab)`.
    pub fn frequency(self, freqs: &[f64]) -> f64 {
        let p = freqs[self.first as usize] * freqs[self.second as usize];
        if self.is_homozygous() {
            p
        } else {
            2.0 * p
        }
    }
}

/// A genotype at one locus, addressed by the locus index of the frequency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocusGenotype {
    pub locus: usize,
    pub genotype: Genotype,
}

/// A named set of loci.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Panel {
    pub name: String,
    pub loci: Vec<usize>,
}

impl Panel {
    pub fn new(name: impl Into<String>, mut loci: Vec<usize>) -> Result<Self> {
        let name = name.into();
        loci.sort_unstable();
        loci.dedup();
        if loci.is_empty() {
            return Err(Error::EmptyPanel(name));
        }
        Ok(Self { name, loci })
    }

    /// Every locus of the table.
    pub fn full(freqs: &AlleleFrequencyTable, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            loci: (0..freqs.num_loci()).collect(),
        }
    }
}

/// A multi-locus STR profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    id: String,
    panel: String,
    genotypes: Vec<LocusGenotype>,
}

impl Profile {
    /// Genotypes are sorted by locus; a locus may appear only once.
    pub fn new(
        id: impl Into<String>,
        panel: impl Into<String>,
        mut genotypes: Vec<LocusGenotype>,
    ) -> Result<Self> {
        let id = id.into();
        if genotypes.is_empty() {
            return Err(Error::EmptyPanel(id));
        }
        genotypes.sort_by_key(|g| g.locus);
        if genotypes.windows(2).any(|w| w[0].locus == w[1].locus) {
            return Err(Error::invalid(format!("profile {id} types a locus twice")));
        }
        Ok(Self {
            id,
            panel: panel.into(),
            genotypes,
        })
    }

    /// Builds a profile from `(locus, allele, allele)` labels.
    pub fn from_labels(
        id: impl Into<String>,
        panel: impl Into<String>,
        labels: &[(&str, &str, &str)],
        freqs: &AlleleFrequencyTable,
    ) -> Result<Self> {
        let genotypes = labels
            .iter()
            .map(|(locus, a, b)| {
                let (li, ai) = freqs.resolve(locus, a)?;
                let (_, bi) = freqs.resolve(locus, b)?;
                Ok(LocusGenotype {
                    locus: li,
                    genotype: Genotype::new(ai, bi),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(id, panel, genotypes)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn panel(&self) -> &str {
        &self.panel
    }

    pub fn genotypes(&self) -> &[LocusGenotype] {
        &self.genotypes
    }

    pub fn loci(&self) -> impl Iterator<Item = usize> + '_ {
        self.genotypes.iter().map(|g| g.locus)
    }

    pub fn genotype_at(&self, locus: usize) -> Option<Genotype> {
        self.genotypes
            .binary_search_by_key(&locus, |g| g.locus)
            .ok()
            .map(|i| self.genotypes[i].genotype)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// The same profile typed only on `loci`.
    pub fn restricted_to(&self, panel: &Panel) -> Result<Self> {
        let genotypes = self
            .genotypes
            .iter()
            .filter(|g| panel.loci.binary_search(&g.locus).is_ok())
            .copied()
            .collect();
        Self::new(self.id.clone(), panel.name.clone(), genotypes)
    }

    /// Checks every locus and allele index against `freqs`.
    pub fn validate(&self, freqs: &AlleleFrequencyTable) -> Result<()> {
        for g in &self.genotypes {
            if g.locus >= freqs.num_loci() {
                return Err(Error::UnknownLocus(format!("#{}", g.locus)));
            }
            let locus = freqs.locus(g.locus);
            for a in g.genotype.alleles() {
                if a as usize >= locus.len() {
                    return Err(Error::UnknownAllele {
                        locus: locus.name().to_string(),
                        allele: format!("#{a}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Labels of this profile as `locus:a/b` cells, canonical order.
    pub fn display<'a>(&'a self, freqs: &'a AlleleFrequencyTable) -> ProfileDisplay<'a> {
        ProfileDisplay {
            profile: self,
            freqs,
        }
    }
}

pub struct ProfileDisplay<'a> {
    profile: &'a Profile,
    freqs: &'a AlleleFrequencyTable,
}

impl fmt::Display for ProfileDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.profile.genotypes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let locus = self.freqs.locus(g.locus);
            write!(
                f,
                "{}:{}/{}",
                locus.name(),
                locus.allele_label(g.genotype.first()),
                locus.allele_label(g.genotype.second())
            )?;
        }
        Ok(())
    }
}

/// Random match probability: product over typed loci of `p_a p_b (2 - δ_ab)`.
pub fn rmp(profile: &Profile, freqs: &AlleleFrequencyTable) -> Result<f64> {
    profile.validate(freqs)?;
    Ok(profile
        .genotypes()
        .iter()
        .map(|g| g.genotype.frequency(freqs.frequencies(g.locus)))
        .product())
}
