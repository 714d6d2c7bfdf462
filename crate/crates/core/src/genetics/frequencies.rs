use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, WeightedAliasIndex};

use crate::error::{Error, Result};

/// Per-locus sums within this distance of 1 are accepted and rescaled silently.
pub const SUM_TOLERANCE: f64 = 1e-6;
/// Per-locus sums outside `1 ± SUM_WINDOW` are rejected even when normalising.
pub const SUM_WINDOW: f64 = 0.01;

/// A typed STR locus and its allelic ladder.
#[derive(Debug, Clone)]
pub struct Locus {
    name: String,
    ladder: Vec<String>,
    index: HashMap<String, u16>,
}

impl Locus {
    pub fn new(name: impl Into<String>, ladder: Vec<String>) -> Result<Self> {
        let name = name.into();
        if ladder.is_empty() {
            return Err(Error::invalid(format!("locus {name} has an empty ladder")));
        }
        if ladder.len() > u16::MAX as usize {
            return Err(Error::invalid(format!("locus {name} has too many alleles")));
        }
        let mut index = HashMap::with_capacity(ladder.len());
        for (i, allele) in ladder.iter().enumerate() {
            if index.insert(allele.clone(), i as u16).is_some() {
                return Err(Error::DuplicateAllele {
                    locus: name,
                    allele: allele.clone(),
                });
            }
        }
        Ok(Self {
            name,
            ladder,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ladder(&self) -> &[String] {
        &self.ladder
    }

    pub fn len(&self) -> usize {
        self.ladder.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ladder.is_empty()
    }

    pub fn allele_index(&self, label: &str) -> Option<u16> {
        self.index.get(label).copied()
    }

    pub fn allele_label(&self, index: u16) -> &str {
        &self.ladder[index as usize]
    }
}

/// Population allele frequencies for a set of independent loci.
///
/// Alleles are addressed by their position in the locus ladder; the ladder
/// order is the order in which alleles first appear in the input.
#[derive(Debug, Clone)]
pub struct AlleleFrequencyTable {
    loci: Vec<Locus>,
    freqs: Vec<Vec<f64>>,
    samplers: Vec<WeightedAliasIndex<f64>>,
    by_name: HashMap<String, usize>,
}

impl AlleleFrequencyTable {
    /// Builds a table from `(locus, allele, frequency)` rows.
    ///
    /// Every frequency must be positive and finite. Per-locus sums within
    /// [`SUM_TOLERANCE`] of 1 are rescaled to 1; sums further away but inside
    /// `1 ± SUM_WINDOW` are rescaled only when `normalize` is set.
    pub fn from_entries<I, L, A>(entries: I, normalize: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (L, A, f64)>,
        L: Into<String>,
        A: Into<String>,
    {
        let mut order: Vec<(String, Vec<(String, f64)>)> = Vec::new();
        let mut by_name: HashMap<String, usize> = HashMap::new();
        for (locus, allele, value) in entries {
            let locus = locus.into();
            let allele = allele.into();
            if !(value.is_finite() && value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidFrequency {
                    locus,
                    allele,
                    value,
                });
            }
            let slot = *by_name.entry(locus.clone()).or_insert_with(|| {
                order.push((locus.clone(), Vec::new()));
                order.len() - 1
            });
            order[slot].1.push((allele, value));
        }
        if order.is_empty() {
            return Err(Error::invalid("frequency table has no loci"));
        }

        let mut loci = Vec::with_capacity(order.len());
        let mut freqs = Vec::with_capacity(order.len());
        for (name, alleles) in order {
            let sum: f64 = alleles.iter().map(|(_, f)| f).sum();
            let off = (sum - 1.0).abs();
            if off > SUM_WINDOW || (off > SUM_TOLERANCE && !normalize) {
                return Err(Error::FrequencySum { locus: name, sum });
            }
            let (ladder, values): (Vec<String>, Vec<f64>) =
                alleles.into_iter().map(|(a, f)| (a, f / sum)).unzip();
            loci.push(Locus::new(name, ladder)?);
            freqs.push(values);
        }
        Self::assemble(loci, freqs)
    }

    fn assemble(loci: Vec<Locus>, freqs: Vec<Vec<f64>>) -> Result<Self> {
        let samplers = freqs
            .iter()
            .zip(&loci)
            .map(|(f, l)| {
                WeightedAliasIndex::new(f.clone())
                    .map_err(|e| Error::invalid(format!("locus {}: {e}", l.name())))
            })
            .collect::<Result<Vec<_>>>()?;
        let by_name = loci
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name().to_string(), i))
            .collect();
        Ok(Self {
            loci,
            freqs,
            samplers,
            by_name,
        })
    }

    /// The bundled synthetic ten-locus SGM Plus-style table.
    pub fn synthetic_sgmplus() -> Self {
        crate::io::parse_frequencies(SYNTHETIC_SGMPLUS.as_bytes(), false)
            .expect("bundled frequency table is valid")
    }

    pub fn num_loci(&self) -> usize {
        self.loci.len()
    }

    pub fn loci(&self) -> &[Locus] {
        &self.loci
    }

    pub fn locus(&self, index: usize) -> &Locus {
        &self.loci[index]
    }

    pub fn locus_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn frequencies(&self, locus: usize) -> &[f64] {
        &self.freqs[locus]
    }

    pub fn frequency(&self, locus: usize, allele: u16) -> f64 {
        self.freqs[locus][allele as usize]
    }

    pub(crate) fn draw_allele<R: Rng + ?Sized>(&self, locus: usize, rng: &mut R) -> u16 {
        self.samplers[locus].sample(rng) as u16
    }

    /// Resolves a `(locus, allele)` pair of labels to indices.
    pub fn resolve(&self, locus: &str, allele: &str) -> Result<(usize, u16)> {
        let li = self
            .locus_index(locus)
            .ok_or_else(|| Error::UnknownLocus(locus.to_string()))?;
        let ai = self.loci[li]
            .allele_index(allele)
            .ok_or_else(|| Error::UnknownAllele {
                locus: locus.to_string(),
                allele: allele.to_string(),
            })?;
        Ok((li, ai))
    }
}

pub(crate) const SYNTHETIC_SGMPLUS: &str = include_str!("../../data/synthetic_sgmplus.csv");
