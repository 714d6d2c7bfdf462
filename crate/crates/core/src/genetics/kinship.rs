use crate::error::{Error, Result};
use crate::genetics::{AlleleFrequencyTable, Genotype, Profile, Relationship};

/// Probability that a relative has genotype `candidate` given one IBD allele
/// `ibd` and the other drawn from the population.
#[inline]
fn given_ibd_allele(candidate: Genotype, ibd: u16, freqs: &[f64]) -> f64 {
    if candidate.first() == ibd {
        freqs[candidate.second() as usize]
    } else if candidate.second() == ibd {
        freqs[candidate.first() as usize]
    } else {
        0.0
    }
}

/// `P1(C)`: probability of `candidate` when exactly one allele is IBD with `target`.
#[inline]
pub(crate) fn one_ibd_probability(target: Genotype, candidate: Genotype, freqs: &[f64]) -> f64 {
    0.5 * (given_ibd_allele(candidate, target.first(), freqs)
        + given_ibd_allele(candidate, target.second(), freqs))
}

/// Probability that a relative of a `target` carrier has `candidate` at one locus.
#[inline]
pub(crate) fn related_probability(
    target: Genotype,
    candidate: Genotype,
    rel: Relationship,
    freqs: &[f64],
) -> f64 {
    let mut p = rel.k0 * candidate.frequency(freqs);
    if rel.k1 > 0.0 {
        p += rel.k1 * one_ibd_probability(target, candidate, freqs);
    }
    if rel.k2 > 0.0 && candidate == target {
        p += rel.k2;
    }
    p
}

/// Single-locus kinship index `k0 + k1·X1 + k2·X2`.
#[inline]
pub fn locus_kinship(target: Genotype, candidate: Genotype, rel: Relationship, freqs: &[f64]) -> f64 {
    let g = candidate.frequency(freqs);
    let mut ki = rel.k0;
    if rel.k1 > 0.0 {
        ki += rel.k1 * one_ibd_probability(target, candidate, freqs) / g;
    }
    if rel.k2 > 0.0 && candidate == target {
        ki += rel.k2 / g;
    }
    ki
}

/// Kinship index over the loci typed in both profiles.
pub fn kinship_index(
    target: &Profile,
    candidate: &Profile,
    rel: Relationship,
    freqs: &AlleleFrequencyTable,
) -> Result<f64> {
    target.validate(freqs)?;
    candidate.validate(freqs)?;
    let mut ki = 1.0;
    let mut shared = 0usize;
    for_shared_loci(target, candidate, |locus, t, c| {
        shared += 1;
        ki *= locus_kinship(t, c, rel, freqs.frequencies(locus));
    });
    if shared == 0 {
        return Err(Error::DisjointPanels {
            target: target.id().to_string(),
            candidate: candidate.id().to_string(),
        });
    }
    Ok(ki)
}

/// Identity-by-state allele count summed over shared loci.
pub fn ibs_count(target: &Profile, candidate: &Profile) -> u32 {
    let mut n = 0;
    for_shared_loci(target, candidate, |_, t, c| n += t.shared_alleles(c));
    n
}

fn for_shared_loci(a: &Profile, b: &Profile, mut f: impl FnMut(usize, Genotype, Genotype)) {
    let (mut i, mut j) = (0, 0);
    let (ga, gb) = (a.genotypes(), b.genotypes());
    while i < ga.len() && j < gb.len() {
        match ga[i].locus.cmp(&gb[j].locus) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(ga[i].locus, ga[i].genotype, gb[j].genotype);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Precomputed per-locus kinship tables for one target, used for database scans.
#[derive(Debug, Clone)]
pub struct KinshipScorer {
    target_id: String,
    rel: Relationship,
    tables: Vec<Option<LocusTable>>,
}

#[derive(Debug, Clone)]
struct LocusTable {
    width: usize,
    values: Vec<f64>,
}

impl KinshipScorer {
    pub fn new(target: &Profile, rel: Relationship, freqs: &AlleleFrequencyTable) -> Result<Self> {
        target.validate(freqs)?;
        let mut tables = vec![None; freqs.num_loci()];
        for lg in target.genotypes() {
            let f = freqs.frequencies(lg.locus);
            let n = f.len();
            let mut values = vec![0.0; n * n];
            for a in 0..n as u16 {
                for b in a..n as u16 {
                    let ki = locus_kinship(lg.genotype, Genotype::new(a, b), rel, f);
                    values[a as usize * n + b as usize] = ki;
                    values[b as usize * n + a as usize] = ki;
                }
            }
            tables[lg.locus] = Some(LocusTable { width: n, values });
        }
        Ok(Self {
            target_id: target.id().to_string(),
            rel,
            tables,
        })
    }

    pub fn relationship(&self) -> Relationship {
        self.rel
    }

    /// Kinship index of `candidate` with the target. Candidate alleles must
    /// come from the same frequency table.
    pub fn score(&self, candidate: &Profile) -> Result<f64> {
        let mut ki = 1.0;
        let mut shared = false;
        for lg in candidate.genotypes() {
            let Some(table) = self.tables.get(lg.locus).and_then(Option::as_ref) else {
                continue;
            };
            let (a, b) = (lg.genotype.first() as usize, lg.genotype.second() as usize);
            if b >= table.width {
                return Err(Error::UnknownAllele {
                    locus: format!("#{}", lg.locus),
                    allele: format!("#{b}"),
                });
            }
            ki *= table.values[a * table.width + b];
            shared = true;
        }
        if !shared {
            return Err(Error::DisjointPanels {
                target: self.target_id.clone(),
                candidate: candidate.id().to_string(),
            });
        }
        Ok(ki)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetics::LocusGenotype;

    fn one_locus(freqs: &[f64]) -> AlleleFrequencyTable {
        let names = ["a", "b", "c", "d", "e"];
        AlleleFrequencyTable::from_entries(
            freqs.iter().enumerate().map(|(i, &f)| ("L", names[i], f)),
            false,
        )
        .unwrap()
    }

    fn single(id: &str, g: Genotype) -> Profile {
        Profile::new(id, "p", vec![LocusGenotype { locus: 0, genotype: g }]).unwrap()
    }

    /// Joint genotype law of a pedigree pair, by enumerating founder alleles
    /// and Mendelian transmissions. Returns `P(first = g1, second = g2)`.
    fn pedigree_joint(kind: &str, p: &[f64], g1: Genotype, g2: Genotype) -> f64 {
        let n = p.len() as u16;
        let alleles: Vec<u16> = (0..n).collect();
        let mut total = 0.0;
        // Founders: three diploid individuals, six allele slots.
        for f in itertools_product(&alleles, 6) {
            let w: f64 = f.iter().map(|&a| p[a as usize]).product();
            let (x, y, z) = ([f[0], f[1]], [f[2], f[3]], [f[4], f[5]]);
            for t in 0..16u32 {
                let pick = |s: [u16; 2], bit: u32| s[((t >> bit) & 1) as usize];
                let (first, second) = match kind {
                    // x is the parent, child gets one allele from x and one from y.
                    "parent-child" => {
                        if t >= 4 {
                            continue;
                        }
                        (Genotype::new(x[0], x[1]), Genotype::new(pick(x, 0), pick(y, 1)))
                    }
                    "sibling" => (
                        Genotype::new(pick(x, 0), pick(y, 1)),
                        Genotype::new(pick(x, 2), pick(y, 3)),
                    ),
                    "half-sibling" => (
                        Genotype::new(pick(x, 0), pick(y, 1)),
                        Genotype::new(pick(x, 2), pick(z, 3)),
                    ),
                    "unrelated" => {
                        if t >= 1 {
                            continue;
                        }
                        (Genotype::new(x[0], x[1]), Genotype::new(y[0], y[1]))
                    }
                    _ => unreachable!(),
                };
                if first == g1 && second == g2 {
                    let transmissions = match kind {
                        "parent-child" => 4.0,
                        "unrelated" => 1.0,
                        _ => 16.0,
                    };
                    total += w / transmissions;
                }
            }
        }
        total
    }

    fn itertools_product(alleles: &[u16], k: usize) -> Vec<Vec<u16>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|v| {
                    alleles.iter().map(move |&a| {
                        let mut w = v.clone();
                        w.push(a);
                        w
                    })
                })
                .collect();
        }
        out
    }

    fn genotypes(n: u16) -> Vec<Genotype> {
        (0..n).flat_map(|a| (a..n).map(move |b| Genotype::new(a, b))).collect()
    }

    #[test]
    fn matches_pedigree_enumeration() {
        let p = [0.2, 0.3, 0.5];
        let t = one_locus(&p);
        let f = t.frequencies(0);
        for (name, rel) in [
            ("parent-child", Relationship::PARENT_CHILD),
            ("sibling", Relationship::FULL_SIBLING),
            ("half-sibling", Relationship::HALF_SIBLING),
            ("unrelated", Relationship::UNRELATED),
        ] {
            for g1 in genotypes(3) {
                for g2 in genotypes(3) {
                    let joint = pedigree_joint(name, f, g1, g2);
                    let oracle = joint / (g1.frequency(f) * g2.frequency(f));
                    let ki = kinship_index(&single("t", g1), &single("c", g2), rel, &t).unwrap();
                    assert!(
                        (ki - oracle).abs() < 1e-12 * oracle.max(1.0),
                        "{name} {g1:?} {g2:?}: {ki} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn parent_child_shared_allele_example() {
        // target (a,b), candidate (a,c), p_a = 0.1 -> 1 / (4 p_a)
        let t = one_locus(&[0.1, 0.2, 0.3, 0.4]);
        let ki = kinship_index(
            &single("t", Genotype::new(0, 1)),
            &single("c", Genotype::new(0, 2)),
            Relationship::PARENT_CHILD,
            &t,
        )
        .unwrap();
        assert!((ki - 2.5).abs() < 1e-12);
    }

    #[test]
    fn unrelated_is_one_and_identity_is_inverse_rmp() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let target = Profile::from_labels(
            "t",
            "p",
            &[("TH01", "6", "9.3"), ("FGA", "21", "21")],
            &t,
        )
        .unwrap();
        let other = Profile::from_labels(
            "o",
            "p",
            &[("TH01", "6", "9.3"), ("FGA", "21", "22")],
            &t,
        )
        .unwrap();
        assert_eq!(
            kinship_index(&target, &other, Relationship::UNRELATED, &t).unwrap(),
            1.0
        );
        let inv = 1.0 / crate::genetics::rmp(&target, &t).unwrap();
        let ki = kinship_index(&target, &target, Relationship::IDENTITY, &t).unwrap();
        assert!((ki - inv).abs() < 1e-12 * inv);
        assert_eq!(
            kinship_index(&target, &other, Relationship::IDENTITY, &t).unwrap(),
            0.0
        );
    }

    #[test]
    fn disjoint_panels_rejected() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let a = Profile::from_labels("a", "p", &[("TH01", "6", "7")], &t).unwrap();
        let b = Profile::from_labels("b", "q", &[("FGA", "21", "22")], &t).unwrap();
        assert!(matches!(
            kinship_index(&a, &b, Relationship::FULL_SIBLING, &t),
            Err(Error::DisjointPanels { .. })
        ));
        let scorer = KinshipScorer::new(&a, Relationship::FULL_SIBLING, &t).unwrap();
        assert!(scorer.score(&b).is_err());
    }

    #[test]
    fn parent_child_without_shared_allele_is_zero() {
        let t = one_locus(&[0.1, 0.2, 0.3, 0.4]);
        let ki = kinship_index(
            &single("t", Genotype::new(0, 1)),
            &single("c", Genotype::new(2, 3)),
            Relationship::PARENT_CHILD,
            &t,
        )
        .unwrap();
        assert_eq!(ki, 0.0);
    }

    #[test]
    fn identical_candidate_maximises_sibling_index() {
        for p in [[0.1, 0.5, 0.4], [0.6, 0.3, 0.1], [0.05, 0.05, 0.9]] {
            let t = one_locus(&p);
            let f = t.frequencies(0);
            for target in genotypes(3) {
                let own = locus_kinship(target, target, Relationship::FULL_SIBLING, f);
                for c in genotypes(3) {
                    assert!(locus_kinship(target, c, Relationship::FULL_SIBLING, f) <= own);
                }
            }
        }
    }

    #[test]
    fn rare_homozygote_can_outscore_identical_half_sibling() {
        // target (a,b) with p_a < p_b: HSI(T,(a,a)) = 1/2 + 1/(4 p_a) exceeds HSI(T,T).
        let t = one_locus(&[0.1, 0.5, 0.4]);
        let f = t.frequencies(0);
        let target = Genotype::new(0, 1);
        let own = locus_kinship(target, target, Relationship::HALF_SIBLING, f);
        let aa = locus_kinship(target, Genotype::new(0, 0), Relationship::HALF_SIBLING, f);
        assert!((own - 2.0).abs() < 1e-12);
        assert!((aa - 3.0).abs() < 1e-12);
    }

    #[test]
    fn scorer_agrees_with_direct_formula() {
        let t = AlleleFrequencyTable::synthetic_sgmplus();
        let panel = crate::genetics::Panel::full(&t, "sgm");
        for seed in 0..20 {
            let target = crate::genetics::sample_unrelated(&t, &panel, "t", seed).unwrap();
            let cand = crate::genetics::sample_unrelated(&t, &panel, "c", seed + 100).unwrap();
            for (_, rel) in Relationship::presets() {
                let scorer = KinshipScorer::new(&target, rel, &t).unwrap();
                let a = scorer.score(&cand).unwrap();
                let b = kinship_index(&target, &cand, rel, &t).unwrap();
                assert_eq!(a, b);
            }
        }
    }
}
