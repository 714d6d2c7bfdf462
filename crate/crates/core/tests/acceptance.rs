//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its own verdict line; the process fails if any
//! criterion does.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use famsearch::genetics::{
    enumerate_candidates, enumerate_lr_distribution, kinship_index, sample_unrelated, AlleleFrequencyTable, Genotype,
    Hypothesis, JointLrLaw, LocusGenotype, LrDistribution, Panel, Profile, Relationship, DEFAULT_ENUMERATION_CAP,
};
use famsearch::inference::{
    compute_lr_vector, db_lr, db_lr_uniform, member_lr, member_lr_uniform, posterior, posterior_given_in_db,
    subset_posterior, LrVector, PriorVector,
};
use famsearch::rng::rng_from_seed;
use famsearch::simulation::{self, sample_database, Experiment, ExperimentConfig, ExperimentReport};
use famsearch::strategies::{estimate_t_alpha, ibs_lr_rates, matched_lr_test, Estimation};
use rand::Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn presets() -> [(&'static str, Relationship); 5] {
    Relationship::presets()
}

fn ladder(loci: &[&[f64]]) -> AlleleFrequencyTable {
    let mut rows = Vec::new();
    for (l, ps) in loci.iter().enumerate() {
        for (a, &p) in ps.iter().enumerate() {
            rows.push((format!("L{l}"), format!("{}", a + 1), p));
        }
    }
    AlleleFrequencyTable::from_entries(rows, false).unwrap()
}

/// Every genotype combination over all loci of `freqs`, as profiles.
fn all_profiles(freqs: &AlleleFrequencyTable, id: &str) -> Vec<Profile> {
    let mut combos: Vec<Vec<LocusGenotype>> = vec![Vec::new()];
    for locus in 0..freqs.num_loci() {
        let n = freqs.locus(locus).len() as u16;
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..n).flat_map(move |a| (a..n).map(move |b| (a, b))).map(move |(a, b)| {
                    let mut c = c.clone();
                    c.push(LocusGenotype { locus, genotype: Genotype::new(a, b) });
                    c
                })
            })
            .collect();
    }
    combos.into_iter().map(|g| Profile::new(id, "full", g).unwrap()).collect()
}

fn likelihood_ratio_identities() -> Verdict {
    let start = Instant::now();
    let tables = [ladder(&[&[0.3, 0.7]]), ladder(&[&[0.2, 0.3, 0.5]]), ladder(&[&[0.25, 0.75], &[0.1, 0.6, 0.3]])];
    let mut worst_point = 0.0f64;
    let mut worst_mean = 0.0f64;
    let mut cases = 0;
    for freqs in &tables {
        for target in all_profiles(freqs, "t") {
            for (_, rel) in presets() {
                let s = enumerate_lr_distribution(&target, rel, freqs, Hypothesis::Related, DEFAULT_ENUMERATION_CAP).unwrap();
                let g = enumerate_lr_distribution(&target, rel, freqs, Hypothesis::Unrelated, DEFAULT_ENUMERATION_CAP).unwrap();
                let LrDistribution::Exact(g_points) = &g else { unreachable!() };
                let LrDistribution::Exact(s_points) = &s else { unreachable!() };
                for &(x, pg) in g_points {
                    worst_point = worst_point.max((s.probability_of(x) - x * pg).abs());
                }
                for &(x, ps) in s_points {
                    worst_point = worst_point.max((ps - x * g.probability_of(x)).abs());
                }
                let m: f64 = g_points.iter().map(|(x, p)| x * p).sum();
                worst_mean = worst_mean.max((m - 1.0).abs());
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_point <= 1e-12 && worst_mean <= 1e-12 && elapsed < Duration::from_secs(1),
        format!(
            "{cases} target/relationship cases; max |P_S(x) - x P_G(x)| = {worst_point:.1e}, max |E_G[LR] - 1| = {worst_mean:.1e}; {elapsed:.2?}"
        ),
    )
}

fn posterior_engine() -> Verdict {
    let n = 100_000;
    let mut rng = rng_from_seed(17);
    let ids: Vec<String> = (0..n).map(|k| format!("m{k}")).collect();
    let mut worst_norm = 0.0f64;
    let mut worst_uniform = 0.0f64;
    for round in 0..5 {
        let values: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.05) { 0.0 } else { 10f64.powf(rng.gen_range(-6.0..12.0)) })
            .collect();
        let lr = LrVector::new(ids.clone(), values).unwrap();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let scale = rng.gen_range(0.1..1.0) / raw.iter().sum::<f64>();
        let priors = PriorVector::new(ids.clone(), raw.iter().map(|x| x * scale).collect()).unwrap();

        let post = posterior(&lr, &priors).unwrap();
        let total: f64 = post.members.iter().sum::<f64>() + post.not_in_database;
        worst_norm = worst_norm.max((total - 1.0).abs());
        let given = posterior_given_in_db(&lr, &priors).unwrap();
        worst_norm = worst_norm.max((given.members.iter().sum::<f64>() - 1.0).abs());
        let half = subset_posterior(&lr, &priors, ids[..n / 2].iter().map(String::as_str)).unwrap();
        let rest = subset_posterior(&lr, &priors, ids[n / 2..].iter().map(String::as_str)).unwrap();
        worst_norm = worst_norm.max((half + rest + post.not_in_database - 1.0).abs());

        let pi_d = [1.0, 0.5, 0.9, 0.2, 0.01][round];
        let uniform = PriorVector::uniform(&ids, pi_d).unwrap();
        let general = db_lr(&lr, &uniform).unwrap();
        worst_uniform = worst_uniform.max((general - db_lr_uniform(&lr).unwrap()).abs() / general);
        for i in [0, 1, n / 3, n - 1] {
            let a = member_lr(&lr, &uniform, i).unwrap();
            let b = member_lr_uniform(&lr, pi_d, i).unwrap();
            if a > 0.0 || b > 0.0 {
                worst_uniform = worst_uniform.max((a - b).abs() / a.max(b));
            }
        }
    }

    // direct match: one member matches with random match probability p
    let mut direct = true;
    for (big_n, n_pop, p) in [(4usize, 16.0, 0.125), (8, 32.0, 1.0 / 64.0), (1000, 4096.0, 1.0 / 1024.0)] {
        let ids: Vec<String> = (0..big_n).map(|k| format!("m{k}")).collect();
        let mut values = vec![0.0; big_n];
        values[1] = 1.0 / p;
        let lr = LrVector::new(ids.clone(), values).unwrap();
        let priors = PriorVector::uniform(&ids, big_n as f64 / n_pop).unwrap();
        let nf = big_n as f64;
        direct &= db_lr(&lr, &priors).unwrap() == 1.0 / (nf * p);
        direct &= member_lr(&lr, &priors, 1).unwrap() == (n_pop - 1.0) / (p * (n_pop - nf));
    }

    Verdict::new(
        worst_norm <= 1e-12 && worst_uniform <= 1e-10 && direct,
        format!(
            "N = {n}: max normalisation error {worst_norm:.1e}; uniform closed forms within {worst_uniform:.1e} relative; direct-match identities {}",
            if direct { "exact" } else { "NOT exact" }
        ),
    )
}

/// `P(C = c | T = t)` for a relative, by enumerating which alleles are shared by descent.
fn relative_probability(t: Genotype, c: Genotype, rel: Relationship, p: &[f64]) -> f64 {
    let n = p.len() as u16;
    let mut unrelated = 0.0;
    let mut one = 0.0;
    for x in 0..n {
        for y in 0..n {
            if Genotype::new(x, y) == c {
                unrelated += p[x as usize] * p[y as usize];
            }
        }
        for shared in t.alleles() {
            if Genotype::new(shared, x) == c {
                one += 0.5 * p[x as usize];
            }
        }
    }
    let two = if t == c { 1.0 } else { 0.0 };
    rel.k0 * unrelated + rel.k1 * one + rel.k2 * two
}

fn brute_force_posterior() -> Verdict {
    let start = Instant::now();
    let p = [0.3, 0.7];
    let freqs = ladder(&[&p]);
    let genotypes = [Genotype::new(0, 0), Genotype::new(0, 1), Genotype::new(1, 1)];
    let profile = |id: &str, g: Genotype| Profile::new(id, "full", vec![LocusGenotype { locus: 0, genotype: g }]).unwrap();
    let mut worst = 0.0f64;
    let mut groups_checked = 0;
    for (_, rel) in presets() {
        for &tg in &genotypes {
            let target = profile("t", tg);
            // (r1, r2) → [P(R = 1, r), P(R = 2, r)]
            let mut joint: BTreeMap<(u64, u64), (f64, f64, [f64; 2])> = BTreeMap::new();
            for r in 0..2 {
                for &relative in &genotypes {
                    for &other in &genotypes {
                        let prob = 0.5 * relative_probability(tg, relative, rel, &p) * other.frequency(&p);
                        if prob == 0.0 {
                            continue;
                        }
                        let (g1, g2) = if r == 0 { (relative, other) } else { (other, relative) };
                        let r1 = kinship_index(&target, &profile("1", g1), rel, &freqs).unwrap();
                        let r2 = kinship_index(&target, &profile("2", g2), rel, &freqs).unwrap();
                        let e = joint.entry((r1.to_bits(), r2.to_bits())).or_insert((r1, r2, [0.0; 2]));
                        e.2[r] += prob;
                    }
                }
            }
            let ids = vec!["1".to_string(), "2".to_string()];
            let priors = PriorVector::new(ids.clone(), vec![0.5, 0.5]).unwrap();
            for (r1, r2, mass) in joint.values() {
                let lr = LrVector::new(ids.clone(), vec![*r1, *r2]).unwrap();
                let post = posterior_given_in_db(&lr, &priors).unwrap();
                let total = mass[0] + mass[1];
                for (p, m) in post.members.iter().zip(mass) {
                    worst = worst.max((p - m / total).abs());
                }
                groups_checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("{groups_checked} observable LR vectors; max |posterior - enumerated frequency| = {worst:.1e}; {elapsed:.2?}"),
    )
}

fn run(experiment: Experiment, seed: u64, adjust: impl FnOnce(&mut ExperimentConfig)) -> ExperimentReport {
    let mut config = ExperimentConfig::new(experiment, seed);
    adjust(&mut config);
    let report = simulation::run(&config, &AlleleFrequencyTable::synthetic_sgmplus()).unwrap();
    report.verify().unwrap();
    report
}

fn efficiency_bounds() -> Verdict {
    let start = Instant::now();
    let alphas = [0.5, 0.8, 0.95];
    let report = run(Experiment::Efficiency, 404, |c| {
        c.database_size = 10_000;
        c.targets = 2000;
        c.alpha_grid = alphas.to_vec();
    });
    let mut pass = true;
    let mut parts = Vec::new();
    for a in alphas {
        let cond = report.summary(&format!("in_conditional@{a}")).unwrap();
        let cover = report.summary(&format!("covered@{a}")).unwrap();
        pass &= cond.mean >= a - 3.0 * cond.se && cover.mean >= a - 3.0 * cover.se;
        parts.push(format!("α={a}: D^α {:.4}±{:.4}, t_α {:.4}±{:.4}", cond.mean, cond.se, cover.mean, cover.se));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    Verdict::new(pass, format!("2000 trials, N = 10000; {}; {elapsed:.1?}", parts.join("; ")))
}

fn resampled_efficiency() -> Verdict {
    let report = run(Experiment::Resampled, 505, |c| {
        c.database_size = 10_000;
        c.targets = 50;
        c.relatives = 100;
    });
    let max_diff = report.derived["max_abs_mean_difference"];
    let max_se = report.derived["max_se_difference"];
    Verdict::new(
        max_diff <= 3.0 * max_se,
        format!("max_α |mean(β'_α - β_α)| = {max_diff:.4}, max σ̂ = {max_se:.4} (bound {:.4})", 3.0 * max_se),
    )
}

fn neyman_pearson() -> Verdict {
    let start = Instant::now();
    let full = AlleleFrequencyTable::synthetic_sgmplus();
    let loci = ["D3S1358", "vWA", "TH01"].map(|l| full.locus_index(l).unwrap()).to_vec();
    let panel = Panel::new("three", loci).unwrap();
    let mut rng = rng_from_seed(606);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut best_gap = f64::INFINITY;
    let mut worst_match = 0.0f64;
    let mut pairs = 0;
    for (k, rel) in [Relationship::FULL_SIBLING, Relationship::PARENT_CHILD, Relationship::HALF_SIBLING].into_iter().enumerate() {
        let target = sample_unrelated(&full, &panel, "t", 6060 + k as u64).unwrap();
        let outcomes = enumerate_candidates(&target, rel, &full, DEFAULT_ENUMERATION_CAP).unwrap();
        let law = JointLrLaw::from_outcomes(&outcomes);
        for _ in 0..10 {
            let n = rng.gen_range(0..=6u32);
            let t = 10f64.powf(rng.gen_range(-2.0..3.0));
            let rule = ibs_lr_rates(&outcomes, n, t);
            let lr_test = matched_lr_test(&law, rule.detection).unwrap();
            worst_match = worst_match.max((lr_test.rates.detection - rule.detection).abs());
            let gap = lr_test.rates.false_positive - rule.false_positive;
            worst_gap = worst_gap.max(gap);
            best_gap = best_gap.min(gap);
            pairs += 1;
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_gap <= 1e-15 && worst_match <= 1e-12 && elapsed < Duration::from_secs(60),
        format!(
            "{pairs} (n, t) rules over 3 relationships; FP(LR) - FP(n,t) ranges over [{best_gap:.2e}, {worst_gap:.2e}], detection mismatch {worst_match:.1e}; {elapsed:.2?}"
        ),
    )
}

fn total_lr_law() -> Verdict {
    let report = run(Experiment::TotalLr, 707, |c| {
        c.database_size = 10_000;
        c.targets = 100;
    });
    let s = report.summary("ratio").unwrap();
    Verdict::new(
        (s.mean - 1.0).abs() <= 3.0 * s.se,
        format!("mean ΣKI/N over 100 targets = {:.4} ± {:.4} (N = 10000)", s.mean, s.se),
    )
}

fn half_sibling() -> Verdict {
    let report = run(Experiment::HalfSibling, 808, |c| {
        c.database_size = 10_000;
        c.targets = 20;
        c.relatives = 200;
    });
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1, 10, 100] {
        let d = report.summary(&format!("difference@{n}")).unwrap();
        let si = report.summary(&format!("cdf_si@{n}")).unwrap();
        let hsi = report.summary(&format!("cdf_hsi@{n}")).unwrap();
        pass &= d.mean >= -3.0 * d.se;
        parts.push(format!("rank ≤ {n}: HSI {:.3} vs SI {:.3} (diff {:+.4} ± {:.4})", hsi.mean, si.mean, d.mean, d.se));
    }
    Verdict::new(pass, parts.join("; "))
}

fn performance() -> Verdict {
    let freqs = AlleleFrequencyTable::synthetic_sgmplus();
    let panel = Panel::full(&freqs, "full");
    let db = sample_database(&freqs, &panel, 100_000, "p", 909).unwrap();
    let target = sample_unrelated(&freqs, &panel, "t", 9090).unwrap();

    let pool = |threads: usize| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let scan = || compute_lr_vector(&target, &db, Relationship::FULL_SIBLING, &freqs).unwrap();
    let threshold =
        || estimate_t_alpha(&target, Relationship::FULL_SIBLING, &freqs, 0.9, Estimation::MonteCarlo { samples: 50_000, seed: 99 }).unwrap();

    let start = Instant::now();
    let lr = scan();
    let scan_time = start.elapsed();
    let start = Instant::now();
    let t = threshold();
    let threshold_time = start.elapsed();

    let deterministic = [1, 4].into_iter().all(|n| {
        let p = pool(n);
        p.install(scan) == lr && p.install(threshold).value == t.value
    });
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    Verdict::new(
        scan_time <= Duration::from_secs(5) && threshold_time <= Duration::from_secs(2) && deterministic,
        format!(
            "100000-profile sibling scan {scan_time:.2?}, t_α from 50000 samples {threshold_time:.2?} on {cores} core(s); identical output with 1 and 4 workers: {deterministic}"
        ),
    )
}

fn qualitative_shapes() -> Verdict {
    let pod = run(Experiment::Pod, 1010, |c| c.database_size = 10_000);
    let alphas = pod.config.alpha_grid.clone();
    let mut above = true;
    let mut excess = Vec::new();
    for &a in &alphas {
        let s = pod.summary(&format!("beta@{a}")).unwrap();
        above &= s.mean >= a - 3.0 * s.se;
        excess.push((a, s.mean - a));
    }
    let peak = excess.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<f64> = excess.iter().filter(|e| e.0 >= 0.95).map(|e| e.1).collect();
    let top_max = top.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shrinking = top_max < peak;

    let sizes = run(Experiment::SubsetSizes, 1011, |c| {
        c.database_size = 10_000;
        c.alpha_grid = vec![0.7, 0.8, 0.9];
    });
    let rho: Vec<f64> = [0.7, 0.8, 0.9].iter().map(|a| sizes.derived[&format!("spearman@{a}")]).collect();
    let negative = rho.iter().all(|&r| r < 0.0);
    Verdict::new(
        above && shrinking && negative,
        format!(
            "β_α ≥ α - 3σ̂ on all {} grid points: {above}; peak excess {peak:.3}, largest excess for α ≥ 0.95 {top_max:.3}; Spearman(-log10 RMP, |D_α|) at 0.7/0.8/0.9 = {:.2}/{:.2}/{:.2}",
            alphas.len(),
            rho[0],
            rho[1],
            rho[2]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("likelihood-ratio identities on enumerable ladders", likelihood_ratio_identities),
        ("posterior engine normalisation and closed forms", posterior_engine),
        ("posterior against brute-force enumeration", brute_force_posterior),
        ("efficiency of D^α and D_α", efficiency_bounds),
        ("fixed-database POD vs resampled efficiency", resampled_efficiency),
        ("likelihood-ratio test dominates (n, t) rules", neyman_pearson),
        ("total kinship index over a relative-free database", total_lr_law),
        ("half-sibling index ranks half-siblings higher", half_sibling),
        ("scan and threshold performance, determinism", performance),
        ("POD shape and subset-size trend", qualitative_shapes),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("criterion {:>2} {}: {name} — {}", k + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
