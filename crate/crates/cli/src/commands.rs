use std::collections::HashMap;
use std::path::{Path, PathBuf};

use famsearch::genetics::{AlleleFrequencyTable, Panel, Profile};
use famsearch::inference::{compute_lr_vector, db_lr, posterior, weights, LrVector, PriorVector};
use famsearch::io::{self, Database};
use famsearch::rng::{stream, task_rng};
use famsearch::simulation::{self, ExperimentConfig};
use famsearch::strategies::{
    conditional_subset, estimate_s_beta, estimate_t_alpha, heterogeneous_conditional, heterogeneous_target_centered,
    ibs_lr_subset, target_centered_subset, weight_order, DatabasePart, Estimation, Method, SubsetSelection,
    ThresholdEstimate,
};
use serde::Serialize;
use serde_json::json;

use crate::cli::{
    Command, DbCommand, DbSampleArgs, FreqArgs, FreqsCommand, MergeArgs, MethodArg, PreassessArgs, ReportCommand,
    SearchArgs, SimulateArgs, TargetArgs,
};
use crate::CliError;

pub fn run(cli: crate::cli::Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Freqs { action: FreqsCommand::Validate(a) } => freqs_validate(&a),
        Command::Db { action: DbCommand::Sample(a) } => db_sample(a),
        Command::Search(a) => search(a),
        Command::Preassess(a) => preassess(a),
        Command::Simulate(a) => simulate(a),
        Command::Report { action: ReportCommand::Merge(a) } => report_merge(&a),
    }
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

/// The seed to use: the given one, or a fresh one that is printed so the run
/// can be repeated.
fn resolve_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s} (drawn at random; pass --seed {s} to reproduce)");
        s
    })
}

fn config_hash<T: Serialize>(command: &str, args: &T) -> Result<String, CliError> {
    Ok(io::config_hash(&json!({ "command": command, "args": args }))?)
}

fn load_freqs(a: &FreqArgs) -> Result<AlleleFrequencyTable, CliError> {
    Ok(match &a.freqs {
        Some(path) => io::ingest_frequencies(path, a.normalize)?,
        None => AlleleFrequencyTable::synthetic_sgmplus(),
    })
}

fn pick_target(db: Database, id: Option<&str>, path: &Path) -> Result<Profile, CliError> {
    let mut profiles = db.into_profiles();
    match id {
        Some(id) => profiles
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| CliError::Usage(format!("no profile `{id}` in {}", path.display()))),
        None if profiles.len() == 1 => Ok(profiles.remove(0)),
        None => Err(CliError::Usage(format!(
            "{} holds {} profiles; choose one with --target-id",
            path.display(),
            profiles.len()
        ))),
    }
}

fn load_target(a: &TargetArgs, freqs: &AlleleFrequencyTable) -> Result<Profile, CliError> {
    let path = required(&a.target, "target")?;
    pick_target(io::ingest_database(path, freqs)?, a.target_id.as_deref(), path)
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn freqs_validate(a: &FreqArgs) -> Result<(), CliError> {
    let t = load_freqs(a)?;
    let alleles: usize = t.loci().iter().map(|l| l.len()).sum();
    println!("{} loci, {alleles} alleles", t.num_loci());
    for l in t.loci() {
        println!("  {}: {} alleles", l.name(), l.len());
    }
    Ok(())
}

fn db_sample(mut a: DbSampleArgs) -> Result<(), CliError> {
    let size = *required(&a.size, "size")?;
    let out = required(&a.out, "out")?.clone();
    let seed = resolve_seed(&mut a.seed);
    let freqs = load_freqs(&a.freq)?;
    let panel = if a.loci.is_empty() {
        Panel::full(&freqs, a.panel.clone())
    } else {
        let loci = a
            .loci
            .iter()
            .map(|n| freqs.locus_index(n).ok_or_else(|| famsearch::Error::UnknownLocus(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Panel::new(a.panel.clone(), loci)?
    };
    let mut profiles = simulation::sample_database(&freqs, &panel, size, &a.prefix, seed)?;
    if let Some(path) = &a.relative_of {
        let target = pick_target(io::ingest_database(path, &freqs)?, a.target_id.as_deref(), path)?;
        let mut rng = task_rng(seed, stream::RELATIVES, 0);
        for j in 0..a.relatives {
            let r = famsearch::genetics::sample_relative_with(&target, a.relationship, &freqs, format!("rel{j}"), &mut rng)?;
            profiles.push(r);
        }
    }
    let hash = config_hash("db sample", &a)?;
    let body = if out.extension().is_some_and(|e| e == "jsonl" || e == "ndjson" || e == "json") {
        io::database_jsonl(&profiles, &freqs)?
    } else {
        io::database_csv(&profiles, &freqs)?
    };
    let text = io::comment_lines(&[("config_hash", hash), ("seed", seed.to_string())]) + &body;
    io::write_atomic(&[(out.clone(), text)])?;
    println!("wrote {} profiles to {}", profiles.len(), out.display());
    Ok(())
}

struct Part {
    name: String,
    indices: Vec<usize>,
    lr: LrVector,
    priors: PriorVector,
    alpha: Option<f64>,
}

fn split_parts(db: &Database, lr: &LrVector, priors: &PriorVector, alpha: Option<f64>, explicit: &[(String, f64)]) -> Result<Vec<Part>, CliError> {
    let explicit: HashMap<&str, f64> = explicit.iter().map(|(p, a)| (p.as_str(), *a)).collect();
    for name in explicit.keys() {
        if db.panel(name).is_none() {
            return Err(CliError::Usage(format!("--alpha-part names unknown panel `{name}`")));
        }
    }
    let index: HashMap<&str, usize> = db.profiles().iter().enumerate().map(|(i, p)| (p.id(), i)).collect();
    db.parts()
        .into_iter()
        .map(|(panel, members)| {
            let indices: Vec<usize> = members.iter().map(|m| index[m.id()]).collect();
            let ids: Vec<String> = indices.iter().map(|&i| lr.ids()[i].clone()).collect();
            Ok(Part {
                name: panel.name.clone(),
                lr: LrVector::new(ids.clone(), indices.iter().map(|&i| lr.values()[i]).collect())?,
                priors: PriorVector::new(ids, indices.iter().map(|&i| priors.values()[i]).collect())?,
                alpha: explicit.get(panel.name.as_str()).copied().or(alpha),
                indices,
            })
        })
        .collect()
}

fn estimation(a: &SearchArgs, seed: u64) -> Estimation {
    if a.exact {
        Estimation::Exact { cap: a.cap }
    } else {
        Estimation::MonteCarlo { samples: a.samples, seed }
    }
}

/// Checks that exactly the flags belonging to the chosen method were given.
fn check_selectors(a: &SearchArgs, method: MethodArg) -> Result<(), CliError> {
    let given = [
        ("alpha", a.alpha.is_some() || !a.alpha_part.is_empty()),
        ("beta", a.beta.is_some()),
        ("ibs", a.ibs.is_some()),
        ("lr-min", a.lr_min.is_some()),
    ];
    let wanted: &[&str] = match method {
        MethodArg::Conditional | MethodArg::TargetCentered => &["alpha"],
        MethodArg::SBeta => &["beta"],
        MethodArg::IbsLr => &["ibs", "lr-min"],
    };
    for (flag, present) in given {
        let expected = wanted.contains(&flag);
        if present && !expected {
            return Err(CliError::Usage(format!("--{flag} does not apply to this method")));
        }
        if !present && expected {
            return Err(CliError::Usage(format!("this method needs --{flag}")));
        }
    }
    if !a.alpha_part.is_empty() && !matches!(method, MethodArg::Conditional | MethodArg::TargetCentered) {
        return Err(CliError::Usage("--alpha-part applies to the conditional and target-centered methods".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PartThreshold {
    part: String,
    alpha: f64,
    estimate: ThresholdEstimate,
}

fn search(mut a: SearchArgs) -> Result<(), CliError> {
    let method = *required(&a.method, "method")?;
    check_selectors(&a, method)?;
    let out_dir = required(&a.out_dir, "out-dir")?.clone();
    let seed = resolve_seed(&mut a.seed);
    let freqs = load_freqs(&a.freq)?;
    let db = io::ingest_database(required(&a.db, "db")?, &freqs)?;
    let target = load_target(&a.target, &freqs)?;
    let rel = a.relationship;

    let lr = compute_lr_vector(&target, db.profiles(), rel, &freqs)?;
    let ids = lr.ids().to_vec();
    let priors = match &a.priors {
        Some(path) => PriorVector::with_defaults(&ids, &io::ingest_priors(path)?, a.pi_d)?,
        None => PriorVector::uniform(&ids, a.pi_d)?,
    };
    let post = posterior(&lr, &priors)?;
    let w = weights(&lr, &priors)?;

    let mut thresholds: Vec<PartThreshold> = Vec::new();
    let mut member_threshold = vec![f64::NAN; lr.len()];
    let selection: SubsetSelection = match method {
        MethodArg::Conditional => {
            let parts = split_parts(&db, &lr, &priors, a.alpha, &a.alpha_part)?;
            if parts.len() == 1 && a.alpha_part.is_empty() {
                let s = conditional_subset(&lr, &priors, a.alpha.unwrap_or_default())?;
                member_threshold.fill(s.threshold);
                s
            } else {
                let alphas = part_alphas(&parts)?;
                let views: Vec<DatabasePart> = parts
                    .iter()
                    .map(|p| DatabasePart { name: &p.name, lr: &p.lr, priors: Some(&p.priors) })
                    .collect();
                let s = heterogeneous_conditional(&views, &alphas)?;
                for (p, summary) in parts.iter().zip(&s.parts) {
                    for &i in &p.indices {
                        member_threshold[i] = summary.threshold;
                    }
                }
                s
            }
        }
        MethodArg::TargetCentered => {
            let parts = split_parts(&db, &lr, &priors, a.alpha, &a.alpha_part)?;
            let alphas = part_alphas(&parts)?;
            let mut ts = Vec::with_capacity(parts.len());
            for (p, &alpha) in parts.iter().zip(&alphas) {
                let panel = db.panel(&p.name).expect("part panels exist");
                let shared: Vec<usize> = target.loci().filter(|l| panel.loci.contains(l)).collect();
                if shared.is_empty() {
                    return Err(famsearch::Error::DisjointPanels {
                        target: target.id().to_string(),
                        candidate: format!("panel {}", p.name),
                    }
                    .into());
                }
                let restricted = target.restricted_to(&Panel::new(p.name.clone(), shared)?)?;
                let estimate = estimate_t_alpha(&restricted, rel, &freqs, alpha, estimation(&a, seed))?;
                ts.push(estimate.value);
                for &i in &p.indices {
                    member_threshold[i] = estimate.value;
                }
                thresholds.push(PartThreshold { part: p.name.clone(), alpha, estimate });
            }
            if parts.len() == 1 {
                let mut s = target_centered_subset(&lr, ts[0])?;
                s.level = Some(alphas[0]);
                s
            } else {
                let views: Vec<DatabasePart> = parts.iter().map(|p| DatabasePart { name: &p.name, lr: &p.lr, priors: None }).collect();
                heterogeneous_target_centered(&views, &ts)?
            }
        }
        MethodArg::SBeta => {
            let beta = a.beta.unwrap_or_default();
            let estimate = estimate_s_beta(&target, rel, &freqs, beta, estimation(&a, seed))?;
            let mut s = target_centered_subset(&lr, estimate.value)?;
            s.method = Method::SBeta;
            s.level = Some(beta);
            member_threshold.fill(estimate.value);
            thresholds.push(PartThreshold { part: "all".into(), alpha: beta, estimate });
            s
        }
        MethodArg::IbsLr => {
            let t = a.lr_min.unwrap_or_default();
            let s = ibs_lr_subset(&target, db.profiles(), rel, &freqs, a.ibs.unwrap_or_default(), t)?;
            member_threshold.fill(t);
            s
        }
    };

    let hash = config_hash("search", &a)?;
    let comments = vec![
        ("config_hash", hash.clone()),
        ("seed", seed.to_string()),
        ("target", target.id().to_string()),
        ("relationship", rel.to_string()),
    ];
    let order = weight_order(&ids, &w);
    let selected = selection.id_set();
    let panel_of: HashMap<&str, &str> = db.profiles().iter().map(|p| (p.id(), p.panel())).collect();
    let method_name = selection.method.to_string();
    let selection_rows: Vec<Vec<String>> = order
        .iter()
        .map(|&i| {
            vec![
                ids[i].clone(),
                panel_of[ids[i].as_str()].to_string(),
                fmt(lr.values()[i]),
                fmt(w[i]),
                selected.contains(ids[i].as_str()).to_string(),
                fmt(member_threshold[i]),
                method_name.clone(),
            ]
        })
        .collect();
    let posterior_rows: Vec<Vec<String>> = order
        .iter()
        .map(|&i| vec![ids[i].clone(), fmt(lr.values()[i]), fmt(priors.values()[i]), fmt(post.members[i])])
        .collect();
    let mut posterior_comments = comments.clone();
    posterior_comments.push(("posterior_not_in_database", fmt(post.not_in_database)));

    let total = lr.total();
    let n = lr.len() as f64;
    let summary = json!({
        "config": { "command": "search", "args": &a },
        "config_hash": hash,
        "seed": seed,
        "members": lr.len(),
        "sum_kinship_index": total,
        "database_lr": db_lr(&lr, &priors).ok(),
        "posterior_not_in_database": post.not_in_database,
        "selection": &selection,
        "thresholds": thresholds,
    });
    std::fs::create_dir_all(&out_dir)?;
    io::write_atomic(&[
        (
            out_dir.join("selection.csv"),
            io::render_csv(&comments, &["id", "panel", "lr", "weight", "selected", "threshold", "method"], &selection_rows)?,
        ),
        (
            out_dir.join("posterior.csv"),
            io::render_csv(&posterior_comments, &["id", "lr", "prior", "posterior"], &posterior_rows)?,
        ),
        (out_dir.join("search.json"), serde_json::to_string_pretty(&summary).map_err(famsearch::Error::from)? + "\n"),
    ])?;

    println!(
        "sum of kinship indices {total:.4} over {} members (ratio {:.3}); with no relative present it is about the database size",
        lr.len(),
        total / n
    );
    println!("posterior that the relative is not in the database: {:.6}", post.not_in_database);
    println!("{}: {} of {} members selected", selection.method, selection.len(), lr.len());
    if let Some(e) = selection.guaranteed_efficiency {
        println!("guaranteed efficiency {e:.4}");
    }
    for t in &thresholds {
        println!("threshold for {} at {}: {}", t.part, t.alpha, t.estimate.value);
    }
    println!("reports written to {}", out_dir.display());
    Ok(())
}

fn part_alphas(parts: &[Part]) -> Result<Vec<f64>, CliError> {
    parts
        .iter()
        .map(|p| p.alpha.ok_or_else(|| CliError::Usage(format!("no α for panel `{}`; pass --alpha or --alpha-part", p.name))))
        .collect()
}

fn preassess(mut a: PreassessArgs) -> Result<(), CliError> {
    let n = *required(&a.database_size, "database-size")?;
    let seed = resolve_seed(&mut a.seed);
    let freqs = load_freqs(&a.freq)?;
    let target = load_target(&a.target, &freqs)?;
    let estimation = if a.exact {
        Estimation::Exact { cap: a.cap }
    } else {
        Estimation::MonteCarlo { samples: a.samples, seed }
    };
    let p = simulation::preassess(&target, a.relationship, &freqs, n, &a.alpha, estimation)?;
    println!("target {} ({}), log10 RMP {:.3}, database size {n}, seed {seed}", p.target, p.relationship, p.log10_rmp);
    println!("alpha  threshold  P(LR(G) >= t)  expected |D_alpha|");
    for r in &p.rows {
        println!(
            "{:<6} {:<10.4e} {:<14.4e} {:.1} ± {:.1}",
            r.alpha, r.threshold, r.unrelated_exceedance, r.expected_subset_size, r.expected_subset_size_se
        );
    }
    println!("expected rank of the relative: {:.1} ± {:.1}", p.expected_rank, p.expected_rank_se);
    for (level, rank) in &p.rank_quantiles {
        println!("  rank quantile {level}: {rank:.1}");
    }
    if let Some(out) = &a.out {
        let hash = config_hash("preassess", &a)?;
        let mut comments = vec![
            ("config_hash", hash),
            ("seed", seed.to_string()),
            ("target", p.target.clone()),
            ("expected_rank", fmt(p.expected_rank)),
            ("expected_rank_se", fmt(p.expected_rank_se)),
        ];
        for (level, rank) in &p.rank_quantiles {
            comments.push(("rank_quantile", format!("{level}:{rank}")));
        }
        let rows: Vec<Vec<String>> = p
            .rows
            .iter()
            .map(|r| {
                [r.alpha, r.threshold, r.unrelated_exceedance, r.unrelated_exceedance_se, r.expected_subset_size, r.expected_subset_size_se]
                    .map(fmt)
                    .to_vec()
            })
            .collect();
        let header = ["alpha", "threshold", "unrelated_exceedance", "unrelated_exceedance_se", "expected_subset_size", "expected_subset_size_se"];
        io::write_atomic(&[(out.clone(), io::render_csv(&comments, &header, &rows)?)])?;
    }
    Ok(())
}

fn simulate(mut a: SimulateArgs) -> Result<(), CliError> {
    let out_dir: PathBuf = required(&a.out_dir, "out-dir")?.clone();
    let seed = resolve_seed(&mut a.seed);
    let freqs = load_freqs(&a.freq)?;
    let mut config = ExperimentConfig::new(a.experiment, seed);
    if let Some(v) = a.database_size {
        config.database_size = v;
    }
    if let Some(v) = a.targets {
        config.targets = v;
    }
    if let Some(v) = a.relatives {
        config.relatives = v;
    }
    if let Some(v) = a.relationship {
        config.relationship = v;
    }
    config.score = a.score;
    if !a.loci.is_empty() {
        config.loci = Some(a.loci.clone());
    }
    if !a.alpha_grid.is_empty() {
        config.alpha_grid = a.alpha_grid.clone();
    }
    if !a.rank_grid.is_empty() {
        config.rank_grid = a.rank_grid.clone();
    }
    if let Some(v) = a.threshold_samples {
        config.threshold_samples = v;
    }
    config.frequencies = a
        .freq
        .freqs
        .as_ref()
        .map_or_else(|| "synthetic-sgmplus".to_string(), |p| p.display().to_string());
    config.validate()?;
    let report = simulation::run(&config, &freqs)?;
    report.verify()?;
    std::fs::create_dir_all(&out_dir)?;
    let files = io::write_report(&report, &out_dir, a.experiment.name())?;
    println!("{} (config hash {}, seed {seed})", a.experiment, report.config_hash);
    for (k, v) in &report.derived {
        println!("  {k} = {v}");
    }
    for c in &report.curves {
        let points: Vec<String> = c.x.iter().zip(&c.y).map(|(x, y)| format!("{x}:{y:.4}")).collect();
        println!("  {}: {}", c.name, points.join(" "));
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn report_merge(a: &MergeArgs) -> Result<(), CliError> {
    let out = required(&a.out, "out")?;
    let inputs = a
        .inputs
        .iter()
        .map(std::fs::read_to_string)
        .collect::<Result<Vec<_>, _>>()?;
    let merged = io::merge_report_csvs(&inputs)?;
    io::write_atomic(&[(out.clone(), merged)])?;
    println!("merged {} reports into {}", inputs.len(), out.display());
    Ok(())
}
