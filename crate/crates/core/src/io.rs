//! File formats: frequency tables, profile databases, priors and reports.
//!
//! * frequencies: CSV `locus,allele,frequency`;
//! * profiles: CSV with header `id,panel,genotypes` followed by rows
//!   `id,panel,LOCUS:a/b,LOCUS:a/b,...`, or JSON lines
//!   `{"id": "...", "panel": "...", "genotypes": {"LOCUS": "a/b"}}`. An empty
//!   panel is inferred from the typed loci;
//! * priors: CSV `id,prior`;
//! * reports: CSV whose first lines are `# key=value` comments carrying the
//!   configuration hash and seed.
//!
//! Output files are written to a temporary sibling first and renamed into
//! place, so a failed run never leaves a partial file behind.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::genetics::{AlleleFrequencyTable, Genotype, LocusGenotype, Panel, Profile};
use crate::simulation::{Curve, ExperimentReport};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn check_header(record: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = record.iter().map(str::trim).collect();
    if found.len() < expected.len() || found[..expected.len()] != *expected {
        return Err(parse_error(
            record_line(record).max(1),
            format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Parses a `locus,allele,frequency` table; see
/// [`AlleleFrequencyTable::from_entries`] for the sum rule.
pub fn parse_frequencies<R: Read>(reader: R, normalize: bool) -> Result<AlleleFrequencyTable> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| parse_error(1, "empty frequency file"))??;
    check_header(&header, &["locus", "allele", "frequency"])?;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record?;
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 3 {
            return Err(parse_error(line, format!("expected 3 fields, found {}", record.len())));
        }
        let (locus, allele, value) = (&record[0], &record[1], &record[2]);
        if locus.is_empty() || allele.is_empty() {
            return Err(parse_error(line, "empty locus or allele"));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| parse_error(line, format!("`{value}` is not a number")))?;
        if !seen.insert((locus.to_string(), allele.to_string())) {
            return Err(Error::DuplicateAllele {
                locus: locus.to_string(),
                allele: allele.to_string(),
            });
        }
        entries.push((locus.to_string(), allele.to_string(), value));
    }
    AlleleFrequencyTable::from_entries(entries, normalize)
}

pub fn ingest_frequencies(path: impl AsRef<Path>, normalize: bool) -> Result<AlleleFrequencyTable> {
    parse_frequencies(fs::File::open(path)?, normalize)
}

/// Profiles grouped into named panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    panels: Vec<Panel>,
    profiles: Vec<Profile>,
}

impl Database {
    /// Ids must be unique and every profile's loci must equal its panel's.
    pub fn new(panels: Vec<Panel>, profiles: Vec<Profile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        let by_name: HashMap<&str, &Panel> = panels.iter().map(|p| (p.name.as_str(), p)).collect();
        if by_name.len() != panels.len() {
            return Err(Error::invalid("panel names must be unique"));
        }
        let mut ids = HashSet::with_capacity(profiles.len());
        for p in &profiles {
            if !ids.insert(p.id()) {
                return Err(Error::DuplicateId(p.id().to_string()));
            }
            let panel = by_name
                .get(p.panel())
                .ok_or_else(|| Error::invalid(format!("profile `{}` names unknown panel `{}`", p.id(), p.panel())))?;
            if !p.loci().eq(panel.loci.iter().copied()) {
                return Err(Error::InconsistentPanel {
                    panel: p.panel().to_string(),
                });
            }
        }
        Ok(Self { panels, profiles })
    }

    /// Derives the panels from the profiles' own panel names.
    pub fn from_profiles(profiles: Vec<Profile>) -> Result<Self> {
        let mut panels: Vec<Panel> = Vec::new();
        for p in &profiles {
            if !panels.iter().any(|x| x.name == p.panel()) {
                panels.push(Panel::new(p.panel(), p.loci().collect())?);
            }
        }
        Self::new(panels, profiles)
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn into_profiles(self) -> Vec<Profile> {
        self.profiles
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn panel(&self, name: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.name == name)
    }

    /// Members of each panel, in panel order then database order.
    pub fn parts(&self) -> Vec<(&Panel, Vec<&Profile>)> {
        self.panels
            .iter()
            .map(|panel| (panel, self.profiles.iter().filter(|p| p.panel() == panel.name).collect()))
            .collect()
    }
}

struct RawProfile {
    line: usize,
    id: String,
    panel: Option<String>,
    genotypes: Vec<LocusGenotype>,
}

fn parse_genotype(freqs: &AlleleFrequencyTable, locus: &str, text: &str, line: usize) -> Result<LocusGenotype> {
    let (a, b) = text
        .split_once('/')
        .ok_or_else(|| parse_error(line, format!("genotype `{text}` at {locus} is not of the form a/b")))?;
    let (li, ai) = freqs.resolve(locus, a.trim())?;
    let (_, bi) = freqs.resolve(locus, b.trim())?;
    Ok(LocusGenotype {
        locus: li,
        genotype: Genotype::new(ai, bi),
    })
}

/// Groups parsed rows into panels. Rows with a panel name define it by their
/// loci; rows without one join the first panel with the same loci, or a new
/// panel `panel-k`.
fn assemble(rows: Vec<RawProfile>) -> Result<Database> {
    if rows.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let mut panels: Vec<Panel> = Vec::new();
    let loci_of = |r: &RawProfile| -> Vec<usize> {
        let mut l: Vec<usize> = r.genotypes.iter().map(|g| g.locus).collect();
        l.sort_unstable();
        l
    };
    for r in &rows {
        if let Some(name) = &r.panel {
            let loci = loci_of(r);
            match panels.iter().find(|p| &p.name == name) {
                Some(p) if p.loci != loci => return Err(Error::InconsistentPanel { panel: name.clone() }),
                Some(_) => {}
                None => panels.push(Panel::new(name.clone(), loci)?),
            }
        }
    }
    let mut next = 1;
    let mut names = Vec::with_capacity(rows.len());
    for r in &rows {
        let name = match &r.panel {
            Some(n) => n.clone(),
            None => {
                let loci = loci_of(r);
                match panels.iter().find(|p| p.loci == loci) {
                    Some(p) => p.name.clone(),
                    None => {
                        let mut name = format!("panel-{next}");
                        while panels.iter().any(|p| p.name == name) {
                            next += 1;
                            name = format!("panel-{next}");
                        }
                        panels.push(Panel::new(name.clone(), loci)?);
                        name
                    }
                }
            }
        };
        names.push(name);
    }
    let mut seen = HashSet::with_capacity(rows.len());
    let mut profiles = Vec::with_capacity(rows.len());
    for (r, panel) in rows.into_iter().zip(names) {
        if !seen.insert(r.id.clone()) {
            return Err(Error::DuplicateId(r.id));
        }
        let line = r.line;
        let profile = Profile::new(r.id, panel, r.genotypes).map_err(|e| parse_error(line, e.to_string()))?;
        profiles.push(profile);
    }
    Database::new(panels, profiles)
}

/// Parses the CSV profile format.
pub fn parse_database_csv<R: Read>(reader: R, freqs: &AlleleFrequencyTable) -> Result<Database> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| parse_error(1, "empty database file"))??;
    check_header(&header, &["id", "panel"])?;
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 3 {
            return Err(parse_error(line, "a profile needs an id, a panel and at least one genotype"));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_error(line, "empty id"));
        }
        let panel = Some(record[1].to_string()).filter(|p| !p.is_empty());
        let genotypes = record
            .iter()
            .skip(2)
            .filter(|c| !c.is_empty())
            .map(|cell| {
                let (locus, g) = cell
                    .split_once(':')
                    .ok_or_else(|| parse_error(line, format!("cell `{cell}` is not of the form LOCUS:a/b")))?;
                parse_genotype(freqs, locus.trim(), g.trim(), line)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(RawProfile {
            line,
            id,
            panel,
            genotypes,
        });
    }
    assemble(rows)
}

#[derive(Serialize, Deserialize)]
struct JsonProfile {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    panel: Option<String>,
    genotypes: BTreeMap<String, String>,
}

/// Parses the JSON-lines profile format.
pub fn parse_database_jsonl<R: Read>(reader: R, freqs: &AlleleFrequencyTable) -> Result<Database> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let number = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let p: JsonProfile = serde_json::from_str(&line).map_err(|e| parse_error(number, e.to_string()))?;
        let genotypes = p
            .genotypes
            .iter()
            .map(|(locus, g)| parse_genotype(freqs, locus, g, number))
            .collect::<Result<Vec<_>>>()?;
        rows.push(RawProfile {
            line: number,
            id: p.id,
            panel: p.panel.filter(|p| !p.is_empty()),
            genotypes,
        });
    }
    assemble(rows)
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl" | "ndjson" | "json")
    )
}

/// Reads a database; `.jsonl`, `.ndjson` and `.json` files are JSON lines, anything else CSV.
pub fn ingest_database(path: impl AsRef<Path>, freqs: &AlleleFrequencyTable) -> Result<Database> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    if is_jsonl(path) {
        parse_database_jsonl(file, freqs)
    } else {
        parse_database_csv(file, freqs)
    }
}

fn genotype_text(freqs: &AlleleFrequencyTable, g: &LocusGenotype) -> (String, String) {
    let locus = freqs.locus(g.locus);
    (
        locus.name().to_string(),
        format!(
            "{}/{}",
            locus.allele_label(g.genotype.first()),
            locus.allele_label(g.genotype.second())
        ),
    )
}

pub fn database_csv(profiles: &[Profile], freqs: &AlleleFrequencyTable) -> Result<String> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(["id", "panel", "genotypes"])?;
    for p in profiles {
        let mut record = vec![p.id().to_string(), p.panel().to_string()];
        for g in p.genotypes() {
            let (locus, text) = genotype_text(freqs, g);
            record.push(format!("{locus}:{text}"));
        }
        w.write_record(&record)?;
    }
    into_string(w)
}

pub fn database_jsonl(profiles: &[Profile], freqs: &AlleleFrequencyTable) -> Result<String> {
    let mut out = String::new();
    for p in profiles {
        let record = JsonProfile {
            id: p.id().to_string(),
            panel: Some(p.panel().to_string()),
            genotypes: p.genotypes().iter().map(|g| genotype_text(freqs, g)).collect(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes profiles in the format chosen by the file extension.
pub fn write_database(path: impl AsRef<Path>, profiles: &[Profile], freqs: &AlleleFrequencyTable) -> Result<()> {
    let path = path.as_ref();
    let text = if is_jsonl(path) {
        database_jsonl(profiles, freqs)?
    } else {
        database_csv(profiles, freqs)?
    };
    write_atomic(&[(path.to_path_buf(), text)])
}

/// Parses an `id,prior` file.
pub fn parse_priors<R: Read>(reader: R) -> Result<HashMap<String, f64>> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| parse_error(1, "empty priors file"))??;
    check_header(&header, &["id", "prior"])?;
    let mut priors = HashMap::new();
    for record in records {
        let record = record?;
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_error(line, format!("expected 2 fields, found {}", record.len())));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_error(line, format!("`{}` is not a number", &record[1])))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(parse_error(line, format!("prior {value} must be finite and non-negative")));
        }
        if priors.insert(record[0].to_string(), value).is_some() {
            return Err(Error::DuplicateId(record[0].to_string()));
        }
    }
    Ok(priors)
}

pub fn ingest_priors(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    parse_priors(fs::File::open(path)?)
}

/// SHA-256 of the compact JSON form of `value` (object keys sorted).
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let canonical: serde_json::Value = serde_json::to_value(value)?;
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&canonical)?)))
}

/// `# key=value` comment lines heading every CSV output.
pub fn comment_lines(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

/// A CSV document with leading comment lines.
pub fn render_csv<S: AsRef<str>>(comments: &[(&str, String)], header: &[S], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(comment_lines(comments) + &into_string(w)?)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn report_comments(report: &ExperimentReport) -> Vec<(&'static str, String)> {
    vec![
        ("experiment", report.config.experiment.to_string()),
        ("config_hash", report.config_hash.clone()),
        ("seed", report.config.seed.to_string()),
    ]
}

/// Per-row CSV of a report.
pub fn report_csv(report: &ExperimentReport) -> Result<String> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect())
        .collect();
    render_csv(&report_comments(report), &report.columns, &rows)
}

/// `(x, y)` plot data for one curve.
pub fn curve_csv(report: &ExperimentReport, curve: &Curve) -> Result<String> {
    let rows: Vec<Vec<String>> = curve
        .x
        .iter()
        .zip(&curve.y)
        .map(|(x, y)| vec![x.to_string(), y.to_string()])
        .collect();
    render_csv(&report_comments(report), &[curve.x_label.as_str(), curve.y_label.as_str()], &rows)
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>.<curve>.csv` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files = vec![
        (dir.join(format!("{stem}.csv")), report_csv(report)?),
        (dir.join(format!("{stem}.json")), serde_json::to_string_pretty(report)? + "\n"),
    ];
    for c in &report.curves {
        files.push((dir.join(format!("{stem}.{}.csv", c.name)), curve_csv(report, c)?));
    }
    let paths = files.iter().map(|(p, _)| p.clone()).collect();
    write_atomic(&files)?;
    Ok(paths)
}

/// Writes every file to a temporary sibling, then renames all of them into
/// place. Nothing is renamed unless every temporary write succeeded.
pub fn write_atomic(files: &[(PathBuf, String)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, &PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (path, text) in files {
        let name = path
            .file_name()
            .ok_or_else(|| Error::invalid(format!("`{}` is not a file path", path.display())))?;
        let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
        if let Err(e) = fs::write(&tmp, text) {
            cleanup(&staged);
            return Err(e.into());
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in &staged {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(&staged);
            return Err(e.into());
        }
    }
    Ok(())
}

/// Splits a CSV document into its `# key=value` comments and its body.
pub fn split_comments(text: &str) -> (Vec<(String, String)>, &str) {
    let mut comments = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix('#') {
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        if let Some((k, v)) = line.trim().split_once('=') {
            comments.push((k.trim().to_string(), v.trim().to_string()));
        }
        rest = tail;
    }
    (comments, rest)
}

/// Concatenates per-row report CSVs with identical columns. The output lists
/// every input's configuration hash and seed.
pub fn merge_report_csvs(inputs: &[String]) -> Result<String> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut sources = BTreeSet::new();
    let mut comments = Vec::new();
    for (k, text) in inputs.iter().enumerate() {
        let (meta, body) = split_comments(text);
        let find = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        let hash = find("config_hash").unwrap_or_default();
        let seed = find("seed").unwrap_or_default();
        if let Some(e) = find("experiment") {
            if k == 0 {
                comments.push(("experiment", e));
            }
        }
        sources.insert(format!("{hash}:{seed}"));
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let h: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        match &header {
            None => header = Some(h),
            Some(existing) if *existing != h => {
                return Err(Error::invalid(format!("input {} has different columns", k + 1)));
            }
            Some(_) => {}
        }
        for r in rdr.records() {
            rows.push(r?.iter().map(String::from).collect::<Vec<_>>());
        }
    }
    let header = header.ok_or_else(|| Error::invalid("nothing to merge"))?;
    comments.extend(sources.into_iter().map(|s| ("merged", s)));
    render_csv(&comments, &header, &rows)
}
