use std::collections::BTreeMap;

use serde::Serialize;

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::stats::{mean, sample_sd, std_error};

/// Mean, standard deviation and standard error of one report column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

/// Plot data: `y[k]` is the mean of column `columns[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub columns: Vec<String>,
    pub y: Vec<f64>,
}

/// Per-target rows plus everything derived from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// One entry per column, recomputable from `rows`.
    pub summaries: Vec<Summary>,
    /// Cross-row statistics such as rank correlations.
    pub derived: BTreeMap<String, f64>,
    pub curves: Vec<Curve>,
}

pub(crate) struct CurveSpec {
    pub name: &'static str,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<(f64, String)>,
}

fn summarize(columns: &[String], rows: &[Vec<f64>]) -> Vec<Summary> {
    columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let v: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            Summary {
                column: c.clone(),
                mean: mean(&v),
                sd: sample_sd(&v),
                se: std_error(&v),
            }
        })
        .collect()
}

impl ExperimentReport {
    pub(crate) fn build(
        config: ExperimentConfig,
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        curves: Vec<CurveSpec>,
        derived: BTreeMap<String, f64>,
    ) -> Self {
        let summaries = summarize(&columns, &rows);
        let mut report = Self {
            config_hash: config.hash(),
            config,
            columns,
            rows,
            summaries,
            derived,
            curves: Vec::new(),
        };
        report.curves = curves
            .into_iter()
            .map(|spec| {
                let (x, columns): (Vec<f64>, Vec<String>) = spec.points.into_iter().unzip();
                let y = columns.iter().map(|c| report.summary(c).map_or(f64::NAN, |s| s.mean)).collect();
                Curve {
                    name: spec.name.to_string(),
                    x_label: spec.x_label.to_string(),
                    y_label: spec.y_label.to_string(),
                    x,
                    columns,
                    y,
                }
            })
            .collect();
        report
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn summary(&self, name: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.column == name)
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// Recomputes every summary and curve from the rows and checks that the
    /// stored values are identical.
    pub fn verify(&self) -> Result<()> {
        if self.rows.iter().any(|r| r.len() != self.columns.len()) {
            return Err(Error::invalid("report row width differs from its column count"));
        }
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        let fresh = summarize(&self.columns, &self.rows);
        for (s, f) in self.summaries.iter().zip(&fresh) {
            if s.column != f.column || !same(s.mean, f.mean) || !same(s.sd, f.sd) || !same(s.se, f.se) {
                return Err(Error::invalid(format!("summary of `{}` does not match its rows", s.column)));
            }
        }
        if self.summaries.len() != fresh.len() {
            return Err(Error::invalid("summary count differs from column count"));
        }
        for c in &self.curves {
            for (col, y) in c.columns.iter().zip(&c.y) {
                let m = self.summary(col).map_or(f64::NAN, |s| s.mean);
                if !same(m, *y) {
                    return Err(Error::invalid(format!("curve `{}` disagrees with column `{col}`", c.name)));
                }
            }
        }
        if self.config_hash != self.config.hash() {
            return Err(Error::invalid("configuration hash does not match the configuration"));
        }
        Ok(())
    }
}
