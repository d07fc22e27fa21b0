use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;

/// How a row is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Check {
    /// `|zscore| <= threshold`, or `|estimate - predicted| <= abs_floor`.
    ZScore { threshold: f64, abs_floor: f64 },
    /// `|estimate - predicted| <= tol`.
    AbsTol { tol: f64 },
    /// `estimate <= bound`.
    UpperBound { bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub t: Option<f64>,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub predicted: f64,
    pub zscore: Option<f64>,
    pub check: Check,
    pub pass: bool,
}

impl ReportRow {
    pub fn statistical(
        name: impl Into<String>,
        t: Option<f64>,
        estimate: f64,
        stderr: f64,
        predicted: f64,
        threshold: f64,
        abs_floor: f64,
    ) -> Self {
        let zscore = (stderr > 0.0).then(|| (estimate - predicted) / stderr);
        let close = (estimate - predicted).abs() <= abs_floor;
        let pass = close || zscore.is_some_and(|z| z.abs() <= threshold);
        ReportRow {
            name: name.into(),
            t,
            estimate,
            stderr: Some(stderr),
            predicted,
            zscore,
            check: Check::ZScore { threshold, abs_floor },
            pass,
        }
    }

    pub fn deterministic(
        name: impl Into<String>,
        t: Option<f64>,
        estimate: f64,
        predicted: f64,
        tol: f64,
    ) -> Self {
        ReportRow {
            name: name.into(),
            t,
            estimate,
            stderr: None,
            predicted,
            zscore: None,
            check: Check::AbsTol { tol },
            pass: (estimate - predicted).abs() <= tol,
        }
    }

    pub fn upper_bound(name: impl Into<String>, estimate: f64, bound: f64) -> Self {
        ReportRow {
            name: name.into(),
            t: None,
            estimate,
            stderr: None,
            predicted: bound,
            zscore: None,
            check: Check::UpperBound { bound },
            pass: estimate <= bound,
        }
    }
}

/// A published formula evaluated verbatim next to the value we trust.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub name: String,
    pub canonical: f64,
    pub printed: f64,
    pub abs_diff: f64,
}

impl Discrepancy {
    pub fn new(name: impl Into<String>, canonical: f64, printed: f64) -> Self {
        Discrepancy { name: name.into(), canonical, printed, abs_diff: (canonical - printed).abs() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_abs_z: Option<f64>,
    pub rows: usize,
    pub failed: usize,
    pub pass: bool,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: ExperimentKind,
    pub rows: Vec<ReportRow>,
    pub discrepancies: Vec<Discrepancy>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(config: ExperimentConfig, rows: Vec<ReportRow>, discrepancies: Vec<Discrepancy>) -> Self {
        let max_abs_z = rows
            .iter()
            .filter_map(|r| r.zscore.map(f64::abs))
            .fold(None, |acc: Option<f64>, z| Some(acc.map_or(z, |a| a.max(z))));
        let failed = rows.iter().filter(|r| !r.pass).count();
        VerificationReport {
            kind: config.kind,
            summary: Summary { max_abs_z, rows: rows.len(), failed, pass: failed == 0, config },
            rows,
            discrepancies,
        }
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// CSV (`name,t,estimate,stderr,predicted,zscore`) or pretty JSON.
pub fn report_render(report: &VerificationReport, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(report)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let mut s = String::from("name,t,estimate,stderr,predicted,zscore\n");
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{},{},{:?},{},{:?},{}",
                    r.name,
                    opt(r.t),
                    r.estimate,
                    opt(r.stderr),
                    r.predicted,
                    opt(r.zscore)
                );
            }
            Ok(s.into_bytes())
        }
    }
}

/// CSV `name,canonical,printed,abs_diff`.
pub fn render_discrepancies(rows: &[Discrepancy]) -> Vec<u8> {
    let mut s = String::from("name,canonical,printed,abs_diff\n");
    for d in rows {
        let _ = writeln!(s, "{},{:?},{:?},{:?}", d.name, d.canonical, d.printed, d.abs_diff);
    }
    s.into_bytes()
}
