use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::ResultsTable;
use crate::error::{Error, Result};
use crate::outcome::MethodId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Lossless record of a single table.
    Json,
    /// One row per run plus one aggregate row per method.
    Csv,
    /// Methods as rows, datasets as columns, `mean ± std` in percent.
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::structural(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// `"83.1 ± 0.8"` for mean 0.831 and std 0.008.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.1} ± {:.1}", mean * 100.0, std * 100.0)
}

pub fn render_markdown(tables: &[ResultsTable]) -> String {
    let mut out = String::new();
    out.push_str("| Method |");
    for t in tables {
        let _ = write!(out, " {} |", t.dataset);
    }
    out.push_str("\n|---|");
    for _ in tables {
        out.push_str("---|");
    }
    out.push('\n');
    for method in MethodId::ALL {
        if tables.iter().all(|t| t.row(method).is_none()) {
            continue;
        }
        let _ = write!(out, "| {} |", method.display_name());
        for t in tables {
            match t.row(method) {
                Some(row) => {
                    let _ = write!(out, " {} |", format_cell(row.mean, row.std));
                }
                None => out.push_str(" n/a |"),
            }
        }
        out.push('\n');
    }
    out.push_str("\nTest accuracy (%), mean ± sample std over seeds.\n");
    for t in tables {
        let gammas: Vec<String> = t
            .rows
            .iter()
            .filter_map(|r| {
                r.selected_gamma
                    .map(|g| format!("{} γ={g}", r.method.display_name()))
            })
            .collect();
        if !gammas.is_empty() {
            let _ = writeln!(
                out,
                "Selected thresholds on {}: {}.",
                t.dataset,
                gammas.join(", ")
            );
        }
        if !t.failures.is_empty() {
            let _ = writeln!(
                out,
                "{} run(s) on {} failed and were excluded.",
                t.failures.len(),
                t.dataset
            );
        }
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn render_csv(tables: &[ResultsTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "method",
        "row",
        "seed",
        "gamma",
        "selected",
        "test_accuracy",
        "validation_accuracy",
        "mean",
        "std",
    ])?;
    for t in tables {
        for r in &t.runs {
            let selected = t
                .row(r.method)
                .map(|row| row.selected_gamma == r.gamma)
                .unwrap_or(false);
            w.write_record([
                t.dataset.clone(),
                r.method.to_string(),
                "run".into(),
                r.seed.to_string(),
                opt(r.gamma),
                selected.to_string(),
                r.test_accuracy.to_string(),
                opt(r.validation_accuracy),
                String::new(),
                String::new(),
            ])?;
        }
        for row in &t.rows {
            w.write_record([
                t.dataset.clone(),
                row.method.to_string(),
                "aggregate".into(),
                String::new(),
                opt(row.selected_gamma),
                "true".into(),
                String::new(),
                String::new(),
                row.mean.to_string(),
                row.std.to_string(),
            ])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::structural(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn emit_report(
    tables: &[ResultsTable],
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    if tables.is_empty() {
        return Err(Error::structural("nothing to report"));
    }
    let body = match format {
        ReportFormat::Json => {
            let [table] = tables else {
                return Err(Error::structural(
                    "json output holds exactly one results table",
                ));
            };
            serde_json::to_string_pretty(table)? + "\n"
        }
        ReportFormat::Csv => render_csv(tables)?,
        ReportFormat::Markdown => render_markdown(tables),
    };
    let path = path.as_ref();
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_results_json(path: impl AsRef<Path>) -> Result<ResultsTable> {
    let path = path.as_ref();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingFile(path.to_path_buf()))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    Ok(serde_json::from_str(&text)?)
}
