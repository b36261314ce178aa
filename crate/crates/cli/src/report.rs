use crate::args::ReportArgs;
use crate::error::{CliError, Result};
use crate::record::{self, Comparison, ResultRecord};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub record: String,
    pub command: String,
    pub quantity: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub target: Option<f64>,
    pub comparison: &'static str,
    /// `pass`, `FAIL`, or empty without a target.
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub failed: usize,
    pub checked: usize,
}

fn comparison_name(c: Comparison) -> &'static str {
    match c {
        Comparison::Equal => "=",
        Comparison::AtMost => "<=",
        Comparison::AtLeast => ">=",
    }
}

/// Rows of all records; every record must share one schema.
pub fn merge(records: &[(String, ResultRecord)], tol: f64) -> Result<Report> {
    let Some((_, first)) = records.first() else {
        return Err(CliError::Merge("no records".into()));
    };
    if let Some((name, r)) = records.iter().find(|(_, r)| r.schema != first.schema) {
        return Err(CliError::Merge(format!(
            "{name} has schema {:?}, expected {:?}",
            r.schema, first.schema
        )));
    }
    let mut rows = Vec::new();
    let (mut failed, mut checked) = (0, 0);
    for (name, r) in records {
        for q in &r.quantities {
            let status = match q.passes(tol) {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "",
            };
            checked += usize::from(!status.is_empty());
            failed += usize::from(status == "FAIL");
            rows.push(ReportRow {
                record: name.clone(),
                command: r.command.clone(),
                quantity: q.label.clone(),
                estimate: q.estimate,
                standard_error: q.standard_error,
                target: q.target,
                comparison: if q.target.is_some() { comparison_name(q.comparison) } else { "" },
                status,
            });
        }
    }
    Ok(Report { rows, failed, checked })
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

impl Report {
    /// Fixed-width text table.
    pub fn render(&self, tol: f64) -> String {
        let header = ["record", "command", "quantity", "estimate", "se", "target", "status"];
        let cells: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.record.clone(),
                    r.command.clone(),
                    r.quantity.clone(),
                    fmt_num(r.estimate),
                    fmt_num(r.standard_error),
                    r.target.map_or(String::new(), |t| format!("{} {}", r.comparison, fmt_num(t))),
                    r.status.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header.map(String::from));
        line(&mut out, &widths.map(|w| "-".repeat(w)));
        for row in &cells {
            line(&mut out, row);
        }
        let _ = writeln!(
            out,
            "{} quantities, {} checked, {} failed (equality tolerance {tol})",
            self.rows.len(),
            self.checked,
            self.failed
        );
        out
    }

    pub fn csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["record", "command", "quantity", "estimate", "standard_error", "target", "comparison", "status"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.record.as_str(),
                &r.command,
                &r.quantity,
                &fmt_num(r.estimate),
                &fmt_num(r.standard_error),
                &r.target.map_or(String::new(), fmt_num),
                r.comparison,
                r.status,
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

/// Loads, merges, prints and optionally checks. Record names are the
/// parent directory names (`<out>/record.json`) or the file stems.
pub fn run(a: &ReportArgs) -> Result<String> {
    let mut records = Vec::new();
    for path in &a.records {
        let name = if path.file_name().is_some_and(|f| f == "record.json") {
            path.parent().and_then(|p| p.file_name())
        } else {
            path.file_stem()
        }
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        records.push((name, record::load(path)?));
    }
    let report = merge(&records, a.tol)?;
    if let Some(dir) = &a.out {
        record::write_atomic(&dir.join("report.csv"), &report.csv())?;
    }
    let text = report.render(a.tol);
    if a.check && report.failed > 0 {
        print!("{text}");
        return Err(CliError::CheckFailed {
            failed: report.failed,
            total: report.checked,
        });
    }
    Ok(text)
}
