//! Deterministic tabular reports as aligned text, CSV or JSON lines.
//! Floating-point fields are written with 17 significant digits.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::Result;
use crate::lemmas::LemmaOutcome;
use crate::resolvent::NormSample;
use crate::verify::OracleComparison;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Text,
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Field {
    fn plain(&self) -> String {
        match self {
            Field::Num(v) => format_number(*v),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.clone(),
            Field::Bool(b) => b.to_string(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Field::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            other => other.plain(),
        }
    }

    fn json(&self) -> String {
        match self {
            Field::Num(v) if v.is_finite() => format_number(*v),
            Field::Num(v) => serde_json::to_string(&v.to_string()).expect("strings serialize"),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            Field::Bool(b) => b.to_string(),
        }
    }
}

/// Named columns and rows of fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn emit_report(table: &Table, format: ReportFormat, out: &mut impl Write) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            writeln!(out, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Field::csv).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        ReportFormat::JsonLines => {
            for row in &table.rows {
                let cells: Vec<String> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, f)| format!("{}:{}", serde_json::to_string(c).expect("strings serialize"), f.json()))
                    .collect();
                writeln!(out, "{{{}}}", cells.join(","))?;
            }
        }
        ReportFormat::Text => {
            for row in &table.rows {
                let cells: Vec<String> =
                    table.columns.iter().zip(row).map(|(c, f)| format!("{c}={}", f.plain())).collect();
                writeln!(out, "{}", cells.join("  "))?;
            }
        }
    }
    Ok(())
}

pub fn render(table: &Table, format: ReportFormat) -> String {
    let mut buf = Vec::new();
    emit_report(table, format, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("reports are UTF-8")
}

pub fn lemma_table(outcomes: &[LemmaOutcome]) -> Table {
    let mut t = Table::new(&["status", "lemma", "samples", "violations", "worst_margin"]);
    for o in outcomes {
        t.push(vec![
            if o.passed() { "PASS" } else { "FAIL" }.into(),
            o.name.clone().into(),
            o.samples.into(),
            o.violations.into(),
            o.worst_margin.into(),
        ]);
    }
    t
}

pub fn norm_table(samples: &[NormSample]) -> Table {
    let mut t = Table::new(&["lambda_re", "lambda_im", "estimate", "norm_product"]);
    for s in samples {
        t.push(vec![s.lambda_re.into(), s.lambda_im.into(), s.estimate.into(), s.norm_product.into()]);
    }
    t
}

pub fn oracle_table(rows: &[OracleComparison], tolerance: f64) -> Table {
    let mut t = Table::new(&[
        "status",
        "case",
        "k",
        "lambda_re",
        "lambda_im",
        "relative_l2",
        "continuity_defect",
        "flux_defect",
        "oracle_h",
    ]);
    for r in rows {
        t.push(vec![
            if r.relative_l2 <= tolerance { "PASS" } else { "FAIL" }.into(),
            r.index.into(),
            r.k.into(),
            r.lambda_re.into(),
            r.lambda_im.into(),
            r.relative_l2.into(),
            r.continuity_defect.into(),
            r.flux_defect.into(),
            r.oracle_h.into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_csv_is_header_only() {
        let t = norm_table(&[]);
        assert_eq!(render(&t, ReportFormat::Csv), "lambda_re,lambda_im,estimate,norm_product\n");
        assert_eq!(render(&t, ReportFormat::JsonLines), "");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, -2.5e300, 5e-324] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn lemma_records_one_line_each() {
        let o = LemmaOutcome { name: "cosine".into(), samples: 10, violations: 0, worst_margin: 0.25 };
        let text = render(&lemma_table(&[o.clone(), o]), ReportFormat::Text);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("status=PASS  lemma=cosine  samples=10  violations=0  worst_margin=2.5000000000000000e-1"));
    }

    #[test]
    fn json_lines_parse_back() {
        let mut t = Table::new(&["name", "value", "ok"]);
        t.push(vec!["a \"b\"".into(), 0.1.into(), true.into()]);
        let s = render(&t, ReportFormat::JsonLines);
        let v: serde_json::Value = serde_json::from_str(s.trim()).unwrap();
        assert_eq!(v["name"], "a \"b\"");
        assert_eq!(v["value"].as_f64().unwrap(), 0.1);
        assert_eq!(v["ok"], true);
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new(&["name"]);
        t.push(vec!["a,b".into()]);
        assert_eq!(render(&t, ReportFormat::Csv), "name\n\"a,b\"\n");
    }
}
