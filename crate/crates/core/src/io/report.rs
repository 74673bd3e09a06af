use std::fs;
use std::path::Path;

use super::surface::records;
use super::{parse_number, DataError, Issue, IssueKind};

/// Curves on a shared grid, moneyness unless `key` says otherwise; missing
/// points are `None` and print as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewTable {
    pub key: String,
    /// Significant digits when rendered.
    pub digits: usize,
    /// Rendered as `#` comment lines above the header; not read back.
    pub notes: Vec<String>,
    pub moneyness: Vec<f64>,
    pub columns: Vec<(String, Vec<Option<f64>>)>,
}

impl SkewTable {
    pub fn new(moneyness: Vec<f64>) -> Self {
        Self::keyed("moneyness", moneyness)
    }

    pub fn keyed(key: impl Into<String>, grid: Vec<f64>) -> Self {
        Self { key: key.into(), digits: 6, notes: Vec::new(), moneyness: grid, columns: Vec::new() }
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<Option<f64>>) -> &mut Self {
        assert_eq!(values.len(), self.moneyness.len(), "column length must match the moneyness grid");
        self.columns.push((label.into(), values));
        self
    }

    pub fn column(&self, label: &str) -> Option<&[Option<f64>]> {
        self.columns.iter().find(|(l, _)| l == label).map(|(_, v)| v.as_slice())
    }

    pub fn render(&self) -> String {
        let mut out: String = self.notes.iter().map(|n| format!("# {n}\n")).collect();
        out.push_str(&self.key);
        for (l, _) in &self.columns {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (r, m) in self.moneyness.iter().enumerate() {
            out.push_str(&format_sig(*m, self.digits));
            for (_, v) in &self.columns {
                out.push(',');
                if let Some(x) = v[r] {
                    out.push_str(&format_sig(x, self.digits));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `x` rounded to `digits` significant digits, printed without exponent noise.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    let s = rounded.to_string();
    if s.len() > 24 {
        format!("{rounded:e}")
    } else {
        s
    }
}

pub fn write_skew_report(table: &SkewTable, path: &Path) -> Result<(), DataError> {
    fs::write(path, table.render()).map_err(|source| DataError::Write { path: path.to_path_buf(), source })
}

pub fn parse_skew_report(text: &str, file: &str) -> Result<SkewTable, Vec<Issue>> {
    let mut issues = Vec::new();
    let mut table: Option<SkewTable> = None;
    for rec in records(text, file, &mut issues) {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let Some(t) = table.as_mut() else {
            let key = rec.get(0).unwrap_or_default();
            if key.is_empty() {
                issues.push(
                    Issue::new(IssueKind::Schema, file, "first header cell must name the grid").at(line, Some(1)),
                );
            }
            let mut t = SkewTable::keyed(key, Vec::new());
            t.columns = rec.iter().skip(1).map(|l| (l.to_string(), Vec::new())).collect();
            table = Some(t);
            continue;
        };
        if rec.len() != t.columns.len() + 1 {
            issues.push(
                Issue::new(
                    IssueKind::Schema,
                    file,
                    format!("expected {} fields, found {}", t.columns.len() + 1, rec.len()),
                )
                .at(line, None),
            );
            continue;
        }
        let mut parse = |c: usize| -> Option<f64> {
            let v = parse_number(&rec[c]);
            if v.is_none() {
                issues.push(
                    Issue::new(IssueKind::Parse, file, format!("`{}` is not a finite decimal number", &rec[c]))
                        .at(line, Some(c + 1)),
                );
            }
            v
        };
        t.moneyness.push(parse(0).unwrap_or(f64::NAN));
        for c in 1..rec.len() {
            let v = if rec[c].is_empty() { None } else { parse(c) };
            t.columns[c - 1].1.push(v);
        }
    }
    match table {
        None => Err(vec![Issue::new(IssueKind::Schema, file, "empty report")]),
        Some(_) if !issues.is_empty() => Err(issues),
        Some(t) => Ok(t),
    }
}

pub fn read_skew_report(path: &Path) -> Result<SkewTable, DataError> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path)
        .map_err(|e| DataError::Invalid(vec![Issue::new(IssueKind::Io, &file, e.to_string())]))?;
    parse_skew_report(&text, &file).map_err(DataError::Invalid)
}
